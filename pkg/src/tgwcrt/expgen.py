"""Random system generation and HPA-versus-baseline comparison campaigns."""

from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .hpa import analyze
from .model import ModelError, SystemModel, build
from .state import AnalysisOptions
from .yw import NonPreemptivePE, yw_analyze


class RepairFailed(RuntimeError):
    pass


class MismatchedGraphs(ValueError):
    pass


@dataclass(frozen=True)
class GenParams:
    graphCount: tuple[int, int] = (3, 5)
    totalTasks: tuple[int, int] = (30, 50)
    peCount: tuple[int, int] = (3, 5)
    bcetRange: tuple[int, int] = (500, 1000)
    wcetFactor: tuple[float, float] = (1.0, 1.5)
    topology: str = "dag"            # "dag" | "chain"
    policyMix: str = "all_preemptive"  # "all_preemptive" | "mixed"
    jitter: str = "zero"             # "zero" | "random"
    seed: int = 0
    maxRepairs: int = 24
    periodFactor: float = 2.0        # initial period = factor x critical-path wcet

    def __post_init__(self):
        for name in ("graphCount", "totalTasks", "peCount", "bcetRange", "wcetFactor"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: empty range {lo}..{hi}")
        if self.wcetFactor[0] < 1:
            raise ValueError("wcetFactor must be >= 1")
        if self.graphCount[0] < 1 or self.peCount[0] < 1 or self.totalTasks[0] < 1:
            raise ValueError("counts must be positive")
        if self.topology not in ("dag", "chain"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.policyMix not in ("all_preemptive", "mixed"):
            raise ValueError(f"unknown policy mix {self.policyMix!r}")
        if self.jitter not in ("zero", "random"):
            raise ValueError(f"unknown jitter mode {self.jitter!r}")


# small-instance presets used by the test-suite and the CLI
SMALL = GenParams(graphCount=(1, 3), totalTasks=(10, 15), peCount=(2, 3), jitter="random",
                  policyMix="mixed")
SMALL_PREEMPTIVE = GenParams(graphCount=(1, 3), totalTasks=(10, 15), peCount=(2, 3), jitter="random")
COMPARE = GenParams(graphCount=(3, 5), totalTasks=(10, 30), peCount=(3, 5))


def _split(rng: random.Random, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.sample(range(1, total), parts - 1)) if parts > 1 else []
    edges = [0] + cuts + [total]
    return [b - a for a, b in zip(edges, edges[1:])]


def _dag_edges(rng: random.Random, n: int) -> list[list[int]]:
    """Layered DAG over local indices 0..n-1, mean in-degree about 1.5."""
    if n == 1:
        return [[]]
    n_layers = rng.randint(2, max(2, min(n, round(n ** 0.5) + 1)))
    sizes = _split(rng, n, min(n_layers, n))
    layers, k = [], 0
    for s in sizes:
        layers.append(list(range(k, k + s)))
        k += s
    preds = [[] for _ in range(n)]
    for li in range(1, len(layers)):
        earlier = [t for layer in layers[:li] for t in layer]
        for t in layers[li]:
            first = rng.choice(layers[li - 1])
            preds[t].append(first)
            if rng.random() < 0.5:
                other = rng.choice(earlier)
                if other not in preds[t]:
                    preds[t].append(other)
    return preds


def _critical_path(preds: list[list[int]], wcet: list[int]) -> int:
    finish = []
    for t in range(len(preds)):
        finish.append(max((finish[p] for p in preds[t]), default=0) + wcet[t])
    return max(finish)


def generate(params: GenParams) -> SystemModel:
    """Random valid model, with periods doubled until the analysis accepts it."""
    rng = random.Random(params.seed)
    n_graphs = rng.randint(*params.graphCount)
    n_tasks = rng.randint(max(params.totalTasks[0], n_graphs), max(params.totalTasks[1], n_graphs))
    n_pes = rng.randint(*params.peCount)
    pe_ids = [f"PE{k}" for k in range(n_pes)]
    if params.policyMix == "mixed":
        policies = [rng.choice(("preemptive", "non_preemptive")) for _ in pe_ids]
    else:
        policies = ["preemptive"] * n_pes
    pes = dict(zip(pe_ids, policies))

    prios = list(range(1, n_tasks + 1))
    rng.shuffle(prios)
    sizes = _split(rng, n_tasks, n_graphs)
    graphs = []
    tid = 0
    for g, size in enumerate(sizes):
        bcet = [rng.randint(*params.bcetRange) for _ in range(size)]
        wcet = [max(b, round(b * rng.uniform(*params.wcetFactor))) for b in bcet]
        if params.topology == "chain":
            preds = [[] if k == 0 else [k - 1] for k in range(size)]
        else:
            preds = _dag_edges(rng, size)
        period = max(1, round(params.periodFactor * _critical_path(preds, wcet)))
        jit = rng.randint(0, period // 10) if params.jitter == "random" else 0
        ids = [f"t{tid + k}" for k in range(size)]
        tasks = [(ids[k], rng.choice(pe_ids), prios[tid + k], bcet[k], wcet[k], tuple(ids[p] for p in preds[k]))
                 for k in range(size)]
        tid += size
        graphs.append({"id": f"G{g}", "period": period, "jitter": jit, "deadline": period, "tasks": tasks})

    model = build(pes, graphs)
    for _ in range(params.maxRepairs + 1):
        res = analyze(model)
        if res.schedulable:
            return model
        late = {g for g, w in res.perGraphWCRT.items() if w > res.deadlines[g]}
        if not late or not res.converged:
            late = {g["id"] for g in graphs}
        for g in graphs:
            if g["id"] in late:
                g["period"] *= 2
                g["deadline"] = g["period"]
        model = build(pes, graphs)
    raise RepairFailed(f"still unschedulable after {params.maxRepairs} period doublings (seed {params.seed})")


@dataclass(frozen=True)
class ComparisonStats:
    win: int
    tie: int
    lose: int
    maxGapPct: float
    minGapPct: float
    avgGapPct: float

    @property
    def count(self) -> int:
        return self.win + self.tie + self.lose

    def row(self) -> dict:
        return {"Win": self.win, "Tie": self.tie, "Lose": self.lose, "Max%": f"{self.maxGapPct:.2f}",
                "Min%": f"{self.minGapPct:.2f}", "Avg%": f"{self.avgGapPct:.2f}"}


def compare(resultsA: Mapping, resultsB: Mapping) -> ComparisonStats:
    """Per-graph gap (B - A) / A in percent; positive means A is tighter."""
    if set(resultsA) != set(resultsB):
        raise MismatchedGraphs(f"graph sets differ: {sorted(set(resultsA) ^ set(resultsB), key=str)}")
    if not resultsA:
        return ComparisonStats(0, 0, 0, 0.0, 0.0, 0.0)
    gaps = []
    for k in resultsA:
        a, b = resultsA[k], resultsB[k]
        gaps.append((b - a) / a * 100.0 if a else 0.0)
    win = sum(g > 0 for g in gaps)
    lose = sum(g < 0 for g in gaps)
    return ComparisonStats(win, len(gaps) - win - lose, lose, max(gaps), min(gaps), sum(gaps) / len(gaps))


@dataclass
class CampaignConfig:
    params: GenParams = field(default_factory=lambda: COMPARE)
    instances: int = 10
    seed: int = 0
    methods: tuple[str, ...] = ("hpa", "yw")
    samples: int = 1000          # Monte-Carlo scenarios for the "oracle" method
    timing: bool = True          # False writes micros=0 so output is byte-stable
    options: AnalysisOptions = field(default_factory=AnalysisOptions)


COLUMNS = ["instance", "graph", "method", "wcrt", "deadline", "schedulable", "iterations", "micros", "error"]


def _instance_seed(seed: int, k: int) -> int:
    return random.Random(f"{seed}:{k}").getrandbits(32)


def run_campaign(config: CampaignConfig) -> tuple[list[dict], dict[str, ComparisonStats]]:
    """Generate instances, analyse them with every method, compare to HPA."""
    from .oracle import monte_carlo_wcrt

    rows: list[dict] = []
    per_method: dict[str, dict] = {m: {} for m in config.methods}
    for k in range(config.instances):
        params = replace(config.params, seed=_instance_seed(config.seed, k))
        try:
            model = generate(params)
        except (RepairFailed, ModelError) as exc:
            rows.append({"instance": k, "graph": "", "method": "generate", "wcrt": "", "deadline": "",
                         "schedulable": "", "iterations": "", "micros": "", "error": type(exc).__name__})
            continue
        for method in config.methods:
            t0 = time.perf_counter()
            try:
                if method == "hpa":
                    res = analyze(model, config.options)
                    wcrt, iters, sched = res.perGraphWCRT, res.iterations, res.schedulable
                elif method == "yw":
                    res = yw_analyze(model)
                    wcrt, iters, sched = res.perGraphWCRT, res.iterations, res.schedulable
                elif method == "oracle":
                    wcrt = monte_carlo_wcrt(model, config.samples, seed=params.seed)
                    iters, sched = 0, None
                else:
                    raise ValueError(f"unknown method {method!r}")
                err = ""
            except NonPreemptivePE:
                wcrt, iters, sched, err = {}, "", "", "NonPreemptivePE"
            except Exception as exc:  # keep going, record the failure
                wcrt, iters, sched, err = {}, "", "", type(exc).__name__
            micros = int((time.perf_counter() - t0) * 1e6) if config.timing else 0
            if err:
                rows.append({"instance": k, "graph": "", "method": method, "wcrt": "", "deadline": "",
                             "schedulable": "", "iterations": "", "micros": micros, "error": err})
                continue
            for g in model.graphs:
                rows.append({"instance": k, "graph": g.id, "method": method, "wcrt": wcrt[g.id],
                             "deadline": g.deadline, "schedulable": "" if sched is None else int(sched),
                             "iterations": iters, "micros": micros, "error": ""})
                per_method[method][(k, g.id)] = wcrt[g.id]
    stats = {}
    if "hpa" in per_method:
        for m, vals in per_method.items():
            if m == "hpa" or not vals:
                continue
            common = set(vals) & set(per_method["hpa"])
            stats[m] = compare({x: per_method["hpa"][x] for x in common}, {x: vals[x] for x in common})
    return rows, stats


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def stats_to_csv(stats: Mapping[str, ComparisonStats]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["method", "Win", "Tie", "Lose", "Max%", "Min%", "Avg%"],
                       lineterminator="\n")
    w.writeheader()
    for m in sorted(stats):
        w.writerow({"method": m, **stats[m].row()})
    return buf.getvalue()


__all__ = ["GenParams", "ComparisonStats", "CampaignConfig", "RepairFailed", "MismatchedGraphs", "SMALL",
           "SMALL_PREEMPTIVE", "COMPARE", "generate", "compare", "run_campaign", "rows_to_csv", "stats_to_csv"
           ]
