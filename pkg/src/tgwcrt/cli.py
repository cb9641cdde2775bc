"""Command-line front end.

Exit codes: 0 success, 1 unschedulable / not converged / containment
failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
import tempfile
from dataclasses import replace

from . import expgen, oracle
from .hpa import analyze
from .model import ModelError, SystemModel, load_system, serialize
from .state import AnalysisOptions, AnalysisResult
from .yw import NonPreemptivePE, yw_analyze

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

YW_BANNER = ("WARNING: the Y&W bound is not conservative; it can lie below the true worst case "
             "(e.g. 35 vs 40 on the under-estimation example).")

PRESETS = {"small": expgen.SMALL, "small-preemptive": expgen.SMALL_PREEMPTIVE, "compare": expgen.COMPARE,
           "large": expgen.GenParams()}


class UsageError(Exception):
    pass


def atomic_write(path: str, text: str) -> None:
    """Write to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_format(args) -> str:
    if args.format != "text":
        return args.format
    ext = os.path.splitext(args.out)[1].lower()
    return "csv" if ext == ".csv" else "json"


def _emit(args, text: str, machine: dict[str, str]) -> None:
    """Print the report for --format and write --out in a machine format."""
    print(machine[args.format] if args.format != "text" else text, end="")
    if getattr(args, "out", None):
        atomic_write(args.out, machine[_out_format(args)])


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# -- analyze / yw ------------------------------------------------------------


def _result_text(model: SystemModel, res: AnalysisResult) -> str:
    lines = []
    for g in model.graphs:
        w = res.perGraphWCRT[g.id]
        verdict = "ok" if w <= g.deadline else "MISSED"
        lines.append(f"{g.id} WCRT={w} (deadline {g.deadline}, {verdict})")
    state = "converged" if res.converged else "NOT converged"
    lines.append(f"{res.method}: {state} after {res.iterations} iteration(s); "
                 f"{'schedulable' if res.schedulable else 'NOT schedulable'}")
    return "\n".join(lines) + "\n"


def _result_machine(model: SystemModel, res: AnalysisResult) -> dict[str, str]:
    rows = [{"graph": g.id, "wcrt": res.perGraphWCRT[g.id], "deadline": g.deadline,
             "schedulable": int(res.perGraphWCRT[g.id] <= g.deadline)} for g in model.graphs]
    return {"json": json.dumps(res.to_dict(), indent=2) + "\n",
            "csv": _csv(rows, ["graph", "wcrt", "deadline", "schedulable"])}


def cmd_analyze(args) -> int:
    model = load_system(args.model)
    opts = AnalysisOptions(exclusion=not args.no_exclusion, dp_elimination=not args.no_dp_elim,
                           max_iterations=args.max_iterations)
    res = analyze(model, opts)
    _emit(args, _result_text(model, res), _result_machine(model, res))
    return EXIT_OK if res.schedulable and res.converged else EXIT_FAIL


def cmd_yw(args) -> int:
    model = load_system(args.model)
    res = yw_analyze(model, max_iterations=args.max_iterations)
    if args.format != "text":
        print(YW_BANNER, file=sys.stderr)
    text = YW_BANNER + "\n" + _result_text(model, res)
    _emit(args, text, _result_machine(model, res))
    return EXIT_OK if res.schedulable and res.converged else EXIT_FAIL


# -- oracle ------------------------------------------------------------------


def _random_scenario(model: SystemModel, seed: int, horizon: int) -> oracle.Scenario:
    rng = random.Random(seed)
    phases = {g.id: rng.randrange(g.period) for g in model.graphs}
    sc = oracle.Scenario(horizon=horizon, phases=phases)
    for g in model.graphs:
        for k, _ in enumerate(sc.activations(model)[g.id]):
            if g.jitter:
                sc.graphReleaseOffsets[(g.id, k)] = rng.randint(0, g.jitter)
            for tid in g.tasks:
                t = model.task(tid)
                sc.executionTimes[(tid, k)] = rng.randint(t.bcet, t.wcet)
    return sc


def cmd_simulate(args) -> int:
    model = load_system(args.model)
    horizon = args.horizon or oracle.default_horizon(model)
    if args.seed is None:
        sc = oracle.Scenario(horizon=horizon)        # phase 0, no jitter, every job at wcet
    else:
        sc = _random_scenario(model, args.seed, horizon)
    sched = oracle.simulate(model, sc)
    resp = sched.responses()
    lines = [f"{gid} max response={max(r) if r else 0} over {len(r)} instance(s)" for gid, r in resp.items()]
    rows = [{"task": tid, "instance": k, "release": sched.release[(tid, k)], "start": sched.start[(tid, k)],
             "finish": sched.finish[(tid, k)]} for (tid, k) in sorted(sched.release, key=lambda x: (x[1], x[0]))]
    doc = {"horizon": horizon, "responses": resp, "jobs": rows,
           "segments": {pe: [list(s) for s in segs] for pe, segs in sched.segments.items()}}
    _emit(args, "\n".join(lines) + "\n",
          {"json": json.dumps(doc, indent=2) + "\n",
           "csv": _csv(rows, ["task", "instance", "release", "start", "finish"])})
    return EXIT_OK


def cmd_enumerate(args) -> int:
    model = load_system(args.model)
    limits = oracle.EnumerationLimits(max_scenarios=args.max_scenarios, phase_step=args.phase_step)
    best = oracle.enumerate_wcrt(model, limits)
    lines = [f"{gid} enumerated WCRT={w} (lower bound on the true worst case)" for gid, w in best.items()]
    rows = [{"graph": g, "wcrt": w} for g, w in best.items()]
    _emit(args, "\n".join(lines) + "\n",
          {"json": json.dumps(best, indent=2) + "\n", "csv": _csv(rows, ["graph", "wcrt"])})
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    model = load_system(args.model)
    opts = AnalysisOptions(exclusion=not args.no_exclusion, dp_elimination=not args.no_dp_elim)
    res = analyze(model, opts)
    rep = oracle.monte_carlo(model, args.samples, seed=args.seed, horizon=args.horizon, bounds=res)
    ok = rep.taskViolations == 0 and rep.graphViolations == 0
    lines = [f"{g.id} observed max={rep.maxResponse[g.id]} HPA bound={res.perGraphWCRT[g.id]}"
             for g in model.graphs]
    lines.append(f"{rep.samples} samples, seed {args.seed}: "
                 + ("containment OK" if ok else
                    f"containment VIOLATED ({rep.taskViolations} task, {rep.graphViolations} graph)"))
    first = None
    if rep.firstViolation:
        first = {k: v for k, v in rep.firstViolation.items() if k != "scenario"}
        lines.append(f"first violation: {first}")
    rows = [{"graph": g.id, "observed": rep.maxResponse[g.id], "bound": res.perGraphWCRT[g.id]}
            for g in model.graphs]
    doc = {"samples": rep.samples, "seed": args.seed, "graphs": rows, "taskViolations": rep.taskViolations,
           "graphViolations": rep.graphViolations, "firstViolation": first}
    _emit(args, "\n".join(lines) + "\n",
          {"json": json.dumps(doc, indent=2) + "\n", "csv": _csv(rows, ["graph", "observed", "bound"])})
    return EXIT_OK if ok else EXIT_FAIL


# -- generation --------------------------------------------------------------


def _range(text: str, kind=int) -> tuple:
    lo, sep, hi = text.partition(":")
    try:
        lo_v = kind(lo)
        hi_v = kind(hi) if sep else lo_v
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO:HI, got {text!r}") from None
    return (lo_v, hi_v)


def _params(args) -> expgen.GenParams:
    p = PRESETS[args.preset]
    changes = {}
    for name, attr in (("graphs", "graphCount"), ("tasks", "totalTasks"), ("pes", "peCount"),
                       ("bcet", "bcetRange"), ("wcet_factor", "wcetFactor")):
        v = getattr(args, name)
        if v is not None:
            changes[attr] = v
    for name, attr in (("topology", "topology"), ("policy_mix", "policyMix"), ("jitter", "jitter")):
        v = getattr(args, name)
        if v is not None:
            changes[attr] = v
    try:
        return replace(p, seed=args.seed, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_generate(args) -> int:
    model = expgen.generate(_params(args))
    text = serialize(model)
    if args.out:
        atomic_write(args.out, text)
        print(f"wrote {args.out}: {len(model.graphs)} graph(s), {len(model.tasks)} task(s), "
              f"{len(model.pes)} PE(s)")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_campaign(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    bad = [m for m in methods if m not in ("hpa", "yw", "oracle")]
    if bad:
        raise UsageError(f"unknown method(s): {', '.join(bad)}")
    cfg = expgen.CampaignConfig(params=_params(args), instances=args.instances, seed=args.seed,
                                methods=methods, samples=args.samples, timing=not args.no_timing,
                                options=AnalysisOptions(exclusion=not args.no_exclusion,
                                                        dp_elimination=not args.no_dp_elim))
    rows, stats = expgen.run_campaign(cfg)
    rows_csv, stats_csv = expgen.rows_to_csv(rows), expgen.stats_to_csv(stats)
    lines = [f"{args.instances} instance(s), {len(rows)} row(s)"]
    for m in sorted(stats):
        s = stats[m]
        lines.append(f"hpa vs {m}: win {s.win} tie {s.tie} lose {s.lose}  "
                     f"max {s.maxGapPct:.2f}% min {s.minGapPct:.2f}% avg {s.avgGapPct:.2f}%")
    doc = {"rows": rows, "stats": {m: s.row() for m, s in stats.items()}}
    _emit(args, "\n".join(lines) + "\n", {"json": json.dumps(doc, indent=2) + "\n", "csv": rows_csv})
    if args.stats_out:
        atomic_write(args.stats_out, stats_csv)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tgwcrt", description="WCRT analysis for task graphs on multiprocessors.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("model", help="system model (JSON)")
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        sp.add_argument("--out", help="also write a machine-readable report here (atomic)")

    def toggles(sp):
        sp.add_argument("--no-exclusion", action="store_true", help="do not grow exclusion sets beyond descendants")
        sp.add_argument("--no-dp-elim", action="store_true", help="disable duplicate-preemption elimination")

    sp = sub.add_parser("analyze", help="HPA bounds")
    common(sp)
    toggles(sp)
    sp.add_argument("--max-iterations", type=int, default=1000)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("yw", help="Y&W baseline bounds (not conservative)")
    common(sp)
    sp.add_argument("--max-iterations", type=int, default=1000)
    sp.set_defaults(func=cmd_yw)

    sp = sub.add_parser("simulate", help="run one scenario")
    common(sp)
    sp.add_argument("--seed", type=int, help="draw a random scenario (default: wcet, no jitter, phase 0)")
    sp.add_argument("--horizon", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("enumerate", help="exhaustive scenario lattice (lower bound)")
    common(sp)
    sp.add_argument("--max-scenarios", type=int, default=oracle.EnumerationLimits().max_scenarios)
    sp.add_argument("--phase-step", type=int)
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("montecarlo", help="random scenarios checked against HPA")
    common(sp)
    toggles(sp)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--horizon", type=int)
    sp.set_defaults(func=cmd_montecarlo)

    def gen_flags(sp):
        sp.add_argument("--preset", choices=sorted(PRESETS), default="small")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--graphs", type=_range)
        sp.add_argument("--tasks", type=_range)
        sp.add_argument("--pes", type=_range)
        sp.add_argument("--bcet", type=_range)
        sp.add_argument("--wcet-factor", type=lambda s: _range(s, float))
        sp.add_argument("--topology", choices=("dag", "chain"))
        sp.add_argument("--policy-mix", choices=("all_preemptive", "mixed"))
        sp.add_argument("--jitter", choices=("zero", "random"))

    sp = sub.add_parser("generate", help="random system model")
    sp.add_argument("--out", help="write the model here instead of stdout (atomic)")
    gen_flags(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("campaign", help="generate instances and compare methods")
    common(sp, model=False)
    gen_flags(sp)
    toggles(sp)
    sp.add_argument("--instances", type=int, default=10)
    sp.add_argument("--methods", default="hpa,yw")
    sp.add_argument("--samples", type=int, default=1000, help="Monte-Carlo samples for the oracle method")
    sp.add_argument("--no-timing", action="store_true", help="write micros=0 for byte-stable output")
    sp.add_argument("--stats-out", help="write the win/tie/lose summary CSV here")
    sp.set_defaults(func=cmd_campaign, preset="compare")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ModelError, UsageError, NonPreemptivePE, oracle.SpaceTooLarge, expgen.RepairFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
