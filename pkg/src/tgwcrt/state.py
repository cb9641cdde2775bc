"""Dense-index view of a model plus the mutable state of one analysis run."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import SystemModel


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


@dataclass(frozen=True)
class AnalysisOptions:
    exclusion: bool = True
    dp_elimination: bool = True
    max_iterations: int = 1000


@dataclass(frozen=True)
class TimeBounds:
    minR: int
    maxR: int
    minS: int
    maxS: int
    minF: int
    maxF: int
    reducedMaxR: int

    def as_tuple(self) -> tuple[int, ...]:
        return (self.minR, self.maxR, self.minS, self.maxS, self.minF, self.maxF, self.reducedMaxR)


@dataclass
class AnalysisResult:
    method: str
    perGraphWCRT: dict[str, int]
    perTaskBounds: dict[str, TimeBounds]
    converged: bool
    iterations: int
    schedulable: bool
    deadlines: dict[str, int] = field(default_factory=dict)
    monotone: bool = True

    def wcrt(self, graph_id: str) -> int:
        return self.perGraphWCRT[graph_id]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "schedulable": self.schedulable,
            "graphs": {g: {"wcrt": w, "deadline": self.deadlines.get(g)} for g, w in self.perGraphWCRT.items()},
            "tasks": {t: dict(zip(("minR", "maxR", "minS", "maxS", "minF", "maxF", "reducedMaxR"), b.as_tuple()))
                      for t, b in self.perTaskBounds.items()},
        }


class Context:
    """Static per-model tables addressed by dense task index."""

    def __init__(self, model: SystemModel):
        self.model = model
        tasks = model.tasks
        self.n = n = len(tasks)
        self.ids = [t.id for t in tasks]
        idx = model.task_index
        pe_ids = [p.id for p in model.pes]
        pe_idx = {p: k for k, p in enumerate(pe_ids)}
        g_ids = [g.id for g in model.graphs]
        g_idx = {g: k for k, g in enumerate(g_ids)}
        self.graph_ids = g_ids

        self.g = [g_idx[t.graph] for t in tasks]
        self.pe = [pe_idx[t.pe] for t in tasks]
        self.pri = [t.priority for t in tasks]
        self.bcet = [t.bcet for t in tasks]
        self.wcet = [t.wcet for t in tasks]
        self.preds = [[idx[p] for p in t.preds] for t in tasks]
        self.succs = [[idx[s] for s in model.succs[t.id]] for t in tasks]
        self.anc = [frozenset(idx[a] for a in model.ancestors[t.id]) for t in tasks]
        self.desc = [frozenset(idx[d] for d in model.descendants[t.id]) for t in tasks]
        graphs = model.graphs
        self.period = [graphs[k].period for k in self.g]
        self.jitter = [graphs[k].jitter for k in self.g]
        self.deadline = [graphs[k].deadline for k in self.g]
        self.gperiod = [g.period for g in graphs]
        self.gdeadline = [g.deadline for g in graphs]
        policies = [p.preemptive for p in model.pes]
        self.preemptive = [policies[k] for k in self.pe]
        self.order = [idx[x] for x in model.analysis_order]
        self.graph_tasks = [[i for i in range(n) if self.g[i] == k] for k in range(len(graphs))]

        by_pe = [[] for _ in pe_ids]
        for t in range(n):
            by_pe[self.pe[t]].append(t)
        # same graph, same PE, other task
        self.same_gp = [[s for s in by_pe[self.pe[t]] if s != t and self.g[s] == self.g[t]] for t in range(n)]
        # foreign tasks on the same PE, higher (E) and lower (C) priority
        self.hp_foreign = [[s for s in by_pe[self.pe[t]] if self.g[s] != self.g[t] and self.pri[s] > self.pri[t]]
                           for t in range(n)]
        self.hp_foreign_set = [frozenset(x) for x in self.hp_foreign]
        self.hp_pe_set = [frozenset(s for s in by_pe[self.pe[t]] if self.pri[s] > self.pri[t]) for t in range(n)]
        self.lp_foreign = [[s for s in by_pe[self.pe[t]] if self.g[s] != self.g[t] and self.pri[s] < self.pri[t]]
                           for t in range(n)]
        self.cross_pe_pred = [any(self.pe[p] != self.pe[t] for p in self.preds[t]) for t in range(n)]
        # foreign tasks whose phase relative to t can matter: those sharing a
        # PE with t or with one of t's descendants
        self.phase_targets = []
        for t in range(n):
            pes = {self.pe[t]} | {self.pe[d] for d in self.desc[t]}
            g = self.g[t]
            self.phase_targets.append(sorted(i for k in pes for i in by_pe[k] if self.g[i] != g))
        self._packed = None

    def packed(self) -> dict:
        """Flat numpy copies of the static tables, for the compiled kernels."""
        if self._packed is None:
            def csr(rows):
                ptr = np.zeros(len(rows) + 1, dtype=np.int64)
                ptr[1:] = np.cumsum([len(r) for r in rows])
                idx = np.array([x for r in rows for x in r], dtype=np.int64)
                return ptr, idx
            local = [[s for s in self.graph_tasks[self.g[t]] if s != t] for t in range(self.n)]
            self._packed = {
                "pri": np.array(self.pri, dtype=np.int64),
                "wcet": np.array(self.wcet, dtype=np.int64),
                "period": np.array(self.period, dtype=np.int64),
                "targets": csr(self.phase_targets),
                "foreign": csr(self.hp_foreign),
                "local": csr(local),
                "preds": [np.array(x, dtype=np.int64) for x in self.preds],
                "tg": [np.array(x, dtype=np.int64) for x in self.phase_targets],
                "tg_hp": [np.array([i in self.hp_foreign_set[t] for i in x], dtype=bool)
                          for t, x in enumerate(self.phase_targets)],
                "tg_period": [np.array([self.period[i] for i in x], dtype=np.int64) for x in self.phase_targets],
            }
            mask = np.zeros((self.n, self.n), dtype=bool)
            for t, x in enumerate(self.phase_targets):
                mask[t, x] = True
            self._packed["mask"] = mask
        return self._packed


class AnalysisState:
    """All per-task and per-pair quantities of one analysis run."""

    def __init__(self, ctx: Context, options: AnalysisOptions):
        self.ctx = ctx
        self.options = options
        n = ctx.n
        z = [0] * n
        self.minR, self.maxR = z[:], z[:]
        self.minS, self.maxS = z[:], z[:]
        self.minF, self.maxF = z[:], z[:]
        self.rmaxR = z[:]
        self.Tr, self.Ts = z[:], z[:]
        self.detect = [False] * n
        # pair tables are dense n x n; only (t, i in phase_targets[t]) is meaningful
        mask = ctx.packed()["mask"]
        self.P = np.where(mask, np.array(ctx.jitter, dtype=np.int64)[None, :], 0)
        self.delta = np.zeros((n, n), dtype=np.int64)
        self.phiR = np.zeros((n, n), dtype=np.int64)
        self.phiS = np.zeros((n, n), dtype=np.int64)
        self.phiF = np.zeros((n, n), dtype=np.int64)
        self.PC = [{} for _ in range(n)]
        # descendants can never preempt; the exclusion option only controls
        # whether the sets grow beyond this between sweeps
        self.ex = [frozenset(ctx.desc[t]) for t in range(n)]
        self.setA = [() for _ in range(n)]
        self.setF = [() for _ in range(n)]
        self.setD = [() for _ in range(n)]
        self.setG = [() for _ in range(n)]
        self.iteration = 0
        self.diverged = False

    def bounds(self, t: int) -> TimeBounds:
        return TimeBounds(self.minR[t], self.maxR[t], self.minS[t], self.maxS[t],
                          self.minF[t], self.maxF[t], self.rmaxR[t])

    def snapshot(self) -> tuple:
        return (
            tuple(self.minR), tuple(self.maxR), tuple(self.minS), tuple(self.maxS),
            tuple(self.minF), tuple(self.maxF), tuple(self.rmaxR), tuple(self.Tr), tuple(self.Ts),
            self.phiR.tobytes(), self.phiS.tobytes(), self.phiF.tobytes(),
            self.P.tobytes(), self.delta.tobytes(),
            tuple(self.ex),
        )
