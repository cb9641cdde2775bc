"""Y&W style response-time analysis, kept as a comparison baseline.

Per task: separation analysis, phase adjustment along edges and a
per-preemptor period shift of maxR - minR inside the ceiling.  Only
preemptive PEs are supported.  Known to be optimistic in some cases.
"""

from __future__ import annotations

from .model import ModelError, SystemModel, validate
from .state import AnalysisResult, Context, TimeBounds, ceil_div


class NonPreemptivePE(ModelError):
    pass


class YwState:
    def __init__(self, ctx: Context):
        n = ctx.n
        self.ctx = ctx
        self.minR, self.maxR = [0] * n, [0] * n
        self.minF, self.maxF = [0] * n, [0] * n
        self.r = [0] * n
        # hp[i]: higher priority tasks on i's PE, any graph
        self.hp = [[j for j in range(n) if j != i and ctx.pe[j] == ctx.pe[i] and ctx.pri[j] > ctx.pri[i]]
                   for i in range(n)]
        self.phiR = [dict.fromkeys(range(n), 0) for _ in range(n)]
        self.phiF = [dict.fromkeys(range(n), 0) for _ in range(n)]
        self.separated: list[frozenset[int]] = [frozenset() for _ in range(n)]

    def snapshot(self) -> tuple:
        return (tuple(self.minR), tuple(self.maxR), tuple(self.minF), tuple(self.maxF),
                tuple(tuple(d.values()) for d in self.phiF))


def _separated(i: int, st: YwState, max_finish: int) -> frozenset[int]:
    ctx = st.ctx
    return frozenset(j for j in st.hp[i] if ctx.g[j] == ctx.g[i]
                     and (st.minR[j] > max_finish or j in ctx.anc[i] or j in ctx.desc[i]))


def yw_separation(model: SystemModel, st: YwState) -> list[frozenset[int]]:
    """Same-graph higher priority tasks that provably cannot preempt each task.

    j is separated from i when it is connected to i by a path, or when it
    can only be released after i has finished.
    """
    return [_separated(i, st, st.maxF[i]) for i in range(st.ctx.n)]


def _response(i: int, st: YwState, cap: int) -> int:
    ctx = st.ctx
    phi = st.phiR[i]
    r = ctx.wcet[i]
    while True:
        sep = _separated(i, st, st.maxR[i] + r)
        nr = ctx.wcet[i]
        for j in st.hp[i]:
            if j in sep:
                continue
            shift = st.maxR[j] - st.minR[j]
            nr += ceil_div(max(0, r - phi[j] + shift), ctx.period[j]) * ctx.wcet[j]
        if nr == r or nr > cap:
            st.separated[i] = sep
            return nr
        r = nr


def yw_analyze(model: SystemModel, max_iterations: int = 1000) -> AnalysisResult:
    problems = validate(model)
    if problems:
        raise ModelError("; ".join(f"{v.rule}: {v.message}" for v in problems))
    bad = [p.id for p in model.pes if not p.preemptive]
    if bad:
        raise NonPreemptivePE(f"Y&W analysis supports preemptive PEs only; non-preemptive: {', '.join(bad)}")
    ctx = Context(model)
    st = YwState(ctx)
    n = ctx.n
    converged = False
    schedulable = True
    it = 0
    while it < max_iterations:
        it += 1
        before = st.snapshot()
        for i in ctx.order:
            preds = ctx.preds[i]
            if preds:
                st.minR[i] = max(st.minF[p] for p in preds)
                st.maxR[i] = max(st.maxF[p] for p in preds)
            else:
                st.minR[i], st.maxR[i] = 0, ctx.jitter[i]
            phiR = st.phiR[i]
            if preds:
                latest = st.maxR[i]
                for j in range(n):
                    phiR[j] = max(0, min(st.phiF[p][j] + st.maxF[p] for p in preds) - latest)
            else:
                for j in range(n):
                    phiR[j] = 0
            r = _response(i, st, ctx.deadline[i] + ctx.period[i])
            st.r[i] = r
            st.minF[i] = st.minR[i] + ctx.bcet[i]
            st.maxF[i] = st.maxR[i] + r
            pre = set(st.hp[i]) - st.separated[i]
            phiF = st.phiF[i]
            for j in range(n):
                if j in pre:
                    phiF[j] = (phiR[j] - r) % ctx.period[j]
                else:
                    phiF[j] = max(0, phiR[j] - r)
        wcrt = [max(st.maxF[t] for t in ts) for ts in ctx.graph_tasks]
        if any(w > d for w, d in zip(wcrt, ctx.gdeadline)):
            schedulable = False
            break
        if st.snapshot() == before:
            converged = True
            break

    wcrt = [max(st.maxF[t] for t in ts) for ts in ctx.graph_tasks]
    bounds = {}
    for t in range(n):
        bounds[ctx.ids[t]] = TimeBounds(st.minR[t], st.maxR[t], st.minR[t], st.maxF[t] - ctx.wcet[t],
                                        st.minF[t], st.maxF[t], st.maxR[t])
    return AnalysisResult(
        method="yw",
        perGraphWCRT={ctx.graph_ids[k]: w for k, w in enumerate(wcrt)},
        perTaskBounds=bounds,
        converged=converged,
        iterations=it,
        schedulable=schedulable and converged,
        deadlines={ctx.graph_ids[k]: d for k, d in enumerate(ctx.gdeadline)},
    )
