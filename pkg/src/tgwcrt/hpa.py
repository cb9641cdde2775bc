"""Holistic schedule-time-bound analysis for task graphs on heterogeneous PEs.

Every task gets lower and upper bounds on its release, start and finish
times, measured from the nominal activation of its graph instance.  Higher
priority tasks of other graphs are tracked through per-pair phases and
period shifts so that preemptions which cannot happen are not charged.
The whole system is swept repeatedly until nothing changes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .model import ModelError, SystemModel, validate
from .state import (AnalysisOptions, AnalysisResult, AnalysisState, Context, TimeBounds,
                    ceil_div)
from . import opt

__all__ = [
    "AnalysisOptions", "AnalysisResult", "AnalysisState", "TimeBounds", "Diverged",
    "IterationCapExceeded", "analyze", "emod", "compute_release_bounds", "compute_min_start",
    "compute_delay_lower", "compute_max_start", "compute_min_finish", "compute_max_finish",
    "compute_period_shift", "compute_request_phase", "compute_start_phase", "compute_finish_phase",
]


class Diverged(RuntimeError):
    """An inner fixed point ran past the graph deadline."""


class IterationCapExceeded(RuntimeError):
    pass


def emod(a: int, m: int) -> int:
    """Euclidean modulo, always in [0, m)."""
    return a % m  # python's % already rounds toward -inf for m > 0


def _horizon(ctx: Context, t: int) -> int:
    # anything past this is unschedulable anyway, so fixed points stop here
    return ctx.deadline[t] + ctx.period[t]


def compute_release_bounds(t: int, st: AnalysisState) -> tuple[int, int]:
    ctx = st.ctx
    preds = ctx.preds[t]
    if not preds:
        return 0, ctx.jitter[t]
    return max(st.minF[p] for p in preds), max(st.maxF[p] for p in preds)


def _set_a(t: int, st: AnalysisState, min_s: int) -> tuple[int, ...]:
    ctx = st.ctx
    pri, minR = ctx.pri[t], st.minR[t]
    ex = st.ex[t]
    out = []
    for s in ctx.same_gp[t]:
        if s in ex or not minR < st.minF[s]:
            continue
        if ctx.pri[s] > pri:
            if st.maxS[s] <= min_s:
                out.append(s)
        elif not ctx.preemptive[t] and st.maxS[s] < minR:
            # a lower priority task already running blocks a non-preemptive PE
            out.append(s)
    return tuple(out)


def compute_min_start(t: int, st: AnalysisState) -> int:
    minR = st.minR[t]
    v = minR
    cap = _horizon(st.ctx, t)
    while True:
        a = _set_a(t, st, v)
        nv = max([minR] + [st.minF[s] for s in a])
        if nv == v or nv > cap:
            st.setA[t] = a
            return nv
        v = nv


def compute_min_finish(t: int, st: AnalysisState) -> int:
    ctx = st.ctx
    minS = st.minS[t]
    base = minS + ctx.bcet[t]
    if not ctx.preemptive[t]:
        st.setF[t] = ()
        return base
    pri, ex = ctx.pri[t], st.ex[t]
    cap = _horizon(ctx, t)
    v = base
    while True:
        f = tuple(s for s in ctx.same_gp[t]
                  if ctx.pri[s] > pri and s not in ex and minS <= st.minS[s] <= st.maxS[s] < v)
        nv = base + sum(ctx.bcet[s] for s in f)
        if nv == v or nv > cap:
            st.setF[t] = f
            return nv
        v = nv


def compute_delay_lower(t: int, st: AnalysisState) -> int:
    ctx = st.ctx
    if ctx.preemptive[t]:
        return 0
    preds = ctx.preds[t]
    if preds and not ctx.cross_pe_pred[t]:
        return 0
    rmaxR = st.rmaxR[t]
    pri, ex = ctx.pri[t], st.ex[t]
    dp = st.options.dp_elimination
    best = 0
    for s in ctx.same_gp[t]:
        if (ctx.pri[s] < pri and s not in ex and st.minS[s] < rmaxR < st.maxF[s]
                and not (dp and s in ctx.anc[t])):
            best = max(best, min(ctx.wcet[s], st.maxF[s] - rmaxR))
    for s in ctx.lp_foreign[t]:
        best = max(best, ctx.wcet[s])
    return best


def compute_max_start(t: int, st: AnalysisState, delay_lower: int | None = None) -> int:
    ctx = st.ctx
    dp = st.options.dp_elimination
    rmaxR, maxR = st.rmaxR[t], st.maxR[t]
    if delay_lower is None:
        delay_lower = compute_delay_lower(t, st)
    base = rmaxR + st.Ts[t] + delay_lower
    pri, ex = ctx.pri[t], st.ex[t]
    anc = ctx.anc[t]
    phiR = st.phiR[t]
    cap = _horizon(ctx, t)
    hpf = ctx.hp_foreign[t]
    foreign = list(zip(hpf, [ctx.period[s] for s in hpf], [ctx.wcet[s] for s in hpf], phiR[hpf].tolist()))
    # same-graph candidates; only the minS <= w test changes between rounds
    local = [(s, st.minS[s], min(ctx.wcet[s], st.maxF[s] - rmaxR)) for s in ctx.same_gp[t]
             if ctx.pri[s] > pri and s not in ex and rmaxR < st.maxF[s] and not (dp and s in anc)]
    w = base
    while True:
        d = tuple(s for s, m, _ in local if m <= w)
        delay = sum(c for _, m, c in local if m <= w)
        pc = {}
        y = (max(0, w - maxR) if dp else w - maxR) + 1
        for s, T, c, phi in foreign:
            x = y - phi
            if x > 0:
                k = -(-x // T)
                pc[s] = k
                delay += k * c
        nw = base + delay
        if nw == w or nw > cap:
            st.setD[t] = d
            st.PC[t] = pc
            if nw > cap:
                st.diverged = True
            w = nw
            break
        w = nw
    return max(maxR, w) if dp else w


def compute_max_finish(t: int, st: AnalysisState) -> int:
    ctx = st.ctx
    maxS = st.maxS[t]
    base = maxS + ctx.wcet[t]
    if not ctx.preemptive[t]:
        st.setG[t] = ()
        return base
    pri, ex = ctx.pri[t], st.ex[t]
    hpf = ctx.hp_foreign[t]
    foreign = list(zip([ctx.period[s] for s in hpf], [ctx.wcet[s] for s in hpf], st.phiS[t][hpf].tolist()))
    cap = _horizon(ctx, t)
    v = base
    while True:
        g = tuple(s for s in ctx.same_gp[t]
                  if ctx.pri[s] > pri and s not in ex and maxS < st.minS[s] <= v)
        nv = base + sum(ctx.wcet[s] for s in g)
        for T, c, phi in foreign:
            x = v - maxS - phi
            if x > 0:
                nv += -(-x // T) * c
        if nv == v or nv > cap:
            st.setG[t] = g
            if nv > cap:
                st.diverged = True
            return nv
        v = nv


def compute_request_phase(t: int, i: int, st: AnalysisState) -> int:
    ctx = st.ctx
    P = int(st.P[t, i])
    preds = ctx.preds[t]
    if not preds or (ctx.cross_pe_pred[t] and not st.options.dp_elimination):
        return -P
    earliest = min(int(st.phiF[p, i]) + st.maxF[p] for p in preds)
    return max(-P, earliest - st.maxR[t])


def compute_start_phase(t: int, i: int, st: AnalysisState) -> int:
    ctx = st.ctx
    raw = int(st.phiR[t, i]) + st.maxR[t] - st.maxS[t]
    if i in ctx.hp_foreign_set[t]:
        return emod(raw, ctx.period[i])
    return raw


def compute_finish_phase(t: int, i: int, st: AnalysisState) -> int:
    ctx = st.ctx
    raw = int(st.phiS[t, i]) + st.maxS[t] - st.maxF[t]
    if i in ctx.hp_foreign_set[t] and ctx.preemptive[t]:
        return emod(raw, ctx.period[i])
    return raw


def compute_delta(t: int, i: int, st: AnalysisState) -> int:
    """Extra look-back δ for the pair (t, i).

    Starts from the widest window the foreign task can slip by (its own
    start delay) and shrinks it to the largest self-consistent value.
    """
    ctx = st.ctx
    upper = max(0, st.maxS[i] - st.maxR[i])
    if upper == 0:
        return 0
    R = st.maxS[t] - st.maxR[t]
    maxR_t, minR_t = st.maxR[t], st.minR[t]
    pri_i = ctx.pri[i]
    P, phiR = st.P[t].tolist(), st.phiR[t].tolist()
    foreign = [s for s in ctx.hp_foreign[t] if ctx.pri[s] > pri_i]
    local = [s for s in ctx.graph_tasks[ctx.g[t]] if s != t and ctx.pri[s] > pri_i]
    T_t = ctx.period[t]

    def f(d: int) -> int:
        total = 0
        for s in foreign:
            T = ctx.period[s]
            extra = ceil_div(R + d + P[s], T) - ceil_div(R - phiR[s], T)
            total += extra * ctx.wcet[s]
        # s counts if some release of s can fall within d before some release of t
        lo = minR_t - d
        for s in local:
            r, q = st.maxR[s], st.minR[s]
            if (lo <= r and q < maxR_t) or (lo <= r - T_t and q - T_t < maxR_t):
                total += ctx.wcet[s]
        return total

    d = upper
    while True:
        nd = min(upper, max(0, f(d)))
        if nd == d:
            return d
        d = nd


def compute_period_shift(t: int, i: int, st: AnalysisState) -> int:
    d = compute_delta(t, i, st)
    st.delta[t][i] = d
    return st.maxR[i] - st.minR[i] + d


def _sweep_task(t: int, st: AnalysisState) -> None:
    ctx = st.ctx
    st.minR[t], st.maxR[t] = compute_release_bounds(t, st)
    st.minS[t] = compute_min_start(t, st)
    st.minF[t] = compute_min_finish(t, st)

    if ctx.preds[t]:
        cri = opt.critical_predecessors(t, st)[0]
        st.detect[t] = ctx.cross_pe_pred[t] or st.detect[cri]
    else:
        st.detect[t] = False
    if st.options.dp_elimination:
        res = opt.remove_duplicate_preemptions(t, st)
        st.Tr[t], st.Ts[t] = res.releaseReduction, res.movedForeignDelay
    st.rmaxR[t] = st.maxR[t] - st.Tr[t]

    # per-pair phases; compiled versions of compute_request/start/finish_phase
    pk = ctx.packed()
    tg = pk["tg"][t]
    preds = ctx.preds[t]
    reset = not preds or (ctx.cross_pe_pred[t] and not st.options.dp_elimination)
    maxR = st.maxR[t]
    offs = np.array([st.maxF[p] - maxR for p in preds], dtype=np.int64)
    _request_row(t, tg, pk["preds"][t], offs, reset, st.P, st.phiF, st.phiR)
    st.maxS[t] = compute_max_start(t, st)
    hp, per = pk["tg_hp"][t], pk["tg_period"][t]
    _shift_row(t, tg, hp, per, maxR - st.maxS[t], True, st.phiR, st.phiS)
    st.maxF[t] = compute_max_finish(t, st)
    _shift_row(t, tg, hp, per, st.maxS[t] - st.maxF[t], ctx.preemptive[t], st.phiS, st.phiF)


@njit(cache=True)
def _request_row(t, tg, preds, offs, reset, P, phiF, phiR):
    for k in range(tg.shape[0]):
        i = tg[k]
        v = -P[t, i]
        if not reset:
            e = phiF[preds[0], i] + offs[0]
            for j in range(1, preds.shape[0]):
                e = min(e, phiF[preds[j], i] + offs[j])
            v = max(v, e)
        phiR[t, i] = v


@njit(cache=True)
def _shift_row(t, tg, hp, per, off, wrap, src, dst):
    # dst[t, i] = src[t, i] + off, reduced mod T_i for preemptors when wrap is set
    for k in range(tg.shape[0]):
        i = tg[k]
        v = src[t, i] + off
        if wrap and hp[k]:
            v = v % per[k]
        dst[t, i] = v


@njit(cache=True)
def _delta_kernel(maxS, maxR, minR, pri, wcet, period, t_ptr, t_idx, f_ptr, f_idx, P, phiR,
                  l_ptr, l_idx):
    """compute_delta for every (t, target) pair, as a dense n x n table."""
    n = maxS.shape[0]
    out = np.zeros((n, n), dtype=np.int64)
    for t in range(n):
        R = maxS[t] - maxR[t]
        T_t = period[t]
        for k in range(t_ptr[t], t_ptr[t + 1]):
            i = t_idx[k]
            upper = maxS[i] - maxR[i]
            if upper <= 0:
                continue
            pri_i = pri[i]
            d = upper
            while True:
                total = 0
                for j in range(f_ptr[t], f_ptr[t + 1]):
                    s = f_idx[j]
                    if pri[s] > pri_i:
                        T = period[s]
                        total += (-((-(R + d + P[t, s])) // T) + ((-(R - phiR[t, s])) // T)) * wcet[s]
                lo = minR[t] - d
                for j in range(l_ptr[t], l_ptr[t + 1]):
                    s = l_idx[j]
                    if pri[s] > pri_i:
                        r = maxR[s]
                        q = minR[s]
                        if (lo <= r and q < maxR[t]) or (lo <= r - T_t and q - T_t < maxR[t]):
                            total += wcet[s]
                nd = min(upper, max(0, total))
                if nd == d:
                    break
                d = nd
            out[t, i] = d
    return out


def _update_period_shifts(st: AnalysisState) -> None:
    ctx = st.ctx
    pk = ctx.packed()
    t_ptr, t_idx = pk["targets"]
    f_ptr, f_idx = pk["foreign"]
    l_ptr, l_idx = pk["local"]
    maxR, minR = np.array(st.maxR, dtype=np.int64), np.array(st.minR, dtype=np.int64)
    st.delta = _delta_kernel(np.array(st.maxS, dtype=np.int64), maxR, minR, pk["pri"], pk["wcet"],
                             pk["period"], t_ptr, t_idx, f_ptr, f_idx, st.P, st.phiR, l_ptr, l_idx)
    st.P = np.where(pk["mask"], st.delta + (maxR - minR)[None, :], 0)


def _graph_wcrt(st: AnalysisState) -> list[int]:
    ctx = st.ctx
    return [max(st.maxF[t] for t in ts) if ts else 0 for ts in ctx.graph_tasks]


def _run(ctx: Context, opts: AnalysisOptions) -> tuple[AnalysisState, bool, bool, bool]:
    st = AnalysisState(ctx, opts)
    converged = False
    schedulable = monotone = True
    prev_max = None
    while st.iteration < opts.max_iterations:
        st.iteration += 1
        before = st.snapshot()
        for t in ctx.order:
            _sweep_task(t, st)
        wcrt = _graph_wcrt(st)
        if st.diverged or any(w > d for w, d in zip(wcrt, ctx.gdeadline)):
            schedulable = False
            break
        cur_max = tuple(st.maxF)
        if prev_max is not None and any(c < p for c, p in zip(cur_max, prev_max)):
            monotone = False
        prev_max = cur_max
        _update_period_shifts(st)
        if opts.exclusion:
            st.ex = opt.update_exclusion_sets(st)
        if st.snapshot() == before:
            converged = True
            break
    return st, converged, schedulable, monotone


def analyze(model: SystemModel, opts: AnalysisOptions | None = None) -> AnalysisResult:
    """Run the full analysis and return per-graph WCRT bounds.

    A model that misses a deadline (or fails to settle within
    ``opts.max_iterations`` sweeps) comes back with ``schedulable=False``;
    its bounds are then only the values reached when the loop stopped.
    """
    opts = opts or AnalysisOptions()
    problems = validate(model)
    if problems:
        raise ModelError("; ".join(f"{v.rule}: {v.message}" for v in problems))
    ctx = Context(model)
    st, converged, schedulable, monotone = _run(ctx, opts)
    wcrt = _graph_wcrt(st)
    return AnalysisResult(
        method="hpa",
        perGraphWCRT={ctx.graph_ids[k]: w for k, w in enumerate(wcrt)},
        perTaskBounds={ctx.ids[t]: st.bounds(t) for t in range(ctx.n)},
        converged=converged,
        iterations=st.iteration,
        schedulable=schedulable and converged,
        deadlines={ctx.graph_ids[k]: d for k, d in enumerate(ctx.gdeadline)},
        monotone=monotone,
    )


def analyze_state(model: SystemModel, opts: AnalysisOptions | None = None) -> AnalysisState:
    """Like analyze, but hand back the raw state (phases, shifts, sets)."""
    return _run(Context(model), opts or AnalysisOptions())[0]
