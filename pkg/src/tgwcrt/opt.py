"""Tightening passes: exclusion sets and duplicate-preemption elimination.

Both passes only ever remove interference that cannot occur.  With them
switched off the analysis still produces safe, if looser, bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .state import AnalysisState


@dataclass(frozen=True)
class DPResult:
    releaseReduction: int = 0
    movedForeignDelay: int = 0


def _close(ex: list[set[int]]) -> list[frozenset[int]]:
    changed = True
    while changed:
        changed = False
        for i, s in enumerate(ex):
            extra = set()
            for j in s:
                extra |= ex[j]
            extra -= s
            if extra:
                s |= extra
                changed = True
    return [frozenset(s) for s in ex]


def update_exclusion_sets(st: AnalysisState) -> list[frozenset[int]]:
    """Tasks that can never delay task i, given the last sweep.

    Besides i's descendants this holds every task whose ancestor is certain
    to be preempted by i: such a task cannot even be released until i is
    done.  The result is closed transitively.
    """
    ctx = st.ctx
    n = ctx.n
    sure = [set(st.setA[p]) & set(st.setF[p]) for p in range(n)]
    ex = [set(ctx.desc[i]) for i in range(n)]
    for s in range(n):
        for p in ctx.anc[s]:
            for i in sure[p]:
                ex[i].add(s)
    return _close(ex)


def critical_predecessors(t: int, st: AnalysisState) -> tuple[int | None, int | None]:
    """Predecessors with the largest and second largest maxF."""
    ctx = st.ctx
    preds = ctx.preds[t]
    if not preds:
        return None, None
    if len(preds) == 1:
        return preds[0], None
    maxF, wcet, ids = st.maxF, ctx.wcet, ctx.ids
    ranked = sorted(preds, key=lambda p: (-maxF[p], -wcet[p], ids[p]))
    return ranked[0], ranked[1]


def _detect_hit(t: int, st: AnalysisState) -> bool:
    maxR = st.maxR[t]
    return any(st.maxF[p] == maxR and st.detect[p] for p in st.ctx.preds[t])


def _walk(t: int, tr0: int, chain: list, st: AnalysisState) -> tuple[int, int]:
    """One pass down t's critical path and back up.

    Going down, preemptions already charged to an ancestor and able to hit
    t are collected (each task once).  Coming back up, the reduction is cut
    where other same-PE tasks could have used the slack.
    """
    lo = st.maxR[t] - tr0
    seen: set[int] = set()
    moved = 0
    te = []
    for c, local, foreign, _, _ in chain:
        e = 0
        for s, c_s, f_s in local:
            if lo < f_s and s not in seen:
                e += c_s
                seen.add(s)
        for s, amount in foreign:
            if s not in seen:
                e += amount
                moved += amount
                seen.add(s)
        te.append(e)
    tr = te[-1]
    for k in range(len(chain) - 2, -1, -1):
        _, _, _, slack, gap = chain[k]
        if k:
            lo_c = st.maxR[chain[k][0]] - tr
            extra = 0
            for c_s, f_s in slack:
                if lo_c < f_s:
                    extra += min(c_s, f_s - lo_c)
            tr = max(0, tr - extra)
        if gap is not None:
            tr = min(tr, gap)
        tr += te[k]
    return tr, moved


def _chain(t: int, st: AnalysisState) -> list | None:
    """t's critical path with the per-node candidate lists that do not
    depend on the walk's current reduction.  None when nothing on the path
    can be pulled in (the walk would then always give zero)."""
    ctx = st.ctx
    # higher priority tasks on t's PE that t does not exclude
    cand = ctx.hp_pe_set[t] - st.ex[t]
    if not cand:
        return None
    foreign_t = ctx.hp_foreign_set[t]
    wcet, maxF = ctx.wcet, st.maxF
    hit = _detect_hit(t, st)
    path = []
    c, any_hit = t, False
    while c is not None:
        cri1, cri2 = critical_predecessors(c, st)
        local, foreign = (), ()
        if c != t:
            local = [(s, wcet[s], maxF[s]) for s in st.setD[c] + st.setG[c] if s in cand]
            if hit:
                foreign = [(s, k * wcet[s]) for s, k in st.PC[c].items() if s in foreign_t]
            any_hit = any_hit or bool(local) or bool(foreign)
        path.append((c, cri1, cri2, local, foreign))
        c = cri1
    if not any_hit:
        return None
    chain = []
    for c, cri1, cri2, local, foreign in path:
        slack = ()
        if c != t:
            dg = set(st.setD[c]) | set(st.setG[c])
            ex_c, anc_c = st.ex[c], ctx.anc[c]
            pri_c, pre_c, maxR_c = ctx.pri[c], ctx.preemptive[c], st.maxR[c]
            slack = [(ctx.wcet[s], st.maxF[s]) for s in ctx.same_gp[c]
                     if s not in dg and s not in ex_c and s not in anc_c
                     and (ctx.pri[s] > pri_c or not pre_c) and st.minS[s] <= maxR_c]
        gap = None if cri2 is None else st.maxF[cri1] - st.maxF[cri2]
        chain.append((c, local, foreign, slack, gap))
    return chain


def remove_duplicate_preemptions(t: int, st: AnalysisState) -> DPResult:
    """How far t's worst-case release can be pulled in, and by how much of
    that the foreign interference must be moved to its start.

    Preemptions already charged to ancestors on the critical path cannot hit
    t again if they arrived before t's reduced release.
    """
    ctx = st.ctx
    if not ctx.preds[t]:
        return DPResult()
    cap = len(ctx.graph_tasks[ctx.g[t]]) + 1
    chain = _chain(t, st)
    if chain is None:
        return DPResult()
    tr, ts = 0, 0
    for _ in range(cap):
        ntr, nts = _walk(t, tr, chain, st)
        ntr = max(0, min(ntr, st.maxR[t]))
        if (ntr, nts) == (tr, ts):
            return DPResult(tr, ts)
        tr, ts = ntr, nts
    return DPResult()
