"""Concrete fixed-priority scheduler used as ground truth for the analyses.

``simulate`` runs one fully specified scenario.  ``monte_carlo_wcrt`` draws
many random scenarios (and can check every observed time against a set of
analytic bounds on the fly).  ``enumerate_wcrt`` walks a discretised lattice
of scenarios around one activation of each graph.

All times in a schedule are absolute; responses are measured from the
nominal activation of the graph instance, i.e. before its jitter.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from numba import njit

from .model import SystemModel
from .state import AnalysisResult

_INF = np.iinfo(np.int64).max


class SpaceTooLarge(ValueError):
    """The requested enumeration exceeds the configured limits."""


class HorizonTooSmall(RuntimeError):
    pass


# --------------------------------------------------------------------------
# numba core


@njit(cache=True)
def _run(job_task, job_inst, inst_start, src_rel, exec_, task_pe, task_pri, task_pos,
         succ_ptr, succ_idx, task_npred, pe_preemptive,
         out_rel, out_start, out_finish, seg_job, seg_b, seg_e):
    n_jobs = job_task.shape[0]
    n_pe = pe_preemptive.shape[0]
    remaining = exec_.copy()
    pending = np.empty(n_jobs, np.int64)
    for j in range(n_jobs):
        pending[j] = task_npred[job_task[j]]
        out_rel[j] = -1
        out_start[j] = -1
        out_finish[j] = -1
    # source jobs in release order
    n_src = 0
    for j in range(n_jobs):
        if src_rel[j] >= 0:
            n_src += 1
    src = np.empty(n_src, np.int64)
    k = 0
    for j in range(n_jobs):
        if src_rel[j] >= 0:
            src[k] = j
            k += 1
    keys = np.empty(n_src, np.int64)
    for i in range(n_src):
        keys[i] = src_rel[src[i]]
    src = src[np.argsort(keys, kind="mergesort")]

    ready = np.empty((n_pe, n_jobs), np.int64)
    n_ready = np.zeros(n_pe, np.int64)
    running = np.full(n_pe, -1, np.int64)
    seg_open = np.zeros(n_pe, np.int64)
    n_seg = 0
    cap_seg = seg_job.shape[0]

    if n_src == 0:
        return 0
    now = src_rel[src[0]]
    sp = 0
    done = 0
    while done < n_jobs:
        # completions at `now` come first, so successors released now compete
        for p in range(n_pe):
            j = running[p]
            if j >= 0 and remaining[j] == 0:
                if now > seg_open[p]:
                    if n_seg >= cap_seg:
                        return -1
                    seg_job[n_seg] = j
                    seg_b[n_seg] = seg_open[p]
                    seg_e[n_seg] = now
                    n_seg += 1
                out_finish[j] = now
                done += 1
                running[p] = -1
                for r in range(n_ready[p]):
                    if ready[p, r] == j:
                        n_ready[p] -= 1
                        ready[p, r] = ready[p, n_ready[p]]
                        break
                t = job_task[j]
                base = inst_start[job_inst[j]]
                for e in range(succ_ptr[t], succ_ptr[t + 1]):
                    s = succ_idx[e]
                    sj = base + task_pos[s]
                    pending[sj] -= 1
                    if pending[sj] == 0:
                        out_rel[sj] = now
                        q = task_pe[s]
                        ready[q, n_ready[q]] = sj
                        n_ready[q] += 1
        while sp < n_src and src_rel[src[sp]] <= now:
            j = src[sp]
            out_rel[j] = src_rel[j]
            p = task_pe[job_task[j]]
            ready[p, n_ready[p]] = j
            n_ready[p] += 1
            sp += 1
        zero = False
        for p in range(n_pe):
            cur = running[p]
            if cur < 0 or pe_preemptive[p]:
                best = -1
                for r in range(n_ready[p]):
                    j = ready[p, r]
                    if best < 0:
                        best = j
                    else:
                        pj = task_pri[job_task[j]]
                        pb = task_pri[job_task[best]]
                        if pj > pb or (pj == pb and j < best):
                            best = j
                if best != cur:
                    if cur >= 0 and now > seg_open[p]:
                        if n_seg >= cap_seg:
                            return -1
                        seg_job[n_seg] = cur
                        seg_b[n_seg] = seg_open[p]
                        seg_e[n_seg] = now
                        n_seg += 1
                    running[p] = best
                    seg_open[p] = now
                    if best >= 0 and out_start[best] < 0:
                        out_start[best] = now
            if running[p] >= 0 and remaining[running[p]] == 0:
                zero = True
        if zero:
            continue
        nxt = _INF
        if sp < n_src:
            nxt = src_rel[src[sp]]
        for p in range(n_pe):
            j = running[p]
            if j >= 0 and now + remaining[j] < nxt:
                nxt = now + remaining[j]
        if nxt == _INF:
            break
        dt = nxt - now
        for p in range(n_pe):
            j = running[p]
            if j >= 0:
                remaining[j] -= dt
        now = nxt
    return n_seg


@njit(cache=True)
def _mc_loop(samples, seed, horizon, random_phase,
             g_period, g_jitter, g_ptr, g_tasks, task_bcet, task_wcet,
             task_pe, task_pri, task_pos, task_graph, succ_ptr, succ_idx, task_npred, pe_preemptive,
             check, bounds, wcrt_bound, max_resp, viol, first_viol,
             cx_nom, cx_graph, cx_jit, cx_exec, cx_size):
    np.random.seed(seed)
    n_g = g_period.shape[0]
    n_t = task_bcet.shape[0]
    # worst-case instance count per graph: phase 0 up to the horizon
    max_inst = 0
    max_jobs = 0
    for g in range(n_g):
        c = (horizon + g_period[g] - 1) // g_period[g]
        max_inst += c
        max_jobs += c * (g_ptr[g + 1] - g_ptr[g])
    job_task = np.empty(max_jobs, np.int64)
    job_inst = np.empty(max_jobs, np.int64)
    src_rel = np.empty(max_jobs, np.int64)
    exec_ = np.empty(max_jobs, np.int64)
    inst_start = np.empty(max_inst, np.int64)
    inst_nom = np.empty(max_inst, np.int64)
    inst_graph = np.empty(max_inst, np.int64)
    inst_jit = np.empty(max_inst, np.int64)
    o_rel = np.empty(max_jobs, np.int64)
    o_st = np.empty(max_jobs, np.int64)
    o_fin = np.empty(max_jobs, np.int64)
    cap = 4 * max_jobs + 16
    sj = np.empty(cap, np.int64)
    sb = np.empty(cap, np.int64)
    se = np.empty(cap, np.int64)
    n_bad = 0
    for smp in range(samples):
        extreme = np.random.random() < 0.5
        nj = 0
        ni = 0
        for g in range(n_g):
            T = g_period[g]
            ph = np.random.randint(0, T) if random_phase else 0
            nom = ph
            while nom < horizon:
                if g_jitter[g] > 0:
                    if extreme:
                        jit = g_jitter[g] if np.random.random() < 0.5 else 0
                    else:
                        jit = np.random.randint(0, g_jitter[g] + 1)
                else:
                    jit = 0
                inst_start[ni] = nj
                inst_nom[ni] = nom
                inst_graph[ni] = g
                inst_jit[ni] = jit
                for k in range(g_ptr[g], g_ptr[g + 1]):
                    t = g_tasks[k]
                    job_task[nj] = t
                    job_inst[nj] = ni
                    src_rel[nj] = nom + jit if task_npred[t] == 0 else -1
                    b = task_bcet[t]
                    w = task_wcet[t]
                    if b == w:
                        exec_[nj] = w
                    elif extreme:
                        exec_[nj] = w if np.random.random() < 0.5 else b
                    else:
                        exec_[nj] = np.random.randint(b, w + 1)
                    nj += 1
                ni += 1
                nom += T
        n_seg = _run(job_task[:nj], job_inst[:nj], inst_start[:ni], src_rel[:nj], exec_[:nj],
                     task_pe, task_pri, task_pos, succ_ptr, succ_idx, task_npred, pe_preemptive,
                     o_rel[:nj], o_st[:nj], o_fin[:nj], sj, sb, se)
        if n_seg < 0:
            n_bad += 1
            continue
        clean = viol[0] == 0 and viol[1] == 0
        for q in range(ni):
            g = inst_graph[q]
            nom = inst_nom[q]
            resp = 0
            s0 = inst_start[q]
            cnt = g_ptr[g + 1] - g_ptr[g]
            for j in range(s0, s0 + cnt):
                r = o_fin[j] - nom
                if r > resp:
                    resp = r
                if check:
                    t = job_task[j]
                    rr = o_rel[j] - nom
                    ss = o_st[j] - nom
                    bad = (rr < bounds[t, 0] or rr > bounds[t, 1] or ss < bounds[t, 2] or ss > bounds[t, 3]
                           or r < bounds[t, 4] or r > bounds[t, 5])
                    if bad:
                        if viol[0] == 0:
                            first_viol[0] = smp
                            first_viol[1] = t
                            first_viol[2] = rr
                            first_viol[3] = ss
                            first_viol[4] = r
                        viol[0] += 1
            if resp > max_resp[g]:
                max_resp[g] = resp
            if check and resp > wcrt_bound[g]:
                if viol[1] == 0:
                    first_viol[5] = smp
                    first_viol[6] = g
                    first_viol[7] = resp
                viol[1] += 1
        if check and clean and (viol[0] or viol[1]):
            # keep the first bad scenario so it can be replayed
            cx_size[0] = ni
            cx_size[1] = nj
            for q in range(ni):
                cx_nom[q] = inst_nom[q]
                cx_graph[q] = inst_graph[q]
                cx_jit[q] = inst_jit[q]
            for j in range(nj):
                cx_exec[j] = exec_[j]
    return n_bad


# --------------------------------------------------------------------------
# static tables


class _Plan:
    """Model tables shared by every simulation of one model."""

    def __init__(self, model: SystemModel):
        self.model = model
        tasks = model.tasks
        idx = model.task_index
        pe_idx = {p.id: k for k, p in enumerate(model.pes)}
        g_idx = {g.id: k for k, g in enumerate(model.graphs)}
        self.ids = [t.id for t in tasks]
        self.g_idx = g_idx
        self.task_pe = np.array([pe_idx[t.pe] for t in tasks], np.int64)
        self.task_pri = np.array([t.priority for t in tasks], np.int64)
        self.task_bcet = np.array([t.bcet for t in tasks], np.int64)
        self.task_wcet = np.array([t.wcet for t in tasks], np.int64)
        self.task_graph = np.array([g_idx[t.graph] for t in tasks], np.int64)
        self.task_npred = np.array([len(t.preds) for t in tasks], np.int64)
        self.pe_preemptive = np.array([p.preemptive for p in model.pes], np.bool_)
        ptr, flat = [0], []
        for t in tasks:
            flat.extend(idx[s] for s in model.succs[t.id])
            ptr.append(len(flat))
        self.succ_ptr = np.array(ptr, np.int64)
        self.succ_idx = np.array(flat if flat else [0], np.int64)
        g_ptr, g_tasks = [0], []
        self.task_pos = np.zeros(len(tasks), np.int64)
        for g in model.graphs:
            for k, tid in enumerate(g.tasks):
                self.task_pos[idx[tid]] = k
                g_tasks.append(idx[tid])
            g_ptr.append(len(g_tasks))
        self.g_ptr = np.array(g_ptr, np.int64)
        self.g_tasks = np.array(g_tasks if g_tasks else [0], np.int64)
        self.g_period = np.array([g.period for g in model.graphs], np.int64)
        self.g_jitter = np.array([g.jitter for g in model.graphs], np.int64)
        self.g_deadline = np.array([g.deadline for g in model.graphs], np.int64)

    def graph_task_idx(self, g: int) -> np.ndarray:
        return self.g_tasks[self.g_ptr[g]:self.g_ptr[g + 1]]


# --------------------------------------------------------------------------
# single scenario


@dataclass
class Scenario:
    """One concrete run.

    ``instances`` maps a graph id to the nominal activation times of its
    instances.  Missing graphs are activated every period from ``phases``
    (default 0) up to ``horizon``.  Jitter and execution times default to 0
    and wcet; keys are ``(graph, k)`` and ``(task, k)`` with k the index into
    the graph's activation list.
    """

    horizon: int
    graphReleaseOffsets: dict = field(default_factory=dict)
    executionTimes: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)
    instances: dict = field(default_factory=dict)

    def activations(self, model: SystemModel) -> dict[str, list[int]]:
        out = {}
        for g in model.graphs:
            if g.id in self.instances:
                out[g.id] = sorted(self.instances[g.id])
                continue
            ph = self.phases.get(g.id, 0)
            out[g.id] = list(range(ph, self.horizon, g.period)) if ph < self.horizon else []
        return out


@dataclass
class Schedule:
    release: dict
    start: dict
    finish: dict
    nominal: dict
    segments: dict
    model: SystemModel = field(repr=False, default=None)

    def instance_response(self, graph_id: str, k: int) -> int:
        g = self.model.graph_map[graph_id]
        return max(self.finish[(t, k)] for t in g.tasks) - self.nominal[(graph_id, k)]

    def responses(self) -> dict[str, list[int]]:
        out = {g.id: [] for g in self.model.graphs}
        for (gid, k) in sorted(self.nominal, key=lambda x: (x[0], x[1])):
            out[gid].append(self.instance_response(gid, k))
        return out

    def graph_response(self, graph_id: str) -> int:
        r = self.responses()[graph_id]
        return max(r) if r else 0


def _check_scenario(model: SystemModel, sc: Scenario, acts: dict) -> None:
    for (gid, k), v in sc.graphReleaseOffsets.items():
        g = model.graph_map[gid]
        if not 0 <= v <= g.jitter:
            raise ValueError(f"release offset {v} of {gid}#{k} outside [0, {g.jitter}]")
    for (tid, k), v in sc.executionTimes.items():
        t = model.task(tid)
        if not t.bcet <= v <= t.wcet:
            raise ValueError(f"execution time {v} of {tid}#{k} outside [{t.bcet}, {t.wcet}]")


@dataclass
class _Raw:
    inst_key: list
    job_task: np.ndarray
    release: np.ndarray
    start: np.ndarray
    finish: np.ndarray
    seg_job: np.ndarray
    seg_begin: np.ndarray
    seg_end: np.ndarray


def _simulate_arrays(plan: _Plan, acts, jit, ex) -> _Raw:
    """acts[g][k] nominal, jit[g][k] offset, ex[g][k][pos] exec time."""
    job_task, job_inst, src_rel, exec_, inst_start, inst_key = [], [], [], [], [], []
    for g, nominals in enumerate(acts):
        tasks = plan.graph_task_idx(g)
        for k, nom in enumerate(nominals):
            inst_start.append(len(job_task))
            inst_key.append((g, k, nom))
            q = len(inst_key) - 1
            for pos, t in enumerate(tasks):
                job_task.append(t)
                job_inst.append(q)
                src_rel.append(nom + jit[g][k] if plan.task_npred[t] == 0 else None)
                exec_.append(ex[g][k][pos])
    n = len(job_task)
    # the core wants non-negative source releases, so shift the time origin
    shift = -min([r for r in src_rel if r is not None] + [0])
    sr = np.array([-1 if r is None else r + shift for r in src_rel], np.int64)
    o_rel, o_st, o_fin = np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n, np.int64)
    cap = 4 * n + 16
    sj, sb, se = np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.int64)
    jt = np.array(job_task, np.int64)
    n_seg = _run(jt, np.array(job_inst, np.int64), np.array(inst_start, np.int64), sr,
                 np.array(exec_, np.int64), plan.task_pe, plan.task_pri, plan.task_pos,
                 plan.succ_ptr, plan.succ_idx, plan.task_npred, plan.pe_preemptive,
                 o_rel, o_st, o_fin, sj, sb, se)
    if n_seg < 0:
        raise RuntimeError("segment buffer overflow")
    if n and (o_fin < 0).any():
        raise HorizonTooSmall("some jobs never completed")
    return _Raw(inst_key, jt, o_rel - shift, o_st - shift, o_fin - shift,
                sj[:n_seg], sb[:n_seg] - shift, se[:n_seg] - shift)


def simulate(model: SystemModel, scenario: Scenario) -> Schedule:
    """Run one scenario to completion of every activated instance."""
    plan = _Plan(model)
    acts_by_id = scenario.activations(model)
    _check_scenario(model, scenario, acts_by_id)
    acts, jit, ex = [], [], []
    for g in model.graphs:
        nominals = acts_by_id[g.id]
        acts.append(nominals)
        jit.append([scenario.graphReleaseOffsets.get((g.id, k), 0) for k in range(len(nominals))])
        ex.append([[scenario.executionTimes.get((tid, k), model.task(tid).wcet) for tid in g.tasks]
                   for k in range(len(nominals))])
    raw = _simulate_arrays(plan, acts, jit, ex)
    release, start, finish, nominal = {}, {}, {}, {}
    job_key = []
    for g, k, nom in raw.inst_key:
        gid = model.graphs[g].id
        nominal[(gid, k)] = nom
        for tid in model.graphs[g].tasks:
            job_key.append((tid, k))
    for j, key in enumerate(job_key):
        release[key], start[key], finish[key] = int(raw.release[j]), int(raw.start[j]), int(raw.finish[j])
    segments = {p.id: [] for p in model.pes}
    for j, b, e in zip(raw.seg_job, raw.seg_begin, raw.seg_end):
        tid, k = job_key[j]
        segments[model.task(tid).pe].append((tid, k, int(b), int(e)))
    for v in segments.values():
        v.sort(key=lambda s: s[2])
    return Schedule(release, start, finish, nominal, segments, model)


# --------------------------------------------------------------------------
# Monte-Carlo


def default_horizon(model: SystemModel, max_periods: int = 4) -> int:
    """Two hyperperiods plus the largest jitter, capped at a few long periods."""
    periods = [g.period for g in model.graphs]
    lcm = reduce(math.lcm, periods, 1)
    jit = max((g.jitter for g in model.graphs), default=0)
    return min(2 * lcm + jit, max_periods * max(periods) + jit)


@dataclass
class MonteCarloReport:
    maxResponse: dict[str, int]
    samples: int
    taskViolations: int = 0
    graphViolations: int = 0
    firstViolation: dict | None = None


def monte_carlo(model: SystemModel, samples: int, seed: int = 0, horizon: int | None = None,
                bounds: AnalysisResult | None = None, random_phase: bool = True) -> MonteCarloReport:
    """Random scenarios; optionally count escapes from the given bounds."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    plan = _Plan(model)
    horizon = horizon or default_horizon(model)
    n = len(model.tasks)
    b = np.zeros((n, 6), np.int64)
    wb = np.zeros(len(model.graphs), np.int64)
    check = bounds is not None
    if check:
        for k, tid in enumerate(plan.ids):
            tb = bounds.perTaskBounds[tid]
            b[k] = (tb.minR, tb.maxR, tb.minS, tb.maxS, tb.minF, tb.maxF)
        for g, gid in enumerate(model.graphs):
            wb[g] = bounds.perGraphWCRT[gid.id]
    max_resp = np.zeros(len(model.graphs), np.int64)
    viol = np.zeros(2, np.int64)
    first = np.full(8, -1, np.int64)
    n_inst = sum(-(-horizon // int(T)) for T in plan.g_period)
    n_jobs = sum(-(-horizon // int(plan.g_period[g])) * len(plan.graph_task_idx(g))
                 for g in range(len(model.graphs)))
    cx = [np.zeros(n_inst, np.int64) for _ in range(3)] + [np.zeros(n_jobs, np.int64), np.zeros(2, np.int64)]
    _mc_loop(samples, seed, horizon, random_phase, plan.g_period, plan.g_jitter, plan.g_ptr, plan.g_tasks,
             plan.task_bcet, plan.task_wcet, plan.task_pe, plan.task_pri, plan.task_pos, plan.task_graph,
             plan.succ_ptr, plan.succ_idx, plan.task_npred, plan.pe_preemptive,
             check, b, wb, max_resp, viol, first, *cx)
    fv = None
    if viol[0]:
        fv = {"kind": "task", "sample": int(first[0]), "task": plan.ids[first[1]],
              "release": int(first[2]), "start": int(first[3]), "finish": int(first[4])}
    elif viol[1]:
        fv = {"kind": "graph", "sample": int(first[5]), "graph": model.graphs[first[6]].id,
              "response": int(first[7])}
    scenario = None
    if fv is not None:
        scenario = _replay_scenario(model, plan, horizon, *cx)
        fv["scenario"] = scenario
    return MonteCarloReport({g.id: int(max_resp[k]) for k, g in enumerate(model.graphs)}, samples,
                            int(viol[0]), int(viol[1]), fv)


def _replay_scenario(model: SystemModel, plan: _Plan, horizon: int, nom, graph, jit, exec_, size) -> Scenario:
    instances = {g.id: [] for g in model.graphs}
    offsets, times = {}, {}
    j = 0
    for q in range(int(size[0])):
        g = model.graphs[int(graph[q])]
        k = len(instances[g.id])
        instances[g.id].append(int(nom[q]))
        if jit[q]:
            offsets[(g.id, k)] = int(jit[q])
        for tid in g.tasks:
            times[(tid, k)] = int(exec_[j])
            j += 1
    return Scenario(horizon=horizon, graphReleaseOffsets=offsets, executionTimes=times, instances=instances)


def monte_carlo_wcrt(model: SystemModel, samples: int, seed: int = 0, **kw) -> dict[str, int]:
    """Largest observed response per graph over random scenarios (a lower bound)."""
    return monte_carlo(model, samples, seed, **kw).maxResponse


# --------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class EnumerationLimits:
    max_scenarios: int = 200_000
    phase_step: int | None = None   # default: gcd of all time parameters


def time_grain(model: SystemModel) -> int:
    vals = [g.period for g in model.graphs] + [g.jitter for g in model.graphs]
    vals += [t.wcet for t in model.tasks] + [t.bcet for t in model.tasks]
    return reduce(math.gcd, (v for v in vals if v), 0) or 1


def _target_space(model: SystemModel, target: int, step: int):
    """Activations and free choices for one target graph instance at time 0."""
    horizon = model.graphs[target].deadline
    acts = []
    for g_i, g in enumerate(model.graphs):
        if g_i == target:
            acts.append([[0]])
            continue
        options = []
        for ph in range(0, g.period, step):
            # one activation that may still be running at 0, then all up to the deadline
            options.append(list(range(ph - g.period, horizon, g.period)))
        acts.append(options)
    return acts


def enumerate_wcrt(model: SystemModel, limits: EnumerationLimits | None = None,
                   graphs: list[str] | None = None) -> dict[str, int]:
    """Exhaustive maximum over a lattice of scenarios, per graph.

    For each target graph one instance is activated at 0.  Every other graph
    is tried at every phase on a grid, with one activation before 0 and all
    activations up to the target's deadline.  Each job runs for bcet or
    wcet and each activation is released with zero or full jitter.  Values
    between lattice points are not tried, so the result is a lower bound
    on the true worst case.
    """
    limits = limits or EnumerationLimits()
    step = limits.phase_step or time_grain(model)
    plan = _Plan(model)
    out = {}
    for target, g in enumerate(model.graphs):
        if graphs is not None and g.id not in graphs:
            continue
        space = _target_space(model, target, step)
        best = 0
        total = 0
        for combo in itertools.product(*space):
            total += _choice_count(model, combo)
            if total > limits.max_scenarios:
                raise SpaceTooLarge(f"more than {limits.max_scenarios} scenarios for graph {g.id}")
        for combo in itertools.product(*space):
            best = max(best, _enumerate_combo(model, plan, target, combo))
        out[g.id] = best
    return out


def _free_slots(model: SystemModel, combo):
    exec_slots, jit_slots = [], []
    for g_i, g in enumerate(model.graphs):
        for k in range(len(combo[g_i])):
            if g.jitter:
                jit_slots.append((g_i, k))
            for pos, tid in enumerate(g.tasks):
                t = model.task(tid)
                if t.bcet != t.wcet:
                    exec_slots.append((g_i, k, pos))
    return exec_slots, jit_slots


def _choice_count(model: SystemModel, combo) -> int:
    e, j = _free_slots(model, combo)
    return 2 ** (len(e) + len(j))


def _enumerate_combo(model: SystemModel, plan: _Plan, target: int, combo) -> int:
    exec_slots, jit_slots = _free_slots(model, combo)
    acts = [list(c) for c in combo]
    base_ex = [[[model.task(tid).wcet for tid in g.tasks] for _ in acts[g_i]]
               for g_i, g in enumerate(model.graphs)]
    best = 0
    tgt = plan.graph_task_idx(target)
    for bits in itertools.product((0, 1), repeat=len(exec_slots) + len(jit_slots)):
        ex = [[row[:] for row in g] for g in base_ex]
        jit = [[0] * len(a) for a in acts]
        for (g_i, k, pos), bit in zip(exec_slots, bits):
            if bit:
                ex[g_i][k][pos] = model.task(model.graphs[g_i].tasks[pos]).bcet
        for (g_i, k), bit in zip(jit_slots, bits[len(exec_slots):]):
            if bit:
                jit[g_i][k] = model.graphs[g_i].jitter
        raw = _simulate_arrays(plan, acts, jit, ex)
        o_fin = raw.finish
        j0 = 0
        for g_i, k, nom in raw.inst_key:
            if g_i == target:
                break
            j0 += len(plan.graph_task_idx(g_i))
        resp = int(o_fin[j0:j0 + len(tgt)].max())
        best = max(best, resp)
    return best


# --------------------------------------------------------------------------
# occupancy


def occupancy(schedule: Schedule, task: str, k: int, x: int, y: int) -> int:
    """Processor time in [x, y] taken by work that competes with a task instance.

    Counts execution on the task's PE by the instance itself and by higher
    priority jobs; on a non-preemptive PE also by lower priority jobs that
    had started before the instance was released.
    """
    if y <= x:
        return 0
    model = schedule.model
    me = model.task(task)
    pe = me.pe
    preemptive = model.pe_map[pe].preemptive
    rel = schedule.release[(task, k)]
    total = 0
    for tid, kk, b, e in schedule.segments[pe]:
        lo, hi = max(b, x), min(e, y)
        if hi <= lo:
            continue
        other = model.task(tid)
        if (tid, kk) == (task, k) or other.priority > me.priority:
            total += hi - lo
        elif not preemptive and schedule.start[(tid, kk)] < rel:
            total += hi - lo
    return total
