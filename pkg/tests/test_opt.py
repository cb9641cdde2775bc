from dataclasses import replace

import pytest

from reference import exclusion_closure
from tgwcrt import AnalysisOptions, analyze, build
from tgwcrt.expgen import SMALL, generate
from tgwcrt.hpa import analyze_state
from tgwcrt.opt import DPResult, critical_predecessors, remove_duplicate_preemptions, update_exclusion_sets


@pytest.fixture(scope="module")
def states():
    out = []
    for k in range(25):
        m = generate(replace(SMALL, seed=k, totalTasks=(8, 15)))
        out.append(analyze_state(m))
    return out


def test_descendants_always_excluded(states):
    for s in states:
        for i in range(s.ctx.n):
            assert s.ctx.desc[i] <= s.ex[i]


def test_exclusion_off_keeps_descendants_only():
    m = generate(replace(SMALL, seed=4))
    s = analyze_state(m, AnalysisOptions(exclusion=False))
    assert s.ex == [s.ctx.desc[i] for i in range(s.ctx.n)]


def test_chain_descendants():
    m = build({"P": "preemptive"}, [{"id": "G", "period": 100, "tasks": [
        ("a", "P", 3, 1, 1, ()), ("b", "P", 2, 1, 1, ("a",)), ("c", "P", 1, 1, 1, ("b",))]}])
    s = analyze_state(m)
    a, b, c = (s.ctx.ids.index(x) for x in "abc")
    assert s.ex[a] >= {b, c} and s.ex[b] >= {c}
    assert a not in s.ex[b]


def test_exclusion_matches_naive_closure(states):
    for s in states:
        ctx = s.ctx
        got = update_exclusion_sets(s)
        want = exclusion_closure(ctx.n, ctx.desc, ctx.anc, s.setA, s.setF)
        assert [set(x) for x in got] == want


def test_exclusion_transitively_closed(states):
    for s in states:
        for i, ex in enumerate(s.ex):
            for j in ex:
                assert s.ex[j] <= ex


def test_never_excludes_self(states):
    for s in states:
        assert all(i not in s.ex[i] for i in range(s.ctx.n))


def test_source_has_no_reduction(fixture_model):
    s = analyze_state(fixture_model("fig11"))
    assert remove_duplicate_preemptions(s.ctx.ids.index("t1"), s) == DPResult(0, 0)


def test_duplicate_preemption_example(fixture_model):
    s = analyze_state(fixture_model("fig11"))
    t8 = s.ctx.ids.index("t8")
    dp = remove_duplicate_preemptions(t8, s)
    assert s.maxR[t8] == 80
    assert s.maxR[t8] - dp.releaseReduction == 60 == s.rmaxR[t8]


def test_elimination_tightens_example(fixture_model):
    m = fixture_model("fig11")
    assert analyze(m).perGraphWCRT["G0"] == 100
    assert analyze(m, AnalysisOptions(dp_elimination=False)).perGraphWCRT["G0"] == 115


def test_reduction_bounded(states):
    for s in states:
        for t in range(s.ctx.n):
            dp = remove_duplicate_preemptions(t, s)
            assert 0 <= dp.releaseReduction <= s.maxR[t]
            assert dp.movedForeignDelay >= 0
            assert s.rmaxR[t] == s.maxR[t] - dp.releaseReduction


def test_elimination_idempotent(states):
    for s in states:
        for t in range(s.ctx.n):
            assert remove_duplicate_preemptions(t, s) == remove_duplicate_preemptions(t, s)


def test_critical_predecessors_order(states):
    for s in states:
        for t in range(s.ctx.n):
            c1, c2 = critical_predecessors(t, s)
            preds = s.ctx.preds[t]
            if not preds:
                assert (c1, c2) == (None, None)
                continue
            assert s.maxF[c1] == max(s.maxF[p] for p in preds)
            if c2 is not None:
                assert s.maxF[c2] <= s.maxF[c1] and c2 != c1
                assert s.maxF[c2] == max(s.maxF[p] for p in preds if p != c1)
            else:
                assert len(preds) == 1
