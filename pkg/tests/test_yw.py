import random

import pytest

from reference import rta
from tgwcrt import ModelError, build
from tgwcrt.state import Context
from tgwcrt.yw import NonPreemptivePE, YwState, yw_analyze, yw_separation


@pytest.mark.parametrize("name, wcrt", [("fig3", 35), ("fig4", 110), ("fig5", 150), ("fig6", 100),
                                        ("fig11", 120), ("fig2", 30)])
def test_example_systems(fixture_model, name, wcrt):
    res = yw_analyze(fixture_model(name))
    assert res.method == "yw"
    assert res.perGraphWCRT["G0"] == wcrt


def test_path_separates(fixture_model):
    m = fixture_model("fig2")
    st = YwState(Context(m))
    ids = st.ctx.ids
    sep = yw_separation(m, st)
    assert ids.index("t1") in sep[ids.index("t2")]
    # other graphs are never separated
    assert ids.index("t0") not in sep[ids.index("t2")]


def test_late_release_separates():
    m = build({"P": "preemptive"}, [{"id": "G", "period": 100, "tasks": [
        ("a", "P", 1, 5, 5, ()), ("b", "P", 2, 5, 5, ())]}])
    st = YwState(Context(m))
    a, b = st.ctx.ids.index("a"), st.ctx.ids.index("b")
    st.maxF[a], st.minR[b] = 10, 11
    assert yw_separation(m, st)[a] == {b}
    st.minR[b] = 10
    assert yw_separation(m, st)[a] == frozenset()


def test_independent_overlapping_not_separated():
    m = build({"P": "preemptive"}, [
        {"id": "G", "period": 100, "tasks": [("a", "P", 1, 5, 5, ())]},
        {"id": "H", "period": 100, "tasks": [("b", "P", 2, 5, 5, ())]}])
    st = YwState(Context(m))
    assert all(s == frozenset() for s in yw_separation(m, st))


def test_rejects_non_preemptive(fixture_model):
    with pytest.raises(NonPreemptivePE, match="preemptive"):
        yw_analyze(fixture_model("fig1"))
    assert issubclass(NonPreemptivePE, ModelError)


def test_independent_tasks_reduce_to_rta():
    rng = random.Random(7)
    for _ in range(20):
        n = rng.randint(2, 6)
        tasks = []
        for k in range(n):
            period = rng.choice([20, 30, 40, 60, 120])
            tasks.append((k + 1, rng.randint(1, period // (2 * n)), period))
        graphs = [{"id": f"G{k}", "period": t, "tasks": [(f"t{k}", "P", p, c, c, ())]}
                  for k, (p, c, t) in enumerate(tasks)]
        res = yw_analyze(build({"P": "preemptive"}, graphs))
        want = rta(tasks)
        for k in range(n):
            assert res.perGraphWCRT[f"G{k}"] == want[k]


def test_min_finish_is_path_sum():
    m = build({"P": "preemptive"}, [{"id": "G", "period": 100, "tasks": [
        ("a", "P", 3, 2, 5, ()), ("b", "P", 2, 3, 4, ("a",)), ("c", "P", 1, 4, 4, ("b",))]}])
    b = yw_analyze(m).perTaskBounds
    assert (b["a"].minF, b["b"].minF, b["c"].minF) == (2, 5, 9)
