import json

import pytest
from hypothesis import given, settings, strategies as st

from tgwcrt import ModelError, build, parse_system, serialize, validate
from tgwcrt.expgen import GenParams, generate
from tgwcrt.model import Policy


def one_task(**kw):
    t = {"id": "a", "pe": "P", "priority": 1, "bcet": 5, "wcet": 5, "preds": []}
    t.update(kw)
    return {"pes": [{"id": "P", "policy": "preemptive"}],
            "graphs": [{"id": "G", "period": 10, "jitter": 0, "deadline": 10, "tasks": [t]}]}


def test_minimal_document():
    m = parse_system(json.dumps(one_task()))
    assert len(m.tasks) == 1
    assert sum(len(t.preds) for t in m.tasks) == 0
    assert m.graphs[0].period == 10


def test_mixed_policy_system(fixture_model):
    m = fixture_model("fig1")
    assert len(m.pes) == 3
    assert {p.policy for p in m.pes} == {Policy.PREEMPTIVE, Policy.NON_PREEMPTIVE}
    assert validate(m) == []
    bus = m.task("t1")
    assert not m.is_preemptive("t1")
    assert bus.preds == ("t0",) and m.succs["t1"] == ("t2",)


def test_duplicate_priority_rejected():
    doc = one_task()
    doc["graphs"][0]["tasks"].append({"id": "b", "pe": "P", "priority": 1, "bcet": 1, "wcet": 1, "preds": []})
    with pytest.raises(ModelError, match="duplicate priority"):
        parse_system(json.dumps(doc))


def test_inverted_execution_range():
    m = build({"P": "preemptive"}, [{"id": "G", "period": 10, "tasks": [("a", "P", 1, 10, 5, ())]}])
    assert [v.rule for v in validate(m)] == ["ExecutionRangeInverted"]
    assert validate(m)[0].entity == "a"


def test_cycle_detected():
    m = build({"P": "preemptive"}, [{"id": "G", "period": 10, "tasks": [
        ("a", "P", 1, 1, 1, ("b",)), ("b", "P", 2, 1, 1, ("a",))]}])
    assert "CycleDetected" in [v.rule for v in validate(m)]


@pytest.mark.parametrize("mutate, rule", [
    (lambda d: d["graphs"][0]["tasks"][0].update(pe="Q"), "UnknownPE"),
    (lambda d: d["graphs"][0]["tasks"][0].update(preds=["zz"]), "UnknownPredecessor"),
    (lambda d: d["graphs"][0].update(deadline=20), "DeadlineExceedsPeriod"),
    (lambda d: d["graphs"][0].update(period=0, deadline=0), "NonPositivePeriod"),
])
def test_validate_rules(mutate, rule):
    doc = one_task()
    mutate(doc)
    with pytest.raises(ModelError, match=rule):
        parse_system(json.dumps(doc))


def test_unknown_key_rejected():
    doc = one_task()
    doc["graphs"][0]["colour"] = "red"
    with pytest.raises(ModelError, match="unknown key"):
        parse_system(json.dumps(doc))


def test_syntax_error_has_position():
    with pytest.raises(ModelError, match="line 1 column"):
        parse_system('{"pes": [}')


def test_comment_keys_allowed(fixture_model):
    # every shipped fixture carries a comment and still loads
    for name in ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig9", "fig11"):
        assert validate(fixture_model(name)) == []


def test_validate_is_pure(fixture_model):
    m = build({"P": "preemptive"}, [{"id": "G", "period": 10, "tasks": [
        ("a", "P", 1, 9, 5, ()), ("b", "P", 1, 1, 1, ())]}])
    assert validate(m) == validate(m)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip(seed):
    m = generate(GenParams(totalTasks=(5, 12), graphCount=(1, 3), peCount=(1, 3), bcetRange=(1, 20),
                           policyMix="mixed", jitter="random", seed=seed))
    again = parse_system(serialize(m))
    assert again == m


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_analysis_order(seed):
    m = generate(GenParams(totalTasks=(5, 15), graphCount=(1, 3), peCount=(1, 3), bcetRange=(1, 20), seed=seed))
    order = m.analysis_order
    pos = {t: k for k, t in enumerate(order)}
    for t in m.tasks:
        for p in t.preds:
            assert pos[p] < pos[t.id]
    # among unrelated tasks the first ready one is the highest priority
    done = set()
    for tid in order:
        ready = [t for t in m.tasks if t.id not in done and all(p in done for p in t.preds)]
        assert m.task(tid).priority == max(t.priority for t in ready)
        done.add(tid)
