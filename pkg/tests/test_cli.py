import json
import os
import subprocess
import sys

import pytest

from conftest import FIXTURES
from tgwcrt import load_system
from tgwcrt.cli import YW_BANNER, main


def fx(name):
    return str(FIXTURES / f"{name}.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_example(capsys):
    code, out, _ = run(capsys, "analyze", fx("fig3"))
    assert code == 0
    assert "G0 WCRT=40 (deadline" in out


def test_analyze_toggles(capsys):
    _, on, _ = run(capsys, "analyze", fx("fig11"))
    _, off, _ = run(capsys, "analyze", fx("fig11"), "--no-dp-elim")
    assert "G0 WCRT=100" in on and "G0 WCRT=115" in off


def test_yw_banner(capsys):
    code, out, _ = run(capsys, "yw", fx("fig3"))
    assert code == 0
    assert out.startswith(YW_BANNER) and "G0 WCRT=35" in out


def test_yw_rejects_non_preemptive(capsys):
    code, _, err = run(capsys, "yw", fx("fig1"))
    assert code == 2 and "preemptive" in err


def test_montecarlo(capsys):
    code, out, _ = run(capsys, "montecarlo", fx("fig3"), "--samples", "2000", "--seed", "7")
    assert code == 0
    assert "G0 observed max=" in out and "HPA bound=40" in out and "containment OK" in out


def test_montecarlo_seed_determines_output(capsys):
    a = run(capsys, "montecarlo", fx("fig4"), "--samples", "500", "--seed", "3", "--format", "json")
    b = run(capsys, "montecarlo", fx("fig4"), "--samples", "500", "--seed", "3", "--format", "json")
    assert a == b
    assert json.loads(a[1])["graphViolations"] == 0


def test_unschedulable_exit_code(tmp_path, capsys):
    doc = {"pes": [{"id": "P", "policy": "preemptive"}], "graphs": [
        {"id": "H", "period": 10, "jitter": 0, "deadline": 10,
         "tasks": [{"id": "h", "pe": "P", "priority": 2, "bcet": 6, "wcet": 6, "preds": []}]},
        {"id": "G", "period": 20, "jitter": 0, "deadline": 20,
         "tasks": [{"id": "g", "pe": "P", "priority": 1, "bcet": 9, "wcet": 9, "preds": []}]}]}
    path = tmp_path / "over.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "analyze", str(path))
    assert code == 1 and "MISSED" in out


@pytest.mark.parametrize("argv", [["analyze"], ["bogus"], ["analyze", "/nonexistent.json"],
                                  ["campaign", "--methods", "hpa,ilp"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_invalid_model_names_entity(tmp_path, capsys):
    doc = json.loads(open(fx("fig3")).read())
    doc["graphs"][0]["tasks"][0]["pe"] = "NOPE"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "analyze", str(path))
    assert code == 2 and "NOPE" in err


def test_out_is_written_atomically(tmp_path, capsys):
    target = tmp_path / "report.json"
    src = fx("fig4")
    before = open(src, "rb").read()
    code, _, _ = run(capsys, "analyze", src, "--out", str(target))
    assert code == 0
    assert json.loads(target.read_text())["graphs"]["G0"]["wcrt"] == 130
    assert open(src, "rb").read() == before
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_out_csv(tmp_path, capsys):
    target = tmp_path / "report.csv"
    run(capsys, "analyze", fx("fig5"), "--out", str(target))
    lines = target.read_text().splitlines()
    assert lines[0] == "graph,wcrt,deadline,schedulable"
    assert lines[1].startswith("G0,140,") and lines[1].endswith(",1")


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", fx("fig6"))
    assert code == 0 and "G0 enumerated WCRT=70" in out
    code, _, err = run(capsys, "enumerate", fx("fig11"), "--max-scenarios", "5")
    assert code == 2 and "scenarios" in err


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", fx("fig2"), "--format", "json")
    assert code == 0
    assert max(json.loads(out)["responses"]["G0"]) == 30


def test_generate_seeded(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "generate", "--seed", "5", "--out", str(a))
    run(capsys, "generate", "--seed", "5", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    assert load_system(a).tasks


def test_campaign_seeded(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        rows, stats = tmp_path / f"{name}.csv", tmp_path / f"{name}-stats.csv"
        code, _, _ = run(capsys, "campaign", "--preset", "small-preemptive", "--instances", "3", "--seed", "1",
                         "--no-timing", "--out", str(rows), "--stats-out", str(stats))
        assert code == 0
        outs.append((rows.read_bytes(), stats.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith(b"method,Win,Tie,Lose")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tgwcrt", "analyze", fx("fig3")], capture_output=True, text=True,
                          env={**os.environ})
    assert proc.returncode == 0 and "G0 WCRT=40" in proc.stdout
