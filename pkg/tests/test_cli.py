import json
import subprocess
import sys

import pytest

from tensorbelief.cli import main


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io

        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_query_chain2_json(capsys, chain2_path):
    code, out, err = run(capsys, "query", "--network", str(chain2_path), "--evidence", "B=b0",
                         "--mode", "both", "--format", "json")
    assert code == 0, err
    report = json.loads(out)
    assert report["beliefs"]["update"]["A"]["a0"] == pytest.approx(0.54 / 0.62, abs=1e-12)
    assert report["beliefs"]["update"]["A"]["a1"] == pytest.approx(0.08 / 0.62, abs=1e-12)
    assert report["commitment"]["assignment"] == {"A": "a0", "B": "b0"}
    assert report["commitment"]["score"] == pytest.approx(0.54, abs=1e-12)
    assert report["emissions"] == {"update": 2, "revise": 2}


def test_json_output_round_trips(capsys, chain2_path):
    _, out, _ = run(capsys, "query", "--network", str(chain2_path), "--format", "json")
    assert json.dumps(json.loads(out), indent=2) + "\n" == out


def test_query_update_no_evidence(capsys, chain2_path):
    code, out, _ = run(capsys, "query", "--network", str(chain2_path), "--mode", "update", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert report["modes"] == ["update"]
    assert report["beliefs"]["update"]["A"] == pytest.approx({"a0": 0.6, "a1": 0.4}, abs=1e-12)
    assert "commitment" not in report


def test_query_text_format(capsys, chain2_path):
    code, out, _ = run(capsys, "query", "--network", str(chain2_path), "--evidence", "B=b0")
    assert code == 0
    assert "A: a0=0.870968  a1=0.129032" in out
    assert "commitment: A=a0, B=b0  score=0.54" in out


def test_query_loopy(capsys):
    from pathlib import Path

    code, out, err = run(capsys, "query", "--network", str(Path(__file__).parent / "fixtures" / "loopy.json"))
    assert code == 2
    assert out == ""
    assert "cycle" in err and "A" in err and "D" in err


def test_query_evidence_file_and_likelihood(capsys, chain2_path, tmp_path):
    ev = tmp_path / "ev.json"
    ev.write_text('{"hard": {"B": "b0"}}')
    code, out, _ = run(capsys, "query", "--network", str(chain2_path), "--evidence-file", str(ev), "--format", "json")
    assert code == 0
    assert json.loads(out)["commitment"]["score"] == pytest.approx(0.54)
    code, out, _ = run(capsys, "query", "--network", str(chain2_path), "--likelihood", "B:0.9,0.4", "--format", "json")
    assert code == 0
    # P(A=a0, soft) = 0.6*(0.9*0.9+0.1*0.4), P(A=a1, soft) = 0.4*(0.2*0.9+0.8*0.4)
    m0, m1 = 0.6 * (0.81 + 0.04), 0.4 * (0.18 + 0.32)
    assert json.loads(out)["beliefs"]["update"]["A"]["a0"] == pytest.approx(m0 / (m0 + m1), abs=1e-12)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["query"], 1),
        (["bogus"], 1),
        (["query", "--network", "{net}", "--evidence", "Bb0"], 1),
        (["query", "--network", "{net}", "--evidence", "B=b0", "--evidence-file", "x.json"], 1),
        (["query", "--network", "/nonexistent.json"], 2),
        (["query", "--network", "{net}", "--evidence", "Z=b0"], 3),
        (["query", "--network", "{net}", "--evidence", "B=zz"], 3),
        (["query", "--network", "{net}", "--likelihood", "B:0,0"], 3),
        (["random", "--seed", "1", "--nodes", "0"], 1),
        (["random", "--nodes", "3"], 1),
    ],
)
def test_exit_codes(capsys, chain2_path, argv, code):
    argv = [a.format(net=chain2_path) for a in argv]
    got, out, err = run(capsys, *argv)
    assert got == code
    assert out == ""
    assert err


def test_contradictory_evidence_exit_4(capsys, tmp_path):
    net = tmp_path / "tie.json"
    net.write_text(json.dumps({
        "variables": [{"id": "A", "states": ["0", "1"]}, {"id": "B", "states": ["0", "1"]}],
        "nodes": [{"var": "A", "parents": [], "cpt": [0.5, 0.5]},
                  {"var": "B", "parents": ["A"], "cpt": [1, 0, 0, 1]}],
    }))
    code, out, err = run(capsys, "query", "--network", str(net), "--evidence", "A=0", "--evidence", "B=1")
    assert code == 4 and out == "" and "zero mass" in err


def test_trace_file(capsys, chain2_path, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, _, _ = run(capsys, "query", "--network", str(chain2_path), "--trace", str(trace))
    assert code == 0
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(records) == 4
    assert {r["mode"] for r in records} == {"update", "revise"}
    assert set(records[0]) >= {"step", "from", "to", "kind", "mode", "vector"}


def test_check_chain2(capsys, chain2_path):
    code, out, _ = run(capsys, "check", "--network", str(chain2_path))
    assert code == 0
    assert "oracle check: pass" in out


def test_check_cap(capsys, chain2_path):
    code, out, err = run(capsys, "check", "--network", str(chain2_path), "--cap", "3")
    assert code == 2 and out == "" and "cap" in err


def test_check_mismatch_exit_5(capsys, chain2_path, monkeypatch):
    from tensorbelief import cli

    monkeypatch.setattr(cli, "oracle_mismatches", lambda *a, **k: ["forced"])
    code, out, err = run(capsys, "check", "--network", str(chain2_path))
    assert code == 5 and out == "" and "forced" in err


def test_random_deterministic(capsys):
    _, a, _ = run(capsys, "random", "--seed", "7", "--nodes", "5")
    _, b, _ = run(capsys, "random", "--seed", "7", "--nodes", "5")
    assert a == b and a


def test_random_piped_to_query(capsys, monkeypatch):
    _, net, _ = run(capsys, "random", "--seed", "7", "--nodes", "5")
    code, out, _ = run(capsys, "query", "--network", "-", stdin=net, monkeypatch=monkeypatch)
    assert code == 0 and "commitment" in out


def test_module_entry_point(chain2_path):
    proc = subprocess.run(
        [sys.executable, "-m", "tensorbelief", "check", "--network", str(chain2_path), "--format", "json"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["oracle_check"] == "pass"


def test_random_then_check_100_seeds(capsys, monkeypatch):
    for seed in range(100):
        _, net, _ = run(capsys, "random", "--seed", str(seed), "--nodes", "8")
        code, _, err = run(capsys, "check", "--network", "-", "--format", "json", stdin=net, monkeypatch=monkeypatch)
        assert code == 0, f"seed {seed}: {err}"
