import csv
import io
import json
import subprocess
import sys

import pytest

from sqka.cli import EXIT_ASSERTION, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main


def run_cli(capsysbinary, *argv):
    code = main(list(argv))
    out, err = capsysbinary.readouterr()
    return code, out, err


def test_attack_example(capsysbinary):
    code, out, _ = run_cli(
        capsysbinary, "attack", "--variant", "original", "--bob", "permutation", "--target", "1010",
        "--n", "4", "--trials", "100", "--seed", "7",
    )
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["attacker_target_hit_rate"] == 1.0
    assert report["detection_rate"] == 0.0
    assert report["accepted"] + report["aborted"] + report["infeasible"] == 100


def test_run_zero_positions_is_usage_error(capsysbinary):
    code, out, err = run_cli(capsysbinary, "run", "--variant", "improved", "--n", "0")
    assert code == EXIT_USAGE
    assert out == b""
    assert b"usage:" in err and b"n must be >= 1" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["attack", "--n", "4", "--bob", "permutation"],
        ["attack", "--n", "4", "--bob", "permutation", "--target", "10"],
        ["attack", "--n", "4", "--bob", "permutation", "--target", "10a0"],
        ["attack", "--threshold", "2"],
        ["attack", "--trials", "0"],
        ["attack", "--variant", "quantum"],
        ["sweep", "--param", "n", "--values", "1,x"],
        ["sweep", "--param", "n", "--values", ","],
        ["run", "--bob", "swap", "--swaps", "3", "--n", "4"],
        [],
    ],
)
def test_usage_errors(capsysbinary, argv):
    code, out, _ = run_cli(capsysbinary, *argv)
    assert code == EXIT_USAGE and out == b""


def test_worked_examples(capsysbinary):
    code, out, _ = run_cli(capsysbinary, "paper-examples")
    assert code == EXIT_OK
    lines = out.decode().splitlines()
    assert all(line.startswith("[PASS]") for line in lines[:-1])
    assert lines[-1].endswith("assertions passed")


def test_worked_examples_failure_exit(capsysbinary, monkeypatch):
    from sqka import cli
    from sqka.harness import Verdict

    monkeypatch.setattr(cli, "replay_paper_examples", lambda: [Verdict("x", "1", "0")])
    code, out, _ = run_cli(capsysbinary, "paper-examples")
    assert code == EXIT_ASSERTION and out.startswith(b"[FAIL]")


def test_run_prints_transcript_and_keys(capsysbinary):
    code, out, _ = run_cli(capsysbinary, "run", "--variant", "improved", "--n", "3", "--seed", "5")
    text = out.decode()
    assert code == EXIT_OK
    assert "KeyAnnouncement" in text and "status: Accepted" in text
    keys = [line.split(":")[1].strip() for line in text.splitlines() if line.endswith(tuple("01")) and "key" in line]
    assert len(keys) == 2 and keys[0] == keys[1] and len(keys[0]) == 3


def test_run_infeasible_exit(capsysbinary):
    # With one key position Bob holds a single slot value, right only half the time.
    codes = set()
    for seed in range(20):
        argv = ["run", "--bob", "permutation", "--target", "1", "--n", "1", "--seed", str(seed)]
        code, _, err = run_cli(capsysbinary, *argv)
        codes.add(code)
        if code == EXIT_INFEASIBLE:
            assert b"infeasible" in err
    assert EXIT_INFEASIBLE in codes


def test_attack_exit_codes_for_infeasibility(capsysbinary, monkeypatch):
    argv = ["attack", "--bob", "permutation", "--target", "1", "--n", "1", "--trials", "20"]
    code, out, _ = run_cli(capsysbinary, *argv)
    report = json.loads(out)
    assert 0 < report["infeasible"] < 20 and code == EXIT_OK

    from sqka import protocol
    from sqka.adversary import PlannerInfeasible

    def never(*args):
        raise PlannerInfeasible("forced")

    monkeypatch.setattr(protocol, "plan_fake_permutation", never)
    code, out, _ = run_cli(capsysbinary, *argv)
    assert json.loads(out)["infeasible"] == 20 and code == EXIT_INFEASIBLE


def test_flags_echo_into_config(capsysbinary):
    argv = [
        "attack", "--variant", "improved", "--n", "6", "--trials", "7", "--seed", "123", "--bob", "swap",
        "--swaps", "2", "--eve", "backward", "--threshold", "0.5", "--format", "json",
    ]
    code, out, _ = run_cli(capsysbinary, *argv)
    assert code == EXIT_OK
    assert json.loads(out)["config"] == {
        "variant": "improved", "n": 6, "trials": 7, "seed": 123, "bob": "swap", "target": None, "swaps": 2,
        "eve": "intercept-resend", "eve_direction": "backward", "threshold": 0.5,
    }
    code, out, _ = run_cli(capsysbinary, "attack", "--bob", "substitution", "--target", "0110", "--format", "csv")
    row = next(csv.DictReader(io.StringIO(out.decode())))
    assert row["bob"] == "substitution" and row["target"] == "0110" and row["eve"] == "none"


def test_out_and_trace_files(capsysbinary, tmp_path):
    report, trace = tmp_path / "r.json", tmp_path / "t.jsonl"
    code, out, _ = run_cli(
        capsysbinary, "attack", "--n", "2", "--trials", "3", "--out", str(report), "--trace", str(trace)
    )
    assert code == EXIT_OK and out == b""
    assert json.loads(report.read_text())["trials"] == 3
    events = [json.loads(line) for line in trace.read_text().splitlines()]
    assert {e["trial"] for e in events} == {0, 1, 2}
    assert events[0] == {**events[0], "seq": 0, "event": "QubitsSent", "direction": "to_bob", "count": 4}


def test_run_trace(capsysbinary, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, _, _ = run_cli(capsysbinary, "run", "--n", "2", "--trace", str(trace))
    lines = trace.read_text().splitlines()
    assert code == EXIT_OK and len(lines) == 5
    assert [json.loads(line)["event"] for line in lines][-1] == "RemainingPermutationAnnouncement"


def test_sweep_rows(capsysbinary):
    code, out, _ = run_cli(
        capsysbinary, "sweep", "--variant", "improved", "--bob", "swap", "--n", "4", "--trials", "20",
        "--param", "swaps", "--values", "1,2",
    )
    rows = list(csv.DictReader(io.StringIO(out.decode())))
    assert code == EXIT_OK
    assert [r["swaps"] for r in rows] == ["1", "2"]
    code, out, _ = run_cli(capsysbinary, "sweep", "--param", "n", "--values", "1,2,3", "--trials", "5")
    assert [r["n"] for r in csv.DictReader(io.StringIO(out.decode()))] == ["1", "2", "3"]
    code, out, _ = run_cli(capsysbinary, "sweep", "--param", "threshold", "--values", "0,0.5", "--format", "json")
    assert [r["config"]["threshold"] for r in json.loads(out)] == [0.0, 0.5]


def test_identical_argv_identical_stdout():
    argv = [sys.executable, "-m", "sqka", "attack", "--variant", "improved", "--bob", "swap", "--n", "4",
            "--trials", "50", "--seed", "3"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second and first


def test_console_script():
    result = subprocess.run(["sqka", "paper-examples"], capture_output=True)
    assert result.returncode == EXIT_OK
