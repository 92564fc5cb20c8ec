import json
import subprocess
import sys

import pytest

from qmealy import cli
from qmealy.circuits import build_state, example_path, load_machine
from qmealy.equivalence import Verdict
from qmealy.minimise import parse_system_text
from qmealy.model import Experiment, run_experiment

EX1 = str(example_path("example1_M.qmm"))
EX1P = str(example_path("example1_Mprime.qmm"))
EX2 = str(example_path("example2.qmm"))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", EX1)
    assert code == 0
    assert out.strip().splitlines()[-1] == "valid, n=4, |Σ|=2, |Γ|=2"


def test_validate_non_unitary(tmp_path, capsys):
    f = tmp_path / "bad.qmm"
    f.write_text("qubits 1\ngates\n  ok = H 0\n  wobble = matrix 1, 0; 0, 1.5\nmeasure 0\n")
    code, _, err = run(capsys, "validate", str(f))
    assert code == 3
    assert "wobble" in err


def test_validate_missing_and_parse_error(tmp_path, capsys):
    assert run(capsys, "validate", str(tmp_path / "none.qmm"))[0] == 2
    f = tmp_path / "broken.qmm"
    f.write_text("qubits 2\ngates\n  C = CNOT 1 1\nmeasure 0\n")
    code, _, err = run(capsys, "validate", str(f))
    assert code == 2 and "control equals target" in err


def test_check_equivalent(capsys):
    code, out, _ = run(capsys, "check", EX1, "00", "01")
    assert code == 0
    assert out.strip() == "EQUIVALENT (bound 15, basis 4 of max 16)"


def test_check_not_equivalent(capsys):
    code, out, _ = run(capsys, "check", EX1P, "00", "01")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "NOT EQUIVALENT"
    assert lines[1].startswith("word=") and "p_s=" in lines[1] and "p_t=" in lines[1]


def test_check_k(capsys):
    assert run(capsys, "check", EX2, "bell00", "bell10", "--k", "1")[1].strip() == "EQUIVALENT (k=1)"
    assert run(capsys, "check", EX2, "bell00", "bell10", "--k", "2")[1].startswith("NOT EQUIVALENT")


@pytest.mark.parametrize("extra", [[], ["--naive"], ["--mode", "complex"], ["--k", "2"]])
def test_json_round_trip(capsys, extra):
    code, out, _ = run(capsys, "check", EX1P, "00", "01", "--json", *extra)
    data = json.loads(out)
    assert code == 0 and data["equivalent"] is False
    spec, m = load_machine(EX1P)
    w = data["witness"]
    e = Experiment(tuple(w["word"]), tuple(w["schedule"]), tuple(w["outcomes"]))
    assert run_experiment(m, build_state(spec, "00"), e).raw_probability == pytest.approx(data["p_s"], abs=1e-8)
    assert run_experiment(m, build_state(spec, "01"), e).raw_probability == pytest.approx(data["p_t"], abs=1e-8)


def test_check_machines(tmp_path, capsys):
    code, out, _ = run(capsys, "check", EX1, "00", "01", "--machines", EX1)
    assert code == 0 and out.startswith("EQUIVALENT (bound 31")
    assert run(capsys, "check", EX1, "00", "01", "--machines", EX1P)[0] == 3


def test_check_unknown_state(capsys):
    assert run(capsys, "check", EX1, "00", "nowhere")[0] == 2


def test_oracle_agrees(capsys):
    code, out, _ = run(capsys, "check", EX1P, "00", "01", "--oracle-size", "5")
    assert code == 0 and "agrees" in out
    code, out, _ = run(capsys, "check", EX2, "bell00", "bell10", "--k", "1", "--oracle-size", "6")
    assert code == 0


def test_oracle_disagreement_exit(monkeypatch, capsys):
    monkeypatch.setattr(cli, "brute_force_equiv", lambda *a, **k: Verdict(equivalent=False))
    code, _, err = run(capsys, "check", EX1, "00", "01", "--oracle-size", "3")
    assert code == 4 and "disagrees" in err


def test_oracle_horizon_below_witness_agrees(capsys):
    # the size-5 witness is out of reach of a size-3 oracle
    code, out, _ = run(capsys, "check", EX1P, "00", "01", "--oracle-size", "3")
    assert code == 0 and "NOT EQUIVALENT" in out and "agrees" in out


@pytest.mark.parametrize("oracle_equivalent", [True, False])
def test_oracle_beyond_horizon_never_disagrees(monkeypatch, capsys, oracle_equivalent):
    monkeypatch.setattr(cli, "brute_force_equiv", lambda *a, **k: Verdict(equivalent=oracle_equivalent))
    assert run(capsys, "check", EX1P, "00", "01", "--oracle-size", "4")[0] == 0


def test_oracle_within_horizon_disagreement(monkeypatch, capsys):
    monkeypatch.setattr(cli, "brute_force_equiv", lambda *a, **k: Verdict(equivalent=True))
    assert run(capsys, "check", EX1P, "00", "01", "--oracle-size", "5")[0] == 4


def test_oracle_cap(capsys):
    assert run(capsys, "check", EX1, "00", "01", "--oracle-size", "13")[0] == 2


def test_encode_min(tmp_path, capsys):
    out = tmp_path / "p1.txt"
    code, text, _ = run(capsys, "encode-min", EX1, "00", "--problem", "1", "--target-dim", "3", "--out", str(out))
    assert code == 0 and "variables 6358, constraints 5147" in text
    parsed = parse_system_text(out.read_text())
    assert parsed.header["variables"] == "6358" and parsed.header["constraints"] == "5147"
    counts = []
    for k in ("1", "3"):
        f = tmp_path / f"p2_{k}.txt"
        run(capsys, "encode-min", EX1, "00", "--problem", "2", "--k", k, "--target-dim", "2", "--out", str(f))
        counts.append(int(parse_system_text(f.read_text()).header["constraints"]))
    assert counts[0] < counts[1]


def test_encode_min_target_dim(tmp_path, capsys):
    out = str(tmp_path / "x.txt")
    assert run(capsys, "encode-min", EX1, "00", "--problem", "1", "--target-dim", "4", "--out", out)[0] == 3
    with pytest.raises(SystemExit) as exc:
        cli.main(["encode-min", EX1, "00", "--problem", "1", "--target-dim", "0", "--out", out])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["encode-min", EX1, "00", "--problem", "2", "--target-dim", "2", "--out", out])


def test_bench_small(capsys):
    code, out, _ = run(capsys, "bench", "gen_n2", "--repeat", "1")
    assert code == 0
    header, _, row = out.strip().splitlines()
    assert header.split()[:3] == ["test", "n", "verdict"]
    assert row.split()[0] == "gen_n2"
    code, out, _ = run(capsys, "bench", "test0", "--repeat", "1", "--csv")
    assert out.splitlines()[0] == "test,n,verdict,naive_s,fast_s,speedup"
    assert len(out.strip().splitlines()) == 6


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qmealy", "check", EX1, "00", "01"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.startswith("EQUIVALENT")
    assert "mode real" in res.stderr
