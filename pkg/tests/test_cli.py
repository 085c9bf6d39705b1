import json
import subprocess
import sys

import pytest

from ndversions.cli import RunConfig, parse_config_text, run, verify_witness
from ndversions.errors import ArgumentError


def _report(out):
    return json.loads((out / "report.json").read_text())


def _strip_timestamp(path):
    data = json.loads(path.read_text())
    data.pop("timestamp")
    return json.dumps(data, sort_keys=True)


# --- RunConfig ----------------------------------------------------------------

def test_config_round_trip_is_canonical():
    text = "# a comment\nsubcommand=pd-check\nbody = lq:n=2,q=4.0\nf=exp_pow:p=1/2\nseed=3\nm=12\n\nout=r\n"
    cfg = RunConfig.parse(text)
    canonical = cfg.serialize()
    assert canonical == "body=lq:n=2,q=4\nf=exp_pow:p=0.5\nm=12\nout=r\nseed=3\nsubcommand=pd-check\nworkers=1\n"
    assert RunConfig.parse(canonical).serialize() == canonical


def test_config_rejects_malformed_lines():
    with pytest.raises(ArgumentError):
        parse_config_text("subcommand=pd-check\nnot a pair\n")
    with pytest.raises(ArgumentError):
        RunConfig.parse("body=lq:n=2,q=2\n")
    with pytest.raises(ArgumentError):
        RunConfig.parse("subcommand=x\nseed=abc\n")


# --- subcommands --------------------------------------------------------------

def test_l0_scan_three_dimensional(tmp_path, capsys):
    out = tmp_path / "r"
    assert run(["l0-scan", "--body", "lq:n=3,q=4", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["verdict"] == "consistent"
    assert (out / "data" / "pairings.csv").exists()
    assert "consistent" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["l0-scan", "--body", "lq:n=3"],
    ["l0-scan", "--body", "ball:n=3"],
    ["pd-check", "--body", "lq:n=2,q=2", "--f", "gauss:s=1"],
    ["pd-check", "--body", "lq:n=2,q=2"],
    ["no-such-command"],
])
def test_usage_errors_exit_two(tmp_path, argv, capsys):
    assert run(argv + ["--out", str(tmp_path / "r")]) == 2
    err = capsys.readouterr().err
    assert err


def test_grammar_named_in_message(tmp_path, capsys):
    run(["l0-scan", "--body", "lq:n=3", "--out", str(tmp_path)])
    assert "lq:n=<int>,q=<float|inf>" in capsys.readouterr().err


def test_missing_out_is_usage_error(capsys):
    assert run(["omega-table", "--n", "2"]) == 2


def test_numerical_failure_exit_three(tmp_path):
    assert run(["recover-measure", "--body", "lq:n=2,q=1", "--out", str(tmp_path / "r")]) == 3


def test_pd_refute_writes_verifiable_witness(tmp_path):
    out = tmp_path / "r"
    code = run(["pd-refute", "--body", "lq:n=3,q=inf", "--f", "exp_pow:p=2", "--budget", "100000",
                "--seed", "7", "--out", str(out)])
    assert code == 0
    rep = _report(out)
    assert rep["verdict"] == "refuted"
    assert "witness.json" in rep["files"]
    assert verify_witness(out / "witness.json") == 0
    assert run(["verify-witness", str(out / "witness.json")]) == 0


def test_verify_witness_rejections(tmp_path):
    out = tmp_path / "r"
    run(["pd-check", "--body", "lq:n=3,q=inf", "--f", "exp_pow:p=2", "--m", "16", "--trials", "300",
         "--seed", "1", "--out", str(out)])
    path = out / "witness.json"
    assert path.exists()
    data = json.loads(path.read_text())
    data["coefficients"] = [0.0] * len(data["coefficients"])
    zeroed = tmp_path / "zeroed.json"
    zeroed.write_text(json.dumps(data))
    assert verify_witness(zeroed) == 1
    truncated = tmp_path / "truncated.json"
    truncated.write_text(path.read_text()[:100])
    assert verify_witness(truncated) == 2
    assert verify_witness(tmp_path / "missing.json") == 2


def test_pd_check_consistent_in_the_plane(tmp_path):
    out = tmp_path / "r"
    assert run(["pd-check", "--body", "lq:n=2,q=4", "--f", "exp_pow:p=0.5", "--trials", "200",
                "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["verdict"] == "consistent"
    assert not (out / "witness.json").exists()
    assert len((out / "data" / "minima.csv").read_text().splitlines()) == 201


def test_recover_measure_report(tmp_path):
    out = tmp_path / "r"
    assert run(["recover-measure", "--body", "lq:n=2,q=2", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["verdict"] == "representable"
    assert abs(rep["C"] - 0.6931471805599453) < 1e-6
    csv = (out / "data" / "measure.csv").read_text()
    # the exported measure is itself a valid synth2d body file
    assert run(["recover-measure", "--body", f"synth2d:file={out / 'data' / 'measure.csv'}",
                "--out", str(tmp_path / "again")]) == 0
    assert csv.splitlines()[0] == "angle,weight"


def test_omega_table(tmp_path):
    out = tmp_path / "r"
    assert run(["omega-table", "--n", "4", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["verdict"] == "consistent" and rep["omega_at_zero"] == 1.0


def test_version_test(tmp_path):
    out = tmp_path / "r"
    assert run(["version-test", "--p", "2", "--a", "3,4", "--m", "5000", "--seeds", "3", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["gamma"] == pytest.approx(5.0)
    assert len(rep["runs"]) == 3


def test_proof_scan(tmp_path):
    out = tmp_path / "r"
    assert run(["proof-scan", "--body", "lq:n=2,q=2", "--f", "exp_pow:p=2", "--eps-levels", "6",
                "--mc-samples", "20000", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["identity_residual"] <= 1e-8
    assert rep["g_nonnegative"]
    assert all(row["holds"] for row in rep["tail_check"])
    assert (out / "data" / "epsilon.csv").read_text().startswith("eps,g,u,v,w,err")


# --- config files and determinism ---------------------------------------------

def test_config_file_merged_under_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("subcommand=pd-check\nbody=lq:n=2,q=4\nf=exp_pow:p=1\nm=6\ntrials=50\n")
    out = tmp_path / "r"
    assert run(["pd-check", "--config", str(cfg), "--m", "8", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["m"] == 8 and rep["trials"] == 50
    assert rep["config"]["body"] == "lq:n=2,q=4"


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("subcommand=pd-check\nbody=lq:n=2,q=4\nf=exp_pow:p=1\nbogus=1\n")
    assert run(["pd-check", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 2
    cfg.write_text("subcommand=l0-scan\n")
    assert run(["pd-check", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 2
    assert run(["pd-check", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path / "r")]) == 2


def test_reports_are_deterministic(tmp_path):
    out = tmp_path / "r"
    argv = ["pd-refute", "--body", "lq:n=3,q=inf", "--f", "exp_pow:p=2", "--budget", "4000", "--seed", "2",
            "--out", str(out)]
    assert run(argv) == 0
    first = _strip_timestamp(out / "report.json")
    data_first = sorted((p.name, p.read_bytes()) for p in out.rglob("*") if p.is_file() and p.name != "report.json")
    assert run(argv + ["--workers", "1"]) == 0
    assert _strip_timestamp(out / "report.json") == first
    data_second = sorted((p.name, p.read_bytes()) for p in out.rglob("*") if p.is_file() and p.name != "report.json")
    assert data_first == data_second


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ndversions", "omega-table", "--n", "2", "--points", "5",
                          "--out", str(tmp_path / "r")], capture_output=True, text=True)
    assert res.returncode == 0
    assert "omega-table n=2" in res.stdout
