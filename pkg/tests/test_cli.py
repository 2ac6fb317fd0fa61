"""Command-line interface: envelopes, artifacts, determinism, error paths."""

import json
import os
import subprocess
import sys

import pytest

from gridcycles.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def envelope_from(out):
    start = out.index("{")
    return json.loads(out[start:])


# -- count -------------------------------------------------------------------

def test_count_both_methods(capsys):
    code, out, _ = run_cli(["count", "--shape", "4x4", "--method", "both"], capsys)
    assert code == 0
    env = envelope_from(out)
    assert env["payload"]["counts"] == {"transfer": 6, "brute": 6}
    assert env["payload"]["agree"] is True
    assert env["config"]["command"] == "count"
    assert env["artifact"] == "gridcycles"


def test_count_odd_shape_is_zero(capsys):
    code, out, _ = run_cli(["count", "--shape", "3x5", "--method", "brute"], capsys)
    assert code == 0
    assert envelope_from(out)["payload"]["counts"]["brute"] == 0


def test_count_appends_versioned_table(tmp_path, capsys):
    table = tmp_path / "counts.csv"
    for shape in ("4x4", "6x6"):
        code, _, _ = run_cli(["count", "--shape", shape,
                              "--table", str(table)], capsys)
        assert code == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "# schema: gridcycles-count v1"
    assert lines[1] == "shape,m,n,method,count,seconds"
    assert len(lines) == 4
    assert lines[2].startswith("4x4,4,4,transfer,6,")
    assert lines[3].startswith("6x6,6,6,transfer,1072,")


def test_table_schema_mismatch_refused(tmp_path, capsys):
    table = tmp_path / "counts.csv"
    table.write_text("# schema: something-else v9\n")
    code, _, err = run_cli(["count", "--shape", "4x4",
                            "--table", str(table)], capsys)
    assert code == 1
    assert "schema" in err


def test_count_envelope_to_file_is_deterministic(tmp_path, capsys):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    for path in (out1, out2):
        code, _, _ = run_cli(["count", "--shape", "6x4",
                              "--out", str(path)], capsys)
        assert code == 0
    a = json.loads(out1.read_text())
    b = json.loads(out2.read_text())
    a.pop("timings"), b.pop("timings")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_bad_shape_exits_nonzero(capsys):
    with pytest.raises(SystemExit):
        main(["count", "--shape", "banana"])


def test_cap_violation_reports_limit(capsys):
    code, _, err = run_cli(["count", "--shape", "8x8",
                            "--method", "brute"], capsys)
    assert code == 1
    assert "cap" in err


# -- dmrg / report / replay --------------------------------------------------

@pytest.fixture(scope="module")
def dmrg_artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("dmrg")
    prefix = str(tmp / "run")
    code = main(["dmrg", "--shape", "2x6", "--chi", "8",
                 "--samples", "50", "--out", prefix])
    assert code == 0
    return tmp, prefix


def test_dmrg_writes_checkpoint_and_envelope(dmrg_artifacts):
    _, prefix = dmrg_artifacts
    env = json.loads(open(prefix + ".json").read())
    payload = env["payload"]
    assert payload["converged"] is True
    assert payload["exact_count"] == 1
    assert abs(payload["quality"]["count_estimate"] - 1.0) < 1e-6
    assert payload["quality"]["energy"] < 1e-8
    assert os.path.exists(prefix + ".mps")
    assert payload["sweep_trace"][0]["sweep"] == 0


def test_report_reads_checkpoint(dmrg_artifacts, capsys):
    tmp, prefix = dmrg_artifacts
    out_prefix = str(tmp / "rep")
    code, out, _ = run_cli(["report", "--checkpoint", prefix + ".mps",
                            "--samples", "50", "--out", out_prefix], capsys)
    assert code == 0
    env = json.loads(open(out_prefix + ".json").read())
    assert env["payload"]["quality"]["multiloop_prob"] <= 0.02
    csv_lines = open(out_prefix + "_entropy.csv").read().splitlines()
    assert csv_lines[0] == "# schema: gridcycles-entropy v1"
    assert csv_lines[1].startswith("shape,m,n,chi,cut,")
    assert len(csv_lines) == 2 + 4    # 5 sites -> 4 cuts


def test_report_on_product_state_flags_multiloop(tmp_path, capsys):
    from gridcycles import LatticeShape, config_from_index
    from gridcycles.tn import Mps, save_mps
    psi = Mps.product_state(config_from_index(LatticeShape(2, 6), 0))
    ck = tmp_path / "zero.mps"
    save_mps(ck, psi)
    code, out, _ = run_cli(["report", "--checkpoint", str(ck),
                            "--samples", "40",
                            "--out", str(tmp_path / "zr")], capsys)
    assert code == 0
    env = json.loads((tmp_path / "zr.json").read_text())
    assert env["payload"]["quality"]["multiloop_prob"] == 1.0


def test_report_corrupt_checkpoint_is_format_error(tmp_path, capsys):
    bad = tmp_path / "bad.mps"
    bad.write_text("not a checkpoint\n")
    code, _, err = run_cli(["report", "--checkpoint", str(bad)], capsys)
    assert code == 1
    assert "corrupt" in err


def test_replay_reproduces_envelope(dmrg_artifacts, capsys):
    _, prefix = dmrg_artifacts
    before = json.loads(open(prefix + ".json").read())
    code, _, _ = run_cli(["replay", prefix + ".json"], capsys)
    assert code == 0
    after = json.loads(open(prefix + ".json").read())
    before.pop("timings"), after.pop("timings")
    assert json.dumps(before, sort_keys=True) == json.dumps(after, sort_keys=True)


# -- bench -------------------------------------------------------------------

def test_bench_finds_smallest_chi(tmp_path, capsys):
    prefix = str(tmp_path / "bench")
    code, _, _ = run_cli(["bench", "--shapes", "2x6", "--chis", "4,8",
                          "--target-eps", "0.005", "--out", prefix], capsys)
    assert code == 0
    env = json.loads(open(prefix + ".json").read())
    entry = env["payload"]["shapes"][0]
    assert entry["achieved_chi"] in (4, 8)
    lines = open(prefix + ".csv").read().splitlines()
    assert lines[0] == "# schema: gridcycles-bench v1"
    assert lines[1] == "n,chi,seconds"


# -- protocols ---------------------------------------------------------------

def test_protocol_boltzmann_beta_zero(capsys):
    code, out, _ = run_cli(["protocols", "boltzmann", "--shape", "4x4",
                            "--beta", "0"], capsys)
    assert code == 0
    env = envelope_from(out)
    assert env["payload"]["entries"] == [{"Z": 6.0, "beta": 0.0}]


def test_protocol_dress_term_count(capsys):
    code, out, _ = run_cli(["protocols", "dress", "--shape", "2x4",
                            "--seq", "PPHHPPHH"], capsys)
    assert code == 0
    env = envelope_from(out)
    assert env["payload"]["report"]["paths"] == 16
    assert "16 uniform terms" in out


def test_protocol_amplify_4x4(capsys):
    code, out, _ = run_cli(["protocols", "amplify", "--shape", "4x4",
                            "--max-iter", "20"], capsys)
    assert code == 0
    env = envelope_from(out)
    assert env["payload"]["k_opt"] == 7
    assert env["payload"]["p_opt"] > 0.99


def test_protocol_dress_csv(tmp_path, capsys):
    csv = tmp_path / "terms.csv"
    code, _, _ = run_cli(["protocols", "dress", "--shape", "2x4",
                          "--seq", "PPHHPPHH", "--csv", str(csv)], capsys)
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "# schema: gridcycles-dressing v1"
    assert len(lines) == 2 + 16


# -- process-level behavior --------------------------------------------------

def test_thread_override_env(tmp_path):
    env = dict(os.environ)
    env.pop("OMP_NUM_THREADS", None)
    env["GRIDCYCLES_THREADS"] = "1"
    script = ("import os, gridcycles; "
              "print(os.environ['OMP_NUM_THREADS'], "
              "os.environ['OPENBLAS_NUM_THREADS'])")
    out = subprocess.run([sys.executable, "-c", script], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["1", "1"]


def test_version_flag():
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0


def test_console_entrypoint_runs():
    out = subprocess.run([sys.executable, "-m", "gridcycles.cli",
                          "count", "--shape", "2x4"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "2x4 transfer: 1" in out.stdout
