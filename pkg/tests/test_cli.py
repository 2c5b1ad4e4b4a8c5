import json
from pathlib import Path

import numpy as np
import pytest

from wignerlab.cli import CliInvocation, dispatch, main, read_traces_csv

TINY = [
    "--set", "N_list=[32,48,64]",
    "--set", "replicates_per_N=120",
    "--set", 'z_grid=[[0.0,2.0],[1.0,1.0]]',
]


def run(args):
    return main(args)


def test_calibrate_writes_distspec(tmp_path):
    out = tmp_path / "o"
    code = run(["calibrate", "--out", str(out), "--set", "alpha=3.0"])
    assert code == 0
    spec = json.loads((out / "distspec.json").read_text())
    assert spec["alpha"] == 3.0
    assert spec["t0"] == pytest.approx(0.577350, abs=1e-6)
    assert spec["c"] == pytest.approx(1.154701, abs=1e-6)
    trunc = json.loads((out / "truncation.json").read_text())
    assert trunc["beta"] == pytest.approx(0.4475)


def test_missing_config_exits_1(tmp_path, capsys):
    out = tmp_path / "never"
    code = run(["calibrate", "--config", str(tmp_path / "nope.json"), "--out", str(out)])
    assert code == 1
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_malformed_config_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["calibrate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
    assert dispatch(CliInvocation(subcommand="frobnicate")) == 1


def test_bad_override_exits_1(tmp_path, capsys):
    assert run(["calibrate", "--out", str(tmp_path / "o"), "--set", "alpha"]) == 1
    assert "error:" in capsys.readouterr().err


def test_simulate_reproducible(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--seed", "77"] + TINY
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2), "--threads", "3"]) == 0
    text1 = (out1 / "traces.csv").read_text()
    text2 = (out2 / "traces.csv").read_text()
    assert text1 == text2  # byte-identical primary output
    store, meta = read_traces_csv(out1 / "traces.csv")
    assert meta["alpha"] == 3.0
    assert set(store) == {32, 48, 64}
    assert len(store[32][2j]) == 120
    # override is echoed into the header
    assert "# override N_list=[32, 48, 64]" in text1


def test_scaling_from_traces(tmp_path):
    out = tmp_path / "o"
    assert run(["simulate", "--seed", "7", "--out", str(out)] + TINY) == 0
    assert run(["scaling", "--seed", "7", "--out", str(out),
                "--traces", str(out / "traces.csv")] + TINY) == 0
    payload = json.loads((out / "scaling.json").read_text())
    assert payload["target"] == pytest.approx(0.5)
    assert len(payload["fits"]) == 2
    assert (out / "scaling.txt").read_text().count("slope=") == 2


def test_kernel_subcommand(tmp_path):
    out = tmp_path / "o"
    code = run(["kernel", "--out", str(out),
                "--set", "kernel_pairs=[[[0.0,2.0],[0.0,2.0]],[[0.0,2.0],[1.0,1.0]]]"])
    assert code == 0
    payload = json.loads((out / "kernel.json").read_text())
    assert len(payload["values"]) == 2
    for rec in payload["values"]:
        assert rec["converged"] is True
        assert rec["symmetric_pair_ok"] is True
        assert set(rec) >= {"alpha", "c", "z", "zprime", "value_re", "value_im",
                            "est_abs_err", "converged"}


def test_diagnostics_subcommand_small(tmp_path):
    out = tmp_path / "o"
    code = run(["diagnostics", "--seed", "5", "--out", str(out),
                "--set", 'diagnostics={"N_list":[48,64],"replicates":12,"z":[0.0,2.0],'
                         '"exceedance_replicates":40,"exceedance_N":64}'])
    assert code == 0
    payload = json.loads((out / "diagnostics.json").read_text())
    assert payload["leave_one_out"]["max_residual"] < 1e-9
    assert payload["leave_one_out"]["all_bound_ok"]
    assert payload["quadratic_form"]["X_bound_ok"]
    assert payload["char_fn_gap"]["decreasing"]
    assert set(payload["diag_concentration"]["mean_max_dev"]) == {"48", "64"}


def test_report_subcommand_and_exit_codes(tmp_path):
    out, out2 = tmp_path / "o", tmp_path / "o2"
    args = ["report", "--seed", "99",
            "--set", "N_list=[32,48,64]",
            "--set", "replicates_per_N=600",
            "--set", 'z_grid=[[0.0,2.0],[1.0,1.0]]',
            "--set", 'covariance={"N":64,"replicates":600,"pairs":[[[0.0,2.0],[1.0,1.0]]]}']
    code = run(args + ["--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert set(report["flags"]) >= {"scaling_within_band"}
    assert code in (0, 2)
    assert code == (0 if all(report["flags"].values()) else 2)
    summary = (out / "summary.txt").read_text()
    assert "flag" in summary and "scaling" in summary
    assert (out / "run.log").exists()
    # primary outputs byte-identical on rerun (timestamps only in run.log)
    code2 = run(args + ["--out", str(out2), "--threads", "1"])
    assert code2 == code
    assert (out2 / "report.json").read_text() == (out / "report.json").read_text()
    assert (out2 / "summary.txt").read_text() == (out / "summary.txt").read_text()


def test_output_dir_not_created_on_input_error(tmp_path):
    out = tmp_path / "o"
    assert run(["simulate", "--out", str(out), "--set", "replicates_per_N=7"]) == 1
    assert not (out / "traces.csv").exists()
