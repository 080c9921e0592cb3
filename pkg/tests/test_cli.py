import xml.etree.ElementTree as ET

import pytest

from mdpci import experiments as ex
from mdpci.cli import config_to_experiment, dispatch, parse_config_file


def run_cli(capsys, *argv):
    code = dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_interval_ou_closed_form(capsys):
    code, out, err = run_cli(
        capsys, "interval", "--model", "ou", "--theta-hat", "0.2",
        "--T", "100000", "--beta", "0.4545", "--r", "1e-4")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "lower,upper,status,method"
    lower, upper, status, method = row.split(",")
    assert status == "feasible" and method == "ou-closed-form"
    assert float(lower) < 2.5 < float(upper)


def test_interval_infeasible_still_exits_zero(capsys):
    code, out, _ = run_cli(
        capsys, "interval", "--model", "ou", "--theta-hat", "-0.2",
        "--T", "1000", "--r", "1e-2")
    assert code == 0
    assert "infeasible" in out


def test_missing_required_flag_exits_one_with_usage(capsys):
    code, _, err = run_cli(capsys, "interval", "--model", "ou", "--T", "100")
    assert code == 1
    assert "usage" in err.lower()


def test_unknown_flag_rejected(capsys):
    code, _, err = run_cli(
        capsys, "interval", "--model", "ou", "--theta-hat", "0.2",
        "--T", "100", "--r", "1e-2", "--frobnicate", "3")
    assert code == 1
    assert "usage" in err.lower()


def test_theta_hat_and_data_are_mutually_exclusive(tmp_path, capsys):
    sample = tmp_path / "x.csv"
    sample.write_text("i,x\n0,1.0\n")
    code, _, err = run_cli(
        capsys, "interval", "--model", "ou", "--theta-hat", "0.2",
        "--data", str(sample), "--T", "100", "--r", "1e-2")
    assert code == 1


def test_simulate_path_csv_schema(tmp_path, capsys):
    out = tmp_path / "path.csv"
    code, _, _ = run_cli(
        capsys, "simulate", "--model", "ou", "--theta", "0.2", "--T", "5",
        "--step", "0.5", "--seed", "3", "--out", str(out))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,x"
    assert len(lines) == 12  # header + 11 grid points
    assert lines[1].startswith("0.0,")


def test_simulate_batch_csv_schema(capsys):
    code, out, _ = run_cli(
        capsys, "simulate", "--model", "poisson", "--theta", "3.0", "--T", "4",
        "--seed", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "i,x"
    assert len(lines) == 5


def test_simulate_then_estimate_interval_round_trip(tmp_path, capsys):
    sample = tmp_path / "ou.csv"
    code, _, _ = run_cli(
        capsys, "simulate", "--model", "ou", "--theta", "0.2", "--T", "2000",
        "--step", "0.05", "--seed", "11", "--out", str(sample))
    assert code == 0
    code, out, _ = run_cli(
        capsys, "interval", "--model", "ou", "--data", str(sample),
        "--step", "0.05", "--T", "2000", "--r", "1e-2")
    assert code == 0
    row = out.strip().splitlines()[1].split(",")
    assert row[2] == "feasible"
    assert float(row[0]) < float(row[1])


def test_interval_dro_from_losses(tmp_path, capsys):
    sample = tmp_path / "losses.csv"
    sample.write_text("i,x\n" + "\n".join(f"{i},{v}" for i, v in
                                          enumerate([0.2, 0.8, 0.5, 0.1])) + "\n")
    code, out, _ = run_cli(
        capsys, "interval", "--model", "dro", "--data", str(sample),
        "--T", "4", "--beta", "0.5", "--r", "0.4", "--method", "dual")
    assert code == 0
    row = out.strip().splitlines()[1].split(",")
    lower, upper = float(row[0]), float(row[1])
    assert lower <= 0.4 <= upper
    assert row[3] == "dro-dual"


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "# comment\n"
        "model = ou\n"
        "theta = 0.2\n"
        "beta = 0.4545\n"
        "r = 0.01\n"
        "t_grid = 100, 400\n"
        "reps = 5\n"
        "seed = 4\n"
        "step = 0.05\n"
        "variants = optimal, clt, fixed\n"
        "kappa_list = -0.3, 0.3\n"
    )
    config = config_to_experiment(parse_config_file(str(cfg)))
    assert config.t_grid == (100.0, 400.0)
    assert config.seed == 4
    labels = [v.label for v in config.variants]
    assert labels == ["optimal", "clt", "fixed-0.3", "fixed+0.3"]


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = ou\ntheta = 0.2\nbeta = 0.5\nr = 0.01\n"
                   "t_grid = 100\nreps = 2\nwhatever = 3\n")
    code = dispatch(["experiment", "coverage", "--config", str(cfg)])
    assert code == 1


def test_seed_env_var_and_flag_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("model = ou\ntheta = 0.2\nbeta = 0.4545\nr = 0.01\n"
                   "t_grid = 100\nreps = 3\nstep = 0.1\n")
    monkeypatch.setenv("MDPCI_SEED", "99")
    code, out_env, _ = run_cli(capsys, "experiment", "coverage", "--config", str(cfg))
    assert code == 0
    code, out_flag, _ = run_cli(capsys, "experiment", "coverage", "--config", str(cfg),
                                "--seed", "99")
    assert out_env == out_flag
    code, out_other, _ = run_cli(capsys, "experiment", "coverage", "--config", str(cfg),
                                 "--seed", "123")
    assert out_other != out_env


def test_experiment_to_csv_and_plot(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("model = ou\ntheta = 0.2\nbeta = 0.4545\nr = 0.01\n"
                   "t_grid = 100, 300\nreps = 10\nseed = 7\nstep = 0.1\n")
    csv_path = tmp_path / "run.csv"
    code, _, _ = run_cli(capsys, "experiment", "coverage", "--config", str(cfg),
                         "--out", str(csv_path))
    assert code == 0
    parsed = ex.parse_csv(str(csv_path))
    assert any(row.stat == "width" for row in parsed.rows)

    svg_path = tmp_path / "run.svg"
    code, _, _ = run_cli(capsys, "plot", "--in", str(csv_path),
                         "--out", str(svg_path), "--spec", "width")
    assert code == 0
    ET.parse(svg_path)


def test_plot_missing_input_is_io_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "plot", "--in", str(tmp_path / "nope.csv"),
                           "--out", str(tmp_path / "x.svg"), "--spec", "width")
    assert code == 2
    assert "io error" in err


def test_help_lists_every_subcommand(capsys):
    with pytest.raises(SystemExit):
        dispatch(["--help"])
    out = capsys.readouterr().out
    for name in ("simulate", "interval", "experiment", "oracle-check", "plot"):
        assert name in out


def test_oracle_check_passes_on_seeded_corpus(capsys):
    code, out, _ = run_cli(capsys, "oracle-check")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "check,instances,max_err,status"
    assert len(lines) == 5
    assert all(line.endswith("PASS") for line in lines[1:])
