import json

import pytest

from clusterlab.cli import (EXPERIMENTS, ConfigError, ExperimentConfig, list_experiments, load_config, main,
                            parse_functional)
from clusterlab.models import ParameterError


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def test_catalogue():
    names = [e["name"] for e in list_experiments()]
    assert "records" in names and "sums" in names
    assert len(names) >= 7
    assert all(e["anchor"] and e["description"] for e in list_experiments())


def test_list_flag(capsys):
    assert main(["--list"]) == 0
    assert "metric-selftest" in capsys.readouterr().out


def test_defaults_validate():
    for name in EXPERIMENTS:
        cfg = load_config(name)
        assert isinstance(cfg, ExperimentConfig) and cfg.experiment == name


def test_unknown_field_reports_path():
    with pytest.raises(ConfigError) as err:
        load_config("theta", {"blocking": {"r_n": 10, "bogus": 1}})
    assert err.value.path == "blocking.bogus"
    with pytest.raises(ConfigError) as err:
        load_config("theta", {"colour": "red"})
    assert err.value.path == "colour"


def test_type_errors_report_path():
    with pytest.raises(ConfigError) as err:
        load_config("theta", {"n_grid": [1000, "x"]})
    assert err.value.path == "n_grid[1]"
    with pytest.raises(ConfigError) as err:
        load_config("theta", {"replications": 2.5})
    assert err.value.path == "replications"
    with pytest.raises(ConfigError) as err:
        load_config("theta", {"model": {"kind": "linear", "coeffs": [0.0], "alpha": 1.0}})
    assert err.value.path == "model"
    with pytest.raises(ConfigError) as err:
        load_config("nu", {"functionals": ["sup_exceeds(1)", "nope(2)"]})
    assert err.value.path == "functionals[1]"


def test_overrides():
    cfg = load_config("theta", {"blocking": {"u": 0.5}}, seed=9, out="/tmp/x")
    assert cfg.seed == 9 and cfg.out == "/tmp/x"
    assert cfg.blocking.u == 0.5 and cfg.blocking.r_n == EXPERIMENTS["theta"].defaults["blocking"]["r_n"]


def test_parse_functional():
    f = parse_functional("sup_exceeds(2)")
    assert f([3.0]) == 1.0 and f([1.0]) == 0.0
    assert parse_functional("capped_abs_sum(5, 1)")([4.0, 3.0]) == 5.0
    assert parse_functional("sign_of_sum")([1.0, -3.0]) == -1.0
    with pytest.raises(ParameterError):
        parse_functional("sup_exceeds(1, 2, 3)")


def test_malformed_config_writes_nothing(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["theta", "--config", write(tmp_path, "{not json"), "--out", str(out)]) == 2
    assert main(["theta", "--config", write(tmp_path, {"bogus": 1}), "--out", str(out)]) == 2
    assert "bogus" in capsys.readouterr().err
    assert not out.exists()


def test_usage_errors(tmp_path):
    assert main(["no-such-experiment", "--out", str(tmp_path / "o")]) == 2
    assert main([]) == 2
    assert main(["theta", "--threads", "0", "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_metric_selftest_deterministic(tmp_path):
    cfg = write(tmp_path, {"replications": 40})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["metric-selftest", "--config", cfg, "--seed", "3", "--out", str(a)]) == 0
    assert main(["metric-selftest", "--config", cfg, "--seed", "3", "--out", str(b), "--threads", "2"]) == 0
    # the output directory is not part of the report
    ra, rb = (a / "report.json").read_bytes(), (b / "report.json").read_bytes()
    assert ra.replace(str(a).encode(), b"") == rb.replace(str(b).encode(), b"")
    rep = json.loads(ra)
    assert rep["passed"] and rep["anchor"] and rep["config"]["seed"] == 3


def test_theta_small_run(tmp_path):
    cfg = write(tmp_path, {"n_grid": [20000], "replications": 20, "blocking": {"r_n": 100, "u": 0.05}})
    out = tmp_path / "theta"
    code = main(["theta", "--config", cfg, "--out", str(out)])
    rep = json.loads((out / "report.json").read_text())
    assert code == (0 if rep["passed"] else 1)
    assert rep["experiment"] == "theta"
    assert json.loads((out / "report.json").read_text())["config"]["blocking"]["r_n"] == 100


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CLUSTERLAB_OUT", str(tmp_path / "env"))
    assert main(["karamata", "--config", write(tmp_path, {"limit": {"mc_samples": 20000}})]) in (0, 1)
    assert (tmp_path / "env" / "report.json").exists()


def test_stable_experiment_passes(tmp_path):
    out = tmp_path / "st"
    assert main(["stable", "--config", write(tmp_path, {"limit": {"mc_samples": 20000}}), "--out", str(out)]) == 0


def test_figures_emit_csv(tmp_path):
    out = tmp_path / "fig"
    assert main(["figures", "--config", write(tmp_path, {"n_grid": [2000]}), "--out", str(out)]) == 0
    csvs = sorted(p.name for p in out.glob("*.csv"))
    assert csvs
    assert all((out / c).read_text().splitlines()[0] for c in csvs)


def test_run_parameter_error_is_config_error(tmp_path):
    cfg = write(tmp_path, {"model": {"kind": "pareto", "alpha": 1.5}})
    assert main(["sums", "--config", cfg, "--out", str(tmp_path / "s")]) == 2
