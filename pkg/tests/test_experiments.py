import json

import numpy as np
import pytest

from epochdd import ConfigError, ExperimentConfig, load_config, run_appendix_a, run_fig2, run_fig3
from epochdd.experiments import DEFAULTS, _scale_tag
from epochdd.io import read_columns, write_columns

TINY_FIG3 = {"k": 16, "t_max": 300, "n_test": 50, "n_train": 20, "inits": [[1.0, 1.0], [0.01, 1.0]]}
TINY_APPENDIX = {"scale": 0.02, "replicates": 3, "t_max": 200}


def _config(name, overrides, tmp_path, seed=0):
    return ExperimentConfig(name, overrides, seed, str(tmp_path))


def test_unknown_override_rejected():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig("fig2", {"bogus": 1})
    assert err.value.key == "bogus"


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig("fig9")
    assert err.value.key == "name"


def test_override_type_checked():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig("fig3", {"k": 2.5})
    assert err.value.key == "k"
    with pytest.raises(ConfigError):
        ExperimentConfig("fig2", {"eta1": "fast"})
    assert ExperimentConfig("fig3", {"t_max": 1e3}).overrides["t_max"] == 1000


def test_bad_seed_is_config_error():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig("fig2", seed=-1)
    assert err.value.key == "seed"


def test_every_default_has_provenance():
    for defaults in DEFAULTS.values():
        for value, tag in defaults.values():
            assert tag in {"PAPER", "DERIVED", "default"}


def test_load_config_layouts(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"name": "fig2", "seed": 3, "overrides": {"eta1": 0.1}}))
    cfg = load_config(path)
    assert (cfg.name, cfg.seed, cfg.overrides) == ("fig2", 3, {"eta1": 0.1})
    path.write_text(json.dumps({"eta1": 0.1}))
    assert load_config(path, name="fig2").overrides == {"eta1": 0.1}
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path, name="fig2")
    path.write_text(json.dumps({"name": "fig2", "overrides": {}, "extra": 1}))
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.key == "extra"


def test_scale_tag():
    assert _scale_tag(0.01) == "001"
    assert _scale_tag(1.0) == "1"


def test_fig2_outputs(tmp_path):
    result = run_fig2(_config("fig2", {}, tmp_path))
    names = {"u1.csv", "u2.csv", "sum.csv", "u2_aligned.csv", "sum_aligned.csv", "report.txt"}
    assert set(result["files"]) == names
    assert all((tmp_path / n).exists() for n in names)
    report = (tmp_path / "report.txt").read_text()
    assert "noise_over_n = 2.0  [DERIVED]" in report
    assert "theta1 = 1.5  [PAPER]" in report
    assert "sum: double_descent=true" in report
    assert "sum_aligned: double_descent=false" in report


def test_fig2_override_tagged(tmp_path):
    run_fig2(_config("fig2", {"noise_over_n": 0.1}, tmp_path))
    report = (tmp_path / "report.txt").read_text()
    assert "noise_over_n = 0.1  [override]" in report
    # too little noise: the slow feature never overfits, no second dip
    assert "sum: double_descent=false" in report


def test_fig2_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError) as err:
        run_fig2(_config("fig2", {"eta2": 0.0}, tmp_path))
    assert err.value.key == "eta2"


def _assert_round_trip(directory):
    for path in directory.glob("*.csv"):
        copy = directory / "copy.tmp"
        write_columns(copy, read_columns(path))
        assert copy.read_bytes() == path.read_bytes(), path.name
        copy.unlink()


def test_fig3_small_run(tmp_path):
    result = run_fig3(_config("fig3", TINY_FIG3, tmp_path))
    files = set(result["files"])
    assert {"risk_same.csv", "risk_diff.csv", "jac_split_w1_v1.csv", "jac_split_w001_v1.csv"} <= files
    assert {"risk_same_w001_v1.csv", "risk_diff_w001_v1.csv", "report.txt"} <= files
    cols = read_columns(tmp_path / "risk_same.csv")
    assert list(cols) == ["t", "train_mse", "test_mae", "test_mse"]
    assert cols["t"][-1] == 300
    _assert_round_trip(tmp_path)


def test_fig3_bad_inits(tmp_path):
    with pytest.raises(ConfigError) as err:
        run_fig3(_config("fig3", {"inits": [[1.0]]}, tmp_path))
    assert err.value.key == "inits"


def test_appendix_small_run(tmp_path):
    result = run_appendix_a(_config("appendix_a", TINY_APPENDIX, tmp_path))
    assert set(result["files"]) == {"risk_n5d.csv", "risk_n10d.csv", "report.txt"}
    cols = read_columns(tmp_path / "risk_n5d.csv")
    assert list(cols) == ["t", "mc_mean", "mc_std", "closed_form"]
    assert result["spec"].d == 14
    # both curves start from theta = 0
    assert cols["mc_mean"][0] == pytest.approx(cols["closed_form"][0])
    _assert_round_trip(tmp_path)


def test_experiments_deterministic(tmp_path):
    for name, overrides in (("fig3", TINY_FIG3), ("appendix_a", TINY_APPENDIX)):
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        runner = run_fig3 if name == "fig3" else run_appendix_a
        runner(ExperimentConfig(name, overrides, 11, str(a)))
        runner(ExperimentConfig(name, overrides, 11, str(b)))
        for path in a.iterdir():
            assert path.read_bytes() == (b / path.name).read_bytes()


def test_seed_changes_stochastic_output(tmp_path):
    run_appendix_a(ExperimentConfig("appendix_a", TINY_APPENDIX, 1, str(tmp_path / "a")))
    run_appendix_a(ExperimentConfig("appendix_a", TINY_APPENDIX, 2, str(tmp_path / "b")))
    a = read_columns(tmp_path / "a" / "risk_n5d.csv")["mc_mean"]
    b = read_columns(tmp_path / "b" / "risk_n5d.csv")["mc_mean"]
    assert not np.array_equal(a, b)
