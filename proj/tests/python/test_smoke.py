import json
import math

import numpy as np
import pytest

import scorecusum as sc


def test_sigmoid_and_scores():
    assert math.isclose(sc.sigmoid(2.0), 0.880797077977882, rel_tol=1e-12)
    assert sc.score_delta([0.0], [1.0], 1, "logit")[0] == 0.5
    assert sc.score_delta([0.0], [1.0], 1, "risk")[0] == 2.0
    np.testing.assert_allclose(sc.info_theta([0.0, 0.0], [1.0, 2.0]), [[0.25, 0.5], [0.5, 1.0]])
    assert sc.cross_info([1.7], [1.0], "risk")[0, 0] == -1.0


def test_cusum_stat():
    assert sc.cusum_stat(np.array([[1.0], [-2.0], [3.0]])) == 3.0


def test_catalog():
    names = sc.catalog_names()
    assert "big_shift" in names
    big = sc.scenario_catalog("big_shift", m=100)
    assert big["delta"] == "(-1.6,-0.8,-0.8,-0.8,0_7)"
    assert big["kappa"] == 150
    with pytest.raises(ValueError):
        sc.scenario_catalog("missing")


def test_simulate_columns():
    cols = sc.simulate({"scenario": "ce_pred", "monitor": {"m": 20}, "experiment": {"seed": 3}})
    n = len(cols["t"])
    assert cols["x"].shape == (n, 8)
    assert set(np.unique(cols["a"])) <= {0, 1}
    assert np.all((cols["prediction"] > 0) & (cols["prediction"] < 1))
    assert (cols["soc_index"] > 0).sum() == 80
    again = sc.simulate({"scenario": "ce_pred", "monitor": {"m": 20}, "experiment": {"seed": 3}})
    np.testing.assert_array_equal(cols["y"], again["y"])


def test_monitor_big_shift():
    res = sc.monitor({"scenario": "big_shift", "monitor": {"m": 40, "B": 100}, "experiment": {"seed": 2}})
    for key in ("alarm", "horizon", "theta_hat", "trace", "diagnostics"):
        assert key in res
    assert res["horizon"] == 160
    if res["alarm"] is not None:
        assert res["alarm"] > 40


def test_experiment_and_json_string():
    cfg = json.dumps(
        {"scenario": "ce_pred", "monitor": {"m": 20, "B": 60}, "experiment": {"seed": 1, "n_replicates": 4}}
    )
    out = sc.experiment(cfg)
    (report,) = out["reports"]
    assert report["n_replicates"] == 4
    assert len(report["alarm_times"]) == 4
    assert 0.0 <= report["metrics"]["false_alarm_rate"] <= 1.0


def test_unknown_key_is_config_error():
    with pytest.raises(sc.ConfigError):
        sc.monitor({"scenario": "ce_pred", "monitor": {"bogus": 1}})
