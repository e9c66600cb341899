import numpy as np
import pytest

import predport


def test_metrics_worked_example():
    assert predport.evaluate([0.02, -0.01], [0.01, 0.01])["me"] == pytest.approx(0.015)
    assert predport.evaluate([1, -1, 1, 0], [1, 1, -1, 1])["hr"] == pytest.approx(1 / 3)


def test_metrics_length_mismatch_raises():
    with pytest.raises(predport.Error):
        predport.evaluate([0.1, 0.2], [0.1])


def test_ks_accepts_normal_sample():
    rng = np.random.default_rng(0)
    r = predport.ks_normality_test(rng.normal(size=200).tolist())
    assert r["accepted"]


def test_decode_weights_respects_bounds():
    w = predport.decode_weights([0, 2, 4, 6, 8], [1.0, 0.0, 0.0, 0.0, 0.0], assets=10)
    assert sum(w) == pytest.approx(1.0)
    assert all(0.1 - 1e-12 <= x <= 0.3 + 1e-12 for x in w)


def _model(m=6, seed=3):
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=0.05, size=(m, m))
    sigma = a @ a.T + 1e-4 * np.eye(m)
    mu = rng.uniform(0.0, 0.01, size=m)
    skew = rng.normal(scale=0.3, size=m)
    return mu, sigma, skew


def test_optimize_returns_feasible_portfolio():
    mu, sigma, skew = _model()
    r = predport.optimize(mu, sigma, skew, k=4, seed=5, population=40, max_generations=40)
    w = np.asarray(r["weights"])
    assert w.sum() == pytest.approx(1.0)
    assert np.count_nonzero(w) == 4
    assert r["cost"] == pytest.approx(predport.mvs_cost(w, mu, sigma, skew))
    again = predport.optimize(mu, sigma, skew, k=4, seed=5, population=40, max_generations=40)
    assert again["cost"] == r["cost"]


def test_frontier_efficient_points_are_sorted():
    mu, sigma, skew = _model()
    r = predport.frontier(mu, sigma, skew, lambdas=[1.0, 0.5, 0.0], thetas=[0.0], k=4, repeats=1)
    assert len(r["points"]) == 3
    sig = [p[0] for p in r["efficient"]]
    assert sig == sorted(sig)


def test_l27_shape():
    a = np.asarray(predport.l27())
    assert a.shape == (27, 13)


def test_pipeline_stages(tmp_path):
    cfg = {
        "prices": str(tmp_path / "prices.csv"),
        "out": str(tmp_path / "out"),
        "synth.assets": "5",
        "synth.weeks": "40",
        "predictor.delay": "2",
        "predictor.max_epochs": "10",
        "ga.population": "20",
        "ga.max_generations": "10",
        "k": "4",
    }
    for stage in ["synth", "ingest", "predict", "risk", "optimize"]:
        rc, _ = predport.run_stage(stage, cfg)
        assert rc == 0
    assert (tmp_path / "out" / "portfolio.json").exists()


def test_missing_prerequisite_names_stage(tmp_path):
    with pytest.raises(predport.Error, match="risk"):
        predport.run_stage("optimize", {"out": str(tmp_path / "empty")})
