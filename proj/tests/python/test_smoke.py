import math

import numpy as np
import pytest

import smc_optl


def test_builtin_configs():
    assert set(smc_optl.builtin_names()) == {"2d_toy", "bimodal"}
    cfg = smc_optl.builtin_config("2d_toy")
    assert cfg["N"] == 500 and cfg["K"] == 100
    assert cfg["target_moments"]["mean"] == [3.0, 2.0]
    with pytest.raises(smc_optl.ConfigError):
        smc_optl.builtin_config("trimodal")


def test_ess_and_weights():
    assert smc_optl.ess(np.zeros(4)) == pytest.approx(4.0)
    assert smc_optl.ess(np.array([0.0, math.log(3.0)])) == pytest.approx(1.6)
    w = smc_optl.normalized_weights(np.array([1e3, 1e3]))
    np.testing.assert_allclose(w, [0.5, 0.5])
    with pytest.raises(smc_optl.DegenerateWeightsError):
        smc_optl.ess(np.array([-np.inf, -np.inf]))


def test_gaussian_conditional_closed_form():
    mean, cov = smc_optl.gaussian_conditional(np.zeros(2), np.array([[1.0, 1.0], [1.0, 2.0]]), np.array([1.0]))
    assert mean[0] == pytest.approx(0.5, abs=1e-12)
    assert cov[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_fits():
    rng = np.random.default_rng(0)
    xs = np.concatenate([rng.normal(-3, 1, 500), rng.normal(3, 1, 500)])[:, None]
    mean, cov = smc_optl.fit_gaussian(xs)
    assert mean[0] == pytest.approx(xs.mean())
    weights, means, covs = smc_optl.fit_gmm(xs, 2, seed=1)
    assert sorted(m[0] for m in means) == pytest.approx([-3, 3], abs=0.3)
    assert weights.sum() == pytest.approx(1.0)
    assert len(covs) == 2


def test_run_returns_trace(tmp_path):
    out = smc_optl.run("2d_toy", strategy="gauss-opt", N=100, K=10, seed=3, trace_path=tmp_path / "trace.csv")
    assert out["mean"].shape == (10, 2)
    assert out["cov"].shape == (10, 2, 2)
    assert out["resampled"].dtype == bool
    assert out["resample_count"] == int(out["resampled"].sum())
    assert out["recycling_constants"].sum() == pytest.approx(1.0, abs=1e-12)
    assert (tmp_path / "trace.csv").read_text().startswith("iteration,ess,resampled,mean_0")
    again = smc_optl.run("2d_toy", strategy="gauss-opt", N=100, K=10, seed=3)
    np.testing.assert_array_equal(out["recycled_mean"], again["recycled_mean"])


def test_run_study(tmp_path):
    cfg = smc_optl.builtin_config("bimodal")
    report = smc_optl.run_study(cfg, ["forward", "gmm-opt:2"], N=80, K=30, replicates=3, csv_path=tmp_path / "s.csv")
    assert report["moment_names"] == ["mean_0", "cov_00"]
    gmm = report["strategies"]["gmm-opt:2"]
    assert gmm["moments"].shape == (3, 2)
    assert gmm["seed"] == [0, 1, 2]
    assert all(e == "" for e in gmm["error"])
    assert (tmp_path / "s.csv").exists()


def test_errors():
    cfg = smc_optl.builtin_config("2d_toy")
    with pytest.raises(smc_optl.ConfigError):
        smc_optl.run(cfg, N=1)
    with pytest.raises(smc_optl.ConfigError):
        smc_optl.run(cfg, strategy="gmm-opt:0")
    with pytest.raises(smc_optl.InvalidArgumentError):
        smc_optl.run_study(cfg, ["gmm-opt:0"], N=50, K=2)
    with pytest.raises(smc_optl.RunAbortedError):
        smc_optl.run(cfg, strategy="gauss-opt", N=4, K=5)
