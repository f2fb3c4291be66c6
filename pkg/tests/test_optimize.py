import numpy as np
import pytest

from wtpgmr.dataio import gen_reaching
from wtpgmr.optimize import (
    AlphaSearchConfig,
    AlphaSearchResult,
    LossConfig,
    OptimizeError,
    golden_section,
    optimize_alpha,
    weighted_loss,
)
from wtpgmr.tpmodel import ModelError, Trajectory, fit_em


def test_loss_config_validation():
    LossConfig("literal")
    LossConfig("inverse")
    with pytest.raises(ModelError):
        LossConfig("squared")


def test_weighted_loss_hand_case():
    ds = gen_reaching(M=2, T=20, seed=0)
    times = ds.demos[0].points[:, 0]
    trajs = []
    for demo in ds.demos:
        means = demo.points[:, 1:].copy()
        means[10] += 0.1  # error only at the wide-covariance step
        covs = np.tile(np.eye(2), (20, 1, 1))
        covs[10] *= 4.0
        trajs.append(Trajectory(times, means, covs))
    # literal: sigma proportional to ||cov||_F; inverse: reciprocal.
    norms = np.full(20, np.sqrt(2.0))
    norms[10] = np.sqrt(32.0)
    err2 = np.zeros(20)
    err2[10] = 2 * 0.1**2
    lit = 2 * float((norms / norms.sum()) @ err2)
    inv_w = (1.0 / norms) / (1.0 / norms).sum()
    inv = 2 * float(inv_w @ err2)
    assert np.isclose(weighted_loss(ds, trajs, LossConfig("literal")), lit, rtol=1e-12)
    assert np.isclose(weighted_loss(ds, trajs, LossConfig("inverse")), inv, rtol=1e-12)
    assert not np.isclose(lit, inv)


def test_weighted_loss_rejects_mismatch():
    ds = gen_reaching(M=3, T=20, seed=0)
    times = ds.demos[0].points[:, 0]
    traj = Trajectory(times, np.zeros((20, 2)), np.tile(np.eye(2), (20, 1, 1)))
    with pytest.raises(ModelError):
        weighted_loss(ds, [traj, traj], LossConfig())


def test_golden_section_quadratics():
    # 50 random unimodal quadratics: must hit the minimum within tol.
    rng = np.random.default_rng(9)
    for _ in range(50):
        c = rng.uniform(-4.0, 4.0)
        a = rng.uniform(0.2, 5.0)
        lo, hi = c - rng.uniform(1.0, 6.0), c + rng.uniform(1.0, 6.0)
        x, v, trace = golden_section(lambda t: a * (t - c) ** 2 + 1.0, lo, hi, tol=1e-6)
        assert abs(x - c) < 1e-5
        assert v <= a * (x - c) ** 2 + 1.0 + 1e-12
        assert len(trace) >= 2
        assert all(lo <= t <= hi for t, _ in trace)


def test_golden_section_aborts_on_non_finite():
    with pytest.raises(OptimizeError):
        golden_section(lambda t: float("nan"), 0.0, 1.0)


def test_alpha_search_result_consistency():
    AlphaSearchResult(0.5, 1.0, [(0.5, 1.0), (0.2, 2.0)])
    with pytest.raises(OptimizeError):
        AlphaSearchResult(0.5, 3.0, [(0.5, 1.0), (0.2, 2.0)])


def test_optimize_alpha_returns_best_evaluation():
    ds = gen_reaching(M=3, T=60, seed=1)
    model = fit_em(ds, 2)
    cfg = AlphaSearchConfig(scan_points=9, tol=1e-2)
    res = optimize_alpha(model, ds, bounds=(-4.0, 4.0), cfg=cfg)
    evals = np.array(res.evaluations)
    assert res.loss_star == evals[:, 1].min()
    best = evals[np.argmin(evals[:, 1]), 0]
    assert res.alpha_star == best
    assert -4.0 <= res.alpha_star <= 4.0
    # the coarse scan itself must be recorded in the trace
    assert len(evals) >= 9


def test_optimize_alpha_window_override():
    ds = gen_reaching(M=3, T=60, seed=2)
    model = fit_em(ds, 2)
    a = optimize_alpha(model, ds, cfg=AlphaSearchConfig(scan_points=5, tol=1e-2, window=1))
    b = optimize_alpha(model, ds, cfg=AlphaSearchConfig(scan_points=5, tol=1e-2, window=9))
    assert a.evaluations != b.evaluations


def test_optimize_alpha_deterministic():
    ds = gen_reaching(M=3, T=60, seed=3)
    model = fit_em(ds, 2)
    cfg = AlphaSearchConfig(scan_points=7, tol=1e-3)
    r1 = optimize_alpha(model, ds, cfg=cfg)
    r2 = optimize_alpha(model, ds, cfg=cfg)
    assert r1.alpha_star == r2.alpha_star
    assert r1.evaluations == r2.evaluations
