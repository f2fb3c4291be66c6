"""Variance-weighted reproduction loss and one-dimensional search for the
weight exponent alpha.

The loss compares each demonstration with its own weighted reproduction,
treating the demonstration set as a validation set. Each step's squared
error is weighted by a normalized function of the generated covariance
norm at that step, so the exponent is judged most where the model itself
claims to be confident.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .relevance import (
    default_window,
    fit_step_gaussians,
    frame_weights,
    reproduce_weighted,
    smooth,
)
from .tpmodel import Dataset, ModelError, TPGMM

__all__ = [
    "OptimizeError",
    "LossConfig",
    "AlphaSearchConfig",
    "AlphaSearchResult",
    "weighted_loss",
    "golden_section",
    "optimize_alpha",
]

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


class OptimizeError(RuntimeError):
    """Search aborted: non-finite objective or no usable candidate."""


@dataclass(frozen=True)
class LossConfig:
    """weight_mode 'inverse' puts high cost where the generated covariance
    is small (the confident regions); 'literal' weights by the covariance
    norm itself. Both are normalized per demonstration."""

    weight_mode: str = "inverse"

    def __post_init__(self):
        if self.weight_mode not in ("literal", "inverse"):
            raise ModelError(f"unknown weight_mode {self.weight_mode!r}")


@dataclass(frozen=True)
class AlphaSearchConfig:
    scan_points: int = 33  # 0 skips the coarse scan
    tol: float = 1e-3
    max_iters: int = 100
    window: int | None = None  # None: odd width nearest T/20
    loss: LossConfig = field(default_factory=LossConfig)


@dataclass(frozen=True)
class AlphaSearchResult:
    alpha_star: float
    loss_star: float
    evaluations: tuple  # ordered (alpha, loss) pairs

    def __post_init__(self):
        evals = tuple((float(a), float(v)) for a, v in self.evaluations)
        best = min(v for _, v in evals)
        if not self.loss_star <= best + 1e-12:
            raise OptimizeError("result loss is not the best evaluated loss")
        object.__setattr__(self, "evaluations", evals)


def weighted_loss(dataset: Dataset, generated, cfg: LossConfig = LossConfig()) -> float:
    """Sum over demos and steps of sigma[m, n] * ||x_demo - x_gen||^2.

    sigma is the Frobenius norm of the generated covariance at that step
    ('literal') or its reciprocal ('inverse'), normalized to sum to 1 over
    each demonstration's steps. Errors are over spatial channels.
    """
    generated = list(generated)
    if len(generated) != dataset.M:
        raise ModelError(
            f"got {len(generated)} trajectories for {dataset.M} demonstrations"
        )
    total = 0.0
    for demo, traj in zip(dataset.demos, generated):
        if traj.T != demo.T:
            raise ModelError("generated trajectory length does not match demo")
        norms = np.linalg.norm(traj.covs, ord="fro", axis=(1, 2))
        norms = np.maximum(norms, 1e-300)
        sigma = 1.0 / norms if cfg.weight_mode == "inverse" else norms
        sigma = sigma / sigma.sum()
        err2 = np.sum((demo.points[:, 1:] - traj.means) ** 2, axis=1)
        total += float(sigma @ err2)
    return total


def golden_section(f, lo: float, hi: float, tol: float = 1e-6, max_iters: int = 200):
    """Minimize f on [lo, hi] by golden-section interval reduction.

    Returns (x_best, f_best, trace) where trace lists every (x, f(x))
    evaluated. Exact for strictly unimodal f once the interval width
    drops below tol; non-finite objective values abort.
    """
    if not lo < hi:
        raise OptimizeError(f"bad bracket: [{lo}, {hi}]")
    trace = []

    def ev(x):
        v = float(f(x))
        if not np.isfinite(v):
            raise OptimizeError(f"objective returned {v} at x={x}")
        trace.append((float(x), v))
        return v

    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = ev(c), ev(d)
    it = 0
    while (b - a) > tol and it < max_iters:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = ev(d)
    x, v = min(trace, key=lambda p: p[1])
    return x, v, trace


def optimize_alpha(
    model: TPGMM,
    dataset: Dataset,
    bounds=(-8.0, 8.0),
    cfg: AlphaSearchConfig = AlphaSearchConfig(),
) -> AlphaSearchResult:
    """Pick the weight exponent minimizing the reproduction loss.

    Each candidate alpha is turned into a smoothed relevance profile; every
    demonstration is regenerated under its own frames and scored with
    weighted_loss. A uniform coarse scan brackets the best region (the
    loss need not be unimodal across the sign change), then golden-section
    refines inside it. With scan_points = 0 the whole interval is handed
    to golden-section directly.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise OptimizeError(f"bad bounds: [{lo}, {hi}]")
    sg = fit_step_gaussians(dataset)
    window = cfg.window if cfg.window is not None else default_window(dataset.T)
    times = dataset.demos[0].points[:, 0]

    def objective(alpha: float) -> float:
        profile = smooth(frame_weights(sg, alpha), window)
        trajs = [
            reproduce_weighted(model, demo.frames, profile, times)
            for demo in dataset.demos
        ]
        return weighted_loss(dataset, trajs, cfg.loss)

    evals = []
    if cfg.scan_points > 0:
        xs = np.linspace(lo, hi, cfg.scan_points)
        losses = np.full(xs.shape, np.inf)
        for idx, x in enumerate(xs):
            try:
                losses[idx] = objective(x)
            except (np.linalg.LinAlgError, FloatingPointError):
                continue  # candidate failed; scan tolerates gaps
            evals.append((float(x), float(losses[idx])))
        if not np.any(np.isfinite(losses)):
            raise OptimizeError("every scan candidate failed")
        k = int(np.argmin(losses))
        lo = float(xs[max(k - 1, 0)])
        hi = float(xs[min(k + 1, xs.shape[0] - 1)])
        if not lo < hi:  # single-point scan
            lo, hi = lo - cfg.tol, hi + cfg.tol
    _, _, trace = golden_section(objective, lo, hi, cfg.tol, cfg.max_iters)
    evals.extend(trace)
    alpha_star, loss_star = min(evals, key=lambda p: p[1])
    return AlphaSearchResult(alpha_star, loss_star, tuple(evals))
