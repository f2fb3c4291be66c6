"""Per-step frame relevance: local Gaussian fits, determinant-power
weights, moving-average smoothing, and relevance-weighted generation.

The idea: at every time step, fit one Gaussian per frame to the spatial
channels of the aligned demonstrations projected into that frame. Frames
in which the demonstrations cluster tightly (small covariance
determinant) are the ones actually constraining the motion at that step.
Raising the determinants to a signed power alpha and normalizing across
frames turns them into weights; each frame's covariance is divided by its
weight before the product-of-Gaussians fusion, so low-relevance frames
contribute almost no precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import Gaussian, GaussianError, transform
from .tpmodel import (
    Dataset,
    ModelError,
    TPGMM,
    Trajectory,
    _per_step_frames,
    gmr_sequence,
    project,
)

__all__ = [
    "StepGaussians",
    "RelevanceProfile",
    "fit_step_gaussians",
    "frame_weights",
    "smooth",
    "default_window",
    "reproduce_weighted",
]

# Weights this small are treated as "frame switched off" during fusion.
WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class StepGaussians:
    """One spatial Gaussian per (step, frame): means (T, P, S) and
    covs (T, P, S, S), already regularized. S excludes the time channel."""

    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim != 3 or covs.shape != means.shape + (means.shape[2],):
            raise ModelError(
                f"step-Gaussian shapes disagree: means {means.shape}, covs {covs.shape}"
            )
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)

    @property
    def T(self) -> int:
        return self.means.shape[0]

    @property
    def P(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class RelevanceProfile:
    """Per-step frame weights, rows summing to 1.

    alpha is the exponent the weights were computed with; window records
    the smoothing applied (1 = raw). Profiles may also be constructed
    directly from hand-chosen weights to override the automatic ones.
    """

    weights: np.ndarray
    alpha: float = 0.0
    window: int = 1

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if w.ndim != 2:
            raise ModelError(f"weights must be (T, P), got shape {w.shape}")
        if np.any(w <= 0.0) or np.any(w > 1.0):
            raise ModelError("weights must lie in (0, 1]")
        if np.abs(w.sum(axis=1) - 1.0).max() > 1e-9:
            raise ModelError("weight rows must sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def T(self) -> int:
        return self.weights.shape[0]

    @property
    def P(self) -> int:
        return self.weights.shape[1]


def fit_step_gaussians(dataset: Dataset, eps: float | None = None) -> StepGaussians:
    """Fit one spatial Gaussian per (step, frame) across demonstrations.

    The dataset must be aligned to a common length. Covariances are the
    maximum-likelihood per-step sample covariances plus eps on the
    diagonal; one shared eps (default 1e-6 of the mean projected spatial
    variance, floored at 1e-10) keeps determinants comparable across
    frames even where the demonstrations coincide exactly.
    """
    if dataset.M < 2:
        raise ModelError("per-step fits need at least 2 demonstrations")
    T = dataset.T  # raises if unaligned
    P = dataset.n_frames
    S = dataset.dim - 1

    # (P, M, T, S) spatial channels of every demo in every frame.
    local = np.stack(
        [
            np.stack([project(demo, j)[:, 1:] for demo in dataset.demos])
            for j in range(P)
        ]
    )
    if eps is None:
        eps = max(1e-6 * float(local.var(axis=1).mean()), 1e-10)

    means = local.mean(axis=1)  # (P, T, S)
    diff = local - means[:, None]
    covs = np.einsum("pmts,pmtr->ptsr", diff, diff) / dataset.M
    covs = covs + eps * np.eye(S)
    return StepGaussians(means.transpose(1, 0, 2), covs.transpose(1, 0, 2, 3))


def frame_weights(sg: StepGaussians, alpha: float) -> RelevanceProfile:
    """Weights gamma[n, j] proportional to det(cov[n, j])**alpha.

    Computed as a log-domain softmax over frames with max-subtraction, so
    large |alpha| cannot overflow. alpha = 0 gives uniform rows; negative
    alpha favours the frame with the smallest determinant at each step.
    """
    sign, logdet = np.linalg.slogdet(sg.covs)  # (T, P)
    if np.any(sign <= 0) or not np.all(np.isfinite(logdet)):
        raise GaussianError("step covariance with non-positive determinant")
    a = alpha * logdet
    a -= a.max(axis=1, keepdims=True)
    w = np.exp(a)
    w = np.maximum(w / w.sum(axis=1, keepdims=True), 1e-15)
    w /= w.sum(axis=1, keepdims=True)
    return RelevanceProfile(w, alpha=float(alpha), window=1)


def default_window(T: int) -> int:
    """Odd smoothing width nearest T/20 (ties round up), at least 3."""
    x = T / 20.0
    w = int(round(x))
    if w % 2 == 0:
        w = w + 1 if x >= w else w - 1
    return int(min(max(w, 3), T if T % 2 == 1 else T - 1))


def smooth(profile: RelevanceProfile, window: int) -> RelevanceProfile:
    """Centered moving average of each frame's weight sequence.

    The window truncates at the edges; rows are re-normalized afterwards
    so they still sum to 1 exactly.
    """
    if window < 1 or window % 2 == 0:
        raise ModelError(f"window must be odd and positive, got {window}")
    T = profile.T
    if window > T:
        raise ModelError(f"window {window} exceeds profile length {T}")
    if window == 1:
        return RelevanceProfile(profile.weights, profile.alpha, 1)
    # Direct convolution: sums of positives stay positive, unlike a
    # cumulative-sum difference, which cancels entries near 1e-15 to 0.
    kern = np.ones(window)
    counts = np.convolve(np.ones(T), kern, mode="same")
    w = np.stack(
        [
            np.convolve(profile.weights[:, j], kern, mode="same") / counts
            for j in range(profile.P)
        ],
        axis=1,
    )
    w = np.maximum(w, 1e-15)
    w /= w.sum(axis=1, keepdims=True)
    return RelevanceProfile(w, profile.alpha, window)


def reproduce_weighted(
    model: TPGMM, frames, profile: RelevanceProfile, times
) -> Trajectory:
    """Generate a trajectory with per-step frame weighting.

    At step n, frame j's transformed component covariances are divided by
    gamma[n, j] before the product of Gaussians, which is equivalent to
    scaling that frame's precision contribution by gamma[n, j]. The fused
    per-step components are then conditioned on time as usual.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    T = times.shape[0]
    if profile.T != T:
        raise ModelError(f"profile length {profile.T} != T={T}")
    if profile.P != model.P:
        raise ModelError(f"profile has {profile.P} frames, model has {model.P}")
    gamma = np.maximum(profile.weights, WEIGHT_FLOOR)  # (T, P)

    static, per_step = _per_step_frames(frames, T)
    K, P, D = model.K, model.P, model.dim

    def precisions(frame_tuple):
        """Transformed per-(component, frame) precisions and their
        precision-weighted means: (K, P, D, D) and (K, P, D)."""
        lam = np.empty((K, P, D, D))
        eta = np.empty((K, P, D))
        for i in range(K):
            for j in range(P):
                g = transform(
                    Gaussian(model.means[j, i], model.covs[j, i]),
                    frame_tuple[j].A,
                    frame_tuple[j].b,
                )
                lam[i, j] = np.linalg.inv(g.cov)
                eta[i, j] = lam[i, j] @ g.mean
        return lam, eta

    if static is not None:
        lam, eta = precisions(static)
        fused_lam = np.einsum("tp,kpde->tkde", gamma, lam)
        fused_eta = np.einsum("tp,kpd->tkd", gamma, eta)
    else:
        fused_lam = np.empty((T, K, D, D))
        fused_eta = np.empty((T, K, D))
        for n in range(T):
            lam, eta = precisions(per_step[n])
            fused_lam[n] = np.einsum("p,kpde->kde", gamma[n], lam)
            fused_eta[n] = np.einsum("p,kpd->kd", gamma[n], eta)

    means = np.linalg.solve(fused_lam, fused_eta[..., None])[..., 0]
    covs = np.linalg.inv(fused_lam)
    covs = 0.5 * (covs + np.swapaxes(covs, -1, -2))
    m, c, flags = gmr_sequence(model.priors, means, covs, times)
    return Trajectory(times, m, c, flags)
