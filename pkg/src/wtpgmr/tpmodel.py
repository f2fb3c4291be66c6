"""Task frames, demonstration containers, mixture training by EM, and
time-driven Gaussian mixture regression.

A demonstration is a (T, D) array whose first column is time. Each task
frame {A, b} re-expresses the data locally via X = A^-1 (x - b); one GMM
per frame is trained with shared priors and responsibilities taken from
the product of the per-frame likelihoods. Trajectories are generated by
mapping the local components back through a query set of frames, fusing
them with a product of Gaussians, and conditioning the result on time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .gaussian import (
    MAX_CONDITION,
    Gaussian,
    logpdf,
    product,
    transform,
)

__all__ = [
    "ModelError",
    "TaskFrame",
    "Demonstration",
    "Dataset",
    "TPGMM",
    "Trajectory",
    "EmConfig",
    "project",
    "resample",
    "fit_em",
    "global_components",
    "gmr",
    "gmr_sequence",
    "reproduce",
]


class ModelError(ValueError):
    """Invalid dataset/model structure or a failed fit."""


@dataclass(frozen=True)
class TaskFrame:
    """Affine frame: local coordinates X map to task space via x = A X + b.

    For time-indexed states channel 0 is time, A embeds the spatial
    orientation below a leading 1, and b never offsets time.
    """

    A: np.ndarray
    b: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise ModelError(f"frame shapes do not agree: A {A.shape}, b {b.shape}")
        if np.linalg.cond(A) > MAX_CONDITION:
            raise ModelError(f"frame {self.name!r}: A is singular or near-singular")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def check_time_block(self) -> None:
        """Frames over time-indexed states must leave time untouched."""
        A, b = self.A, self.b
        ok = (
            abs(A[0, 0] - 1.0) <= 1e-9
            and np.abs(A[0, 1:]).max(initial=0.0) <= 1e-9
            and np.abs(A[1:, 0]).max(initial=0.0) <= 1e-9
            and abs(b[0]) <= 1e-9
        )
        if not ok:
            raise ModelError(f"frame {self.name!r} modifies the time channel")

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map local rows X to task space: A X + b."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.A.T + self.b

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        """Map task-space rows x to local coordinates: A^-1 (x - b)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.solve(self.A, (pts - self.b).T).T


@dataclass(frozen=True)
class Demonstration:
    """One recorded trajectory plus the task frames it was observed under.

    points is (T, D) with a strictly increasing time column 0; frames are
    static for the whole demonstration.
    """

    points: np.ndarray
    frames: tuple

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 2:
            raise ModelError(f"demonstration points have bad shape {pts.shape}")
        t = pts[:, 0]
        if pts.shape[0] > 1 and not np.all(np.diff(t) > 0):
            raise ModelError("time column is not strictly increasing")
        frames = tuple(self.frames)
        if len(frames) < 1:
            raise ModelError("demonstration has no task frames")
        for f in frames:
            if f.dim != pts.shape[1]:
                raise ModelError(
                    f"frame dim {f.dim} does not match state dim {pts.shape[1]}"
                )
            f.check_time_block()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "frames", frames)

    @property
    def T(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_frames(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class Dataset:
    """A set of demonstrations sharing state dimension and frame count."""

    demos: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        demos = tuple(self.demos)
        if len(demos) == 0:
            raise ModelError("dataset is empty")
        d0 = demos[0]
        for m, demo in enumerate(demos):
            if demo.dim != d0.dim or demo.n_frames != d0.n_frames:
                raise ModelError(
                    f"demo {m} has dim {demo.dim} / {demo.n_frames} frames, "
                    f"expected {d0.dim} / {d0.n_frames}"
                )
        object.__setattr__(self, "demos", demos)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def M(self) -> int:
        return len(self.demos)

    @property
    def dim(self) -> int:
        return self.demos[0].dim

    @property
    def n_frames(self) -> int:
        return self.demos[0].n_frames

    @property
    def aligned(self) -> bool:
        return len({demo.T for demo in self.demos}) == 1

    @property
    def T(self) -> int:
        if not self.aligned:
            raise ModelError("demonstrations have unequal lengths; resample first")
        return self.demos[0].T


@dataclass(frozen=True)
class TPGMM:
    """Shared priors plus one Gaussian per (frame, component) in local
    coordinates. means is (P, K, D), covs is (P, K, D, D)."""

    priors: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    log_likelihoods: tuple = ()

    def __post_init__(self):
        priors = np.atleast_1d(np.asarray(self.priors, dtype=float))
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        K = priors.shape[0]
        if means.ndim != 3 or covs.ndim != 4:
            raise ModelError("means must be (P, K, D) and covs (P, K, D, D)")
        P, K2, D = means.shape
        if K2 != K or covs.shape != (P, K, D, D):
            raise ModelError(
                f"inconsistent model shapes: priors {priors.shape}, "
                f"means {means.shape}, covs {covs.shape}"
            )
        if np.any(priors <= 0) or abs(priors.sum() - 1.0) > 1e-9:
            raise ModelError("priors must be positive and sum to 1")
        object.__setattr__(self, "priors", priors / priors.sum())
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "log_likelihoods", tuple(self.log_likelihoods))

    @property
    def K(self) -> int:
        return self.priors.shape[0]

    @property
    def P(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[2]

    def component(self, j: int, i: int) -> Gaussian:
        return Gaussian(self.means[j, i], self.covs[j, i])


@dataclass(frozen=True)
class Trajectory:
    """Generated output: spatial means and covariances indexed by time.

    flags[n] is nonzero where regression fell back to uniform
    responsibilities because every component underflowed at t_n.
    """

    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    flags: np.ndarray = None

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covs, dtype=float)
        T, S = means.shape
        if times.shape != (T,) or covs.shape != (T, S, S):
            raise ModelError(
                f"trajectory shapes disagree: times {times.shape}, "
                f"means {means.shape}, covs {covs.shape}"
            )
        flags = self.flags
        flags = np.zeros(T, dtype=int) if flags is None else np.asarray(flags, int)
        if flags.shape != (T,):
            raise ModelError("flags length does not match trajectory")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "flags", flags)

    @property
    def T(self) -> int:
        return self.times.shape[0]


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 200
    tol: float = 1e-5  # relative log-likelihood improvement
    cov_floor: float = 1e-6  # times per-channel data variance
    min_mass: float = 1e-8  # relative responsibility mass per component
    max_restarts: int = 5


def project(demo: Demonstration, j: int) -> np.ndarray:
    """Rows of the demonstration expressed in frame j: A_j^-1 (x - b_j)."""
    if not 0 <= j < demo.n_frames:
        raise ModelError(f"frame index {j} out of range")
    return demo.frames[j].inverse_apply(demo.points)


def resample(dataset: Dataset, T: int, time_mode: str = "index") -> Dataset:
    """Linearly interpolate every demonstration onto T uniform samples.

    The time column is rewritten to 1..T ("index" mode) or to T uniform
    samples of [0, 1] ("normalized"); frames are carried over unchanged.
    """
    if T < 2:
        raise ModelError(f"resample target T={T} is below 2")
    if time_mode not in ("index", "normalized"):
        raise ModelError(f"unknown time_mode {time_mode!r}")
    new_time = np.arange(1, T + 1, dtype=float)
    if time_mode == "normalized":
        new_time = np.linspace(0.0, 1.0, T)
    demos = []
    for demo in dataset.demos:
        if demo.T < 2:
            raise ModelError("cannot resample a single-point demonstration")
        t = demo.points[:, 0]
        u = (t - t[0]) / (t[-1] - t[0])
        uq = np.linspace(0.0, 1.0, T)
        pts = np.empty((T, demo.dim))
        pts[:, 0] = new_time
        for c in range(1, demo.dim):
            pts[:, c] = np.interp(uq, u, demo.points[:, c])
        demos.append(Demonstration(pts, demo.frames))
    return Dataset(tuple(demos), dict(dataset.meta))


def _projected_stack(dataset: Dataset) -> np.ndarray:
    """All demonstrations projected into every frame: (P, N, D)."""
    P = dataset.n_frames
    return np.stack(
        [np.vstack([project(demo, j) for demo in dataset.demos]) for j in range(P)]
    )


def _log_resp(X: np.ndarray, priors, means, covs):
    """Joint log-responsibilities over the product of frame likelihoods.

    Returns (log_h (N, K) unnormalized, total log-likelihood).
    """
    P, N, _ = X.shape
    K = priors.shape[0]
    log_h = np.tile(np.log(priors), (N, 1))
    for i in range(K):
        for j in range(P):
            log_h[:, i] += logpdf(X[j], means[j, i], covs[j, i])
    norm = logsumexp(log_h, axis=1)
    return log_h - norm[:, None], float(norm.sum())


def fit_em(dataset: Dataset, K: int, cfg: EmConfig = EmConfig()) -> TPGMM:
    """Fit a task-parameterised GMM by expectation-maximisation.

    Initialization splits the (aligned) time axis into K equal bins, which
    is deterministic given the dataset. The E-step responsibility of a
    component multiplies its likelihoods across all frames; the M-step
    updates shared priors and per-frame means/covariances. Covariances are
    floored at cov_floor times the per-channel data variance.
    """
    if dataset.M < 2:
        raise ModelError("training needs at least 2 demonstrations")
    T = dataset.T  # raises if unaligned
    if not 1 <= K <= T:
        raise ModelError(f"K={K} must be in 1..T={T}")

    X = _projected_stack(dataset)  # (P, N, D)
    P, N, D = X.shape
    floors = np.stack(
        [np.diag(cfg.cov_floor * np.maximum(X[j].var(axis=0), 1e-12)) for j in range(P)]
    )

    # Equal time-bin initialization; points keep their within-demo step order.
    step = np.tile(np.arange(T), dataset.M)
    bins = np.minimum((step * K) // T, K - 1)
    priors = np.array([(bins == i).mean() for i in range(K)])
    means = np.empty((P, K, D))
    covs = np.empty((P, K, D, D))
    for i in range(K):
        sel = bins == i
        for j in range(P):
            pts = X[j, sel]
            means[j, i] = pts.mean(axis=0)
            covs[j, i] = np.cov(pts.T, bias=True) + floors[j]

    lls = []
    restarts = 0
    it = 0
    while it < cfg.max_iters:
        it += 1
        log_h, ll = _log_resp(X, priors, means, covs)
        resp = np.exp(log_h)
        mass = resp.sum(axis=0)

        weak = np.where(mass < cfg.min_mass * N)[0]
        if weak.size > 0:
            restarts += 1
            if restarts > cfg.max_restarts:
                raise ModelError(f"component collapsed {restarts} times; giving up")
            # Reseed dead components on the worst-explained data points.
            worst = np.argsort(logsumexp(log_h, axis=1))[: weak.size]
            for w, i in zip(worst, weak):
                means[:, i] = X[:, w]
                covs[:, i] = np.stack(
                    [np.cov(X[j].T, bias=True) + floors[j] for j in range(P)]
                )
                priors[i] = 1.0 / K
            priors = priors / priors.sum()
            continue

        lls.append(ll)
        if len(lls) >= 2 and lls[-1] < lls[-2]:
            # The floored update is not the exact M-step, so the likelihood
            # can decrease -- by a hair, or steadily when a segment's spread
            # is at the floor's scale. Keep the best fit visited and stop.
            priors, means, covs = prev
            lls.pop()
            break
        if len(lls) >= 2 and lls[-1] - lls[-2] < cfg.tol * abs(lls[-2]):
            break
        prev = (priors.copy(), means.copy(), covs.copy())

        priors = mass / N
        for j in range(P):
            mu = (resp.T @ X[j]) / mass[:, None]
            for i in range(K):
                diff = X[j] - mu[i]
                cov = (resp[:, i] * diff.T) @ diff / mass[i]
                covs[j, i] = 0.5 * (cov + cov.T) + floors[j]
            means[j] = mu

    return TPGMM(priors, means, covs, tuple(lls))


def global_components(model: TPGMM, frames) -> list:
    """Local components mapped into task space and fused across frames.

    For each component the per-frame Gaussians are pushed through their
    frames and multiplied, yielding one global Gaussian per component.
    """
    frames = tuple(frames)
    if len(frames) != model.P:
        raise ModelError(f"expected {model.P} frames, got {len(frames)}")
    out = []
    for i in range(model.K):
        parts = [
            transform(model.component(j, i), frames[j].A, frames[j].b)
            for j in range(model.P)
        ]
        out.append(product(parts))
    return out


def gmr_sequence(priors, means, covs, times):
    """Condition mixture components on the time channel at every query time.

    means/covs may be static, (K, D) and (K, D, D), or per-step stacks
    (T, K, D) and (T, K, D, D). Returns (out_means (T, S), out_covs
    (T, S, S), flags (T,)) with S = D - 1 spatial channels; the output at
    each step is the moment-matched mixture of component conditionals.
    """
    priors = np.asarray(priors, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    means = np.asarray(means, dtype=float)
    covs = np.asarray(covs, dtype=float)
    T = times.shape[0]
    if means.ndim == 2:
        means = np.broadcast_to(means, (T,) + means.shape)
        covs = np.broadcast_to(covs, (T,) + covs.shape)
    if means.shape[0] != T:
        raise ModelError("per-step component stack does not match query times")

    mu_t = means[..., 0]  # (T, K)
    var_t = np.maximum(covs[..., 0, 0], 1e-300)
    s_ts = covs[..., 0, 1:]  # (T, K, S)
    gain = s_ts / var_t[..., None]
    dt = times[:, None] - mu_t
    cond_mean = means[..., 1:] + gain * dt[..., None]
    cond_cov = covs[..., 1:, 1:] - gain[..., :, None] * s_ts[..., None, :]

    log_h = np.log(priors) - 0.5 * (
        dt**2 / var_t + np.log(var_t) + np.log(2.0 * np.pi)
    )
    norm = logsumexp(log_h, axis=1)
    flags = ~np.isfinite(norm)
    if np.any(flags):
        warnings.warn(
            "all mixture responsibilities underflowed at some query times; "
            "falling back to uniform weights there",
            RuntimeWarning,
        )
        log_h[flags] = 0.0
        norm[flags] = np.log(priors.shape[0])
    h = np.exp(log_h - norm[:, None])  # (T, K)

    out_mean = np.einsum("tk,tks->ts", h, cond_mean)
    second = cond_cov + cond_mean[..., :, None] * cond_mean[..., None, :]
    out_cov = np.einsum("tk,tksr->tsr", h, second) - (
        out_mean[..., :, None] * out_mean[..., None, :]
    )
    out_cov = 0.5 * (out_cov + np.swapaxes(out_cov, -1, -2))
    return out_mean, out_cov, flags.astype(int)


def gmr(components, priors, t: float) -> Gaussian:
    """Conditional p(spatial | time = t) of a mixture of joint Gaussians."""
    means = np.stack([g.mean for g in components])
    covs = np.stack([g.cov for g in components])
    m, c, _ = gmr_sequence(np.asarray(priors, float), means, covs, [t])
    return Gaussian(m[0], c[0])


def _per_step_frames(frames, T: int):
    """Normalize the frames argument: static P-tuple or length-T sequence
    of P-tuples. Returns (static_frames or None, per_step list or None)."""
    frames = tuple(frames)
    if len(frames) > 0 and isinstance(frames[0], TaskFrame):
        return frames, None
    per_step = [tuple(fs) for fs in frames]
    if len(per_step) != T:
        raise ModelError(f"per-step frames length {len(per_step)} != T={T}")
    return None, per_step


def reproduce(model: TPGMM, frames, times) -> Trajectory:
    """Generate a trajectory for the given task frames (baseline pipeline).

    Frames are usually static for a trajectory; a length-T sequence of
    frame tuples is also accepted for the time-varying case.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    static, per_step = _per_step_frames(frames, times.shape[0])
    if static is not None:
        comps = global_components(model, static)
        means = np.stack([g.mean for g in comps])
        covs = np.stack([g.cov for g in comps])
    else:
        rows = [global_components(model, fs) for fs in per_step]
        means = np.stack([[g.mean for g in row] for row in rows])
        covs = np.stack([[g.cov for g in row] for row in rows])
    m, c, flags = gmr_sequence(model.priors, means, covs, times)
    return Trajectory(times, m, c, flags)
