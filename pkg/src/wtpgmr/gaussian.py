"""Dense Gaussian algebra: affine transforms, precision-form products,
conditioning and determinant utilities with PSD safeguards.

All operations are pure functions on immutable values. Every inversion is
routed through a Cholesky factorisation of a regularized matrix, so the
functions stay usable on the near-singular covariances that per-step fits
over a handful of demonstrations produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

__all__ = [
    "Gaussian",
    "GaussianError",
    "transform",
    "product",
    "scale_cov",
    "condition",
    "det_power",
    "log_det",
    "regularize",
    "chol_psd",
    "logpdf",
]

# Relative jitter applied before Cholesky when no explicit eps is given.
DEFAULT_EPS_SCALE = 1e-6

# Condition-number ceiling for frame matrices.
MAX_CONDITION = 1e12


class GaussianError(ValueError):
    """Incompatible dimensions or a degenerate matrix after regularization."""


def _symmetrize(cov: np.ndarray) -> np.ndarray:
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class Gaussian:
    """Mean vector plus symmetric PSD covariance.

    The covariance is symmetrized on construction; a grossly asymmetric
    input is rejected rather than silently repaired.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise GaussianError(f"bad shapes: mean {mean.shape}, cov {cov.shape}")
        if cov.shape[0] != mean.shape[0]:
            raise GaussianError(
                f"dimension mismatch: mean has {mean.shape[0]} entries, "
                f"cov is {cov.shape[0]}x{cov.shape[1]}"
            )
        scale = max(np.abs(cov).max(), 1.0)
        if np.abs(cov - cov.T).max() > 1e-6 * scale:
            raise GaussianError("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", _symmetrize(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def validate(self, tol: float = 1e-9) -> None:
        """Check the PSD invariant; raises GaussianError on violation."""
        eigs = np.linalg.eigvalsh(self.cov)
        floor = -tol * max(np.trace(self.cov), tol)
        if eigs.min() < floor:
            raise GaussianError(f"covariance has negative eigenvalue {eigs.min():g}")


def regularize(cov: np.ndarray, eps: float) -> np.ndarray:
    """Return cov + eps*I, symmetrized."""
    cov = _symmetrize(np.asarray(cov, dtype=float))
    return cov + eps * np.eye(cov.shape[0])


def _auto_eps(cov: np.ndarray) -> float:
    scale = float(np.abs(np.diag(cov)).mean())
    return DEFAULT_EPS_SCALE * scale if scale > 0 else 1e-12


def chol_psd(cov: np.ndarray, eps: float | None = None) -> np.ndarray:
    """Lower Cholesky factor of a regularized covariance.

    With eps=None a relative jitter of 1e-6 times the mean diagonal is
    added; if factorisation still fails the jitter escalates a few decades
    before giving up.
    """
    cov = _symmetrize(np.asarray(cov, dtype=float))
    jit = _auto_eps(cov) if eps is None else eps
    eye = np.eye(cov.shape[0])
    for _ in range(8):
        try:
            return la.cholesky(cov + jit * eye, lower=True)
        except la.LinAlgError:
            jit = max(jit, 1e-12) * 10.0
    raise GaussianError("matrix is not PSD even after regularization")


def log_det(cov: np.ndarray, eps: float | None = None) -> float:
    """Log-determinant via Cholesky of the regularized matrix."""
    L = chol_psd(cov, eps)
    return 2.0 * float(np.log(np.diag(L)).sum())


def det_power(cov: np.ndarray, alpha: float, eps: float | None = None) -> float:
    """det(cov)**alpha computed in the log domain.

    For symmetric PSD matrices this equals det(matrix_power(cov, alpha)),
    but stays finite for large |alpha| where the direct product of
    eigenvalue powers would overflow.
    """
    return float(np.exp(alpha * log_det(cov, eps)))


def transform(g: Gaussian, A: np.ndarray, b: np.ndarray) -> Gaussian:
    """Push a Gaussian through the affine map x -> A x + b.

    mean' = A mean + b, cov' = A cov A^T (the congruence keeps cov PSD).
    """
    A = np.asarray(A, dtype=float)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = g.dim
    if A.shape != (d, d) or b.shape != (d,):
        raise GaussianError(
            f"affine map shapes {A.shape}/{b.shape} do not match dimension {d}"
        )
    if np.linalg.cond(A) > MAX_CONDITION:
        raise GaussianError("frame matrix is singular or near-singular")
    return Gaussian(A @ g.mean + b, _symmetrize(A @ g.cov @ A.T))


def scale_cov(g: Gaussian, gamma: float) -> Gaussian:
    """Divide the covariance by a weight in (0, 1]; mean unchanged.

    Weights below 1 inflate the covariance, i.e. reduce the member's
    precision in a subsequent product.
    """
    if not gamma > 0:
        raise GaussianError(f"weight must be positive, got {gamma}")
    return Gaussian(g.mean, g.cov / gamma)


def product(gs: list[Gaussian] | tuple[Gaussian, ...]) -> Gaussian:
    """Normalized product of Gaussians in precision form.

    Lam = sum_j cov_j^-1, mean = Lam^-1 sum_j cov_j^-1 mean_j.
    """
    if len(gs) == 0:
        raise GaussianError("product of an empty list")
    d = gs[0].dim
    lam = np.zeros((d, d))
    eta = np.zeros(d)
    for g in gs:
        if g.dim != d:
            raise GaussianError(f"dimension mismatch in product: {g.dim} vs {d}")
        L = chol_psd(g.cov)
        prec = la.cho_solve((L, True), np.eye(d))
        lam += prec
        eta += prec @ g.mean
    Lhat = chol_psd(lam, eps=0.0)
    cov = _symmetrize(la.cho_solve((Lhat, True), np.eye(d)))
    mean = la.cho_solve((Lhat, True), eta)
    return Gaussian(mean, cov)


def condition(
    g: Gaussian,
    in_idx,
    out_idx,
    value: np.ndarray,
) -> Gaussian:
    """Condition on g[in_idx] = value; returns the Gaussian over out_idx."""
    in_idx = np.atleast_1d(np.asarray(in_idx, dtype=int))
    out_idx = np.atleast_1d(np.asarray(out_idx, dtype=int))
    value = np.atleast_1d(np.asarray(value, dtype=float))
    if np.intersect1d(in_idx, out_idx).size > 0:
        raise GaussianError("input and output index sets overlap")
    if in_idx.max(initial=-1) >= g.dim or out_idx.max(initial=-1) >= g.dim:
        raise GaussianError("index out of range")
    if value.shape != in_idx.shape:
        raise GaussianError("conditioning value does not match input indices")

    s_ii = g.cov[np.ix_(in_idx, in_idx)]
    s_oi = g.cov[np.ix_(out_idx, in_idx)]
    s_oo = g.cov[np.ix_(out_idx, out_idx)]
    L = chol_psd(s_ii)
    gain = la.cho_solve((L, True), s_oi.T).T  # s_oi @ s_ii^-1
    mean = g.mean[out_idx] + gain @ (value - g.mean[in_idx])
    cov = _symmetrize(s_oo - gain @ s_oi.T)
    return Gaussian(mean, cov)


def logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Gaussian log-density, vectorized over rows of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]
    L = chol_psd(cov)
    diff = (x - mean).T
    sol = la.solve_triangular(L, diff, lower=True)
    maha = np.sum(sol**2, axis=0)
    ld = 2.0 * np.log(np.diag(L)).sum()
    return -0.5 * (maha + ld + d * np.log(2.0 * np.pi))
