"""Multivariate Gaussian primitives: validation, factorization, densities, sampling.

All log quantities are in nats.  Types are immutable after construction and
every operation taking an :class:`~airjam.rng.RngStream` is a pure function
of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite
from .rng import RngStream

LN_2PI = math.log(2.0 * math.pi)

# Scale-aware pivot rejection threshold: a covariance is rejected when any
# Cholesky pivot falls below PIVOT_RTOL * trace/d.
PIVOT_RTOL = 1e-12

_SYM_RTOL = 1e-12


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate a real vector: finite entries, d >= 1, optionally fixed dim."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size < 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def as_cov(m, require_psd: bool = False) -> np.ndarray:
    """Validate a covariance candidate: square, symmetric to 1e-12 relative.

    Returns the symmetrized matrix.  Definiteness is checked separately
    (``cholesky_lower`` for PD, eigenvalue floor for PSD).
    """
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("covariance entries must be finite")
    scale = float(np.max(np.abs(a)))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > _SYM_RTOL * max(scale, 1e-300):
        raise ValueError(f"matrix is not symmetric: max asymmetry {asym:.3e} at scale {scale:.3e}")
    a = 0.5 * (a + a.T)
    if require_psd:
        w = np.linalg.eigvalsh(a)
        tol = PIVOT_RTOL * max(float(np.trace(a)) / a.shape[0], 1e-300)
        if w[0] < -tol:
            raise NotPositiveDefinite(
                f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3e}"
            )
    return a


def cholesky_lower(cov: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == cov, rejecting non-PD inputs.

    A pivot below PIVOT_RTOL * trace/d fails the matrix; the exception
    reports the 0-based index of the offending leading minor.
    """
    a = as_cov(cov)
    d = a.shape[0]
    thresh = PIVOT_RTOL * max(float(np.trace(a)) / d, 1e-300)
    L = np.zeros_like(a)
    for i in range(d):
        pivot = a[i, i] - float(L[i, :i] @ L[i, :i])
        if pivot < thresh:
            raise NotPositiveDefinite(
                f"leading minor {i} fails: pivot {pivot:.3e} < threshold {thresh:.3e}",
                minor_index=i,
            )
        L[i, i] = math.sqrt(pivot)
        if i + 1 < d:
            L[i + 1 :, i] = (a[i + 1 :, i] - L[i + 1 :, :i] @ L[i, :i]) / L[i, i]
    return L


def factorize(cov) -> np.ndarray:
    """Spec-level name for :func:`cholesky_lower`."""
    return cholesky_lower(cov)


@dataclass(frozen=True)
class GaussianDist:
    """Multivariate normal with strictly positive definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean)
        cov = as_cov(self.cov)
        if cov.shape[0] != mean.size:
            raise DimensionMismatch(
                f"mean has dimension {mean.size} but covariance is {cov.shape[0]}x{cov.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        self.chol  # force the PD check at construction time

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def chol(self) -> np.ndarray:
        return cholesky_lower(self.cov)

    @cached_property
    def log_det_cov(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def log_density(self, x) -> float | np.ndarray:
        """Log density in nats; accepts one point (d,) or a batch (N, d).

        For 1-d distributions a scalar is one point and a (N,) array is a
        batch of N scalar points.
        """
        pts = np.asarray(x, dtype=float)
        if self.dim == 1:
            single = pts.ndim == 0
            pts = pts.reshape(-1, 1)
        else:
            single = pts.ndim == 1
            pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DimensionMismatch(f"points have dimension {pts.shape[1]}, expected {self.dim}")
        sol = solve_triangular(self.chol, (pts - self.mean).T, lower=True)
        quad = np.sum(sol * sol, axis=0)
        out = -0.5 * (self.dim * LN_2PI + self.log_det_cov + quad)
        return float(out[0]) if single else out

    def sample(self, rng: RngStream, count: int) -> np.ndarray:
        """count i.i.d. draws, shape (count, d); pure in (self, rng, count)."""
        if count < 1:
            raise ValueError("count must be >= 1")
        z = rng.generator().standard_normal((count, self.dim))
        return self.mean + z @ self.chol.T

    def sample_array(self, shape: tuple[int, ...], rng: RngStream) -> np.ndarray:
        """i.i.d. scalar draws of arbitrary shape; only for 1-d distributions."""
        if self.dim != 1:
            raise DimensionMismatch("sample_array requires a 1-d distribution")
        z = rng.generator().standard_normal(shape)
        return self.mean[0] + self.chol[0, 0] * z


def log_density(g: GaussianDist, x) -> float | np.ndarray:
    return g.log_density(x)


def sample(g: GaussianDist, rng: RngStream, count: int) -> np.ndarray:
    return g.sample(rng, count)


def standard_normal(dim: int = 1) -> GaussianDist:
    return GaussianDist(np.zeros(dim), np.eye(dim))
