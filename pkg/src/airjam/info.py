"""Information measures in nats: KL and Rényi divergences between Gaussians
(closed form and quadrature oracle), information density, Monte Carlo mutual
information, and a moment-generating-function stability probe.

Conventions: natural logarithms everywhere; an infinite divergence is the
value ``math.inf``, never an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    DomainTooLarge,
    NonAbsolutelyContinuous,
    NotPositiveDefinite,
)
from .gaussian import GaussianDist, cholesky_lower
from .rng import RngStream

# Quadrature truncation guard: the box must capture all but this much mass.
MASS_TOL = 1e-8


def check_renyi_order(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 0.0) or alpha == 1.0:
        raise ValueError(f"Rényi order must be positive and != 1, got {alpha}")
    return alpha


def kl_gaussian(g0: GaussianDist, g1: GaussianDist) -> float:
    """KL(g0 || g1) between multivariate normals.

    Closed form:
        0.5 * [tr(S1^-1 S0) + (m1-m0)' S1^-1 (m1-m0) - d + ln det S1 - ln det S0]
    """
    if g0.dim != g1.dim:
        raise DimensionMismatch(f"dimensions differ: {g0.dim} vs {g1.dim}")
    L1 = g1.chol
    # tr(S1^-1 S0) = ||L1^-1 L0||_F^2
    from scipy.linalg import solve_triangular

    W = solve_triangular(L1, g0.chol, lower=True)
    trace_term = float(np.sum(W * W))
    diff = g1.mean - g0.mean
    sol = solve_triangular(L1, diff, lower=True)
    quad = float(sol @ sol)
    val = 0.5 * (trace_term + quad - g0.dim + g1.log_det_cov - g0.log_det_cov)
    return max(val, 0.0)


def renyi_gaussian(alpha: float, g0: GaussianDist, g1: GaussianDist) -> float:
    """Rényi divergence D_alpha(g0 || g1) between multivariate normals.

    With S* = alpha*S1 + (1-alpha)*S0:

        D_alpha = (alpha/2) (m0-m1)' S*^-1 (m0-m1)
                  - 1/(2(alpha-1)) * ln( det S* / (det S0^(1-alpha) det S1^alpha) )

    finite exactly when S* is positive definite; otherwise +inf (for
    alpha < 1, S* is a convex combination and is always PD).  The sign of
    the log-determinant term was validated against the quadrature oracle;
    see tests.
    """
    alpha = check_renyi_order(alpha)
    if g0.dim != g1.dim:
        raise DimensionMismatch(f"dimensions differ: {g0.dim} vs {g1.dim}")
    star = alpha * g1.cov + (1.0 - alpha) * g0.cov
    try:
        L = cholesky_lower(star)
    except NotPositiveDefinite:
        return math.inf
    from scipy.linalg import solve_triangular

    log_det_star = 2.0 * float(np.sum(np.log(np.diag(L))))
    diff = g0.mean - g1.mean
    sol = solve_triangular(L, diff, lower=True)
    quad = float(sol @ sol)
    log_det_term = log_det_star - (1.0 - alpha) * g0.log_det_cov - alpha * g1.log_det_cov
    val = 0.5 * alpha * quad - log_det_term / (2.0 * (alpha - 1.0))
    return max(val, 0.0)


@dataclass(frozen=True)
class QuadratureResult:
    """Tensor-quadrature estimate with a resolution-doubling error estimate."""

    value: float
    error: float
    mass: float


def _gl_grid(lo: np.ndarray, hi: np.ndarray, resolution: int):
    """Tensor Gauss-Legendre nodes/log-weights over a 1-d or 2-d box."""
    nodes, weights = np.polynomial.legendre.leggauss(resolution)
    axes_pts, axes_w = [], []
    for a, b in zip(lo, hi):
        axes_pts.append(0.5 * (b - a) * nodes + 0.5 * (a + b))
        axes_w.append(0.5 * (b - a) * weights)
    if len(lo) == 1:
        pts = axes_pts[0].reshape(-1, 1)
        logw = np.log(axes_w[0])
    else:
        X, Y = np.meshgrid(axes_pts[0], axes_pts[1], indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        logw = np.add.outer(np.log(axes_w[0]), np.log(axes_w[1])).ravel()
    return pts, logw


def _quad_once(logpdf0, logpdf1, lo, hi, resolution):
    pts, logw = _gl_grid(lo, hi, resolution)
    l0 = np.asarray(logpdf0(pts), dtype=float)
    l1 = np.asarray(logpdf1(pts), dtype=float)
    mass = math.exp(logsumexp(logw + l0))
    integrand = np.exp(logw + l0) * (l0 - l1)
    return float(np.sum(integrand)), mass


def kl_numeric_oracle(
    logpdf0,
    logpdf1,
    lo,
    hi,
    resolution: int = 200,
) -> QuadratureResult:
    """Independent quadrature estimate of KL = \\int p0 * ln(p0/p1).

    ``logpdf0``/``logpdf1`` are vectorized log-density callables over (N, d)
    points with d <= 2; the box [lo, hi] must capture all but MASS_TOL of
    p0's mass or DomainTooLarge is raised.  ``error`` is the difference
    against a doubled-resolution pass, which is also the returned value.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.size != hi.size or lo.size not in (1, 2):
        raise DimensionMismatch("oracle supports 1-d and 2-d boxes only")
    coarse, _ = _quad_once(logpdf0, logpdf1, lo, hi, resolution)
    fine, mass = _quad_once(logpdf0, logpdf1, lo, hi, 2 * resolution)
    if abs(1.0 - mass) > MASS_TOL:
        raise DomainTooLarge(
            f"box captures mass {mass:.12f}; truncation exceeds {MASS_TOL:g}"
        )
    return QuadratureResult(value=fine, error=abs(fine - coarse), mass=mass)


def renyi_numeric_oracle(
    alpha: float,
    logpdf0,
    logpdf1,
    lo,
    hi,
    resolution: int = 200,
) -> QuadratureResult:
    """Quadrature estimate of D_alpha = ln(\\int p0^a p1^(1-a)) / (a-1).

    The box must capture the mass of p0 (checked as in the KL oracle); for
    alpha > 1 it must additionally cover the wider effective Gaussian of the
    integrand, which the caller controls via lo/hi.
    """
    alpha = check_renyi_order(alpha)
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.size != hi.size or lo.size not in (1, 2):
        raise DimensionMismatch("oracle supports 1-d and 2-d boxes only")

    def one(res):
        pts, logw = _gl_grid(lo, hi, res)
        l0 = np.asarray(logpdf0(pts), dtype=float)
        l1 = np.asarray(logpdf1(pts), dtype=float)
        log_integral = logsumexp(logw + alpha * l0 + (1.0 - alpha) * l1)
        mass = math.exp(logsumexp(logw + l0))
        return log_integral / (alpha - 1.0), mass

    coarse, _ = one(resolution)
    fine, mass = one(2 * resolution)
    if abs(1.0 - mass) > MASS_TOL:
        raise DomainTooLarge(
            f"box captures mass {mass:.12f}; truncation exceeds {MASS_TOL:g}"
        )
    return QuadratureResult(value=fine, error=abs(fine - coarse), mass=mass)


def information_density(cond_logpdf, marginal_logpdf, x, y) -> float:
    """Single-letter information density ln dW(x,.)/dQ(y) in nats.

    ``cond_logpdf(x, y)`` and ``marginal_logpdf(y)`` must be finite at y
    except that an impossible y under the marginal with positive conditional
    density raises NonAbsolutelyContinuous.
    """
    c = float(cond_logpdf(x, y))
    m = float(marginal_logpdf(y))
    if m == -math.inf and c > -math.inf:
        raise NonAbsolutelyContinuous(
            "marginal density is zero where the conditional density is positive"
        )
    return c - m


def information_density_seq(cond_logpdf, marginal_logpdf, xs, ys) -> float:
    """n-letter information density of the product channel: the sum of
    single-letter densities over the sequence."""
    return float(
        sum(information_density(cond_logpdf, marginal_logpdf, x, y) for x, y in zip(xs, ys))
    )


@dataclass(frozen=True)
class MIEstimate:
    """Mutual information estimate in nats with its standard error."""

    mean: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.stderr < 0 or self.samples < 1:
            raise ValueError("stderr must be >= 0 and samples >= 1")


def mutual_information_mc(channel, input_dist, n_samples: int, rng: RngStream) -> MIEstimate:
    """Monte Carlo mutual information I(P; W) = E[i(X;Y)] under P ∘ W.

    For a finite channel driven by a finite input distribution the double
    sum is computed exactly (stderr 0).  Otherwise X is sampled from P, Y
    from W(X, .), and the information density is averaged; the marginal
    output density comes from ``channel.marginal(P)`` (closed form for the
    linear-Gaussian path).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if getattr(channel, "is_discrete", False) and hasattr(input_dist, "probs"):
        # finite alphabets admit the exact double sum
        val = channel.exact_mutual_information(input_dist)
        return MIEstimate(mean=float(val), stderr=0.0, samples=n_samples)
    xs = input_dist.sample_array((n_samples,), rng.substream("mi_x"))
    ys = channel.sample_given(xs, rng.substream("mi_y"))
    marg = channel.marginal(input_dist)
    dens = channel.conditional_logpdf(xs, ys) - marg.log_density(ys)
    mean = float(np.mean(dens))
    stderr = float(np.std(dens, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return MIEstimate(mean=mean, stderr=stderr, samples=n_samples)


@dataclass(frozen=True)
class MgfEstimate:
    """Empirical E[exp(t*i(X;Y))] with a divergence-suspicion flag.

    The flag is a heuristic only (finiteness of an MGF is undecidable from
    samples): it is raised when a single summand carries more than half of
    the total at n >= 10^4 samples.
    """

    value: float
    t: float
    suspicious: bool
    max_share: float
    samples: int


def mgf_information_density(
    channel, input_dist, t: float, n_samples: int, rng: RngStream
) -> MgfEstimate:
    """Empirical moment generating function of the information density at t > 0."""
    if t <= 0:
        raise ValueError("t must be > 0")
    xs = input_dist.sample_array((n_samples,), rng.substream("mgf_x"))
    ys = channel.sample_given(xs, rng.substream("mgf_y"))
    marg = channel.marginal(input_dist)
    dens = channel.conditional_logpdf(xs, ys) - marg.log_density(ys)
    scaled = t * np.asarray(dens, dtype=float)
    log_total = logsumexp(scaled)
    max_share = float(math.exp(np.max(scaled) - log_total))
    value = float(math.exp(log_total - math.log(n_samples)))
    suspicious = n_samples >= 10_000 and max_share > 0.5
    return MgfEstimate(
        value=value, t=t, suspicious=suspicious, max_share=max_share, samples=n_samples
    )
