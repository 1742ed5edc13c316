"""Channel abstractions: finite DMCs, Gaussian fading MIMO channels, and the
effective jammer-input channels seen by the legitimate receiver and the
eavesdropper.

Channels are memoryless and single-letter; n-fold products are handled by
applying them elementwise to sequences and summing log densities.  All
channel objects are immutable and thread-safe; samplers take caller-provided
streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    NotPositiveDefinite,
    UnsupportedCombination,
)
from .gaussian import LN_2PI, GaussianDist, as_cov, as_vector
from .rng import RngStream

_ROW_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDist:
    """Finite distribution; ``atoms`` are the numeric symbol values.

    With the default atoms 0..k-1 this doubles as an index distribution for
    finite channels; with arbitrary real atoms it is a point-mass input for
    continuous channels.
    """

    probs: np.ndarray
    atoms: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1 or np.any(p < -_ROW_TOL):
            raise InvalidDistribution(f"invalid probability vector of shape {p.shape}")
        if abs(p.sum() - 1.0) > _ROW_TOL * p.size:
            raise InvalidDistribution(f"probabilities sum to {p.sum()!r}, expected 1")
        p = np.clip(p, 0.0, None)
        atoms = self.atoms
        atoms = np.arange(p.size, dtype=float) if atoms is None else as_vector(atoms, p.size)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "atoms", atoms)

    @property
    def size(self) -> int:
        return self.probs.size

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.cumsum(self.probs)

    @cached_property
    def _index_atoms(self) -> bool:
        return bool(np.array_equal(self.atoms, np.arange(self.size, dtype=float)))

    def sample_indices(self, shape, rng: RngStream) -> np.ndarray:
        u = rng.generator().random(shape)
        return (u[..., None] >= self._cum).sum(axis=-1)

    def sample_array(self, shape, rng: RngStream) -> np.ndarray:
        return self.atoms[self.sample_indices(shape, rng)]

    def logpmf(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=int)
        with np.errstate(divide="ignore"):
            table = np.log(self.probs)
        return table[idx]

    def log_density(self, y) -> np.ndarray:
        """Log pmf of symbol values; only valid for index atoms 0..k-1."""
        if not self._index_atoms:
            raise UnsupportedCombination("log_density requires index atoms 0..k-1")
        return self.logpmf(np.asarray(y, dtype=int))


@dataclass(frozen=True)
class GaussianMixture:
    """Finite mixture of Gaussians; the exact marginal of a point-mass input
    pushed through a Gaussian-conditional channel."""

    weights: np.ndarray
    components: tuple[GaussianDist, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.components) or abs(w.sum() - 1.0) > 1e-10:
            raise InvalidDistribution("mixture weights must match components and sum to 1")
        object.__setattr__(self, "weights", w)

    def log_density(self, y) -> np.ndarray:
        logs = np.stack([c.log_density(y) for c in self.components], axis=0)
        with np.errstate(divide="ignore"):
            return logsumexp(logs + np.log(self.weights)[:, None], axis=0)

    def sample_array(self, shape, rng: RngStream) -> np.ndarray:
        if any(c.dim != 1 for c in self.components):
            raise DimensionMismatch("sample_array requires scalar components")
        ks = DiscreteDist(self.weights).sample_indices(shape, rng.substream("mix_k"))
        z = rng.substream("mix_z").generator().standard_normal(np.shape(ks))
        means = np.array([c.mean[0] for c in self.components])
        sds = np.array([math.sqrt(c.cov[0, 0]) for c in self.components])
        return means[ks] + sds[ks] * z


class Channel:
    """Duck-typed base: subclasses provide ``sample_given``,
    ``conditional_logpdf`` (both elementwise over arrays) and ``marginal``."""

    is_discrete = False

    def loglik_words(self, words: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Summed conditional log likelihood of output rows given word rows.

        words: (M, n), ys: (B, n).  Returns (M, B).  Generic chunked path;
        subclasses override with closed-form reductions where possible.
        """
        M = words.shape[0]
        B = ys.shape[0]
        out = np.empty((M, B))
        chunk = max(1, int(4e6) // max(1, B * words.shape[1]))
        for lo in range(0, M, chunk):
            hi = min(M, lo + chunk)
            block = self.conditional_logpdf(words[lo:hi, None, :], ys[None, :, :])
            out[lo:hi] = block.sum(axis=-1)
        return out


@dataclass(frozen=True)
class DiscreteChannel(Channel):
    """Finite channel given by a row-stochastic transition matrix."""

    transition: np.ndarray

    is_discrete = True

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
            raise InvalidDistribution(f"transition must be 2-d, got shape {t.shape}")
        if np.any(t < -_ROW_TOL) or np.any(t > 1 + _ROW_TOL):
            raise InvalidDistribution("transition entries must lie in [0, 1]")
        rows = t.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > _ROW_TOL * t.shape[1]):
            raise InvalidDistribution(f"rows must sum to 1, got {rows}")
        object.__setattr__(self, "transition", np.clip(t, 0.0, 1.0))

    @property
    def input_size(self) -> int:
        return self.transition.shape[0]

    @property
    def output_size(self) -> int:
        return self.transition.shape[1]

    @cached_property
    def _log_t(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.transition)

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.cumsum(self.transition, axis=1)

    def apply(self, x: int, rng: RngStream) -> int:
        """Draw one output symbol from row x (the DMC single use)."""
        return int(self.sample_given(np.asarray(x), rng))

    def sample_given(self, xs, rng: RngStream) -> np.ndarray:
        xs = np.asarray(xs, dtype=int)
        if np.any(xs < 0) or np.any(xs >= self.input_size):
            raise IndexError(f"input symbol out of range 0..{self.input_size - 1}")
        u = rng.generator().random(xs.shape)
        return (u[..., None] >= self._cum[xs]).sum(axis=-1)

    def conditional_logpdf(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=int)
        ys = np.asarray(ys, dtype=int)
        xs, ys = np.broadcast_arrays(xs, ys)
        return self._log_t[xs, ys]

    def marginal(self, input_dist: DiscreteDist) -> DiscreteDist:
        if input_dist.size != self.input_size:
            raise DimensionMismatch("input distribution does not match channel alphabet")
        return DiscreteDist(input_dist.probs @ self.transition)

    def exact_mutual_information(self, input_dist: DiscreteDist) -> float:
        q = self.marginal(input_dist).probs
        t = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(t > 0, np.log(t) - np.log(q)[None, :], 0.0)
        return float(np.sum(input_dist.probs[:, None] * t * ratio))

    def loglik_words(self, words: np.ndarray, ys: np.ndarray) -> np.ndarray:
        words = np.asarray(words, dtype=int)
        ys = np.asarray(ys, dtype=int)
        out = np.zeros((words.shape[0], ys.shape[0]))
        for i in range(words.shape[1]):
            out += self._log_t[words[:, i]][:, ys[:, i]]
        return out


@dataclass(frozen=True)
class LinearGaussianChannel(Channel):
    """Scalar additive channel y = slope * x + offset + N(noise_mean, noise_var).

    This is the single-letter workhorse of the experiments: the effective
    jammer-input channels and the AWGN compound members are all of this
    form, which keeps conditional, marginal and product-sequence densities
    closed-form.
    """

    slope: float
    offset: float
    noise: GaussianDist

    def __post_init__(self):
        if self.noise.dim != 1:
            raise DimensionMismatch("LinearGaussianChannel is scalar; use the fading channel")
        object.__setattr__(self, "slope", float(self.slope))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def noise_var(self) -> float:
        return float(self.noise.cov[0, 0])

    @property
    def cond_offset(self) -> float:
        return self.offset + float(self.noise.mean[0])

    def conditional(self, x: float) -> GaussianDist:
        return GaussianDist(
            np.array([self.slope * float(x) + self.cond_offset]),
            np.array([[self.noise_var]]),
        )

    def sample_given(self, xs, rng: RngStream) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        z = rng.generator().standard_normal(xs.shape)
        return self.slope * xs + self.cond_offset + math.sqrt(self.noise_var) * z

    def conditional_logpdf(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        resid = ys - self.slope * xs - self.cond_offset
        return -0.5 * (LN_2PI + math.log(self.noise_var)) - resid * resid / (2.0 * self.noise_var)

    def marginal(self, input_dist) -> GaussianDist:
        if isinstance(input_dist, DiscreteDist):
            comps = tuple(self.conditional(a) for a in input_dist.atoms)
            return GaussianMixture(input_dist.probs, comps)
        if not isinstance(input_dist, GaussianDist) or input_dist.dim != 1:
            raise UnsupportedCombination("marginal needs a scalar Gaussian or atomic input")
        m = self.slope * float(input_dist.mean[0]) + self.cond_offset
        v = self.slope**2 * float(input_dist.cov[0, 0]) + self.noise_var
        return GaussianDist(np.array([m]), np.array([[v]]))

    def exact_mutual_information(self, input_dist: GaussianDist) -> float:
        if not isinstance(input_dist, GaussianDist) or input_dist.dim != 1:
            raise UnsupportedCombination("exact MI needs a scalar Gaussian input")
        snr = self.slope**2 * float(input_dist.cov[0, 0]) / self.noise_var
        return 0.5 * math.log1p(snr)

    def joint_with(self, input_dist: GaussianDist) -> tuple[GaussianDist, GaussianDist]:
        """Joint law of (X, Y) under P ∘ W and the product P x Q of its marginals."""
        if not isinstance(input_dist, GaussianDist) or input_dist.dim != 1:
            raise UnsupportedCombination("joint law needs a scalar Gaussian input")
        p = float(input_dist.cov[0, 0])
        mx = float(input_dist.mean[0])
        a = self.slope
        my = a * mx + self.cond_offset
        joint = GaussianDist(
            np.array([mx, my]),
            np.array([[p, a * p], [a * p, a * a * p + self.noise_var]]),
        )
        product = GaussianDist(
            np.array([mx, my]),
            np.array([[p, 0.0], [0.0, a * a * p + self.noise_var]]),
        )
        return joint, product

    def loglik_words(self, words: np.ndarray, ys: np.ndarray) -> np.ndarray:
        # sum_i (y_i - a w_i - c)^2 expands into row/column statistics plus
        # one M x B matrix product, so the whole reduction is a single GEMM
        words = np.asarray(words, dtype=float)
        ys = np.asarray(ys, dtype=float)
        n = words.shape[1]
        c = self.cond_offset
        a = self.slope
        yt = ys - c
        ss_y = np.sum(yt * yt, axis=1)
        ss_w = np.sum(words * words, axis=1)
        cross = words @ yt.T
        quad = ss_y[None, :] - 2.0 * a * cross + (a * a) * ss_w[:, None]
        return -0.5 * n * (LN_2PI + math.log(self.noise_var)) - quad / (2.0 * self.noise_var)


@dataclass(frozen=True)
class FadingParams:
    """Compound index of the Gaussian fading family: vectorized fading-matrix
    mean and covariance plus additive-noise mean and covariance.

    The i x j fading matrix is vectorized row-major, so entry (r, c) of the
    matrix is component r*j + c of the vector; Sigma_H is indexed the same
    way.  Sigma_H must be PSD and Sigma_N strictly PD.
    """

    out_dim: int
    in_dim: int
    mu_h: np.ndarray
    sigma_h: np.ndarray
    mu_n: np.ndarray
    sigma_n: np.ndarray

    def __post_init__(self):
        i, j = int(self.out_dim), int(self.in_dim)
        if i < 1 or j < 1:
            raise DimensionMismatch("fading dimensions must be >= 1")
        mu_h = as_vector(self.mu_h, i * j)
        sigma_h = as_cov(self.sigma_h, require_psd=True)
        if sigma_h.shape[0] != i * j:
            raise DimensionMismatch(f"sigma_h must be {i * j}x{i * j}")
        mu_n = as_vector(self.mu_n, i)
        sigma_n = as_cov(self.sigma_n)
        if sigma_n.shape[0] != i:
            raise DimensionMismatch(f"sigma_n must be {i}x{i}")
        GaussianDist(mu_n, sigma_n)  # enforces strict PD of the noise
        object.__setattr__(self, "out_dim", i)
        object.__setattr__(self, "in_dim", j)
        object.__setattr__(self, "mu_h", mu_h)
        object.__setattr__(self, "sigma_h", sigma_h)
        object.__setattr__(self, "mu_n", mu_n)
        object.__setattr__(self, "sigma_n", sigma_n)

    @property
    def mean_matrix(self) -> np.ndarray:
        return self.mu_h.reshape(self.out_dim, self.in_dim)


@dataclass(frozen=True)
class GaussianFadingChannel(Channel):
    """Y = H X + N with Gaussian H (entries jointly Gaussian) and Gaussian N.

    For each fixed input x the output is Gaussian with mean M x + mu_n and
    covariance Cov(Hx) + sigma_n, where Cov(Hx) is the quadratic-form image
    of sigma_h under x; positive definiteness is guaranteed by sigma_n.
    """

    params: FadingParams

    @cached_property
    def _sigma_h_tensor(self) -> np.ndarray:
        p = self.params
        return p.sigma_h.reshape(p.out_dim, p.in_dim, p.out_dim, p.in_dim)

    def conditional(self, x) -> GaussianDist:
        p = self.params
        x = as_vector(x, p.in_dim)
        mean = p.mean_matrix @ x + p.mu_n
        cov_hx = np.einsum("rcse,c,e->rs", self._sigma_h_tensor, x, x)
        return GaussianDist(mean, as_cov(cov_hx + p.sigma_n))

    def sample_given_vec(self, x, rng: RngStream, count: int = 1) -> np.ndarray:
        """count output draws for one fixed input vector, shape (count, i)."""
        return self.conditional(x).sample(rng, count)

    def sample_given(self, xs, rng: RngStream) -> np.ndarray:
        """Elementwise sampling for the scalar (i = j = 1) specialization."""
        p = self.params
        if p.in_dim != 1 or p.out_dim != 1:
            raise DimensionMismatch("elementwise sampling requires i = j = 1")
        xs = np.asarray(xs, dtype=float)
        g = rng.generator()
        h = p.mu_h[0] + math.sqrt(p.sigma_h[0, 0]) * g.standard_normal(xs.shape)
        n = p.mu_n[0] + math.sqrt(p.sigma_n[0, 0]) * g.standard_normal(xs.shape)
        return h * xs + n

    def conditional_logpdf(self, xs, ys) -> np.ndarray:
        p = self.params
        if p.in_dim != 1 or p.out_dim != 1:
            raise DimensionMismatch("elementwise logpdf requires i = j = 1")
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        mean = p.mu_h[0] * xs + p.mu_n[0]
        var = p.sigma_h[0, 0] * xs * xs + p.sigma_n[0, 0]
        return -0.5 * (LN_2PI + np.log(var)) - (ys - mean) ** 2 / (2.0 * var)

    def marginal(self, input_dist) -> GaussianMixture:
        if isinstance(input_dist, DiscreteDist):
            p = self.params
            if p.in_dim == 1:
                comps = tuple(self.conditional([a]) for a in input_dist.atoms)
                return GaussianMixture(input_dist.probs, comps)
        raise UnsupportedCombination(
            "fading marginal is closed-form only for atomic inputs; use Monte Carlo"
        )


def fading_conditional(ch: GaussianFadingChannel, x) -> GaussianDist:
    """Spec-level name: the Gaussian law of H x + N for one fixed input."""
    return ch.conditional(x)


def dmc_apply(ch: DiscreteChannel, x: int, rng: RngStream) -> int:
    return ch.apply(x, rng)


@dataclass(frozen=True)
class EffectiveMACConfig:
    """Gains and noises of the reference additive multiple-access model.

    The legitimate receiver sees sum_k g_k a_k + g_j x + N_B and the
    eavesdropper sum_k h_k a_k + h_j x + N_E, with x the jammer input.
    """

    k: int
    bob_gains: tuple[float, ...]
    eve_gains: tuple[float, ...]
    g_j: float
    h_j: float
    bob_noise: GaussianDist
    eve_noise: GaussianDist

    def __post_init__(self):
        if self.k < 1 or len(self.bob_gains) != self.k or len(self.eve_gains) != self.k:
            raise DimensionMismatch("gain vectors must have length k >= 1")
        if self.g_j < 0 or self.h_j < 0:
            raise ValueError("jammer gains must be nonnegative")
        if self.bob_noise.dim != 1 or self.eve_noise.dim != 1:
            raise DimensionMismatch("reference model uses scalar noises")
        object.__setattr__(self, "bob_gains", tuple(float(g) for g in self.bob_gains))
        object.__setattr__(self, "eve_gains", tuple(float(h) for h in self.eve_gains))

    @property
    def stronger_at_bob(self) -> bool:
        return self.g_j > self.h_j


def validate_message_tuple(a, alphabets) -> np.ndarray:
    """Check a message tuple against its per-transmitter alphabet intervals."""
    a = as_vector(a, len(alphabets))
    for k, (lo, hi) in enumerate(alphabets):
        if not (lo <= a[k] <= hi):
            raise ValueError(f"message component {k} = {a[k]} outside [{lo}, {hi}]")
    return a


def effective_channel(config: EffectiveMACConfig, a, side: str) -> LinearGaussianChannel:
    """Point-to-point channel in the jammer input for a fixed message tuple.

    side is "bob" or "eve"; the message tuple enters only through the mean
    offset sum_k gain_k a_k, so the channel stays scalar linear-Gaussian.
    """
    a = as_vector(a, config.k)
    if side == "bob":
        gains, slope, noise = config.bob_gains, config.g_j, config.bob_noise
    elif side == "eve":
        gains, slope, noise = config.eve_gains, config.h_j, config.eve_noise
    else:
        raise ValueError(f"side must be 'bob' or 'eve', got {side!r}")
    offset = float(np.dot(gains, a))
    return LinearGaussianChannel(slope=slope, offset=offset, noise=noise)


def marginal_output(channel, input_dist):
    """Exact output law where one exists (linear-Gaussian with Gaussian input,
    any Gaussian-conditional channel with an atomic input, finite channels);
    otherwise UnsupportedCombination."""
    return channel.marginal(input_dist)
