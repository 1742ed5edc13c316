"""Random codebook ensembles, additive cost constraints, the compound
joint-typicality decoder, and error-exponent parameter selection.

The ensemble draws ceil(exp(n*R)) length-n words i.i.d. from the input
distribution; rates are in nats.  Desk-scale caps bound what the decoder
will enumerate and raise SizeOverflow beyond them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .approx import ApproximationNet, expected_conditional_kl
from .channels import DiscreteChannel, DiscreteDist, LinearGaussianChannel
from .errors import (
    NoFeasibleWord,
    NonpositiveExponent,
    RateTooHigh,
    SizeOverflow,
    UnsupportedCombination,
)
from .gaussian import LN_2PI, GaussianDist
from .info import MIEstimate, renyi_gaussian
from .rng import RngStream

# Desk-scale caps (enforced by draw_codebook and the enumeration paths).
MAX_N = 512
MAX_M = 65_536
MAX_SYMBOLS = 1 << 22

# Deterministic alpha grids for the exponent search; the bracket terms are
# quasi-concave near the endpoints in practice, so a coarse grid suffices.
ALPHA1_GRID = (1.01, 1.05, 1.1, 1.25, 1.5, 2.0)
ALPHA3_GRID = (0.5, 0.75, 0.9, 0.95, 0.99)

_MC_BLOCK = 2_000_000  # cap on M*B entries held by the batched decoder


@dataclass(frozen=True)
class CodebookSpec:
    """(P, n, R)-ensemble parameters; m_words = ceil(exp(n R))."""

    input_dist: object
    n: int
    rate: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("block length must be >= 1")
        if self.rate < 0:
            raise ValueError("rate must be >= 0 nats")
        if self.n * self.rate > 700:
            raise SizeOverflow(
                f"exp(n*R) = exp({self.n * self.rate:.1f}) is not representable"
            )

    @property
    def m_words(self) -> int:
        return max(1, math.ceil(math.exp(self.n * self.rate)))


@dataclass(frozen=True)
class Codebook:
    """Materialized codebook; regenerable from (spec, seed) alone."""

    words: np.ndarray
    spec: CodebookSpec
    seed: tuple[int, int]
    cost_constrained: bool = False

    @property
    def m(self) -> int:
        return self.words.shape[0]

    @property
    def n(self) -> int:
        return self.words.shape[1]


def check_caps(n: int, m: int):
    if n > MAX_N or m > MAX_M or m * n > MAX_SYMBOLS:
        raise SizeOverflow(
            f"codebook {m} x {n} exceeds desk-scale caps "
            f"(n <= {MAX_N}, M <= {MAX_M}, M*n <= {MAX_SYMBOLS})"
        )


def draw_codebook(spec: CodebookSpec, rng: RngStream) -> Codebook:
    """Draw the ensemble member for this stream: M*n i.i.d. symbols from P."""
    m = spec.m_words
    check_caps(spec.n, m)
    words = spec.input_dist.sample_array((m, spec.n), rng)
    return Codebook(words=words, spec=spec, seed=(rng.seed, rng.stream_id))


@dataclass(frozen=True)
class CostConstraint:
    """Additive cost constraint (c, C) with a fixed feasible replacement word.

    ``cost`` must be vectorized over symbol arrays and nonnegative.  The
    replacement word, when given, must itself satisfy sum c(x) <= n C.
    """

    cost: Callable[[np.ndarray], np.ndarray]
    budget: float
    replacement: np.ndarray | None = None
    name: str = "cost"

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("cost budget must be >= 0")
        if self.replacement is not None:
            word = np.asarray(self.replacement, dtype=float).reshape(-1)
            total = float(np.sum(self.cost(word)))
            if total > len(word) * self.budget:
                raise NoFeasibleWord(
                    f"replacement word violates its own constraint: "
                    f"{total:.6g} > {len(word) * self.budget:.6g}"
                )
            object.__setattr__(self, "replacement", word)

    def word_feasible(self, words: np.ndarray) -> np.ndarray:
        words = np.atleast_2d(words)
        totals = np.sum(self.cost(words), axis=1)
        return totals <= words.shape[1] * self.budget


def apply_cost_constraint(cb: Codebook, cc: CostConstraint) -> tuple[Codebook, int]:
    """Replace every violating word with the fixed replacement word."""
    feasible = cc.word_feasible(cb.words)
    replaced = int(np.sum(~feasible))
    if replaced == 0:
        return Codebook(cb.words, cb.spec, cb.seed, cost_constrained=True), 0
    if cc.replacement is None:
        raise NoFeasibleWord("codebook has violating words and no replacement word")
    if cc.replacement.size != cb.n:
        raise NoFeasibleWord(
            f"replacement word has length {cc.replacement.size}, codebook has n={cb.n}"
        )
    words = cb.words.copy()
    words[~feasible] = cc.replacement
    return Codebook(words, cb.spec, cb.seed, cost_constrained=True), replaced


@dataclass(frozen=True)
class CostCompatibility:
    compatible: bool
    mean_cost: float
    budget: float
    mgf_value: float
    mgf_stable: bool
    t: float


def cost_compatibility(cc: CostConstraint, input_dist, rng: RngStream,
                       n_samples: int = 16_384, t: float = 0.05) -> CostCompatibility:
    """Empirical compatibility probe: C > E_P c(X) and the MGF of c(X) is
    stable near 0 (max-summand heuristic, advisory only)."""
    xs = input_dist.sample_array((n_samples,), rng)
    costs = np.asarray(cc.cost(xs), dtype=float)
    mean_cost = float(costs.mean())
    scaled = t * costs
    shift = scaled.max()
    total = float(np.exp(scaled - shift).sum())
    mgf = float(math.exp(shift) * total / n_samples) if shift < 700 else math.inf
    max_share = float(math.exp(scaled.max() - shift) / total)
    stable = math.isfinite(mgf) and max_share <= 0.5
    return CostCompatibility(
        compatible=(cc.budget > mean_cost) and stable,
        mean_cost=mean_cost,
        budget=cc.budget,
        mgf_value=mgf,
        mgf_stable=stable,
        t=t,
    )


def square_cost() -> Callable[[np.ndarray], np.ndarray]:
    return np.square


# ---------------------------------------------------------------------------
# Exponent parameter picking and the four-term error bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentParams:
    """Typicality-decoder parameters picked inside their nested intervals:

        delta   in (0, (infI - R)/3)
        epsilon in (2 delta, infI - R - delta)
        beta1   in (delta, epsilon - delta)
        beta2   in (0, epsilon - delta - beta1)

    alpha1/alpha2/alpha3 are the Chernoff orders of the three typicality
    terms (alpha2 enters only through its limit toward 1); gamma is filled
    in by ``exponent_bound``.
    """

    delta: float
    epsilon: float
    beta1: float
    beta2: float
    inf_mi: float
    rate: float
    alpha1: float | None = None
    alpha2: float | None = None
    alpha3: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        gap = self.inf_mi - self.rate
        checks = [
            0.0 < self.delta < gap / 3.0,
            2.0 * self.delta < self.epsilon < gap - self.delta,
            self.delta < self.beta1 < self.epsilon - self.delta,
            0.0 < self.beta2 < self.epsilon - self.delta - self.beta1,
        ]
        if not all(checks):
            raise ValueError(
                f"exponent parameters violate their intervals: {self} (checks={checks})"
            )
        if self.alpha1 is not None and not self.alpha1 > 1:
            raise ValueError("alpha1 must be > 1")
        if self.alpha2 is not None and not 0 < self.alpha2 < 1:
            raise ValueError("alpha2 must be in (0, 1)")
        if self.alpha3 is not None and not self.alpha3 < 1:
            raise ValueError("alpha3 must be < 1")


def _clamp_open(value: float, lo: float, hi: float) -> float:
    width = hi - lo
    return min(max(value, lo + 1e-9 * width), hi - 1e-9 * width)


def pick_exponent_params(inf_mi: float, rate: float,
                         delta_hint: float | None = None) -> ExponentParams:
    """Midpoint picks in the nested intervals; a delta hint is clamped into
    its interval rather than trusted."""
    if not rate < inf_mi:
        raise RateTooHigh(f"rate {rate} is not below inf-I {inf_mi}")
    gap = inf_mi - rate
    delta = gap / 6.0 if delta_hint is None else _clamp_open(delta_hint, 0.0, gap / 3.0)
    epsilon = 0.5 * (2.0 * delta + (gap - delta))
    beta1 = 0.5 * (delta + (epsilon - delta))
    beta2 = 0.5 * (epsilon - delta - beta1)
    return ExponentParams(delta=delta, epsilon=epsilon, beta1=beta1, beta2=beta2,
                          inf_mi=inf_mi, rate=rate)


def _renyi_joint_vs_product(channel, input_dist, alpha: float) -> float:
    """D_alpha of the joint input-output law against the product of its
    marginals; converges to I(P;W) from below as alpha -> 1."""
    if isinstance(channel, LinearGaussianChannel):
        joint, product = channel.joint_with(input_dist)
        return renyi_gaussian(alpha, joint, product)
    if isinstance(channel, DiscreteChannel) and isinstance(input_dist, DiscreteDist):
        p_joint = (input_dist.probs[:, None] * channel.transition).reshape(-1)
        q = channel.marginal(input_dist).probs
        p_prod = (input_dist.probs[:, None] * q[None, :]).reshape(-1)
        return discrete_renyi(alpha, p_joint, p_prod)
    raise UnsupportedCombination("no closed-form joint law for this channel/input pair")


def discrete_renyi(alpha: float, p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if alpha > 1 and np.any((p > 0) & (q == 0)):
        return math.inf
    mask = p > 0
    terms = p[mask] ** alpha * q[mask] ** (1.0 - alpha)
    return max(float(math.log(terms.sum()) / (alpha - 1.0)), 0.0)


def _expected_renyi_conditional(channel, center, input_dist, alpha: float,
                                n_x: int, rng: RngStream) -> float:
    """E_P D_alpha( W_s(X,.) || W_j(X,.) ) over sampled (or atomic) x."""
    if isinstance(input_dist, DiscreteDist):
        xs, weights = input_dist.atoms, input_dist.probs
    else:
        xs = input_dist.sample_array((n_x,), rng)
        weights = np.full(len(xs), 1.0 / len(xs))
    if getattr(channel, "is_discrete", False):
        total = 0.0
        for w, x in zip(weights, xs):
            d = discrete_renyi(alpha, channel.transition[int(x)], center.transition[int(x)])
            if d == math.inf:
                return math.inf
            total += w * d
        return total
    if isinstance(channel, LinearGaussianChannel) and isinstance(center, LinearGaussianChannel):
        v1, v2 = channel.noise_var, center.noise_var
        v_star = alpha * v2 + (1.0 - alpha) * v1
        if v_star <= 0:
            return math.inf
        xs = np.asarray(xs, dtype=float)
        gap = (channel.slope - center.slope) * xs + (channel.cond_offset - center.cond_offset)
        log_term = math.log(v_star) - (1.0 - alpha) * math.log(v1) - alpha * math.log(v2)
        vals = 0.5 * alpha * gap**2 / v_star - log_term / (2.0 * (alpha - 1.0))
        return float(np.dot(weights, np.maximum(vals, 0.0)))
    total = 0.0
    for w, x in zip(weights, xs):
        d = renyi_gaussian(alpha, channel.conditional(x), center.conditional(x))
        if d == math.inf:
            return math.inf
        total += w * d
    return float(total)


@dataclass(frozen=True)
class ExponentBound:
    gamma: float
    term_renyi_penalty: float
    term_marginal_shift: float
    term_self_typicality: float
    term_union: float
    params: ExponentParams

    def breakdown(self) -> dict:
        return {
            "term1_renyi_penalty": self.term_renyi_penalty,
            "term2_marginal_shift": self.term_marginal_shift,
            "term3_self_typicality": self.term_self_typicality,
            "term4_union": self.term_union,
            "gamma": self.gamma,
        }


def exponent_bound(channel, center, input_dist, params: ExponentParams,
                   alpha1_grid: Sequence[float] = ALPHA1_GRID,
                   alpha3_grid: Sequence[float] = ALPHA3_GRID,
                   n_x: int = 2048, rng: RngStream | None = None,
                   mi_true: float | None = None) -> ExponentBound:
    """Best provable decay rate for one (true channel, covering center) pair.

    gamma is the minimum of four bracket terms, each maximized over its
    deterministic alpha grid:

      1. (a1-1) * (beta1 - E_P D_a1(W_s || W_j))         (approximation Renyi penalty)
      2. beta2                                            (marginal shift, a2 -> 1 limit)
      3. (1-a3) * (D_a3(joint || product) + eps - I_s - beta1 - beta2 - delta)
      4. infI - eps - R - delta                           (union bound over wrong words)

    Raises NonpositiveExponent when the best gamma is <= 0, which signals a
    parameter misconfiguration rather than a bug.
    """
    rng = rng or RngStream(0xA55, 0xE4)
    if mi_true is None:
        mi_true = float(channel.exact_mutual_information(input_dist))
    t1 = -math.inf
    best_a1 = None
    for a1 in alpha1_grid:
        d = _expected_renyi_conditional(channel, center, input_dist, a1, n_x,
                                        rng.substream("exp_renyi_x"))
        if d == math.inf:
            continue
        val = (a1 - 1.0) * (params.beta1 - d)
        if val > t1:
            t1, best_a1 = val, a1
    t2 = params.beta2
    t3 = -math.inf
    best_a3 = None
    for a3 in alpha3_grid:
        d = _renyi_joint_vs_product(channel, input_dist, a3)
        val = (1.0 - a3) * (d + params.epsilon - mi_true - params.beta1
                            - params.beta2 - params.delta)
        if val > t3:
            t3, best_a3 = val, a3
    t4 = params.inf_mi - params.epsilon - params.rate - params.delta
    gamma = min(t1, t2, t3, t4)
    out = ExponentBound(
        gamma=gamma,
        term_renyi_penalty=t1,
        term_marginal_shift=t2,
        term_self_typicality=t3,
        term_union=t4,
        params=replace(params, alpha1=best_a1, alpha2=1.0 - 1e-9, alpha3=best_a3,
                       gamma=gamma),
    )
    if gamma <= 0:
        raise NonpositiveExponent(
            f"no positive exponent for these parameters: {out.breakdown()}"
        )
    return out


def family_exponent_bound(members, net: ApproximationNet, input_dist,
                          params: ExponentParams, **kwargs) -> ExponentBound:
    """gamma valid for every family member: the min over members, each paired
    with its best covering center (smallest expected conditional KL)."""
    best = None
    for ch in members:
        center = min(
            net.centers,
            key=lambda c: expected_conditional_kl(ch, c.channel, input_dist),
        )
        bound = exponent_bound(ch, center.channel, input_dist, params, **kwargs)
        if best is None or bound.gamma < best.gamma:
            best = bound
    return best


# ---------------------------------------------------------------------------
# Joint-typicality decoding
# ---------------------------------------------------------------------------


def _marginal_colsum(channel, input_dist, ys: np.ndarray) -> np.ndarray:
    """sum_i log q(y_i) per output row under the channel's exact marginal."""
    marg = channel.marginal(input_dist)
    if isinstance(marg, GaussianDist):
        mq = float(marg.mean[0])
        vq = float(marg.cov[0, 0])
        ll = -0.5 * (LN_2PI + math.log(vq)) - (ys - mq) ** 2 / (2.0 * vq)
        return ll.sum(axis=1)
    return np.asarray(marg.log_density(ys)).sum(axis=1)


def typicality_mask(cb: Codebook, net: ApproximationNet, epsilon: float,
                    ys: np.ndarray, input_dist, mi_means=None) -> np.ndarray:
    """Boolean (M, B) mask: word m is jointly typical with output row t when
    its information density reaches n (I_j - epsilon) under some center j."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    mi_means = net.mi_means() if mi_means is None else np.asarray(mi_means, dtype=float)
    n = cb.n
    mask = np.zeros((cb.m, ys.shape[0]), dtype=bool)
    lin = all(isinstance(c.channel, LinearGaussianChannel) for c in net.centers)
    if lin:
        words = cb.words
        wy = words @ ys.T
        row_sum = words.sum(axis=1)
        ss_w = np.einsum("ij,ij->i", words, words)
        ss_y = np.einsum("ij,ij->i", ys, ys)
        sum_y = ys.sum(axis=1)
        for center, mi in zip(net.centers, mi_means):
            ch = center.channel
            a, c, v = ch.slope, ch.cond_offset, ch.noise_var
            ss_shift = ss_y - 2.0 * c * sum_y + n * c * c
            cross = wy - c * row_sum[:, None]
            loglik = (
                -0.5 * n * (LN_2PI + math.log(v))
                - (ss_shift[None, :] - 2.0 * a * cross + a * a * ss_w[:, None]) / (2.0 * v)
            )
            stat = loglik - _marginal_colsum(ch, input_dist, ys)[None, :]
            mask |= stat >= n * (mi - epsilon)
        return mask
    for center, mi in zip(net.centers, mi_means):
        loglik = center.channel.loglik_words(cb.words, ys)
        stat = loglik - _marginal_colsum(center.channel, input_dist, ys)[None, :]
        mask |= stat >= n * (mi - epsilon)
    return mask


def check_epsilon_margin(net: ApproximationNet, epsilon: float):
    """The decoder threshold uses estimated mutual informations; epsilon must
    dominate their uncertainty or the threshold is meaningless."""
    worst = net.mi_stderr_max()
    if epsilon <= 3.0 * worst:
        raise ValueError(
            f"epsilon {epsilon:.4g} must exceed 3x the worst center-MI stderr "
            f"({worst:.4g}); increase the MI budget or epsilon"
        )


def jt_decode(cb: Codebook, net: ApproximationNet, epsilon: float, y,
              input_dist, mi_means=None) -> int | None:
    """Decode one output sequence; returns the message index or None when no
    unique word is jointly typical (NoDecode, counted as an error)."""
    check_epsilon_margin(net, epsilon)
    ys = np.asarray(y, dtype=float).reshape(1, -1)
    mask = typicality_mask(cb, net, epsilon, ys, input_dist, mi_means)[:, 0]
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size == 1 else None


@dataclass(frozen=True)
class ErrorEstimate:
    error: float
    stderr: float
    e1_frac: float
    e2_frac: float
    trials: int


def estimate_error(cb: Codebook, net: ApproximationNet, epsilon: float,
                   true_channel, trials: int, rng: RngStream,
                   input_dist=None, mi_means=None) -> ErrorEstimate:
    """Monte Carlo decoding error with event attribution.

    E1: the sent word is atypical under every center; E2: some wrong word is
    typical under some center.  The decode is wrong exactly when E1 or E2
    occurs, because correctness requires a unique typical word.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if input_dist is None:
        input_dist = cb.spec.input_dist
    check_epsilon_margin(net, epsilon)
    batch = max(1, min(512, _MC_BLOCK // max(1, cb.m)))
    err = e1 = e2 = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        sub = rng.substream("err").substream(done)
        gen = sub.substream("m").generator()
        ms = gen.integers(0, cb.m, size=b)
        ys = true_channel.sample_given(cb.words[ms], sub.substream("y"))
        mask = typicality_mask(cb, net, epsilon, ys, input_dist, mi_means)
        counts = mask.sum(axis=0)
        sent = mask[ms, np.arange(b)]
        e1_t = ~sent
        e2_t = (counts - sent.astype(int)) > 0
        err_t = e1_t | e2_t
        err += int(err_t.sum())
        e1 += int(e1_t.sum())
        e2 += int(e2_t.sum())
        done += b
    p = err / trials
    stderr = math.sqrt(max(p * (1 - p), 1e-12) / trials)
    return ErrorEstimate(error=p, stderr=stderr, e1_frac=e1 / trials,
                         e2_frac=e2 / trials, trials=trials)


def net_mi_table(net: ApproximationNet) -> list[MIEstimate]:
    return [c.mi for c in net.centers]


# ---------------------------------------------------------------------------
# Codebook serialization: spec + seed only, words are regenerated on load
# ---------------------------------------------------------------------------


def _input_dist_to_json(dist) -> dict:
    if isinstance(dist, GaussianDist):
        if dist.dim != 1:
            raise UnsupportedCombination("only scalar Gaussian inputs serialize")
        return {"kind": "gaussian", "mean": float(dist.mean[0]),
                "var": float(dist.cov[0, 0])}
    if isinstance(dist, DiscreteDist):
        return {"kind": "discrete", "probs": [float(p) for p in dist.probs],
                "atoms": [float(a) for a in dist.atoms]}
    raise UnsupportedCombination(f"cannot serialize input distribution {type(dist)!r}")


def _input_dist_from_json(data: dict):
    if data["kind"] == "gaussian":
        return GaussianDist([data["mean"]], [[data["var"]]])
    if data["kind"] == "discrete":
        return DiscreteDist(data["probs"], atoms=data["atoms"])
    raise UnsupportedCombination(f"unknown input kind {data['kind']!r}")


def codebook_to_json(cb: Codebook) -> str:
    import json

    return json.dumps({
        "n": cb.spec.n,
        "rate": cb.spec.rate,
        "seed": list(cb.seed),
        "input": _input_dist_to_json(cb.spec.input_dist),
        "cost_constrained": cb.cost_constrained,
    }, indent=2, sort_keys=True)


def codebook_from_json(text: str, cost: CostConstraint | None = None) -> Codebook:
    """Regenerate a codebook from its (spec, seed) record; a cost-constrained
    codebook needs the same constraint passed back in."""
    import json

    data = json.loads(text)
    spec = CodebookSpec(_input_dist_from_json(data["input"]), data["n"], data["rate"])
    cb = draw_codebook(spec, RngStream(*data["seed"]))
    if data.get("cost_constrained"):
        if cost is None:
            raise NoFeasibleWord("codebook was cost-constrained; supply the constraint")
        cb, _ = apply_cost_constraint(cb, cost)
    return cb
