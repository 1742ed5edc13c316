"""End-to-end jammed over-the-air computation pipeline.

K transmitters hold messages a_1..a_K; the jammer transmits a uniformly
chosen cost-constrained codeword; the legitimate receiver decodes the
jammer's message over a compound net indexed by the unknown message tuple,
cancels the jamming signal, and post-processes; the eavesdropper
post-processes without cancellation.  The security checks verify the
one-sided tail and expected-loss bounds driven by the total variation
distance between the codebook-jammed and white-noise-jammed observations.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .approx import ApproximationNet, ChannelFamily, ParamGrid, build_net
from .channels import EffectiveMACConfig, effective_channel, validate_message_tuple
from .coding import Codebook, CostConstraint, typicality_mask
from .errors import InvalidLoss
from .gaussian import GaussianDist
from .info import MIEstimate, mutual_information_mc
from .resolvability import TVEstimate
from .rng import RngStream

DEFAULT_A_GRID_POINTS = 5


def sum_objective(a: np.ndarray) -> float:
    return float(np.sum(a))


@dataclass(frozen=True)
class OTAConfig:
    """Scenario description for the reference additive scheme.

    The pre-processors are deterministic repetition (each a_k is sent as an
    i.i.d.-trivially constant sequence), the objective is the plain sum, and
    the post-processor is the rescaled sample mean; cancellation subtracts
    g_J times the reconstructed codeword.
    """

    mac: EffectiveMACConfig
    alphabets: tuple[tuple[float, float], ...]
    jammer_input: GaussianDist
    rate: float
    n: int
    cost: CostConstraint | None = None
    a_grid_points: int = DEFAULT_A_GRID_POINTS
    objective_name: str = "sum"

    def __post_init__(self):
        if len(self.alphabets) != self.mac.k:
            raise ValueError("one alphabet interval per transmitter required")
        if self.n < 1 or self.rate < 0:
            raise ValueError("block length >= 1 and rate >= 0 required")
        object.__setattr__(
            self, "alphabets", tuple((float(lo), float(hi)) for lo, hi in self.alphabets)
        )

    def objective(self, a) -> float:
        return sum_objective(np.asarray(a, dtype=float))

    def objective_range(self) -> tuple[float, float]:
        lo = sum(lo for lo, _ in self.alphabets)
        hi = sum(hi for _, hi in self.alphabets)
        return lo, hi

    def message_grid(self) -> ParamGrid:
        axes = [np.linspace(lo, hi, self.a_grid_points) for lo, hi in self.alphabets]
        pts = tuple(tuple(float(v) for v in p) for p in itertools.product(*axes))
        return ParamGrid(boxes=self.alphabets, points=pts)

    def bob_channel(self, a):
        return effective_channel(self.mac, a, "bob")

    def eve_channel(self, a):
        return effective_channel(self.mac, a, "eve")

    def bob_family(self) -> ChannelFamily:
        return ChannelFamily(
            builder=lambda s: effective_channel(self.mac, s, "bob"),
            space=self.alphabets,
            label="bob_message_compound",
        )

    def bob_scale(self) -> float:
        total = sum(self.mac.bob_gains)
        return self.mac.k / total if total else math.nan

    def eve_scale(self) -> float:
        total = sum(self.mac.eve_gains)
        return self.mac.k / total if total else math.nan


@dataclass(frozen=True)
class RateWindow:
    """sup over message tuples of Eve's MI, inf of Bob's, and feasibility of
    the configured rate with a 3-sigma margin on both sides."""

    sup_eve: MIEstimate
    inf_bob: MIEstimate
    arg_sup_eve: tuple[float, ...]
    arg_inf_bob: tuple[float, ...]
    rate: float
    feasible: bool
    margin: float
    per_tuple: tuple[dict, ...] = field(default=(), repr=False)


def rate_window(config: OTAConfig, rng: RngStream, message_grid: ParamGrid | None = None,
                mc_budget: int = 20_000) -> RateWindow:
    """Monte Carlo rate window over the message grid (shared noise draws
    across tuples, so the sup/inf arguments are stable)."""
    grid = config.message_grid() if message_grid is None else message_grid
    for a in grid.points:
        validate_message_tuple(a, config.alphabets)
    sup_e = inf_b = None
    arg_sup = arg_inf = None
    per_tuple = []
    for a in grid.points:
        mi_b = mutual_information_mc(config.bob_channel(a), config.jammer_input,
                                     mc_budget, rng)
        mi_e = mutual_information_mc(config.eve_channel(a), config.jammer_input,
                                     mc_budget, rng)
        per_tuple.append({"a": a, "bob": mi_b, "eve": mi_e})
        if sup_e is None or mi_e.mean > sup_e.mean:
            sup_e, arg_sup = mi_e, a
        if inf_b is None or mi_b.mean < inf_b.mean:
            inf_b, arg_inf = mi_b, a
    lo = sup_e.mean + 3.0 * sup_e.stderr
    hi = inf_b.mean - 3.0 * inf_b.stderr
    feasible = lo < config.rate < hi
    margin = min(config.rate - lo, hi - config.rate)
    return RateWindow(sup_eve=sup_e, inf_bob=inf_b, arg_sup_eve=arg_sup,
                      arg_inf_bob=arg_inf, rate=config.rate, feasible=feasible,
                      margin=margin, per_tuple=tuple(per_tuple))


def message_net(config: OTAConfig, delta: float, rng: RngStream,
                mc_budget: int = 20_000) -> ApproximationNet:
    """Decoder net over the unknown message tuple (the compound index)."""
    return build_net(config.bob_family(), config.jammer_input, delta,
                     config.message_grid(), rng, mc_budget)


def _digest(arr: np.ndarray) -> str:
    return hashlib.blake2b(np.ascontiguousarray(arr).tobytes(), digest_size=8).hexdigest()


@dataclass(frozen=True)
class RoundResult:
    a: tuple[float, ...]
    jam_index: int
    decoded: int | None
    f_true: float
    f_bob_cancelled: float
    f_bob_genie: float
    f_bob_nocancel: float
    f_eve: float
    y_digest: str
    z_digest: str


@dataclass
class RoundsSummary:
    rounds: int
    decode_success: float
    mse_cancelled: float
    mse_genie: float
    mse_nocancel: float
    mse_eve: float
    feasible: bool | None


def run_rounds(config: OTAConfig, cb: Codebook, net: ApproximationNet, epsilon: float,
               n_rounds: int, rng: RngStream, mi_means=None,
               window: RateWindow | None = None, keep_rows: bool = True,
               batch: int = 256) -> tuple[list[RoundResult], RoundsSummary]:
    """Simulate full rounds: random message tuple and jam word, transmission,
    compound decoding, cancellation, post-processing on both sides.

    The genie variant always cancels with the true codeword.  On NoDecode
    the receiver cancels with word 1 (the decoder's declared fallback) and
    the round counts as a decode failure; the no-cancellation estimate is
    always produced.
    """
    grid = config.message_grid().points
    offsets_bob = np.array([float(np.dot(config.mac.bob_gains, a)) for a in grid])
    offsets_eve = np.array([float(np.dot(config.mac.eve_gains, a)) for a in grid])
    f_vals = np.array([config.objective(a) for a in grid])
    mu_b = float(config.mac.bob_noise.mean[0])
    sd_b = math.sqrt(float(config.mac.bob_noise.cov[0, 0]))
    mu_e = float(config.mac.eve_noise.mean[0])
    sd_e = math.sqrt(float(config.mac.eve_noise.cov[0, 0]))
    scale_b, scale_e = config.bob_scale(), config.eve_scale()
    mi_means = net.mi_means() if mi_means is None else mi_means

    rows: list[RoundResult] = []
    n_ok = 0
    se_c = se_g = se_n = se_e = 0.0
    done = 0
    while done < n_rounds:
        b = min(batch, n_rounds - done)
        sub = rng.substream("round").substream(done)
        gen = sub.substream("draw").generator()
        a_idx = gen.integers(0, len(grid), size=b)
        ms = gen.integers(0, cb.m, size=b)
        words = cb.words[ms]
        zb = sub.substream("bob_noise").generator().standard_normal((b, config.n))
        ze = sub.substream("eve_noise").generator().standard_normal((b, config.n))
        ys = offsets_bob[a_idx][:, None] + config.mac.g_j * words + mu_b + sd_b * zb
        zs = offsets_eve[a_idx][:, None] + config.mac.h_j * words + mu_e + sd_e * ze

        mask = typicality_mask(cb, net, epsilon, ys, config.jammer_input, mi_means)
        counts = mask.sum(axis=0)
        unique = counts == 1
        mhat = np.where(unique, mask.argmax(axis=0), -1)
        ok = mhat == ms
        n_ok += int(ok.sum())

        xhat = cb.words[np.where(mhat >= 0, mhat, 0)]
        f_true = f_vals[a_idx]
        f_cancel = (ys - config.mac.g_j * xhat).mean(axis=1) * scale_b - mu_b * scale_b
        f_genie = (ys - config.mac.g_j * words).mean(axis=1) * scale_b - mu_b * scale_b
        f_nocancel = ys.mean(axis=1) * scale_b - mu_b * scale_b
        f_eve = zs.mean(axis=1) * scale_e - mu_e * scale_e

        se_c += float(np.sum((f_cancel - f_true) ** 2))
        se_g += float(np.sum((f_genie - f_true) ** 2))
        se_n += float(np.sum((f_nocancel - f_true) ** 2))
        se_e += float(np.sum((f_eve - f_true) ** 2))

        if keep_rows:
            for t in range(b):
                rows.append(RoundResult(
                    a=grid[a_idx[t]],
                    jam_index=int(ms[t]),
                    decoded=(int(mhat[t]) if mhat[t] >= 0 else None),
                    f_true=float(f_true[t]),
                    f_bob_cancelled=float(f_cancel[t]),
                    f_bob_genie=float(f_genie[t]),
                    f_bob_nocancel=float(f_nocancel[t]),
                    f_eve=float(f_eve[t]),
                    y_digest=_digest(ys[t]),
                    z_digest=_digest(zs[t]),
                ))
        done += b

    summary = RoundsSummary(
        rounds=n_rounds,
        decode_success=n_ok / n_rounds,
        mse_cancelled=se_c / n_rounds,
        mse_genie=se_g / n_rounds,
        mse_nocancel=se_n / n_rounds,
        mse_eve=se_e / n_rounds,
        feasible=None if window is None else window.feasible,
    )
    return rows, summary


# ---------------------------------------------------------------------------
# Security checks (one-sided bounds driven by the TV distance)
# ---------------------------------------------------------------------------


def _half_tv(tv: TVEstimate) -> tuple[float, float]:
    # single conversion site: the signed-measure norm in [0,2] becomes the
    # probability-gain bound delta in [0,1]
    return tv.value / 2.0, tv.stderr / 2.0


def _eve_outputs(config: OTAConfig, cb: Codebook, a, n_rounds: int, rng: RngStream,
                 jam: str) -> np.ndarray:
    a = validate_message_tuple(a, config.alphabets)
    offset = float(np.dot(config.mac.eve_gains, a))
    mu_e = float(config.mac.eve_noise.mean[0])
    sd_e = math.sqrt(float(config.mac.eve_noise.cov[0, 0]))
    sub = rng.substream(f"eve_{jam}")
    if jam == "codebook":
        ms = sub.substream("m").generator().integers(0, cb.m, size=n_rounds)
        x = cb.words[ms]
    elif jam == "iid":
        x = config.jammer_input.sample_array((n_rounds, config.n), sub.substream("x"))
    else:
        raise ValueError("jam must be 'codebook' or 'iid'")
    noise = sub.substream("noise").generator().standard_normal((n_rounds, config.n))
    return offset + config.mac.h_j * x + mu_e + sd_e * noise


def default_eve_estimator(config: OTAConfig):
    """Eve's reference estimator: the same affine post-processor as the
    legitimate receiver, without cancellation."""
    scale = config.eve_scale()
    mu_e = float(config.mac.eve_noise.mean[0])

    def g(zs: np.ndarray) -> np.ndarray:
        return zs.mean(axis=1) * scale - mu_e * scale

    return g


@dataclass(frozen=True)
class SecurityCheckRow:
    label: str
    mu_stat: float
    nu_stat: float
    mu_stderr: float
    nu_stderr: float
    bound: float
    gain_bound: float
    satisfied: bool


@dataclass(frozen=True)
class SecurityReport:
    tv: TVEstimate
    delta_half: float
    rows: tuple[SecurityCheckRow, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.rows)


def security_tail_check(config: OTAConfig, cb: Codebook, a, eps_grid, n_rounds: int,
                        rng: RngStream, tv: TVEstimate, estimator=None) -> SecurityReport:
    """Tail-probability bound: for every threshold eps, the codebook-jammed
    miss probability is at least the white-noise one minus delta (half the
    signed-measure TV), within 3 combined standard errors.  One-sided only:
    no lower bound on the attacker's advantage is asserted."""
    g = default_eve_estimator(config) if estimator is None else estimator
    f0 = config.objective(a)
    z_mu = _eve_outputs(config, cb, a, n_rounds, rng, "codebook")
    z_nu = _eve_outputs(config, cb, a, n_rounds, rng, "iid")
    err_mu = np.abs(g(z_mu) - f0)
    err_nu = np.abs(g(z_nu) - f0)
    d_half, d_half_se = _half_tv(tv)
    rows = []
    for eps in eps_grid:
        p_mu = float(np.mean(err_mu > eps))
        p_nu = float(np.mean(err_nu > eps))
        se_mu = math.sqrt(max(p_mu * (1 - p_mu), 1e-12) / n_rounds)
        se_nu = math.sqrt(max(p_nu * (1 - p_nu), 1e-12) / n_rounds)
        slack = 3.0 * math.sqrt(se_mu**2 + se_nu**2 + d_half_se**2)
        bound = p_nu - d_half
        rows.append(SecurityCheckRow(
            label=f"tail_eps={eps:g}",
            mu_stat=p_mu, nu_stat=p_nu, mu_stderr=se_mu, nu_stderr=se_nu,
            bound=bound, gain_bound=d_half,
            satisfied=p_mu >= bound - slack,
        ))
    return SecurityReport(tv=tv, delta_half=d_half, rows=tuple(rows))


def clamped_square_loss(lo: float, hi: float):
    """Squared loss with the estimate clamped into [lo, hi]; bounded by
    (hi - lo)^2 whenever the true value also lies in the interval."""
    width = hi - lo

    def loss(est: np.ndarray, true_val: float) -> np.ndarray:
        clamped = np.clip(est, lo, hi)
        return (clamped - true_val) ** 2

    return loss, width**2


def security_loss_check(config: OTAConfig, cb: Codebook, a, loss, l_max: float,
                        n_rounds: int, rng: RngStream, tv: TVEstimate,
                        estimator=None, label: str = "loss") -> SecurityReport:
    """Expected-loss bound E_mu L >= E_nu L - L_max * delta, with the
    squared-loss gain bound (interval width)^2 * delta reported exactly."""
    g = default_eve_estimator(config) if estimator is None else estimator
    f0 = config.objective(a)
    z_mu = _eve_outputs(config, cb, a, n_rounds, rng, "codebook")
    z_nu = _eve_outputs(config, cb, a, n_rounds, rng, "iid")
    l_mu = np.asarray(loss(g(z_mu), f0), dtype=float)
    l_nu = np.asarray(loss(g(z_nu), f0), dtype=float)
    tol = 1e-12 * max(1.0, abs(l_max))
    for vals, side in ((l_mu, "codebook"), (l_nu, "iid")):
        if np.any(vals > l_max + tol):
            raise InvalidLoss(
                f"loss exceeded L_max={l_max} on the {side} ensemble "
                f"(max {float(vals.max()):.6g})"
            )
    d_half, d_half_se = _half_tv(tv)
    e_mu, e_nu = float(l_mu.mean()), float(l_nu.mean())
    se_mu = float(l_mu.std(ddof=1) / math.sqrt(n_rounds))
    se_nu = float(l_nu.std(ddof=1) / math.sqrt(n_rounds))
    gain_bound = l_max * d_half
    slack = 3.0 * math.sqrt(se_mu**2 + se_nu**2 + (l_max * d_half_se) ** 2)
    row = SecurityCheckRow(
        label=label,
        mu_stat=e_mu, nu_stat=e_nu, mu_stderr=se_mu, nu_stderr=se_nu,
        bound=e_nu - gain_bound, gain_bound=gain_bound,
        satisfied=e_mu >= e_nu - gain_bound - slack,
    )
    return SecurityReport(tv=tv, delta_half=d_half, rows=(row,))
