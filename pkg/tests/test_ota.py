import math

import numpy as np
import pytest

from airjam.channels import DiscreteChannel, DiscreteDist, EffectiveMACConfig
from airjam.coding import (
    CodebookSpec,
    CostConstraint,
    apply_cost_constraint,
    draw_codebook,
    estimate_error,
    pick_exponent_params,
)
from airjam.errors import InvalidLoss
from airjam.gaussian import GaussianDist, standard_normal
from airjam.ota import (
    OTAConfig,
    clamped_square_loss,
    message_net,
    rate_window,
    run_rounds,
    security_loss_check,
    security_tail_check,
)
from airjam.resolvability import TVEstimate, exact_tv_discrete, tv_importance_mc
from airjam.rng import RngStream


def make_config(g_j=1.0, h_j=0.25, k=2, rate=0.045, n=64, noise_var=1.0,
                bob_gains=None, eve_gains=None, cost=None, a_grid=3):
    mac = EffectiveMACConfig(
        k=k,
        bob_gains=bob_gains or tuple([1.0] * k),
        eve_gains=eve_gains or tuple([1.0] * k),
        g_j=g_j,
        h_j=h_j,
        bob_noise=GaussianDist([0.0], [[noise_var]]),
        eve_noise=GaussianDist([0.0], [[noise_var]]),
    )
    return OTAConfig(
        mac=mac,
        alphabets=tuple([(0.0, 1.0)] * k),
        jammer_input=standard_normal(1),
        rate=rate,
        n=n,
        cost=cost,
        a_grid_points=a_grid,
    )


# ---------------------------------------------------------------------------
# Rate window
# ---------------------------------------------------------------------------


def test_rate_window_matches_awgn_oracle():
    config = make_config(g_j=1.0, h_j=0.25, rate=0.045)
    win = rate_window(config, RngStream(50), mc_budget=60_000)
    assert win.inf_bob.mean == pytest.approx(0.5 * math.log(2.0), abs=3 * win.inf_bob.stderr)
    assert win.sup_eve.mean == pytest.approx(0.5 * math.log(1.0625), abs=3 * win.sup_eve.stderr)
    assert win.feasible
    assert win.margin > 0


def test_rate_window_symmetric_config_infeasible():
    config = make_config(g_j=1.0, h_j=1.0, rate=0.3)
    win = rate_window(config, RngStream(51), mc_budget=20_000)
    assert not win.feasible


def test_rate_window_deaf_eavesdropper():
    config = make_config(g_j=1.0, h_j=0.0, rate=0.1)
    win = rate_window(config, RngStream(52), mc_budget=20_000)
    assert abs(win.sup_eve.mean) <= 3 * max(win.sup_eve.stderr, 1e-12)
    assert win.feasible


# ---------------------------------------------------------------------------
# Round simulation
# ---------------------------------------------------------------------------


def small_system(rate=0.08, n=48, g_j=2.0, a_grid=3):
    config = make_config(g_j=g_j, h_j=0.25, rate=rate, n=n, a_grid=a_grid)
    net = message_net(config, delta=0.05, rng=RngStream(53))
    cb = draw_codebook(CodebookSpec(config.jammer_input, n, rate), RngStream(54))
    inf_bob = min(c.mi.mean for c in net.centers)
    eps = pick_exponent_params(inf_bob, rate).epsilon
    return config, net, cb, eps


def test_run_rounds_no_jamming_at_bob_cancel_equals_nocancel():
    config = make_config(g_j=0.0, h_j=0.25, rate=0.05, n=32)
    net = message_net(config, delta=0.05, rng=RngStream(55))
    cb = draw_codebook(CodebookSpec(config.jammer_input, 32, 0.05), RngStream(56))
    rows, _ = run_rounds(config, cb, net, epsilon=0.02, n_rounds=64, rng=RngStream(57))
    for r in rows:
        assert r.f_bob_cancelled == r.f_bob_nocancel


def test_run_rounds_genie_exact_on_noiseless_channel():
    config = make_config(g_j=1.0, h_j=0.25, rate=0.05, n=16, noise_var=1e-20)
    net = message_net(config, delta=0.05, rng=RngStream(58))
    cb = draw_codebook(CodebookSpec(config.jammer_input, 16, 0.05), RngStream(59))
    rows, _ = run_rounds(config, cb, net, epsilon=0.02, n_rounds=32, rng=RngStream(60))
    for r in rows:
        assert r.f_bob_genie == pytest.approx(r.f_true, abs=1e-9)


def test_run_rounds_summary_and_cancellation_gain():
    config, net, cb, eps = small_system()
    rows, summary = run_rounds(config, cb, net, eps, n_rounds=2000, rng=RngStream(61))
    assert summary.decode_success >= 0.95
    assert abs(summary.mse_cancelled - summary.mse_genie) <= 0.1 * summary.mse_genie
    # g_j^2 * var(P) / noise_var = 4: no-cancellation penalty factor 5
    assert summary.mse_nocancel >= 3.0 * summary.mse_cancelled
    assert len(rows) == 2000
    assert all((r.decoded == r.jam_index) == (r.decoded is not None and r.decoded == r.jam_index) for r in rows)


def test_run_rounds_decode_rate_consistent_with_estimate_error():
    config, net, cb, eps = small_system(rate=0.15, n=24, g_j=1.0)
    _, summary = run_rounds(config, cb, net, eps, n_rounds=3000, rng=RngStream(62),
                            keep_rows=False)
    a0 = config.message_grid().points[0]
    res = estimate_error(cb, net, eps, config.bob_channel(a0), trials=3000,
                         rng=RngStream(63), input_dist=config.jammer_input)
    se = math.sqrt(res.error * (1 - res.error) / 3000 + 1e-9)
    assert (1.0 - summary.decode_success) == pytest.approx(res.error, abs=4 * se + 0.01)


def test_affine_equivariance_of_genie_estimate():
    # shifting every message by t shifts the genie estimate by K*t when the
    # same noise stream is replayed
    base = make_config(g_j=1.0, h_j=0.25, rate=0.05, n=16, a_grid=1)
    shifted = OTAConfig(
        mac=base.mac,
        alphabets=tuple((lo + 0.5, hi + 0.5) for lo, hi in base.alphabets),
        jammer_input=base.jammer_input,
        rate=base.rate,
        n=base.n,
        a_grid_points=1,
    )
    cb = draw_codebook(CodebookSpec(base.jammer_input, 16, 0.05), RngStream(64))
    net_b = message_net(base, 0.05, RngStream(65))
    net_s = message_net(shifted, 0.05, RngStream(65))
    rows_b, _ = run_rounds(base, cb, net_b, 0.02, 50, RngStream(66))
    rows_s, _ = run_rounds(shifted, cb, net_s, 0.02, 50, RngStream(66))
    for rb, rs in zip(rows_b, rows_s):
        assert rs.f_bob_genie - rb.f_bob_genie == pytest.approx(2 * 0.5, abs=1e-9)


# ---------------------------------------------------------------------------
# Security checks
# ---------------------------------------------------------------------------


def test_security_tail_identical_ensembles_zero_gain():
    config = make_config(g_j=1.0, h_j=0.25, rate=0.05, n=16)
    cb = draw_codebook(CodebookSpec(config.jammer_input, 16, 0.05), RngStream(67))
    tv = TVEstimate(value=0.0, stderr=0.0, method="exact_enum", n=16, m_words=cb.m)

    # estimator ignores the jammer path entirely: mu and nu tails coincide
    def blind(zs):
        return np.full(zs.shape[0], config.objective((0.5, 0.5)))

    report = security_tail_check(config, cb, (0.5, 0.5), (0.1, 0.5), 4000,
                                 RngStream(68), tv, estimator=blind)
    for row in report.rows:
        assert row.mu_stat == row.nu_stat
        assert row.satisfied


def test_security_tail_gaussian_system_holds():
    config = make_config(g_j=1.0, h_j=0.25, rate=0.2, n=16)
    cb = draw_codebook(CodebookSpec(config.jammer_input, 16, 0.2), RngStream(69))
    tv = tv_importance_mc(cb, config.eve_channel((0.5, 0.5)), config.jammer_input,
                          20_000, RngStream(70))
    report = security_tail_check(config, cb, (0.5, 0.5), (0.1, 0.25, 0.5, 1.0),
                                 50_000, RngStream(71), tv)
    assert report.all_satisfied
    assert report.delta_half == tv.value / 2


def test_security_tail_exact_discrete_zero_slack():
    # exact enumeration of both ensembles through a binary toy channel: the
    # inequality must hold with zero slack for every threshold
    p = DiscreteDist([0.5, 0.5])
    flip = DiscreteChannel([[0.9, 0.1], [0.1, 0.9]])
    cb = draw_codebook(CodebookSpec(p, 6, math.log(3) / 6), RngStream(72))
    tv = exact_tv_discrete(cb, flip, p)
    seqs_k = 2**6
    seqs = np.array([[(z >> i) & 1 for i in range(6)] for z in range(seqs_k)])
    log_t = np.log(flip.transition)
    words = cb.words.astype(int)
    log_mu = np.full(seqs_k, -np.inf)
    for m in range(cb.m):
        log_mu = np.logaddexp(log_mu, log_t[words[m]][np.arange(6), seqs].sum(axis=1))
    log_mu -= math.log(cb.m)
    q = flip.marginal(p).probs
    log_nu = np.log(q)[seqs].sum(axis=1)
    g_vals = seqs.mean(axis=1)  # estimator: fraction of ones
    f0 = 0.4
    d_half = tv.value / 2
    for eps in (0.05, 0.1, 0.2, 0.4):
        miss = np.abs(g_vals - f0) > eps
        mu_tail = float(np.exp(log_mu)[miss].sum())
        nu_tail = float(np.exp(log_nu)[miss].sum())
        assert mu_tail >= nu_tail - d_half - 1e-12


def test_security_loss_check_square_loss():
    config = make_config(g_j=1.0, h_j=0.25, rate=0.2, n=16)
    cb = draw_codebook(CodebookSpec(config.jammer_input, 16, 0.2), RngStream(73))
    tv = tv_importance_mc(cb, config.eve_channel((0.5, 0.5)), config.jammer_input,
                          20_000, RngStream(74))
    lo, hi = config.objective_range()
    loss, l_max = clamped_square_loss(lo, hi)
    assert l_max == (hi - lo) ** 2
    report = security_loss_check(config, cb, (0.5, 0.5), loss, l_max, 50_000,
                                 RngStream(75), tv, label="sq_clamped")
    row = report.rows[0]
    assert row.satisfied
    assert row.gain_bound == pytest.approx(l_max * tv.value / 2)


def test_security_loss_rejects_unbounded_loss():
    config = make_config(rate=0.05, n=8)
    cb = draw_codebook(CodebookSpec(config.jammer_input, 8, 0.05), RngStream(76))
    tv = TVEstimate(0.1, 0.0, "exact_enum", 8, cb.m)

    def raw_loss(est, true_val):
        return (est - true_val) ** 2  # unclamped: exceeds l_max eventually

    with pytest.raises(InvalidLoss):
        security_loss_check(config, cb, (0.5, 0.5), raw_loss, 1e-6, 2000,
                            RngStream(77), tv)


def test_loss_bound_degenerates_when_lmax_zero():
    config = make_config(rate=0.05, n=8)
    cb = draw_codebook(CodebookSpec(config.jammer_input, 8, 0.05), RngStream(78))
    tv = TVEstimate(0.5, 0.0, "exact_enum", 8, cb.m)

    def zero_loss(est, true_val):
        return np.zeros_like(est)

    report = security_loss_check(config, cb, (0.5, 0.5), zero_loss, 0.0, 1000,
                                 RngStream(79), tv)
    row = report.rows[0]
    assert row.mu_stat == 0.0 and row.nu_stat == 0.0 and row.gain_bound == 0.0
    assert row.satisfied
