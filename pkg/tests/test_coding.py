import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from airjam.approx import ApproximationNet, ChannelFamily, NetCenter, ParamGrid, build_net
from airjam.channels import DiscreteChannel, DiscreteDist, LinearGaussianChannel
from airjam.coding import (
    Codebook,
    CodebookSpec,
    CostConstraint,
    apply_cost_constraint,
    cost_compatibility,
    draw_codebook,
    estimate_error,
    exponent_bound,
    jt_decode,
    pick_exponent_params,
    typicality_mask,
)
from airjam.errors import NoFeasibleWord, NonpositiveExponent, RateTooHigh, SizeOverflow
from airjam.gaussian import GaussianDist, standard_normal
from airjam.info import MIEstimate
from airjam.rng import RngStream

P = standard_normal(1)


# ---------------------------------------------------------------------------
# Codebook ensemble
# ---------------------------------------------------------------------------


def test_codebook_sizes_follow_ceiling_rule():
    assert CodebookSpec(P, 1, 0.0).m_words == 1
    assert CodebookSpec(P, 4, math.log(2.0)).m_words == 16


def test_draw_codebook_deterministic_and_regenerable():
    spec = CodebookSpec(P, 8, 0.25)
    cb = draw_codebook(spec, RngStream(11, 3))
    again = draw_codebook(spec, RngStream(*cb.seed))
    assert np.array_equal(cb.words, again.words)
    assert cb.words.shape == (spec.m_words, 8)


def test_draw_codebook_caps():
    with pytest.raises(SizeOverflow):
        draw_codebook(CodebookSpec(P, 1, math.log(70_000)), RngStream(1))
    with pytest.raises(SizeOverflow):
        draw_codebook(CodebookSpec(P, 512, math.log(10_000) / 512 * 2), RngStream(1))
    with pytest.raises(SizeOverflow):
        CodebookSpec(P, 512, 2.0)  # exp(1024) not even representable


def test_codebook_symbol_distribution_gof():
    p = DiscreteDist([0.3, 0.7])
    spec = CodebookSpec(p, 64, math.log(64) / 64)
    cb = draw_codebook(spec, RngStream(12))
    counts = np.bincount(cb.words.astype(int).ravel(), minlength=2)
    res = stats.chisquare(counts, f_exp=np.array([0.3, 0.7]) * counts.sum())
    assert res.pvalue > 0.01


# ---------------------------------------------------------------------------
# Cost constraints
# ---------------------------------------------------------------------------


def square_cc(budget=1.5, n=8):
    return CostConstraint(cost=np.square, budget=budget, replacement=np.zeros(n), name="square")


def test_cost_constraint_all_feasible_is_identity():
    cb = draw_codebook(CodebookSpec(P, 8, 0.2), RngStream(13))
    cc = CostConstraint(cost=np.square, budget=100.0, replacement=np.zeros(8))
    out, replaced = apply_cost_constraint(cb, cc)
    assert replaced == 0
    assert np.array_equal(out.words, cb.words)
    assert out.cost_constrained


def test_cost_constraint_zero_budget_replaces_everything():
    cb = draw_codebook(CodebookSpec(P, 8, 0.2), RngStream(14))
    cc = CostConstraint(cost=np.square, budget=0.0, replacement=np.zeros(8))
    out, replaced = apply_cost_constraint(cb, cc)
    nonzero = int(np.sum(np.any(cb.words != 0, axis=1)))
    assert replaced == nonzero
    assert np.all(np.sum(out.words**2, axis=1) <= 0.0)


def test_cost_constraint_exactness_after_replacement():
    cb = draw_codebook(CodebookSpec(P, 16, 0.3), RngStream(15))
    cc = square_cc(budget=1.1, n=16)
    out, _ = apply_cost_constraint(cb, cc)
    assert np.all(np.sum(out.words**2, axis=1) <= 16 * 1.1)


def test_cost_constraint_missing_replacement():
    cb = draw_codebook(CodebookSpec(P, 8, 0.3), RngStream(16))
    cc = CostConstraint(cost=np.square, budget=0.1, replacement=None)
    with pytest.raises(NoFeasibleWord):
        apply_cost_constraint(cb, cc)


def test_cost_constraint_replacement_must_be_feasible():
    with pytest.raises(NoFeasibleWord):
        CostConstraint(cost=np.square, budget=0.5, replacement=np.ones(4) * 2.0)


def test_replaced_fraction_decreases_with_n():
    # large-deviations trend; the full 50-codebook sign test lives in the
    # acceptance suite
    fracs = []
    for n in (8, 16, 32, 64):
        spec = CodebookSpec(P, n, math.log(256) / n)
        per = []
        for rep in range(10):
            cb = draw_codebook(spec, RngStream(17, rep))
            _, replaced = apply_cost_constraint(cb, square_cc(budget=1.5, n=n))
            per.append(replaced / cb.m)
        fracs.append(np.mean(per))
    assert all(b < a for a, b in zip(fracs, fracs[1:]))


def test_cost_compatibility_flag():
    cc = square_cc()
    report = cost_compatibility(cc, P, RngStream(18))
    assert report.compatible and report.mean_cost == pytest.approx(1.0, abs=0.05)
    tight = CostConstraint(cost=np.square, budget=0.9, replacement=np.zeros(8))
    assert not cost_compatibility(tight, P, RngStream(18)).compatible


# ---------------------------------------------------------------------------
# Exponent parameters and bound
# ---------------------------------------------------------------------------


def test_pick_exponent_params_midpoints_match_worked_example():
    params = pick_exponent_params(1.0, 0.4)
    assert params.delta == pytest.approx(0.1)
    assert params.epsilon == pytest.approx(0.35)
    assert params.beta1 == pytest.approx(0.175)
    assert params.beta2 == pytest.approx(0.0375)


def test_pick_exponent_params_rate_too_high():
    with pytest.raises(RateTooHigh):
        pick_exponent_params(0.5, 0.5)


def test_delta_hint_is_clamped():
    params = pick_exponent_params(1.0, 0.4, delta_hint=5.0)
    assert 0.0 < params.delta < 0.2
    params = pick_exponent_params(1.0, 0.4, delta_hint=0.05)
    assert params.delta == pytest.approx(0.05)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=0.01, max_value=5.0),
    st.floats(min_value=1e-5, max_value=0.999),
)
def test_pick_exponent_params_intervals_property(inf_mi, ratio):
    params = pick_exponent_params(inf_mi, ratio * inf_mi)
    gap = params.inf_mi - params.rate
    assert 0 < params.delta < gap / 3
    assert 2 * params.delta < params.epsilon < gap - params.delta
    assert params.delta < params.beta1 < params.epsilon - params.delta
    assert 0 < params.beta2 < params.epsilon - params.delta - params.beta1
    assert params.epsilon - params.delta - params.beta1 - params.beta2 > 0


def awgn(var):
    return LinearGaussianChannel(slope=1.0, offset=0.0, noise=GaussianDist([0.0], [[var]]))


def test_exponent_bound_truth_in_net():
    ch = awgn(1.0)
    inf_mi = ch.exact_mutual_information(P)
    params = pick_exponent_params(inf_mi, 0.4 * inf_mi)
    bound = exponent_bound(ch, ch, P, params)
    # zero divergence reduces the first term to (alpha1-1)*beta1, maximized
    # at the top of the alpha grid
    assert bound.term_renyi_penalty == pytest.approx(1.0 * params.beta1)
    assert bound.term_union == pytest.approx(
        params.inf_mi - params.epsilon - params.rate - params.delta
    )
    assert bound.gamma > 0
    assert bound.params.gamma == bound.gamma


def test_exponent_bound_fourth_term_worked_example():
    # infI=1, R=0.4 midpoint picks: 1.0 - 0.35 - 0.4 - 0.1 = 0.15
    params = pick_exponent_params(1.0, 0.4)
    ch = LinearGaussianChannel(slope=1.0, offset=0.0, noise=GaussianDist([0.0], [[1.0 / (math.e**2 - 1)]]))
    bound = exponent_bound(ch, ch, P, params)  # this channel has I = 1 nat
    assert bound.term_union == pytest.approx(0.15)


def test_exponent_bound_nonpositive_raises():
    ch = awgn(1.0)
    inf_mi = ch.exact_mutual_information(P)
    params = pick_exponent_params(inf_mi, 0.4 * inf_mi)
    far = awgn(8.0)  # badly mismatched center: Renyi penalty exceeds beta1
    with pytest.raises(NonpositiveExponent):
        exponent_bound(ch, far, P, params)


# ---------------------------------------------------------------------------
# Joint-typicality decoding
# ---------------------------------------------------------------------------


def identity_net(k=2):
    ch = DiscreteChannel(np.eye(k))
    p = DiscreteDist(np.full(k, 1.0 / k))
    mi = MIEstimate(ch.exact_mutual_information(p), 0.0, 1)
    center = NetCenter(s=(0.0,), channel=ch, mi=mi)
    grid = ParamGrid.explicit([(0.0,)])
    return ApproximationNet(delta=0.01, centers=(center,), grid=grid), p


def manual_codebook(words, input_dist, rate=0.1):
    words = np.asarray(words, dtype=float)
    spec = CodebookSpec(input_dist, words.shape[1], rate)
    return Codebook(words=words, spec=spec, seed=(0, 0))


def test_jt_decode_noiseless_identity_always_correct():
    net, p = identity_net()
    cb = manual_codebook([[0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 1, 0]], p)
    for m in range(3):
        y = cb.words[m]
        assert jt_decode(cb, net, epsilon=0.1, y=y, input_dist=p) == m


def test_jt_decode_duplicate_words_no_decode():
    net, p = identity_net()
    cb = manual_codebook([[0, 1, 0, 1], [0, 1, 0, 1]], p)
    assert jt_decode(cb, net, epsilon=0.1, y=cb.words[0], input_dist=p) is None


def test_jt_decode_permutation_equivariance():
    net, p = identity_net()
    words = np.array([[0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 1, 0]])
    cb = manual_codebook(words, p)
    perm = [2, 0, 1]
    cb_perm = manual_codebook(words[perm], p)
    y = words[1]
    m = jt_decode(cb, net, 0.1, y, p)
    m_perm = jt_decode(cb_perm, net, 0.1, y, p)
    assert perm[m_perm] == m


def test_jt_decode_epsilon_must_dominate_mi_stderr():
    net, p = identity_net()
    noisy_center = NetCenter(net.centers[0].s, net.centers[0].channel, MIEstimate(0.6, 0.2, 10))
    noisy_net = ApproximationNet(net.delta, (noisy_center,), net.grid)
    cb = manual_codebook([[0, 1, 0, 1]], p)
    with pytest.raises(ValueError):
        jt_decode(cb, noisy_net, epsilon=0.1, y=cb.words[0], input_dist=p)


def gaussian_net(variances, input_dist):
    fam = ChannelFamily(
        builder=lambda s: awgn(s[0]),
        space=((min(variances), max(variances)),),
    )
    grid = ParamGrid.explicit([(v,) for v in variances], boxes=fam.space)
    return build_net(fam, input_dist, delta=0.05, grid=grid)


def test_e2_count_nondecreasing_in_epsilon():
    net = gaussian_net([1.0, 2.0], P)
    cb = draw_codebook(CodebookSpec(P, 32, 0.08), RngStream(19))
    ys = awgn(2.0).sample_given(cb.words[np.zeros(64, dtype=int)], RngStream(20))
    mi = net.mi_means()
    counts_prev = None
    for eps in (0.02, 0.05, 0.1, 0.2):
        mask = typicality_mask(cb, net, eps, ys, P, mi)
        e2 = int((mask[1:, :].sum(axis=0) > 0).sum())  # word 0 was sent
        if counts_prev is not None:
            assert e2 >= counts_prev
        counts_prev = e2


def test_estimate_error_noiseless_is_zero():
    net, p = identity_net()
    cb = manual_codebook([[0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 1, 0]], p)
    res = estimate_error(cb, net, 0.1, net.centers[0].channel, trials=200, rng=RngStream(21))
    assert res.error == 0.0
    assert res.e1_frac == 0.0 and res.e2_frac == 0.0


def test_estimate_error_high_rate_converse_trend():
    # rate far above capacity: error should be near 1 already at modest n
    p = GaussianDist([0.0], [[0.1]])
    ch = awgn(1.0)
    inf_mi = ch.exact_mutual_information(p)
    fam_net = gaussian_net([1.0], p)
    errs = []
    for n in (32, 64):
        cb = draw_codebook(CodebookSpec(p, n, 1.8 * inf_mi), RngStream(22, n))
        res = estimate_error(cb, fam_net, 0.01, ch, trials=200, rng=RngStream(23, n))
        errs.append(res.error)
    assert errs[-1] >= 0.5


def test_estimate_error_matches_single_decode():
    net = gaussian_net([1.0], P)
    cb = draw_codebook(CodebookSpec(P, 24, 0.1), RngStream(24))
    ch = awgn(1.0)
    sub = RngStream(25).substream("err").substream(0)
    ms = sub.substream("m").generator().integers(0, cb.m, size=64)
    ys = ch.sample_given(cb.words[ms], sub.substream("y"))
    manual_err = 0
    for t in range(64):
        got = jt_decode(cb, net, 0.05, ys[t], P)
        manual_err += int(got != ms[t])
    res = estimate_error(cb, net, 0.05, ch, trials=64, rng=RngStream(25))
    assert res.error == pytest.approx(manual_err / 64)


def test_codebook_json_roundtrip():
    from airjam.coding import codebook_from_json, codebook_to_json

    spec = CodebookSpec(P, 12, 0.3)
    cb = draw_codebook(spec, RngStream(91, 7))
    text = codebook_to_json(cb)
    again = codebook_from_json(text)
    assert np.array_equal(cb.words, again.words)

    cc = CostConstraint(np.square, 1.2, replacement=np.zeros(12), name="square")
    constrained, _ = apply_cost_constraint(cb, cc)
    text = codebook_to_json(constrained)
    again = codebook_from_json(text, cost=cc)
    assert np.array_equal(constrained.words, again.words)


def test_codebook_markov_dispersion_across_replicates():
    # tail restatement of the ensemble bound: across 50 codebooks the
    # fraction with error >= 10x the ensemble mean stays below 0.1 plus
    # three binomial standard errors
    p = GaussianDist([0.0], [[8.0]])
    net = gaussian_net([1.0, 2.0], p)
    inf_mi = min(c.mi.mean for c in net.centers)
    rate = 0.5 * inf_mi
    eps = pick_exponent_params(inf_mi, rate).epsilon
    ch = awgn(2.0)
    errs = []
    for rep in range(50):
        cb = draw_codebook(CodebookSpec(p, 12, rate), RngStream(92, rep))
        res = estimate_error(cb, net, eps, ch, trials=200, rng=RngStream(93, rep),
                             input_dist=p)
        errs.append(res.error)
    mean_err = np.mean(errs)
    frac = np.mean(np.asarray(errs) >= 10 * mean_err)
    assert frac <= 0.1 + 3 * math.sqrt(0.1 * 0.9 / 50)
