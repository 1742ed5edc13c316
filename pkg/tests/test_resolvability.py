import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import logsumexp

from airjam.channels import DiscreteChannel, DiscreteDist, LinearGaussianChannel
from airjam.coding import Codebook, CodebookSpec, draw_codebook
from airjam.errors import SizeOverflow
from airjam.gaussian import GaussianDist, standard_normal
from airjam.resolvability import (
    TVEstimate,
    exact_tv_discrete,
    mixture_log_density,
    resolvability_preconditions,
    tv_decay_experiment,
    tv_importance_mc,
)
from airjam.rng import RngStream
from airjam.trends import kendall_decreasing

P = standard_normal(1)


def bsc(p):
    return DiscreteChannel([[1 - p, p], [p, 1 - p]])


def awgn(var=1.0):
    return LinearGaussianChannel(slope=1.0, offset=0.0, noise=GaussianDist([0.0], [[var]]))


def manual_cb(words, input_dist, rate=0.1):
    words = np.asarray(words, dtype=float)
    spec = CodebookSpec(input_dist, words.shape[1], rate)
    return Codebook(words=words, spec=spec, seed=(0, 0))


# ---------------------------------------------------------------------------
# Mixture density
# ---------------------------------------------------------------------------


def test_mixture_single_word_is_product_density():
    cb = manual_cb([[0.5, -0.5, 1.0]], P)
    ch = awgn()
    zs = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 0.0]])
    got = mixture_log_density(cb, ch, zs)
    expect = ch.conditional_logpdf(cb.words[0], zs).sum(axis=1)
    assert np.allclose(got, expect)


def test_mixture_identical_words_same_as_single():
    word = [0.5, -0.5, 1.0]
    cb1 = manual_cb([word], P)
    cb3 = manual_cb([word, word, word], P)
    ch = awgn()
    zs = np.array([[0.3, 0.1, -0.4]])
    assert mixture_log_density(cb1, ch, zs) == pytest.approx(
        mixture_log_density(cb3, ch, zs)
    )


def test_mixture_permutation_invariant():
    rng = np.random.default_rng(0)
    words = rng.standard_normal((6, 4))
    cb = manual_cb(words, P)
    cb_perm = manual_cb(words[[3, 1, 5, 0, 4, 2]], P)
    ch = awgn()
    zs = rng.standard_normal((5, 4))
    assert np.allclose(
        mixture_log_density(cb, ch, zs), mixture_log_density(cb_perm, ch, zs)
    )


def test_mixture_normalizes_over_outputs():
    # MC check: E_nu[mu/nu] = 1 within 3 stderr
    cb = draw_codebook(CodebookSpec(P, 4, math.log(16) / 4), RngStream(30))
    ch = awgn()
    marg = ch.marginal(P)
    zs = marg.sample_array((120_000, 4), RngStream(311))
    log_mu = mixture_log_density(cb, ch, zs)
    log_nu = np.asarray(marg.log_density(zs.reshape(-1))).reshape(zs.shape).sum(axis=1)
    r = np.exp(log_mu - log_nu)
    assert abs(r.mean() - 1.0) <= 3 * r.std(ddof=1) / math.sqrt(len(r))


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------


def test_exact_tv_zero_when_output_independent_of_input():
    ch = DiscreteChannel([[0.3, 0.7], [0.3, 0.7]])  # output law ignores input
    p = DiscreteDist([0.5, 0.5])
    cb = manual_cb([[0, 1, 0], [1, 1, 0]], p)
    est = exact_tv_discrete(cb, ch, p)
    assert est.value == pytest.approx(0.0, abs=1e-14)
    assert est.method == "exact_enum" and est.stderr == 0.0


def test_exact_tv_point_mass_vs_product_positive():
    ch = DiscreteChannel(np.eye(2))
    p = DiscreteDist([0.5, 0.5])
    cb = manual_cb([[0, 1, 0, 1]], p)
    est = exact_tv_discrete(cb, ch, p)
    # mixture is a point mass; nu spreads 1/16 per sequence
    assert est.value == pytest.approx(2.0 * (1.0 - 1.0 / 16.0))
    assert est.value > 0


def test_exact_tv_full_support_codebook_small():
    # codebook = all binary words: mixture equals nu exactly for uniform P
    p = DiscreteDist([0.5, 0.5])
    n = 3
    words = [[(m >> i) & 1 for i in range(n)] for m in range(8)]
    cb = manual_cb(words, p)
    est = exact_tv_discrete(cb, bsc(0.1), p)
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_exact_tv_enumeration_cap():
    p = DiscreteDist([0.5, 0.5])
    cb = manual_cb(np.zeros((1, 24)), p, rate=0.01)
    with pytest.raises(SizeOverflow):
        exact_tv_discrete(cb, bsc(0.1), p)


def test_tv_postprocessing_never_increases():
    # deterministic per-letter quantizer = column-aggregating the transition
    p = DiscreteDist([0.25, 0.25, 0.25, 0.25])
    rng = np.random.default_rng(1)
    t = rng.dirichlet(np.ones(4), size=4)
    ch = DiscreteChannel(t)
    quant = np.zeros((4, 2))
    quant[[0, 1], 0] = 1.0  # symbols {0,1} -> 0, {2,3} -> 1
    quant[[2, 3], 1] = 1.0
    ch_q = DiscreteChannel(t @ quant)
    spec = CodebookSpec(p, 4, math.log(3) / 4)
    cb = draw_codebook(spec, RngStream(32))
    tv_full = exact_tv_discrete(cb, ch, p).value
    tv_quant = exact_tv_discrete(cb, ch_q, p).value
    assert tv_quant <= tv_full + 1e-12


# ---------------------------------------------------------------------------
# Importance-sampled TV
# ---------------------------------------------------------------------------


def test_tv_is_zero_when_mixture_equals_marginal():
    # channel ignores the input, so mu = nu exactly
    ch = LinearGaussianChannel(slope=0.0, offset=0.0, noise=standard_normal(1))
    cb = draw_codebook(CodebookSpec(P, 6, 0.2), RngStream(33))
    est = tv_importance_mc(cb, ch, P, 20_000, RngStream(34))
    assert est.value == pytest.approx(0.0, abs=3 * max(est.stderr, 1e-9))


def test_tv_is_matches_exact_on_discrete_toy():
    p = DiscreteDist([0.5, 0.5])
    ch = bsc(0.1)
    cb = draw_codebook(CodebookSpec(p, 4, math.log(7) / 4), RngStream(35))
    exact = exact_tv_discrete(cb, ch, p)
    est = tv_importance_mc(cb, ch, p, 60_000, RngStream(36))
    assert est.value == pytest.approx(exact.value, abs=3 * est.stderr)


def test_tv_is_stderr_halves_with_quadrupled_samples():
    cb = draw_codebook(CodebookSpec(P, 8, 0.25), RngStream(37))
    ch = awgn()
    se1 = tv_importance_mc(cb, ch, P, 10_000, RngStream(38)).stderr
    se2 = tv_importance_mc(cb, ch, P, 40_000, RngStream(38)).stderr
    assert se2 == pytest.approx(0.5 * se1, rel=0.3)


def test_tv_estimate_range_validation():
    with pytest.raises(ValueError):
        TVEstimate(value=2.5, stderr=0.0, method="exact_enum", n=1, m_words=1)


# ---------------------------------------------------------------------------
# Decay experiment rows and preconditions
# ---------------------------------------------------------------------------


def test_decay_rows_schema_and_determinism():
    ch = bsc(0.1)
    p = DiscreteDist([0.5, 0.5])
    mi = ch.exact_mutual_information(p)
    rows = tv_decay_experiment(p, ch, 1.25 * mi, ns=(2, 4), codebooks_per_n=3,
                               rng=RngStream(39))
    again = tv_decay_experiment(p, ch, 1.25 * mi, ns=(2, 4), codebooks_per_n=3,
                                rng=RngStream(39))
    assert rows == again
    assert {r["method"] for r in rows} == {"exact_enum"}
    assert len(rows) == 6
    assert set(rows[0]) == {"n", "R", "replicate", "method", "tv", "stderr",
                            "clip_events", "replaced_count", "seed"}


def test_decay_trend_well_above_mi_discrete():
    # at 3x the mutual information the decay is visible already at n <= 8;
    # at 1.25x these block lengths are still pre-asymptotic for noisy
    # channels (the acceptance suite uses the noiseless toy there)
    ch = bsc(0.1)
    p = DiscreteDist([0.5, 0.5])
    mi = ch.exact_mutual_information(p)
    rows = tv_decay_experiment(p, ch, 3.0 * mi, ns=(2, 4, 6, 8),
                               codebooks_per_n=10, rng=RngStream(40))
    means = [np.mean([r["tv"] for r in rows if r["n"] == n]) for n in (2, 4, 6, 8)]
    tau, pval = kendall_decreasing(means)
    assert tau < 0 and pval < 0.05


def test_no_decay_below_mi_discrete():
    ch = bsc(0.1)
    p = DiscreteDist([0.5, 0.5])
    mi = ch.exact_mutual_information(p)
    rows = tv_decay_experiment(p, ch, 0.5 * mi, ns=(2, 4, 6, 8),
                               codebooks_per_n=10, rng=RngStream(44))
    means = [np.mean([r["tv"] for r in rows if r["n"] == n]) for n in (2, 4, 6, 8)]
    tau, pval = kendall_decreasing(means)
    assert not (tau < 0 and pval < 0.05)


def test_preconditions_report_shape():
    ch = awgn()
    rep = resolvability_preconditions(ch, P, rate=0.6, rng=RngStream(41))
    assert rep["rate_exceeds_mi"]
    assert set(rep["information_density_mgf"]) == {0.05, 0.1}
    assert not rep["information_density_mgf"][0.05]["suspicious"]
    assert not rep["joint_law_tails"][0.05]["suspicious"]
