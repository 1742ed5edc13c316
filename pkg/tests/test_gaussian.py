import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airjam.errors import DimensionMismatch, NotPositiveDefinite
from airjam.gaussian import GaussianDist, cholesky_lower, factorize, standard_normal
from airjam.info import _gl_grid
from airjam.rng import RngStream


def test_factorize_identity():
    L = factorize(np.eye(3))
    assert np.array_equal(L, np.eye(3))


def test_factorize_diagonal_square_roots():
    L = factorize([[4.0, 0.0], [0.0, 9.0]])
    assert np.allclose(L, [[2.0, 0.0], [0.0, 3.0]], atol=0, rtol=0)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_factorize_reconstructs_known_factor(seed, dim):
    g = np.random.default_rng(seed)
    a = g.standard_normal((dim, dim))
    cov = a @ a.T + np.eye(dim)
    L = factorize(cov)
    rel = np.linalg.norm(L @ L.T - cov) / np.linalg.norm(cov)
    assert rel <= 1e-10
    assert np.allclose(L, np.tril(L))


def test_factorize_rejects_indefinite_with_minor_index():
    with pytest.raises(NotPositiveDefinite) as exc:
        factorize([[1.0, 2.0], [2.0, 1.0]])
    assert exc.value.minor_index == 1


def test_factorize_rejects_asymmetric():
    with pytest.raises(ValueError):
        factorize([[1.0, 0.5], [0.2, 1.0]])


def test_log_density_standard_normal_at_zero():
    g = standard_normal(1)
    assert g.log_density(0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)


def test_log_density_at_mean_drops_quadratic_term():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3))
    cov = a @ a.T + np.eye(3)
    mean = rng.standard_normal(3)
    g = GaussianDist(mean, cov)
    expect = -0.5 * (3 * math.log(2 * math.pi) + math.log(np.linalg.det(cov)))
    assert g.log_density(mean) == pytest.approx(expect, rel=1e-12)


def test_density_normalizes_by_quadrature_2d():
    g = GaussianDist([0.3, -0.2], [[1.0, 0.4], [0.4, 0.8]])
    sd = np.sqrt(np.diag(g.cov))
    pts, logw = _gl_grid(g.mean - 9 * sd, g.mean + 9 * sd, 160)
    mass = np.sum(np.exp(logw + g.log_density(pts)))
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_log_density_dimension_mismatch():
    g = standard_normal(2)
    with pytest.raises(DimensionMismatch):
        g.log_density(np.zeros(3))


def test_log_density_maximized_at_mean_grid_probe():
    g = GaussianDist([0.5, -1.0], [[2.0, 0.7], [0.7, 1.0]])
    at_mean = g.log_density(g.mean)
    grid = np.linspace(-1.0, 1.0, 7)
    probes = np.array([g.mean + [dx, dy] for dx in grid for dy in grid if (dx, dy) != (0, 0)])
    assert np.all(g.log_density(probes) <= at_mean)


def test_sample_count_validation_and_shape():
    g = standard_normal(2)
    with pytest.raises(ValueError):
        g.sample(RngStream(1), 0)
    assert g.sample(RngStream(1), 1).shape == (1, 2)


def test_sample_empirical_moments():
    g = standard_normal(2)
    xs = g.sample(RngStream(7, 1), 100_000)
    bound = 3.0 / math.sqrt(100_000)
    assert np.all(np.abs(xs.mean(axis=0)) <= bound)
    emp_cov = np.cov(xs.T)
    assert np.allclose(emp_cov, np.eye(2), atol=0.02)


def test_sample_is_pure_in_stream():
    g = GaussianDist([1.0], [[2.0]])
    s = RngStream(42, 9)
    assert np.array_equal(g.sample(s, 10), g.sample(s, 10))
    other = g.sample(RngStream(42, 10), 10)
    assert not np.array_equal(g.sample(s, 10), other)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=4))
def test_factorize_roundtrip_property(seed, dim):
    g = np.random.default_rng(seed)
    a = g.standard_normal((dim, dim))
    cov = a @ a.T + (0.1 + g.random()) * np.eye(dim)
    L = cholesky_lower(cov)
    rel = np.linalg.norm(L @ L.T - cov) / np.linalg.norm(cov)
    assert rel <= 1e-10
