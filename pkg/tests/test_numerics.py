import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from ndversions.errors import ArgumentError, NumericalError
from ndversions.numerics import (bessel_j, bessel_j_ladder, integrate_1d, integrate_sphere, jacobi_eigh,
                                 ks_statistic, ks_two_sample, rng_stream, sphere_area, sphere_rule, sym_eigen_min)
from ndversions.numerics.validation import load_corpus


# --- quadrature -------------------------------------------------------------

def test_sine_half_period():
    res = integrate_1d(np.sin, 0.0, math.pi, tol=1e-12)
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert res.error_estimate >= 0 and res.evaluations > 0


def test_endpoint_weight_square_root():
    res = integrate_1d(lambda t: np.ones_like(t), 0.0, 1.0, endpoint_eps=0.5)
    assert res.value == pytest.approx(2.0, abs=1e-10)


def test_half_line_exponential():
    res = integrate_1d(lambda t: np.exp(-t), 0.0, np.inf, tol=1e-11)
    assert res.value == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("entry", load_corpus(), ids=lambda e: e.id)
def test_corpus_error_estimates_are_honest(entry):
    res = integrate_1d(entry.integrand, entry.a, entry.b, tol=1e-10,
                       endpoint_eps=entry.endpoint_eps, tail_bound=entry.tail_bound)
    assert abs(res.value - entry.truth) <= 10 * res.error_estimate + 1e-14 * (1 + abs(entry.truth))


def test_corpus_has_twenty_entries():
    assert len(load_corpus()) == 20


def test_budget_exhaustion_raises():
    with pytest.raises(NumericalError):
        integrate_1d(lambda t: np.sin(1.0 / t), 1e-8, 1.0, tol=1e-14, max_evaluations=2000)


def test_reversed_limits_rejected():
    with pytest.raises(ArgumentError):
        integrate_1d(np.sin, 1.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95))
def test_algebraic_weight_matches_beta(eps):
    # int_0^1 t^(eps-1) (1-t) dt = 1/eps - 1/(eps+1)
    res = integrate_1d(lambda t: 1.0 - t, 0.0, 1.0, endpoint_eps=eps)
    assert res.value == pytest.approx(1.0 / eps - 1.0 / (1.0 + eps), abs=1e-9)


# --- sphere -----------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_constant(n):
    assert integrate_sphere(n, lambda x: np.ones(len(x))).value == pytest.approx(1.0, abs=1e-14)


def test_circle_cos_squared():
    assert integrate_sphere(2, lambda x: x[:, 0] ** 2).value == pytest.approx(0.5, abs=1e-12)


def test_sphere_coordinate_second_moment():
    assert integrate_sphere(3, lambda x: x[:, 0] ** 2).value == pytest.approx(1 / 3, abs=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_rule_nodes_unit_and_weights_normalised(n):
    nodes, weights = sphere_rule(n, 3)
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0)
    assert weights.sum() == pytest.approx(1.0, abs=1e-13)


def test_sphere_quartic_moment_s3():
    # E[x1^4] on S^3 is 3 / (n (n+2)) = 1/8
    assert integrate_sphere(4, lambda x: x[:, 0] ** 4).value == pytest.approx(1 / 8, abs=1e-12)


def test_sphere_area_values():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2)


def test_sphere_dimension_rejected():
    with pytest.raises(ArgumentError):
        sphere_rule(5, 2)


# --- Bessel -----------------------------------------------------------------

def test_bessel_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sin(1.0), rel=1e-12)
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-6


@pytest.mark.parametrize("nu", [0, 0.5, 1, 1.5, 2, 2.5])
def test_bessel_against_scipy(nu):
    r = np.linspace(0.0, 50.0, 1001)
    ours = np.asarray(bessel_j(nu, r))
    ref = special.jv(nu, r)
    assert np.max(np.abs(ours - ref)) <= 1e-10


def test_bessel_ladder_consistent_with_single_orders():
    r = np.linspace(0.1, 30, 50)
    ladder = bessel_j_ladder(3, r)
    for k in range(4):
        assert np.allclose(ladder[k], bessel_j(k, r), atol=1e-12)


# --- eigen ------------------------------------------------------------------

def test_eigen_examples():
    assert sym_eigen_min(np.eye(3))[0] == pytest.approx(1.0)
    e = math.exp(-1)
    assert sym_eigen_min([[1, e], [e, 1]])[0] == pytest.approx(1 - e, abs=1e-14)
    assert abs(sym_eigen_min(np.ones((4, 4)))[0]) <= 1e-12


def test_eigen_rejects_asymmetry():
    with pytest.raises(ArgumentError):
        sym_eigen_min([[1.0, 0.5], [0.0, 1.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10_000))
def test_eigen_residual_and_numpy_agreement(m, seed):
    a = np.random.default_rng(seed).standard_normal((m, m))
    a = a + a.T
    values, vectors = jacobi_eigh(a)
    norm = np.linalg.norm(a)
    for k in range(m):
        assert np.linalg.norm(a @ vectors[:, k] - values[k] * vectors[:, k]) <= 1e-10 * max(norm, 1.0)
    assert np.allclose(values, np.linalg.eigvalsh(a), atol=1e-10 * max(norm, 1.0))


# --- KS ---------------------------------------------------------------------

def test_ks_examples(rng):
    x = rng.standard_normal(500)
    stat, p = ks_two_sample(x, x.copy())
    assert stat == 0.0 and p == 1.0
    assert ks_statistic(rng.uniform(0, 1, 50), rng.uniform(2, 3, 70)) == 1.0


def test_ks_quantile_coverage():
    m = 10_000
    bound = 1.95 / math.sqrt(m / 2)
    hits = 0
    for seed in range(100):
        g = rng_stream(seed, 7)
        hits += ks_statistic(g.uniform(size=m), g.uniform(size=m)) <= bound
    assert hits >= 99


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 1000))
def test_ks_matches_scipy(n1, n2, seed):
    from scipy.stats import ks_2samp
    g = np.random.default_rng(seed)
    a, b = g.standard_normal(n1), g.standard_normal(n2)
    assert ks_statistic(a, b) == pytest.approx(ks_2samp(a, b).statistic, abs=1e-12)


# --- RNG --------------------------------------------------------------------

def test_rng_reproducible():
    assert np.array_equal(rng_stream(3, 5).standard_normal(100), rng_stream(3, 5).standard_normal(100))


def test_rng_streams_uncorrelated():
    m = 100_000
    a = rng_stream(1, 0).standard_normal(m)
    b = rng_stream(1, 1).standard_normal(m)
    assert abs(np.corrcoef(a, b)[0, 1]) <= 4 / math.sqrt(m)


def test_rng_normal_mean():
    m = 100_000
    assert abs(rng_stream(9, 2).standard_normal(m).mean()) <= 4 / math.sqrt(m)


def test_rng_rejects_negative_seed():
    with pytest.raises(ValueError):
        rng_stream(-1)
