import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndversions.errors import ArgumentError
from ndversions.posdef import (GramWitness, SearchLog, constant_function, exp_pow, gram_matrix, min_gram_eigenvalue,
                               mixture_function, omega, omega_function, omega_sphere_oracle, parse_norm_function,
                               quadratic_form, random_configuration, refute_positive_definiteness,
                               sample_gram_minima, schoenberg_mixture)
from ndversions.starbody import LqBody

L2_3 = LqBody(3, 2.0)


def test_gram_examples():
    f = exp_pow(1)
    assert gram_matrix(f, L2_3, [[0.0, 0, 0]]).tolist() == [[1.0]]
    e = math.exp(-1)
    assert np.allclose(gram_matrix(f, L2_3, [[0, 0, 0], [1, 0, 0]]), [[1, e], [e, 1]], atol=1e-15)
    pts = np.random.default_rng(0).standard_normal((5, 3))
    assert np.array_equal(gram_matrix(constant_function(), L2_3, pts), np.ones((5, 5)))


def test_gram_dimension_mismatch():
    with pytest.raises(ArgumentError):
        gram_matrix(exp_pow(1), L2_3, [[0.0, 1.0]])


def test_min_eigenvalue_examples():
    assert min_gram_eigenvalue(exp_pow(1), L2_3, [[0, 0, 0], [1, 0, 0]]) == pytest.approx(1 - math.exp(-1), abs=1e-14)
    assert abs(min_gram_eigenvalue(constant_function(), L2_3, np.eye(3))) < 1e-12


def test_gaussian_kernel_is_psd_across_seeds():
    minima = [min(sample_gram_minima(exp_pow(2), L2_3, 10, 1, seed)) for seed in range(100)]
    assert min(minima) >= -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 5.0))
def test_gram_structure_properties(seed, s):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((7, 3))
    body = LqBody(3, 4.0)
    f = exp_pow(1.5)
    g = gram_matrix(f, body, pts)
    assert np.array_equal(g, g.T)
    assert np.all(np.diag(g) == 1.0)
    # translation invariance
    assert np.allclose(gram_matrix(f, body, pts + rng.standard_normal(3)), g, atol=1e-12)
    # scale covariance: f(s t) at the original points equals f at the scaled points
    scaled = gram_matrix(f, body, s * pts)
    direct = f(s * body.gauge(pts[:, None, :] - pts[None, :, :]))
    assert np.allclose(scaled, direct, atol=1e-12)


def test_norm_function_invariants():
    t = np.linspace(-10, 10, 401)
    for f in (exp_pow(0.5), exp_pow(2), omega_function(3), mixture_function(2, [(0, 0.3), (2, 0.7)]),
              constant_function()):
        assert f(0.0) == 1.0
        assert np.array_equal(f(t), f(-t))
        assert np.all(np.abs(f(t)) <= 1 + 1e-15)


def test_norm_function_tags_round_trip():
    for tag in ("exp_pow:p=2", "exp_pow:p=0.5", "omega:n=3", "constant", "mixture:n=3,atoms=0:0.5;1:0.5"):
        assert parse_norm_function(tag).tag == tag
    assert parse_norm_function("exp_pow:p=1/2").tag == "exp_pow:p=0.5"


@pytest.mark.parametrize("tag", ["gauss", "exp_pow:p=3", "exp_pow", "mixture:n=2,atoms=1:2", "omega"])
def test_bad_norm_function_tags(tag):
    with pytest.raises(ArgumentError):
        parse_norm_function(tag)


def test_omega_examples():
    for n in (2, 3, 4, 7):
        assert omega(n, 0.0) == 1.0
    r = np.linspace(0.1, 30, 200)
    assert np.allclose(omega(3, r), np.sin(r) / r, atol=1e-13)
    assert abs(omega(3, math.pi)) < 1e-14
    assert abs(omega(2, 2.404826)) < 1e-5


@pytest.mark.parametrize("n", [2, 3, 4])
def test_omega_against_sphere_quadrature(n):
    r = np.linspace(0, 20, 50)
    oracle = np.array([omega_sphere_oracle(n, x) for x in r])
    assert np.max(np.abs(omega(n, r) - oracle)) <= 1e-6


def test_omega_continuous_at_series_switch():
    for n in (2, 3, 4):
        assert omega(n, 12.0 - 1e-12) == pytest.approx(omega(n, 12.0), abs=1e-10)


def test_mixture_examples():
    t = np.linspace(0, 10, 21)
    assert np.allclose(schoenberg_mixture(3, [(1, 1)], t), omega(3, t))
    assert np.allclose(schoenberg_mixture(3, [(0, 0.5), (1, 0.5)], t), 0.5 * (1 + omega(3, t)))
    with pytest.raises(ArgumentError):
        schoenberg_mixture(3, [(1, -0.5), (2, 1.5)], 1.0)


def test_mixtures_are_positive_definite_on_euclidean_space():
    rng = np.random.default_rng(7)
    for k in range(100):
        radii = rng.uniform(0, 3, 3)
        w = rng.dirichlet(np.ones(3))
        f = mixture_function(3, list(zip(radii, w / w.sum())))
        pts = 2 * rng.standard_normal((10, 3))
        assert min_gram_eigenvalue(f, L2_3, pts) >= -1e-8


def test_random_configuration_is_pure():
    a = random_configuration(3, 17, 12, 3)
    b = random_configuration(3, 17, 12, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, random_configuration(3, 18, 12, 3))
    assert random_configuration(0, 0, 16, 3).shape == (16, 3)


@pytest.fixture(scope="module")
def linf_witness():
    log = SearchLog()
    w = refute_positive_definiteness(exp_pow(2), LqBody(3, math.inf), m=16, budget=100_000, seed=1, tol=1e-6, log=log)
    return w, log


def test_refutation_finds_witness_for_cube(linf_witness):
    w, log = linf_witness
    assert w is not None
    assert w.quadratic_form_value < -1e-6
    assert w.verify(1e-6)
    assert log.random_trials == 50_000


def test_witness_self_consistency(linf_witness):
    w, _ = linf_witness
    assert abs(quadratic_form(exp_pow(2), LqBody(3, math.inf), w.points, w.coefficients)
               - w.quadratic_form_value) <= 1e-10
    assert np.linalg.norm(w.coefficients) == pytest.approx(1.0)
    assert w.quadratic_form_value == pytest.approx(w.min_eigenvalue, abs=1e-10)


def test_witness_json_round_trip(linf_witness):
    w, _ = linf_witness
    data = json.loads(w.to_json())
    assert set(data) == {"points", "coefficients", "value", "min_eigenvalue", "f", "body", "seed", "trial"}
    back = GramWitness.from_json(w.to_json())
    assert back.verify(1e-6)
    with pytest.raises(ArgumentError):
        GramWitness.from_json(w.to_json()[:50])


def test_refutation_absent_for_euclidean_laplace():
    assert refute_positive_definiteness(exp_pow(1), L2_3, m=12, budget=4000, seed=0) is None


def test_refutation_absent_for_l4_plane():
    assert refute_positive_definiteness(exp_pow(0.5), LqBody(2, 4.0), m=12, budget=10_000, seed=0) is None


def test_refutation_is_deterministic():
    body = LqBody(3, math.inf)
    a = refute_positive_definiteness(exp_pow(2), body, m=10, budget=3000, seed=4, workers=1)
    b = refute_positive_definiteness(exp_pow(2), body, m=10, budget=3000, seed=4, workers=3)
    assert (a is None) == (b is None)
    if a is not None:
        assert np.array_equal(a.points, b.points)


def test_refutation_argument_errors():
    with pytest.raises(ArgumentError):
        refute_positive_definiteness(exp_pow(1), L2_3, m=1)
    with pytest.raises(ArgumentError):
        refute_positive_definiteness(exp_pow(1), L2_3, budget=0)
