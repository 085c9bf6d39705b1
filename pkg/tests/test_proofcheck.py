import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndversions.errors import ArgumentError, NumericalError
from ndversions.l0embed import log_pairing
from ndversions.posdef import constant_function, exp_pow, omega_function
from ndversions.proofcheck import (EPS_GRID, ProbabilityLawHandle, epsilon_scan, extrapolate_limit, g_eps,
                                   gaussian_law, gaussian_tail_check, h_eps, lemma_eps, point_mass_law, psi,
                                   split_profiles, stable_law, standard_phi, uvw)
from ndversions.starbody import LqBody

L2_2 = LqBody(2, 2.0)


@pytest.fixture(scope="module")
def gauss_scan():
    return epsilon_scan(exp_pow(2), L2_2, standard_phi(2))


# --- inner profiles -----------------------------------------------------------

def _oracle_profiles(eps, r):
    """Closed forms for f(t) = exp(-t^2) through incomplete gamma functions (mpmath)."""
    e = mpmath.mpf(eps)
    r = mpmath.mpf(r)
    J0 = e * r ** (-e) * mpmath.gammainc(e / 2, 0, r * r) / 2
    J1 = e * r ** e * mpmath.gammainc(-e / 2, r * r) / 2
    return float(J0 - 1), float(J1)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([0.5, 0.1, 2 ** -8]), st.floats(1e-3, 50.0))
def test_split_profiles_against_incomplete_gamma(eps, r):
    D0, D1, e0, e1 = split_profiles(exp_pow(2), eps, np.array([r]))
    o0, o1 = _oracle_profiles(eps, r)
    assert abs(D0[0] - o0) <= max(10 * e0[0], 1e-13)
    assert abs(D1[0] - o1) <= max(10 * e1[0], 1e-13)


def test_split_profiles_vanish_for_constant():
    D0, D1, _, _ = split_profiles(constant_function(), 0.3, np.geomspace(1e-3, 1e3, 20))
    assert np.all(D0 == 0) and np.all(D1 == 0)


def test_split_profiles_reject_bad_input():
    with pytest.raises(ArgumentError):
        split_profiles(exp_pow(1), 1.5, np.array([1.0]))
    with pytest.raises(ArgumentError):
        split_profiles(exp_pow(1), 0.5, np.array([0.0]))


# --- g, u, v, w ---------------------------------------------------------------

def test_constant_function_gives_zero():
    assert abs(g_eps(constant_function(), L2_2, standard_phi(2), 0.3)) <= 1e-8


def test_zero_test_function_gives_zero():
    u, v, w = uvw(exp_pow(2), L2_2, standard_phi(2).scaled(0.0), 0.25)
    assert (u, v, w) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1, 0.05])
def test_g_nonnegative_for_gaussian(eps):
    assert g_eps(exp_pow(2), L2_2, standard_phi(2), eps) >= -1e-8


def test_identity_and_nonnegativity_along_scan(gauss_scan):
    assert gauss_scan.identity_residual <= 1e-8
    assert gauss_scan.column("g").min() >= -1e-8
    assert list(gauss_scan.eps) == sorted(EPS_GRID, reverse=True)


def test_w_trends_to_zero(gauss_scan):
    w = dict(zip(gauss_scan.eps, gauss_scan.column("w")))
    assert abs(w[2 ** -12]) <= 0.1 * abs(w[2 ** -4])
    small = [abs(w[2.0 ** -k]) for k in range(6, 13)]
    assert all(a >= b for a, b in zip(small, small[1:]))


def test_w_small_at_fixed_eps():
    f, phi = exp_pow(2), standard_phi(2)
    w1 = uvw(f, L2_2, phi, 0.1)[2]
    w2 = uvw(f, L2_2, phi, 0.01)[2]
    assert abs(w2) < abs(w1)


def test_u_limit_matches_pairing(gauss_scan):
    u_lim, err = gauss_scan.limit("u")
    target = -gauss_scan.pairing
    assert abs(u_lim - target) <= err + gauss_scan.pairing_error
    u_small = uvw(exp_pow(2), L2_2, standard_phi(2), 1e-3)[0]
    assert u_small == pytest.approx(target, abs=1e-2)


def test_g_limit_is_nonnegative(gauss_scan):
    g_lim, err = gauss_scan.limit("g")
    assert g_lim >= -1e-6 - err


def test_scan_is_worker_independent():
    f, phi = exp_pow(2), standard_phi(2)
    grid = (0.5, 0.25, 0.125)
    a = epsilon_scan(f, L2_2, phi, grid, with_pairing=False)
    b = epsilon_scan(f, L2_2, phi, grid, with_pairing=False, workers=3)
    assert a.to_csv() == b.to_csv()


def test_scan_serialisation(gauss_scan):
    lines = gauss_scan.to_csv().splitlines()
    assert lines[0] == "eps,g,u,v,w,err"
    assert len(lines) == 13
    summary = json.loads(gauss_scan.to_json())
    assert set(summary["limits"]) == {"g", "u", "v", "w"}
    assert "psi" in summary and summary["psi"]["inf"] <= summary["psi"]["sup"]


def test_psi_within_bounds_on_scan(gauss_scan):
    for eps, value in gauss_scan.psi.items():
        assert -eps ** eps <= value <= eps ** eps


def test_three_dimensional_instance():
    body = LqBody(3, 2.0)
    scan = epsilon_scan(exp_pow(2), body, standard_phi(3), (0.5, 0.25, 0.125, 0.0625), with_pairing=False)
    assert scan.identity_residual <= 1e-8
    assert scan.column("g").min() >= -1e-8


def test_epsilon_must_be_in_unit_interval():
    with pytest.raises(ArgumentError):
        g_eps(exp_pow(2), L2_2, standard_phi(2), 1.0)


def test_dimension_mismatch():
    with pytest.raises(ArgumentError):
        g_eps(exp_pow(2), LqBody(3, 2.0), standard_phi(2), 0.5)


def test_tolerance_violation_raises():
    with pytest.raises(NumericalError):
        g_eps(exp_pow(2), L2_2, standard_phi(2), 0.5, tol=1e-30)


# --- extrapolation ----------------------------------------------------------

def test_extrapolation_is_exact_on_the_model():
    eps = np.array(EPS_GRID)
    values = 1.5 + 0.3 * eps * np.log(1 / eps) - 2.0 * eps
    a, err = extrapolate_limit(eps, values)
    assert a == pytest.approx(1.5, abs=1e-12)
    assert err <= 1e-10


def test_extrapolation_needs_three_points():
    with pytest.raises(ArgumentError):
        extrapolate_limit([0.1, 0.2], [1.0, 1.0])


# --- one-dimensional lemmas -------------------------------------------------

def test_lemma_constant():
    scan = lemma_eps(lambda t: np.ones_like(t), 1.0)
    assert np.allclose(scan.values, 1.0, atol=1e-12)


def test_lemma_identity():
    scan = lemma_eps(lambda t: t, 1.0)
    eps = np.array(scan.eps)
    assert np.allclose(scan.values, eps / (1 + eps), atol=1e-12)
    assert abs(scan.limit) <= 10 * min(eps) * math.log(1 / min(eps))


def test_lemma_cosine():
    scan = lemma_eps(np.cos, 1.0, eps_grid=(0.004, 0.002, 0.001))
    assert scan.values[-1] == pytest.approx(1.0, abs=5e-3)
    e = min(scan.eps)
    assert abs(scan.limit - scan.h0) <= 10 * e * math.log(1 / e)


@pytest.mark.parametrize("h", [np.cos, lambda t: np.exp(-t), lambda t: 1 / (1 + t * t)], ids=["cos", "exp", "cauchy"])
def test_lemma_limit_is_value_at_zero(h):
    scan = lemma_eps(h, 2.0)
    e = min(scan.eps)
    assert abs(scan.limit - scan.h0) <= 10 * e * math.log(1 / e)


def test_lemma_rejects_bad_A():
    with pytest.raises(ArgumentError):
        lemma_eps(np.cos, 0.0)


# --- psi and h_eps ----------------------------------------------------------

def test_psi_constant_is_eps_power():
    err = max(abs(psi(constant_function(), e) - e ** e) for e in EPS_GRID)
    assert err <= 1e-9


def test_psi_exponential_is_tiny():
    assert 0 <= psi(exp_pow(1), 0.1) <= 1e-4


@pytest.mark.parametrize("eps", [0.5, 0.3, 0.1])
def test_psi_exponential_against_mpmath(eps):
    e = mpmath.mpf(eps)
    truth = float(e * mpmath.quad(lambda t: t ** (-1 - e) * mpmath.exp(-t), [1 / e, mpmath.inf]))
    assert psi(exp_pow(1), eps) == pytest.approx(truth, abs=1e-10)


def test_psi_sinc_decays():
    values = [abs(psi(omega_function(3), e, tol=1e-5)) for e in (0.2, 0.1, 0.05)]
    assert values[-1] < values[0]
    assert max(values) < 1e-2


def test_h_eps_constant_is_zero():
    assert h_eps(constant_function(), L2_2, [1.0, 2.0], 0.3) == 0.0


def test_h_eps_uniformly_bounded():
    rng = np.random.default_rng(11)
    f = exp_pow(1)
    for _ in range(100):
        y = rng.standard_normal(2) * 10 ** rng.uniform(-3, 3)
        eps = rng.uniform(0.01, 0.99)
        assert abs(h_eps(f, L2_2, y, eps)) <= 2 + 1e-9


@pytest.mark.parametrize("f", [exp_pow(1), exp_pow(2), constant_function()], ids=lambda f: f.tag)
def test_h_eps_tracks_eps_power_minus_psi(f):
    # h_eps(y) = eps^eps - psi(eps) + o(1); it tends to 0 exactly when psi tends to 1
    gaps = [abs(h_eps(f, L2_2, [0.3, 0.4], e) - (e ** e - psi(f, e))) for e in (0.5, 0.1, 0.02, 0.004)]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.02


def test_h_eps_limit_for_exponential_is_one():
    assert h_eps(exp_pow(1), L2_2, [0.3, 0.4], 1e-4) == pytest.approx(1.0, abs=2e-3)


# --- tail inequality ----------------------------------------------------------

def test_gaussian_tail_closed_form():
    row = gaussian_tail_check(gaussian_law(2), t_grid=(1.0,))[0]
    assert row.lhs == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert row.rhs == pytest.approx(1.5, abs=1e-12)
    assert row.holds


def test_gaussian_tail_monte_carlo_agrees_with_closed_form():
    exact = gaussian_tail_check(gaussian_law(2))
    mc = gaussian_tail_check(gaussian_law(2), method="mc", seed=3)
    for a, b in zip(exact, mc):
        assert abs(a.lhs - b.lhs) <= b.lhs_error
        assert abs(a.rhs - b.rhs) <= b.rhs_error


def test_point_mass_tail():
    rows = gaussian_tail_check(point_mass_law(2))
    assert all(r.lhs == 0 and r.rhs == 0 and r.holds for r in rows)


def test_cauchy_tail_inequality():
    rows = gaussian_tail_check(stable_law(1.0, 2), t_grid=(0.5, 1.0, 2.0))
    assert all(r.holds for r in rows)


def test_law_validation():
    with pytest.raises(ArgumentError):
        ProbabilityLawHandle("bad", 2, lambda xi: 2 * np.ones(np.shape(xi)[:-1]), tail_probability=lambda R: 0.0)
    with pytest.raises(ArgumentError):
        ProbabilityLawHandle("odd", 1, lambda xi: np.exp(1j * np.asarray(xi)[..., 0]), tail_probability=lambda R: 0.0)
    with pytest.raises(ArgumentError):
        ProbabilityLawHandle("none", 2, lambda xi: np.ones(np.shape(xi)[:-1]))


def test_monte_carlo_error_guard():
    with pytest.raises(NumericalError):
        gaussian_tail_check(stable_law(1.0, 2), mc_samples=100, max_mc_error=0.01)
