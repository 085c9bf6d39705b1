"""Numerical replay of the epsilon argument behind the L0 criterion.

For a norm function f and a test function phi,

    g(eps) = int [ int_0^1 t^(eps-1) f(t||x||) dt + int_1^inf t^(-1-eps) f(t||x||) dt ] phi-hat(x) dx

splits as u + v + w.  Writing r = ||x|| and substituting t = r e^(-tau) and
t = r e^tau, the inner integrals become r^(-eps) J0(r) / eps and
r^eps J1(r) / eps with

    J0(r) = f(0) + eps int_0^inf e^(-eps tau) (f(r e^-tau) - f(0)) dtau,
    J1(r) = L    + eps int_0^inf e^(-eps tau) (f(r e^tau) - L) dtau,

L = f(inf).  The powers of r then cancel in g, and the four integrands are

    g: (J0 + J1 - f(0) - L) / eps            u: (1 - r^eps) J0 / eps
    v: (1 - r^-eps) J1 / eps                 w: (r^eps J0 + r^-eps J1 - f(0) - L) / eps

The constants f(0) + L integrate to zero against phi-hat (phi vanishes at
the origin) and are dropped, so g = u + v + w holds pointwise.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaincc

from .errors import ArgumentError, NumericalError
from .l0embed.pairing import log_pairing
from .l0embed.testfunctions import TestFunction, radial_test_function, zonal_ladder
from .l0embed.transform import fourier_of_test_function
from .numerics.quadrature import _WG, _WGK, _XGK, integrate_1d
from .numerics.rng import rng_stream
from .numerics.sphere import sphere_area, sphere_rule
from .posdef import NormFunction
from .starbody import StarBody
from .stable import sample_stable_vector

EPS_GRID = tuple(2.0 ** -k for k in range(1, 13))
PROOF_LEVELS = {2: 8, 3: 4, 4: 2}
_SIGMA_LO = -80.0
_TAIL_TARGET = 1e-15
_T_CAP = 2.0 ** 14
_TAIL_BUDGET = 20_000_000


def standard_phi(n: int) -> TestFunction:
    """Radial bump on the annulus 1 < |x| < 2, the default test function of the scans."""
    return radial_test_function(n, 1.0, 2.0)


def _check_eps(eps):
    eps = float(eps)
    if not 0 < eps < 1:
        raise ArgumentError(f"eps must lie in (0, 1), got {eps}")
    return eps


# ---------------------------------------------------------------------------
# Inner t-integrals


def _tail_cutoff(f: NormFunction):
    T = 2.0
    while T < _T_CAP and f.tail_sup(T) > _TAIL_TARGET:
        T *= 2.0
    return T, f.tail_sup(T)


def _panel_edges(T):
    low = np.arange(_SIGMA_LO, 0.0, 0.125)
    high = np.log(1.0 + 0.25 * np.arange(0, int(math.ceil(4.0 * (T - 1.0))) + 1))
    return np.concatenate([low, high])


def split_profiles(f: NormFunction, eps: float, r):
    """D0 = J0 - f(0) and D1 = J1 - L at radii r > 0, with absolute error bounds.

    The tau-integrals are done in sigma = ln t on fixed panels (uniform in
    sigma below t = 1, uniform in t above) with the query points inserted as
    extra panel edges, so every value is a cumulative Gauss-Kronrod sum.
    Beyond the cutoff T, where |f - L| <= tail_sup(T), the integrand is
    replaced by its limit and the bound is added to the error.
    """
    eps = _check_eps(eps)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ArgumentError("profiles need finite radii r > 0")
    f0 = float(f(0.0))
    L = float(f.limit_at_infinity)
    T, tail = _tail_cutoff(f)
    rho = np.log(r)
    lo_rho = min(_SIGMA_LO, float(rho.min()) - 1.0)
    inside = rho < math.log(T)
    queries = np.unique(rho[inside])
    edges = np.union1d(np.concatenate([[lo_rho], _panel_edges(T)]), queries)
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    sigma = mid[:, None] + half[:, None] * _XGK[None, :]
    fs = f(np.exp(sigma).ravel()).reshape(sigma.shape)
    ya = np.exp(eps * sigma) * (fs - f0)
    yb = np.exp(-eps * sigma) * (fs - L)
    Ia, Ea = half * (ya @ _WGK), half * np.abs(ya @ (_WGK - _WG))
    Ib, Eb = half * (yb @ _WGK), half * np.abs(yb @ (_WGK - _WG))
    # cumulative from the left for A, from the right for B, at every edge
    A = np.concatenate([[0.0], np.cumsum(Ia)])
    EA = np.concatenate([[0.0], np.cumsum(Ea)])
    B = np.concatenate([np.cumsum(Ib[::-1])[::-1], [0.0]])
    EB = np.concatenate([np.cumsum(Eb[::-1])[::-1], [0.0]])
    low_err = abs(float(f(math.exp(lo_rho))) - f0)

    D0 = np.empty_like(r)
    D1 = np.empty_like(r)
    err0 = np.full_like(r, low_err + tail)
    err1 = np.full_like(r, tail)
    idx = np.searchsorted(edges, rho[inside])
    ri = rho[inside]
    D0[inside] = eps * np.exp(-eps * ri) * A[idx]
    err0[inside] += eps * np.exp(-eps * ri) * EA[idx]
    D1[inside] = eps * np.exp(eps * ri) * B[idx]
    err1[inside] += eps * np.exp(eps * ri) * EB[idx]
    # beyond T: f is within tail of L
    ro = rho[~inside]
    if ro.size:
        logT = math.log(T)
        grow = np.expm1(eps * (ro - logT)) * math.exp(eps * logT)
        D0[~inside] = np.exp(-eps * ro) * (eps * A[-1] + (L - f0) * grow)
        D1[~inside] = 0.0
    return D0, D1, err0, err1


def _integrands(f0, L, eps, r, D0, D1, e0, e1):
    """Rows g, u, v, w of the radial integrands and their error bounds."""
    rho = np.log(r)
    up = np.expm1(eps * rho)
    down = np.expm1(-eps * rho)
    J0, J1 = f0 + D0, L + D1
    g = (D0 + D1) / eps
    u = -up * J0 / eps
    v = -down * J1 / eps
    w = (up * J0 + down * J1 + D0 + D1) / eps
    eg = (e0 + e1) / eps
    eu = np.abs(up) * e0 / eps
    ev = np.abs(down) * e1 / eps
    ew = ((1.0 + np.abs(up)) * e0 + (1.0 + np.abs(down)) * e1) / eps
    return np.stack([g, u, v, w]), np.stack([eg, eu, ev, ew])


# ---------------------------------------------------------------------------
# The x-integral


class _SpectralGrid:
    """phi-hat on (sphere node) x (radial node) grids, grouped by distinct gauge values."""

    def __init__(self, body: StarBody, phi: TestFunction, level: int | None):
        if body.n != phi.n:
            raise ArgumentError(f"body has n={body.n} but the test function has n={phi.n}")
        if body.n not in PROOF_LEVELS:
            raise ArgumentError(f"the epsilon scan supports n in {{2, 3, 4}}, got n={body.n}")
        self.n = body.n
        self.level = level or PROOF_LEVELS[body.n]
        self.spectral = fourier_of_test_function(phi)
        self.rules = [self._rule(body, phi, lev) for lev in (self.level, self.level + 1)]

    def _rule(self, body, phi, level):
        nodes, weights = sphere_rule(self.n, level)
        gauge = body.gauge(nodes)
        if not np.all(np.isfinite(gauge) & (gauge > 0)):
            raise NumericalError(f"{body.spec}: gauge is not positive on the sphere")
        key = np.round(gauge, 14)
        distinct, inverse = np.unique(key, return_inverse=True)
        area = sphere_area(self.n)
        blocks = []
        for (r0, r1), tr in self.spectral.radial.items():
            # angular weight of F_j at each distinct gauge value, summed over terms on this annulus
            coeff = np.zeros((distinct.size, tr.values.shape[0]))
            for term in phi.terms:
                if (term.r0, term.r1) != (r0, r1):
                    continue
                t = nodes @ np.asarray(term.axis)
                ladder = zonal_ladder(self.n, len(term.coefficients) - 1, t)
                for j, c in enumerate(term.coefficients):
                    if c:
                        contrib = term.weight * c * (-1.0) ** (j // 2) * area * weights * ladder[j]
                        coeff[:, j] += np.bincount(inverse, contrib, minlength=distinct.size)
            sw = tr.s ** (self.n - 1)
            kron = coeff @ tr.values * (tr.weights * sw)
            gauss = coeff @ tr.values * (tr.gauss_weights * sw)
            blocks.append((tr, kron, gauss, float(np.abs(coeff).sum())))
        gvals = np.array([gauge[inverse == i].mean() for i in range(distinct.size)])
        return gvals, blocks

    def integrate(self, profile):
        """Rows of int P(||x||) phi-hat(x) dx for a vectorised ``profile(r) -> (values, errors)``."""
        results = []
        for gvals, blocks in self.rules:
            total = 0.0
            err = 0.0
            for tr, kron, gauss, angular_mass in blocks:
                r = gvals[:, None] * tr.s[None, :]
                vals, errs = profile(r.ravel())
                vals = vals.reshape((-1,) + r.shape)
                errs = errs.reshape((-1,) + r.shape)
                k = np.einsum("pik,ik->p", vals, kron)
                g = np.einsum("pik,ik->p", vals, gauss)
                # the truncated tail is measured against (1 + |ln s|); the profiles grow at most like ln r
                edge = 2.0 * np.abs(vals[:, :, -1]).max(axis=1) / (1.0 + abs(math.log(tr.s_max)))
                total = total + k
                err = (err + np.abs(k - g) + np.einsum("pik,ik->p", errs, np.abs(kron))
                       + tr.tail * angular_mass * edge)
            results.append((total, err))
        (coarse, _), (fine, fine_err) = results
        return fine, fine_err + np.abs(fine - coarse)


@dataclass(frozen=True)
class EpsilonPoint:
    eps: float
    g: float
    u: float
    v: float
    w: float
    errors: tuple

    @property
    def err(self):
        return max(self.errors)


def _epsilon_point(f, grid, eps, tol):
    eps = _check_eps(eps)
    f0, L = float(f(0.0)), float(f.limit_at_infinity)

    def profile(r):
        D0, D1, e0, e1 = split_profiles(f, eps, r)
        return _integrands(f0, L, eps, r, D0, D1, e0, e1)

    values, errors = grid.integrate(profile)
    if tol is not None and errors.max() > tol:
        raise NumericalError(
            f"eps={eps:g}: error estimate {errors.max():.2e} exceeds {tol:g}; raise the sphere level"
            " or use a norm function with a faster-decaying tail"
        )
    g, u, v, w = (float(x) for x in values)
    return EpsilonPoint(eps, g, u, v, w, tuple(float(e) for e in errors))


def uvw(f: NormFunction, body: StarBody, phi: TestFunction, eps: float, level: int | None = None,
        tol: float | None = 1e-6):
    """(u, v, w) at one eps."""
    p = _epsilon_point(f, _SpectralGrid(body, phi, level), eps, tol)
    return p.u, p.v, p.w


def g_eps(f: NormFunction, body: StarBody, phi: TestFunction, eps: float, level: int | None = None,
          tol: float | None = 1e-6) -> float:
    return _epsilon_point(f, _SpectralGrid(body, phi, level), eps, tol).g


# ---------------------------------------------------------------------------
# Limits


def extrapolate_limit(eps, values, errors=None):
    """Fit a + b eps ln(1/eps) + c eps through the three smallest eps; return (a, error).

    The error combines the change against the fit on the next three points
    with the propagated value errors.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    errors = np.zeros_like(values) if errors is None else np.asarray(errors, dtype=float)
    order = np.argsort(eps)
    eps, values, errors = eps[order], values[order], errors[order]
    if eps.size < 3:
        raise ArgumentError("extrapolation needs at least three eps values")

    def fit(sl):
        e = eps[sl]
        basis = np.column_stack([np.ones(3), e * np.log(1.0 / e), e])
        inv = np.linalg.inv(basis)
        return float(inv[0] @ values[sl]), float(np.abs(inv[0]) @ errors[sl])

    a, prop = fit(slice(0, 3))
    if eps.size >= 4:
        a2, _ = fit(slice(1, 4))
        model = abs(a - a2)
    else:
        model = abs(a - values[0])
    return a, model + prop


@dataclass
class EpsilonScan:
    """g, u, v, w along a decreasing eps grid, with the limits they should approach."""

    f: str
    body: str
    phi: str
    points: list
    pairing: float | None = None
    pairing_error: float | None = None
    psi: dict = field(default_factory=dict)
    level: int = 0

    @property
    def eps(self):
        return np.array([p.eps for p in self.points])

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points])

    @property
    def identity_residual(self):
        """max |g - (u + v + w)| / (1 + |g|)."""
        g = self.column("g")
        return float(np.max(np.abs(g - (self.column("u") + self.column("v") + self.column("w"))) / (1.0 + np.abs(g))))

    def limit(self, name):
        idx = "guvw".index(name)
        return extrapolate_limit(self.eps, self.column(name), [p.errors[idx] for p in self.points])

    def summary(self):
        out = {
            "f": self.f,
            "body": self.body,
            "phi": self.phi,
            "sphere_level": self.level,
            "eps_grid": self.eps.tolist(),
            "identity_residual": self.identity_residual,
            "min_g": float(self.column("g").min()),
            "limits": {},
        }
        for name in "guvw":
            value, err = self.limit(name)
            out["limits"][name] = {"value": value, "error": err}
        if self.pairing is not None:
            out["log_pairing"] = {"value": self.pairing, "error": self.pairing_error}
            out["target_u"] = -self.pairing
        if self.psi:
            vals = list(self.psi.values())
            c_lo, c_hi = min(vals), max(vals)
            out["psi"] = {"values": {repr(k): v for k, v in self.psi.items()},
                          "inf": c_lo, "sup": c_hi,
                          "note": "c is not asserted; inf and sup of psi on the grid are reported"}
            if self.pairing is not None:
                c = self.psi[min(self.psi)]
                out["target_g_at_smallest_eps_psi"] = -(1.0 - c) * self.pairing
        return out

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["eps", "g", "u", "v", "w", "err"])
        for p in self.points:
            writer.writerow([repr(p.eps), repr(p.g), repr(p.u), repr(p.v), repr(p.w), repr(p.err)])
        return buf.getvalue()


def epsilon_scan(f: NormFunction, body: StarBody, phi: TestFunction | None = None, eps_grid=EPS_GRID,
                 level: int | None = None, tol: float | None = 1e-6, workers: int = 1,
                 with_pairing: bool = True) -> EpsilonScan:
    """Evaluate g, u, v, w on the grid (in parallel when ``workers > 1``)."""
    phi = phi if phi is not None else standard_phi(body.n)
    grid_eps = sorted((_check_eps(e) for e in eps_grid), reverse=True)
    spectral = _SpectralGrid(body, phi, level)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            points = list(pool.map(lambda e: _epsilon_point(f, spectral, e, tol), grid_eps))
    else:
        points = [_epsilon_point(f, spectral, e, tol) for e in grid_eps]
    pairing = pairing_err = None
    if with_pairing:
        res = log_pairing(body, phi)
        pairing, pairing_err = res.value, res.error_estimate
    psi_values = {e: psi(f, e) for e in grid_eps}
    return EpsilonScan(f.tag, body.spec, phi.label, points, pairing, pairing_err, psi_values, spectral.level)


# ---------------------------------------------------------------------------
# One-dimensional lemmas


@dataclass(frozen=True)
class LemmaScan:
    eps: tuple
    values: tuple
    errors: tuple
    limit: float
    limit_error: float
    h0: float


def lemma_eps(h: Callable, A: float, eps_grid=EPS_GRID, tol: float = 1e-12) -> LemmaScan:
    """eps int_0^A t^(eps-1) h(t) dt on the grid, and its extrapolated limit (which should be h(0))."""
    if not A > 0:
        raise ArgumentError("A must be positive")
    values, errors = [], []
    for eps in eps_grid:
        eps = _check_eps(eps)
        res = integrate_1d(h, 0.0, A, tol=tol / eps, endpoint_eps=eps)
        values.append(eps * res.value)
        errors.append(eps * res.error_estimate)
    limit, err = extrapolate_limit(eps_grid, values, errors)
    h0 = float(np.asarray(h(np.array([0.0])), dtype=float).ravel()[0])
    return LemmaScan(tuple(float(e) for e in eps_grid), tuple(values), tuple(errors), limit, err, h0)


def tail_moment(f: NormFunction, a: float, eps: float, tol: float = 1e-10):
    """eps int_a^inf t^(-1-eps) (f(t) - L) dt and an error bound (a > 0)."""
    eps = _check_eps(eps)
    if not a > 0:
        raise ArgumentError("the lower limit must be positive")
    L = f.limit_at_infinity

    def bound(T):
        return f.tail_sup(T) * T ** (-eps) / eps

    if eps * bound(a) <= 0.5 * tol:
        return 0.0, eps * bound(a)
    res = integrate_1d(lambda t: t ** (-1.0 - eps) * (f(t) - L), a, math.inf, tol=tol / eps,
                       tail_bound=bound, panel_width=min(a, 4.0), max_evaluations=_TAIL_BUDGET)
    return eps * res.value, eps * res.error_estimate


def psi(f: NormFunction, eps: float, tol: float = 1e-10) -> float:
    """eps int_{1/eps}^inf t^(-1-eps) f(t) dt = L eps^eps + (tail moment)."""
    eps = _check_eps(eps)
    value, _ = tail_moment(f, 1.0 / eps, eps, tol)
    return f.limit_at_infinity * eps ** eps + value


def h_eps(f: NormFunction, body: StarBody, y, eps: float, tol: float = 1e-10) -> float:
    """eps int_{1/eps}^inf t^(-1-eps) (1 - f(t ||y||)) dt."""
    eps = _check_eps(eps)
    r = float(body.gauge(np.asarray(y, dtype=float)))
    if r == 0:
        return 0.0 if float(f(0.0)) == 1.0 else (1.0 - float(f(0.0))) * eps ** eps
    L = f.limit_at_infinity
    value, _ = tail_moment(f, r / eps, eps, tol)
    return eps ** eps * (1.0 - L) - r ** eps * value


# ---------------------------------------------------------------------------
# Probability laws and the Gaussian tail inequality


@dataclass(frozen=True)
class ProbabilityLawHandle:
    """A law mu on R^n given by its characteristic functional plus a sampler or a closed-form tail.

    ``tail_probability(R)`` is mu{|x|_2 > R}; ``gaussian_average(t)`` is
    int (1 - mu-hat(t y)) dgamma(y) when known in closed form.
    """

    name: str
    n: int
    char_functional: Callable = field(repr=False)
    sampler: Callable | None = field(default=None, repr=False)
    tail_probability: Callable | None = field(default=None, repr=False)
    gaussian_average: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sampler is None and self.tail_probability is None:
            raise ArgumentError("a law needs a sampler or a closed-form tail probability")
        origin = float(np.real(self.char_functional(np.zeros((1, self.n)))[0]))
        if abs(origin - 1.0) > 1e-12:
            raise ArgumentError(f"{self.name}: characteristic functional at 0 is {origin}, not 1")
        xi = rng_stream(12345, 0).standard_normal((8, self.n))
        if np.max(np.abs(self.char_functional(xi) - self.char_functional(-xi))) > 1e-12:
            raise ArgumentError(f"{self.name}: the characteristic functional is not even")


def gaussian_law(n: int) -> ProbabilityLawHandle:
    """Standard Gaussian gamma on R^n: mu-hat(xi) = exp(-|xi|^2 / 2)."""
    return ProbabilityLawHandle(
        f"gaussian:n={n}", n,
        lambda xi: np.exp(-0.5 * np.sum(np.asarray(xi) ** 2, axis=-1)),
        sampler=lambda rng, m: rng.standard_normal((m, n)),
        tail_probability=lambda R: float(gammaincc(0.5 * n, 0.5 * R * R)),
        gaussian_average=lambda t: 1.0 - (1.0 + t * t) ** (-0.5 * n),
    )


def point_mass_law(n: int) -> ProbabilityLawHandle:
    """Unit atom at the origin (f = 1)."""
    return ProbabilityLawHandle(
        f"atom:n={n}", n,
        lambda xi: np.ones(np.shape(xi)[:-1]),
        tail_probability=lambda R: 0.0,
        gaussian_average=lambda t: 0.0,
    )


def stable_law(p: float, n: int) -> ProbabilityLawHandle:
    """i.i.d. symmetric p-stable coordinates: mu-hat(xi) = exp(-||xi||_p^p) = f(||xi||_p) for f = exp_pow(p)."""
    return ProbabilityLawHandle(
        f"stable:p={p:g},n={n}", n,
        lambda xi: np.exp(-np.sum(np.abs(np.asarray(xi)) ** p, axis=-1)),
        sampler=lambda rng, m: sample_stable_vector(p, n, m, int(rng.integers(0, 2 ** 63))),
    )


@dataclass(frozen=True)
class TailCheckRow:
    t: float
    lhs: float
    rhs: float
    holds: bool
    lhs_error: float
    rhs_error: float


def gaussian_tail_check(law: ProbabilityLawHandle, t_grid=(0.25, 0.5, 1.0, 2.0, 4.0), mc_samples: int = 100_000,
                        seed: int = 0, z: float = 4.0, max_mc_error: float = 0.05, method: str = "auto"):
    """mu{|x|_2 > 1/t} <= 3 int (1 - mu-hat(t y)) dgamma(y) along ``t_grid``.

    Closed forms are used when the law provides them and ``method="auto"``;
    otherwise both sides are Monte-Carlo estimates with z-sigma error bars.
    """
    if method not in ("auto", "mc"):
        raise ArgumentError("method must be 'auto' or 'mc'")
    if mc_samples < 100:
        raise ArgumentError("mc_samples must be at least 100")
    use_closed = method == "auto"
    samples = None
    if not (use_closed and law.tail_probability is not None):
        if law.sampler is None:
            raise ArgumentError(f"{law.name}: no sampler available for Monte-Carlo")
        samples = np.asarray(law.sampler(rng_stream(seed, 0), mc_samples))
        radii = np.sqrt(np.sum(samples * samples, axis=1))
    y = None
    if not (use_closed and law.gaussian_average is not None):
        y = rng_stream(seed, 1).standard_normal((mc_samples, law.n))
    rows = []
    for t in t_grid:
        t = float(t)
        if not t > 0:
            raise ArgumentError("t must be positive")
        if samples is None:
            lhs, lhs_err = law.tail_probability(1.0 / t), 0.0
        else:
            frac = float(np.mean(radii > 1.0 / t))
            lhs, lhs_err = frac, z * math.sqrt(max(frac * (1.0 - frac), 1.0 / mc_samples) / mc_samples)
        if y is None:
            rhs, rhs_err = 3.0 * law.gaussian_average(t), 0.0
        else:
            vals = 1.0 - np.real(law.char_functional(t * y))
            rhs = 3.0 * float(vals.mean())
            rhs_err = 3.0 * z * float(vals.std()) / math.sqrt(mc_samples)
        if lhs_err + rhs_err > max_mc_error:
            raise NumericalError(f"Monte-Carlo error {lhs_err + rhs_err:.3f} at t={t:g}; increase mc_samples")
        rows.append(TailCheckRow(t, lhs, rhs, bool(lhs <= rhs + lhs_err + rhs_err), lhs_err, rhs_err))
    return rows


__all__ = [
    "EPS_GRID", "EpsilonPoint", "EpsilonScan", "LemmaScan", "ProbabilityLawHandle", "TailCheckRow",
    "epsilon_scan", "extrapolate_limit", "g_eps", "gaussian_law", "gaussian_tail_check", "h_eps",
    "lemma_eps", "point_mass_law", "psi", "split_profiles", "stable_law", "standard_phi", "tail_moment", "uvw",
]
