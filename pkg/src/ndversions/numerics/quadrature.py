"""Adaptive one-dimensional quadrature.

The core is a Gauss-Kronrod (7, 15) pair applied to every active interval at
once; intervals whose local error exceeds their share of the tolerance are
bisected.  Two extensions cover the integrals that appear in the epsilon
machinery: an algebraic endpoint weight ``(t - a)**(eps - 1)`` integrated by
Gauss-Jacobi rules, and half-infinite ranges processed as doubling panels
with an optional caller-supplied tail bound.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from ..errors import ArgumentError, NumericalError

_XGK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]

DEFAULT_BUDGET = 5_000_000
# initial pieces per doubling panel; adaptive bisection refines beyond this
_MAX_PIECES = 1024


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __add__(self, other):
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, factor):
        return QuadratureResult(self.value * factor, self.error_estimate * abs(factor), self.evaluations)


def _gk(func, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    t = mid[:, None] + half[:, None] * _XGK[None, :]
    y = np.asarray(func(t), dtype=float).reshape(t.shape)
    kron = half * (y @ _WGK)
    gauss = half * (y @ _WG)
    return kron, np.abs(kron - gauss)


def _adaptive(func, edges, tol, budget):
    """Integrate over consecutive intervals defined by ``edges``."""
    lo = np.asarray(edges[:-1], dtype=float)
    hi = np.asarray(edges[1:], dtype=float)
    span = float(hi[-1] - lo[0])
    value = 0.0
    error = 0.0
    evaluations = 0
    while lo.size:
        if evaluations + 15 * lo.size > budget:
            raise NumericalError(
                f"quadrature did not converge within {budget} evaluations "
                f"(current error estimate {error:.3e}, tolerance {tol:.3e})"
            )
        kron, err = _gk(func, lo, hi)
        evaluations += 15 * lo.size
        if not np.all(np.isfinite(kron)):
            raise NumericalError("non-finite integrand values encountered")
        share = tol * (hi - lo) / span
        done = (err <= share) | ((hi - lo) <= 1e-13 * max(1.0, abs(lo[0])))
        value += float(np.sum(kron[done]))
        error += float(np.sum(err[done]))
        lo, hi = lo[~done], hi[~done]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return QuadratureResult(value, error, evaluations)


def _jacobi_endpoint(func, a, width, eps, nodes):
    """Integral of (t - a)**(eps - 1) * func(t) over [a, a + width], exact for polynomial func."""
    x, w = roots_jacobi(nodes, 0.0, eps - 1.0)
    t = a + 0.5 * width * (1.0 + x)
    return (0.5 * width) ** eps * float(np.dot(w, func(t)))


def _weighted_head(func, a, b, eps, tol):
    """Split off [a, a + delta] where the algebraic weight is handled exactly."""
    width = min(1.0, b - a) if math.isfinite(b) else 1.0
    evaluations = 0
    for _ in range(60):
        coarse = _jacobi_endpoint(func, a, width, eps, 12)
        fine = _jacobi_endpoint(func, a, width, eps, 24)
        evaluations += 36
        err = abs(fine - coarse)
        if err <= 0.25 * tol:
            return width, QuadratureResult(fine, err, evaluations)
        width *= 0.5
    raise NumericalError("endpoint-weighted quadrature failed near the singular endpoint")


def _half_infinite(func, a, tol, tail_bound, budget, panel_width):
    total = QuadratureResult(0.0, 0.0, 0)
    lo = a
    width = panel_width
    quiet = 0
    for _ in range(200):
        hi = lo + width
        pieces = max(1, int(math.ceil(width / panel_width)))
        edges = np.linspace(lo, hi, min(pieces, _MAX_PIECES) + 1)
        part = _adaptive(func, edges, 0.25 * tol, budget - total.evaluations)
        total = total + part
        lo = hi
        width *= 2.0
        if tail_bound is not None:
            bound = float(tail_bound(lo))
            if bound <= 0.5 * tol:
                return QuadratureResult(total.value, total.error_estimate + bound, total.evaluations)
        else:
            quiet = quiet + 1 if abs(part.value) + part.error_estimate <= 0.05 * tol else 0
            if quiet >= 3:
                return total
    raise NumericalError("half-infinite quadrature did not reach the requested tolerance")


def integrate_1d(g, a, b, tol=1e-10, *, endpoint_eps=None, tail_bound=None,
                 max_evaluations=DEFAULT_BUDGET, panel_width=None):
    """Integrate ``g`` over ``[a, b]`` adaptively.

    Parameters
    ----------
    g : callable
        Vectorised integrand, evaluated on numpy arrays.
    a, b : float
        Limits with ``a < b``; ``b`` may be ``np.inf``.
    tol : float
        Absolute error target.
    endpoint_eps : float, optional
        If given, the integrand is ``(t - a)**(endpoint_eps - 1) * g(t)`` and the
        weight is integrated exactly near ``a``.
    tail_bound : callable, optional
        For ``b = inf``: ``tail_bound(T)`` bounds the absolute integral over
        ``[T, inf)``.  Without it the range is truncated once three successive
        doubling panels contribute negligibly.
    panel_width : float, optional
        Initial subdivision width; useful for oscillatory integrands.

    Returns
    -------
    QuadratureResult
    """
    a = float(a)
    b = float(b)
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    if not (math.isfinite(a) and a < b) or math.isnan(b):
        raise ArgumentError(f"invalid interval [{a}, {b}]")
    if endpoint_eps is not None and not 0 < endpoint_eps <= 1:
        raise ArgumentError("endpoint_eps must lie in (0, 1]")

    if endpoint_eps is None:
        func = g
        head = QuadratureResult(0.0, 0.0, 0)
        start = a
    else:
        eps = float(endpoint_eps)

        def func(t):
            return np.power(t - a, eps - 1.0) * g(t)

        width, head = _weighted_head(g, a, b, eps, tol)
        start = a + width
        if start >= b:
            return head

    if math.isinf(b):
        width = panel_width if panel_width is not None else max(1.0, abs(start))
        body = _half_infinite(func, start, 0.75 * tol, tail_bound, max_evaluations, width)
    else:
        if panel_width is not None:
            pieces = max(1, int(math.ceil((b - start) / panel_width)))
        else:
            pieces = 1
        edges = np.linspace(start, b, min(pieces, 1_000_000) + 1)
        body = _adaptive(func, edges, 0.75 * tol, max_evaluations)
    return head + body


def gauss_legendre_panels(a, b, panels, order=16):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
