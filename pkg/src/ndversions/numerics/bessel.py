"""Bessel functions of the first kind for integer and half-integer orders.

Small arguments use the power series, large arguments the Hankel asymptotic
expansion for the two lowest orders of the ladder followed by upward
recurrence, which is stable once the argument exceeds the order.
"""

import math

import numpy as np

from ..errors import ArgumentError

SERIES_CUTOFF = 12.0
_SERIES_TERMS = 80
_ASYMPTOTIC_TERMS = 40


def _check_order(nu):
    twice = 2.0 * nu
    if nu < 0 or abs(twice - round(twice)) > 1e-12:
        raise ArgumentError(f"order must be a non-negative integer or half-integer, got {nu}")
    return round(twice) / 2.0


def _series(nu, r):
    """Power series, summed until the terms stop contributing."""
    half = 0.5 * r
    term = np.power(half, nu) / math.gamma(nu + 1.0)
    total = term.copy()
    q = half * half
    for k in range(1, _SERIES_TERMS):
        term = -term * q / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _hankel_pq(nu, r):
    """Asymptotic P and Q factors, truncated at the smallest term."""
    mu = 4.0 * nu * nu
    p = np.ones_like(r)
    q = np.zeros_like(r)
    term = np.ones_like(r)
    active = np.ones(r.shape, dtype=bool)
    prev = np.full(r.shape, np.inf)
    for k in range(1, _ASYMPTOTIC_TERMS):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * r)
        size = np.abs(term)
        active &= size < prev
        prev = size
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        contrib = np.where(active, sign * term, 0.0)
        if k % 2:
            q += contrib
        else:
            p += contrib
        if np.all(size[active] == 0.0):
            break
    return p, q


def _asymptotic(nu, r):
    p, q = _hankel_pq(nu, r)
    omega = r - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * r)) * (p * np.cos(omega) - q * np.sin(omega))


def _half_integer_base(r):
    """J_{1/2} and J_{3/2} in closed form."""
    s, c = np.sin(r), np.cos(r)
    pref = np.sqrt(2.0 / (math.pi * r))
    return pref * s, pref * (s / r - c)


def bessel_j_ladder(max_order, r, half_integer=False):
    """Evaluate J_nu(r) for nu = base, base+1, ..., base+max_order in one pass.

    ``base`` is 0 for integer ladders and 1/2 for half-integer ladders.
    Returns an array of shape ``(max_order + 1,) + r.shape``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ArgumentError("argument must be finite and non-negative")
    base = 0.5 if half_integer else 0.0
    out = np.empty((max_order + 1,) + r.shape)
    flat_r = r.ravel()
    flat = out.reshape(max_order + 1, -1)

    small = flat_r < max(SERIES_CUTOFF, base + max_order + 1.0)
    if small.any():
        rs = flat_r[small]
        for k in range(max_order + 1):
            flat[k, small] = _series(base + k, rs)
    large = ~small
    if large.any():
        rl = flat_r[large]
        if half_integer:
            j0, j1 = _half_integer_base(rl)
        else:
            j0, j1 = _asymptotic(0.0, rl), _asymptotic(1.0, rl)
        flat[0, large] = j0
        if max_order >= 1:
            flat[1, large] = j1
        for k in range(1, max_order):
            nu = base + k
            flat[k + 1, large] = (2.0 * nu / rl) * flat[k, large] - flat[k - 1, large]
    return out


def bessel_j(nu, r):
    """Bessel function J_nu(r) for nu in {0, 1/2, 1, 3/2, ...} and r >= 0.

    Accepts scalars or arrays for ``r``; absolute error is below 1e-10 on
    [0, 50] for the orders used in this package (nu <= 10).
    """
    nu = _check_order(nu)
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    half = nu != int(nu)
    order = int(nu - 0.5) if half else int(nu)
    values = bessel_j_ladder(order, r, half_integer=half)[order]
    return float(values[0]) if scalar else values
