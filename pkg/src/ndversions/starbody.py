"""Origin-symmetric star bodies and their Minkowski functionals.

Every body is an immutable object with a vectorised ``gauge`` method acting on
the last axis of its input.  Bodies are also described by a spec string in a
small grammar, used by the CLI and config files::

    lq:n=4,q=inf
    orlicz:n=4,M=poly(4)
    qsum:left=(lq:n=3,q=2),right=(lq:n=1,q=2),q=3
    image:T=1,0,0,2
    synth2d:file=measure.csv
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from .errors import ArgumentError, NumericalError, UnsupportedOperationError
from .numerics.rng import rng_stream

_BISECTION_STEPS = 200


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return repr(float(value)).removesuffix(".0") if float(value).is_integer() else repr(float(value))


# ---------------------------------------------------------------------------
# Orlicz functions


@dataclass(frozen=True)
class OrliczFunction:
    """Non-decreasing convex M on [0, inf) with M(0) = 0.

    ``derivatives`` holds the available derivative evaluators (first, second).
    """

    M: Callable[[np.ndarray], np.ndarray]
    name: str
    derivatives: tuple = ()

    @classmethod
    def power(cls, q: float) -> "OrliczFunction":
        if q < 1:
            raise ArgumentError(f"poly({q}) is not convex; need q >= 1")
        return cls(
            M=lambda t: np.power(t, q),
            name=f"poly({_fmt(q)})",
            derivatives=(
                lambda t: q * np.power(t, q - 1.0),
                lambda t: q * (q - 1.0) * np.power(t, q - 2.0) if q >= 2 else np.full_like(t, np.nan),
            ),
        )

    @property
    def derivative_order(self) -> int:
        return len(self.derivatives)

    def __call__(self, t):
        return self.M(np.asarray(t, dtype=float))

    def unit_level(self) -> float:
        """The t with M(t) = 1."""
        lo, hi = 0.0, 1.0
        while self(hi) < 1.0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                raise NumericalError(f"{self.name} never reaches 1")
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            if self(mid) < 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * hi:
                break
        return hi


def orlicz_gauge(M: OrliczFunction, x, tol: float = 1e-12):
    """Solve sum_k M(|x_k| / s) = 1 for s by bracketing and bisection.

    Works row-wise on arrays.  Zero rows raise: the implicit equation has no
    solution there even though the gauge is 0 by convention.
    """
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    x = np.abs(np.asarray(x, dtype=float))
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    if not np.all(np.isfinite(x)):
        raise ArgumentError("coordinates must be finite")
    top = x.max(axis=1)
    if np.any(top == 0):
        raise ArgumentError("orlicz_gauge is undefined at x = 0")
    t1 = M.unit_level()
    lo = top / t1
    hi = np.maximum(lo, x.sum(axis=1) / t1)

    def excess(s):
        return M(x / s[:, None]).sum(axis=1) - 1.0

    if np.any(excess(lo) < -tol) or np.any(excess(hi) > tol):
        raise NumericalError(
            f"bracketing failed for {M.name}: bounds [{lo.min():.3e}, {hi.max():.3e}]"
        )
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = excess(mid) > 0.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 2e-16 * hi):
            break
    s = 0.5 * (lo + hi)
    if np.any(np.abs(excess(s)) > tol):
        raise NumericalError(f"bisection for {M.name} stalled above tolerance {tol}")
    return float(s[0]) if scalar else s


# ---------------------------------------------------------------------------
# Bodies


class StarBody:
    """Base class: subclasses implement ``_gauge`` on arrays of shape (..., n)."""

    n: int
    smooth: bool = False
    convex: bool = False

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gauge(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ArgumentError(f"expected vectors of dimension {self.n}, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise ArgumentError("coordinates must be finite")
        return self._gauge(x)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.spec}>"


@dataclass(frozen=True, repr=False)
class LqBody(StarBody):
    n: int
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError("dimension must be >= 1")
        if not self.q > 0:
            raise ArgumentError("q must be positive")

    @property
    def smooth(self):
        return 1 < self.q < math.inf

    @property
    def convex(self):
        return self.q >= 1

    @property
    def spec(self):
        return f"lq:n={self.n},q={_fmt(self.q)}"

    def _gauge(self, x):
        a = np.abs(x)
        if math.isinf(self.q):
            return a.max(axis=-1)
        if self.q == 2:
            return np.sqrt(np.sum(a * a, axis=-1))
        if self.q == 1:
            return a.sum(axis=-1)
        # scale by the max to keep powers in range
        top = a.max(axis=-1)
        safe = np.where(top > 0, top, 1.0)
        return top * np.sum((a / safe[..., None]) ** self.q, axis=-1) ** (1.0 / self.q)


@dataclass(frozen=True, repr=False)
class OrliczBody(StarBody):
    n: int
    M: OrliczFunction
    tol: float = 1e-13
    convex = True

    @property
    def smooth(self):
        return self.M.derivative_order >= 2

    @property
    def spec(self):
        return f"orlicz:n={self.n},M={self.M.name}"

    def _gauge(self, x):
        flat = x.reshape(-1, self.n)
        out = np.zeros(flat.shape[0])
        nonzero = np.any(flat != 0, axis=1)
        if nonzero.any():
            out[nonzero] = orlicz_gauge(self.M, flat[nonzero], self.tol)
        return out.reshape(x.shape[:-1])


@dataclass(frozen=True, repr=False)
class QSumBody(StarBody):
    left: StarBody
    right: StarBody
    q: float

    def __post_init__(self):
        if not self.q >= 1:
            raise ArgumentError("q-sum requires q >= 1")

    @property
    def n(self):
        return self.left.n + self.right.n

    @property
    def smooth(self):
        return self.q > 1 and _coordinate_smooth(self.left) and _coordinate_smooth(self.right)

    @property
    def convex(self):
        return self.left.convex and self.right.convex

    @property
    def spec(self):
        return f"qsum:left=({self.left.spec}),right=({self.right.spec}),q={_fmt(self.q)}"

    def _gauge(self, x):
        return qsum_combine(self.left.gauge(x[..., : self.left.n]),
                            self.right.gauge(x[..., self.left.n:]), self.q)


def _coordinate_smooth(body):
    # a one-dimensional factor |t| only enters through |t|^q, smooth for q > 1
    return body.smooth or body.n == 1


@dataclass(frozen=True, repr=False)
class EuclideanImageBody(StarBody):
    """K = T(B_2): the gauge is |T^{-1} x|_2."""

    T: tuple
    convex = True
    smooth = True
    _inverse: np.ndarray = field(init=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.T, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ArgumentError("T must be a square matrix")
        if abs(np.linalg.det(t)) < 1e-14 * max(1.0, np.abs(t).max()) ** t.shape[0]:
            raise ArgumentError("T must be invertible")
        object.__setattr__(self, "_inverse", np.linalg.inv(t))

    @property
    def n(self):
        return len(self.T)

    @property
    def spec(self):
        return "image:T=" + ",".join(_fmt(v) for row in self.T for v in row)

    def _gauge(self, x):
        y = x @ self._inverse.T
        return np.sqrt(np.sum(y * y, axis=-1))


@dataclass(frozen=True, repr=False)
class DilatedBody(StarBody):
    """The body s*K, with gauge ||x||_K / s."""

    base: StarBody
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise ArgumentError("dilation factor must be positive")

    @property
    def n(self):
        return self.base.n

    @property
    def smooth(self):
        return self.base.smooth

    @property
    def convex(self):
        return self.base.convex

    @property
    def spec(self):
        return f"dilate:s={_fmt(self.s)},base=({self.base.spec})"

    def _gauge(self, x):
        return self.base._gauge(x) / self.s


def bandlimited_log_cos_kernel(u, harmonics):
    """Fourier partial sum of ln|cos u| keeping frequencies 2j < harmonics / 2."""
    u = np.asarray(u, dtype=float)
    out = np.full(u.shape, -math.log(2.0))
    for j in range(1, (harmonics - 1) // 4 + 1):
        out += ((-1.0) ** (j + 1) / j) * np.cos(2.0 * j * u)
    return out


@dataclass(frozen=True, repr=False)
class Synthetic2DBody(StarBody):
    """Planar body whose log-gauge is a band-limited log-cosine transform.

    On the direction (cos t, sin t) the gauge is exp(h(t)) with
    h(t) = C + sum_j w_j k(t - s_j), s_j equally spaced on [0, 2 pi) and k the
    Fourier partial sum of ln|cos| matching the grid (the kernel seen by a
    trigonometric-interpolant density).  Weights must be non-negative.
    """

    weights: tuple
    C: float
    source: str = ""
    n = 2
    smooth = True
    convex = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 8 or w.size % 2:
            raise ArgumentError("synthetic body needs an even number (>= 8) of grid weights")
        if np.any(w < 0):
            raise ArgumentError("synthetic body weights must be non-negative")
        if not math.isfinite(self.C):
            raise ArgumentError("C must be finite")

    @property
    def angles(self):
        return 2.0 * math.pi * np.arange(len(self.weights)) / len(self.weights)

    @property
    def spec(self):
        return f"synth2d:file={self.source}" if self.source else "synth2d:inline"

    def log_profile(self, t):
        t = np.asarray(t, dtype=float)
        w = np.asarray(self.weights)
        kern = bandlimited_log_cos_kernel(t[..., None] - self.angles, len(w))
        return self.C + kern @ w

    def _gauge(self, x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        t = np.arctan2(x[..., 1], x[..., 0])
        return np.where(r > 0, r * np.exp(self.log_profile(t)), 0.0)


# ---------------------------------------------------------------------------
# Operations


def minkowski(body: StarBody, x) -> float:
    """The gauge ||x||_K of a single vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ArgumentError("minkowski expects a single vector")
    return float(body.gauge(x))


def qsum_combine(gx, gy, q):
    gx, gy = np.asarray(gx, dtype=float), np.asarray(gy, dtype=float)
    if math.isinf(q):
        return np.maximum(gx, gy)
    top = np.maximum(gx, gy)
    safe = np.where(top > 0, top, 1.0)
    return top * ((gx / safe) ** q + (gy / safe) ** q) ** (1.0 / q)


def qsum_gauge(body_x: StarBody, body_y: StarBody, q: float, x, y) -> float:
    """(||x||_X^q + ||y||_Y^q)^(1/q)."""
    if not q >= 1:
        raise ArgumentError("q-sum requires q >= 1")
    return float(qsum_combine(minkowski(body_x, np.atleast_1d(x)),
                              minkowski(body_y, np.atleast_1d(y)), q))


def quasi_uniform_directions(n: int, count: int, include_special: bool = True) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors, optionally with axes and diagonals."""
    if n == 2:
        t = 2.0 * math.pi * np.arange(count) / count
        pts = np.column_stack([np.cos(t), np.sin(t)])
    elif n == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        phi = math.pi * (1.0 + math.sqrt(5.0)) * k
        s = np.sqrt(1.0 - z * z)
        pts = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    else:
        g = rng_stream(0x5eed, n).normal(size=(count, n))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    if include_special:
        special = [np.eye(n)]
        signs = np.array(np.meshgrid(*[[1.0, -1.0]] * n, indexing="ij")).reshape(n, -1).T
        special.append(signs / math.sqrt(n))
        for i in range(n):
            for j in range(i + 1, n):
                for sg in (1.0, -1.0):
                    v = np.zeros(n)
                    v[i], v[j] = 1.0, sg
                    special.append(v[None, :] / math.sqrt(2.0))
        pts = np.vstack([pts] + special)
    return pts


def _polish_extreme(body, start, sign):
    """Nelder-Mead on the sphere from a sampled extreme; returns sign * best gauge."""

    def objective(y):
        r = float(np.linalg.norm(y))
        return sign * float(body.gauge(y / r)) if r > 0 else math.inf

    res = optimize.minimize(objective, start, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 4000})
    return min(float(res.fun), objective(start))


def euclid_bounds(body: StarBody, sphere_samples: int = 4096, polish: int = 3):
    """(c, d) with c |x|_2 <= ||x|| <= d |x|_2 over the sampled sphere.

    The ``polish`` smallest and largest samples are refined by a local
    search, which matters for elongated bodies in n = 4 where a plain sample
    misses the extremes by more than 1e-6.
    """
    if sphere_samples < 100:
        raise ArgumentError("sphere_samples must be >= 100")
    dirs = quasi_uniform_directions(body.n, sphere_samples)
    g = body.gauge(dirs)
    c, d = float(g.min()), float(g.max())
    order = np.argsort(g)
    for i in order[:polish]:
        c = min(c, _polish_extreme(body, dirs[i], 1.0))
    for i in order[::-1][:polish]:
        d = max(d, -_polish_extreme(body, dirs[i], -1.0))
    if not 0 < c <= d:
        raise NumericalError(f"degenerate gauge bounds ({c}, {d})")
    return c, d


class DerivativeEstimate(NamedTuple):
    value: float
    error: float


_STENCILS = {
    1: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
    2: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
}


def _richardson(d0, d1, d2):
    """Extrapolate estimates at steps h, h/2, h/4.

    The error order is read off the three values (rounded, clipped to 1..4)
    because gauges such as |t|^3 near t = 0 give O(h) rather than O(h^4).
    """
    a, b = d0 - d1, d1 - d2
    order = np.full(np.shape(d2), 4.0)
    usable = (a * b > 0) & (np.abs(b) > 1e-13 * np.maximum(1.0, np.abs(d2)))
    ratio = np.where(usable, np.abs(a) / np.where(usable, np.abs(b), 1.0), 16.0)
    order = np.where(usable, np.clip(np.round(np.log2(ratio)), 1.0, 4.0), order)
    factor = 2.0 ** order - 1.0
    return d2 - b / factor, np.abs(b) / factor


def _derivative_batch(body, order, x1, xrest, h, axis):
    """Derivative along ``axis`` at (x1[i], xrest[i]) for a batch of points."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    xrest = np.atleast_2d(np.asarray(xrest, dtype=float))
    base = np.insert(xrest, axis, 0.0, axis=1)
    offsets, coeffs = _STENCILS[order]
    steps = h / np.array([1.0, 2.0, 4.0])
    shift = x1[:, None, None] + steps[None, :, None] * offsets[None, None, :]
    pts = base[:, None, None, :] + 0.0 * shift[..., None]
    pts[..., axis] = shift
    vals = body.gauge(pts)
    est = (vals @ coeffs) / steps[None, :] ** order
    return _richardson(est[:, 0], est[:, 1], est[:, 2])


def _require_smooth(body):
    if not body.smooth:
        raise UnsupportedOperationError(f"{body.spec} is not smooth; second derivatives are undefined")


def first_derivative_x1(body, x1, xrest, h=1e-3, axis=0):
    _require_smooth(body)
    value, err = _derivative_batch(body, 1, x1, xrest, h, axis)
    return DerivativeEstimate(float(value[0]), float(err[0]))


def second_derivative_x1(body: StarBody, x1: float, xrest, h: float = 1e-3, axis: int = 0):
    """d^2/dx_1^2 of the gauge at (x1, xrest), with an error estimate.

    Five-point central differences at steps h, h/2, h/4 followed by Richardson
    extrapolation.  ``axis`` selects which coordinate plays the role of x_1.
    """
    _require_smooth(body)
    if not h > 0:
        raise ArgumentError("step must be positive")
    if not np.any(np.asarray(xrest) != 0):
        raise ArgumentError("xrest must be non-zero")
    value, err = _derivative_batch(body, 2, x1, xrest, h, axis)
    return DerivativeEstimate(float(value[0]), float(err[0]))


@dataclass(frozen=True)
class ScanGrid:
    """Sampling plan for the derivative conditions."""

    directions: int = 200
    x1_values: tuple = tuple(float(v) for v in np.geomspace(1e-3, 1.0, 13))
    h: float = 1e-3
    axis: int = 0


@dataclass
class Prop3Report:
    cond1_max_violation: float
    cond2_C: float
    cond3_profile: list
    directions: int
    x1_grid: list
    h: float

    @property
    def cond3_decreasing(self):
        """Whether the sampled sup shrinks monotonically as x1 -> 0.

        Only the lower half of the grid is inspected; far from 0 the profile
        is free to do anything.  The smallest sample must also be at most 5%
        of the largest, so a flat profile does not count.
        """
        sups = [v for _, v in sorted(self.cond3_profile)]
        if len(sups) < 2:
            return False
        low = sups[: max(2, (len(sups) + 1) // 2)]
        monotone = all(a <= b * (1 + 1e-6) + 1e-9 for a, b in zip(low, low[1:]))
        return monotone and sups[0] <= 0.05 * max(sups)

    def to_dict(self):
        return {
            "cond1_max_violation": self.cond1_max_violation,
            "cond2_C": self.cond2_C,
            "cond3_profile": [list(p) for p in self.cond3_profile],
            "cond3_decreasing_towards_zero": self.cond3_decreasing,
            "directions": self.directions,
            "x1_grid": self.x1_grid,
            "h": self.h,
            "note": "finite grid sample; uniform convergence is not proven",
        }


def prop3_conditions_scan(body: StarBody, grid: ScanGrid = ScanGrid()) -> Prop3Report:
    """Sample the three derivative conditions along one coordinate direction.

    ``xrest`` runs over the unit sphere of the complementary section (in the
    body's own norm).  Condition (iii) is only sampled: the profile lists the
    supremum of the second derivative for each x_1 on the grid.
    """
    _require_smooth(body)
    if body.n < 4:
        raise ArgumentError("the derivative conditions are stated for n >= 4")
    dirs = quasi_uniform_directions(body.n - 1, grid.directions, include_special=True)
    full = np.insert(dirs, grid.axis, 0.0, axis=1)
    dirs = dirs / body.gauge(full)[:, None]

    zeros = np.zeros(len(dirs))
    d1, _ = _derivative_batch(body, 1, zeros, dirs, grid.h, grid.axis)
    d2, _ = _derivative_batch(body, 2, zeros, dirs, grid.h, grid.axis)
    cond1 = float(np.max(np.abs(d1) + np.abs(d2)))
    second_at = {}
    for x1 in grid.x1_values:
        vals, _ = _derivative_batch(body, 2, np.full(len(dirs), x1), dirs, grid.h, grid.axis)
        second_at[x1] = float(np.max(np.abs(vals)))
    profile = sorted((x1, v) for x1, v in second_at.items())
    return Prop3Report(
        cond1_max_violation=cond1,
        cond2_C=max(v for _, v in profile),
        cond3_profile=profile,
        directions=len(dirs),
        x1_grid=list(grid.x1_values),
        h=grid.h,
    )


# ---------------------------------------------------------------------------
# Spec grammar


def _split_top(text: str, sep: str = ","):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ArgumentError(f"unbalanced parentheses in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise ArgumentError(f"unbalanced parentheses in {text!r}")
    parts.append("".join(cur))
    return parts


def _unwrap(text: str) -> str:
    """Strip one pair of enclosing parentheses, if they enclose the whole text."""
    text = text.strip()
    if not text.startswith("("):
        return text
    depth = 0
    for i, ch in enumerate(text):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0:
            return text[1:-1].strip() if i == len(text) - 1 else text
    raise ArgumentError(f"unbalanced parentheses in {text!r}")


def _parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ArgumentError(f"{what}: expected a number, got {text!r}") from None


def _keyvals(kind, body, required, grammar):
    items = {}
    for part in _split_top(body):
        if not part.strip():
            continue
        if "=" not in part:
            raise ArgumentError(f"{kind}: expected key=value, got {part!r}; grammar: {grammar}")
        key, val = part.split("=", 1)
        items[key.strip()] = val.strip()
    missing = [k for k in required if k not in items]
    if missing:
        raise ArgumentError(f"{kind}: missing {', '.join(missing)}; grammar: {grammar}")
    return items


GRAMMAR = {
    "lq": "lq:n=<int>,q=<float|inf>",
    "orlicz": "orlicz:n=<int>,M=poly(<q>)",
    "qsum": "qsum:left=(<spec>),right=(<spec>),q=<float>",
    "image": "image:T=<row-major floats>",
    "synth2d": "synth2d:file=<path>",
    "dilate": "dilate:s=<float>,base=(<spec>)",
}


def parse_body(spec: str) -> StarBody:
    """Build a body from its spec string; raises ArgumentError naming the production."""
    spec = _unwrap(spec)
    if ":" not in spec:
        raise ArgumentError(f"body spec {spec!r} lacks a kind prefix; kinds: {', '.join(GRAMMAR)}")
    kind, rest = spec.split(":", 1)
    kind = kind.strip()
    if kind not in GRAMMAR:
        raise ArgumentError(f"unknown body kind {kind!r}; kinds: {', '.join(GRAMMAR)}")
    grammar = GRAMMAR[kind]
    if kind == "image":
        if not rest.startswith("T="):
            raise ArgumentError(f"image: expected T=...; grammar: {grammar}")
        vals = [_parse_float(v, "image") for v in re.split(r"[,;\s]+", rest[2:].strip()) if v]
        m = int(round(math.sqrt(len(vals))))
        if m * m != len(vals) or m < 1:
            raise ArgumentError(f"image: T needs a square number of entries; grammar: {grammar}")
        return EuclideanImageBody(tuple(tuple(vals[i * m:(i + 1) * m]) for i in range(m)))
    if kind == "lq":
        kv = _keyvals(kind, rest, ("n", "q"), grammar)
        return LqBody(int(_parse_float(kv["n"], "lq n")), _parse_float(kv["q"], "lq q"))
    if kind == "orlicz":
        kv = _keyvals(kind, rest, ("n", "M"), grammar)
        match = re.fullmatch(r"poly\(\s*([^)]+)\s*\)", kv["M"])
        if not match:
            raise ArgumentError(f"orlicz: unsupported M {kv['M']!r}; grammar: {grammar}")
        return OrliczBody(int(_parse_float(kv["n"], "orlicz n")),
                          OrliczFunction.power(_parse_float(match.group(1), "orlicz q")))
    if kind == "qsum":
        kv = _keyvals(kind, rest, ("left", "right", "q"), grammar)
        return QSumBody(parse_body(kv["left"]), parse_body(kv["right"]), _parse_float(kv["q"], "qsum q"))
    if kind == "dilate":
        kv = _keyvals(kind, rest, ("s", "base"), grammar)
        return DilatedBody(parse_body(kv["base"]), _parse_float(kv["s"], "dilate s"))
    kv = _keyvals(kind, rest, ("file",), grammar)
    return load_synthetic_body(kv["file"])


def read_measure_csv(path):
    """Read ``angle,weight`` rows and a ``C=<float>`` line (optionally ``#``-prefixed)."""
    angles, weights, C = [], [], None
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ArgumentError(f"cannot read measure file {path}: {exc}") from None
    for line in lines:
        text = line.strip()
        if not text:
            continue
        match = re.fullmatch(r"#?\s*C\s*=\s*(\S+)", text)
        if match:
            C = _parse_float(match.group(1), "measure file C")
            continue
        if text.startswith("#") or text.replace(" ", "") == "angle,weight":
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise ArgumentError(f"measure file {path}: bad row {text!r}")
        angles.append(_parse_float(parts[0], "angle"))
        weights.append(_parse_float(parts[1], "weight"))
    if C is None:
        raise ArgumentError(f"measure file {path}: missing C=<float> line")
    return np.array(angles), np.array(weights), C


def load_synthetic_body(path) -> Synthetic2DBody:
    angles, weights, C = read_measure_csv(path)
    expected = 2.0 * math.pi * np.arange(len(angles)) / max(len(angles), 1)
    if len(angles) == 0 or np.max(np.abs(angles - expected)) > 1e-9:
        raise ArgumentError(f"measure file {path}: angles must be the uniform grid 2*pi*j/N")
    return Synthetic2DBody(tuple(weights), C, source=str(path))
