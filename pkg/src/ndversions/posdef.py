"""Positive definiteness of f(||.||_K): Gram matrices, refutation search, Omega_n.

A function f is tested on a body K through Gram matrices
``G_ij = f(||x_i - x_j||_K)``.  Sampling can only ever support positive
definiteness; a single matrix with a negative eigenvalue refutes it, and such
a matrix is stored as a :class:`GramWitness` that can be re-checked without
the search that produced it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ArgumentError
from .numerics.bessel import bessel_j
from .numerics.linalg import sym_eigen_min
from .numerics.rng import rng_stream
from .numerics.sphere import integrate_sphere
from .starbody import StarBody, _fmt, _keyvals, _parse_float, parse_body

# Landau: |J_nu(x)| <= 0.7858 x^(-1/3) for every nu >= 0 and x > 0.
_LANDAU = 0.7858

OMEGA_SERIES_CUTOFF = 12.0


# ---------------------------------------------------------------------------
# Omega_n and mixtures


def _omega_series(lam, r):
    """Gamma(lam+1) * sum_k (-1)^k (r/2)^(2k) / (k! Gamma(k+lam+1))."""
    q = 0.25 * r * r
    term = np.ones_like(r)
    total = term.copy()
    for k in range(1, 120):
        term = -term * q / (k * (k + lam))
        total += term
        if np.all(np.abs(term) <= 1e-17):
            break
    return total


def omega(n: int, r):
    """Fourier transform of the uniform probability measure on S^{n-1} at radius r.

    Omega_n(r) = Gamma(n/2) (2/r)^lam J_lam(r) with lam = (n-2)/2.  Below
    r = 12 the normalised power series is summed directly, so Omega_n(0) = 1
    exactly.  Accepts scalars or arrays.
    """
    if int(n) != n or n < 2:
        raise ArgumentError(f"omega needs an integer n >= 2, got {n}")
    scalar = np.ndim(r) == 0
    r = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
    lam = 0.5 * (n - 2)
    out = np.empty_like(r)
    small = r < OMEGA_SERIES_CUTOFF
    out[small] = _omega_series(lam, r[small])
    if (~small).any():
        rl = r[~small]
        out[~small] = math.gamma(n / 2.0) * (2.0 / rl) ** lam * bessel_j(lam, rl)
    return float(out[0]) if scalar else out


def omega_sphere_oracle(n: int, r: float, level: int = 6) -> float:
    """Omega_n(r) as the sphere mean of cos(r theta_1), independent of the Bessel code."""
    return integrate_sphere(n, lambda theta: np.cos(r * theta[:, 0]), level).value


def _omega_envelope(n, t):
    """Upper bound for |Omega_n(s)| valid for every s >= t > 0; decreasing in t."""
    lam = 0.5 * (n - 2)
    return min(1.0, math.gamma(n / 2.0) * 2.0 ** lam * _LANDAU * t ** (-1.0 / 3.0 - lam))


def _check_atoms(atoms):
    atoms = [(float(r), float(w)) for r, w in atoms]
    if not atoms:
        raise ArgumentError("a mixture needs at least one atom")
    if any(w < 0 for _, w in atoms):
        raise ArgumentError("mixture weights must be non-negative")
    if any(r < 0 or not math.isfinite(r) for r, _ in atoms):
        raise ArgumentError("mixture radii must be finite and non-negative")
    total = sum(w for _, w in atoms)
    if abs(total - 1.0) > 1e-12:
        raise ArgumentError(f"mixture weights must sum to 1, got {total!r}")
    return tuple(atoms)


def schoenberg_mixture(n: int, atoms, t):
    """sum_k w_k Omega_n(t r_k) for atoms (r_k, w_k) with non-negative weights summing to 1."""
    atoms = _check_atoms(atoms)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    for r, w in atoms:
        out += w * omega(n, t * r)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Norm functions


@dataclass(frozen=True)
class NormFunction:
    """An even continuous f with f(0) = 1, plus what the epsilon machinery needs.

    ``limit_at_infinity`` is f(inf) and ``tail_sup(T)`` bounds
    sup_{t >= T} |f(t) - f(inf)|.
    """

    tag: str
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    limit_at_infinity: float = 0.0
    tail_sup: Callable[[float], float] = field(repr=False, compare=False, default=lambda T: 1.0)

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        out = self.evaluator(np.abs(np.atleast_1d(np.asarray(t, dtype=float))))
        return float(out[0]) if scalar else out


def exp_pow(p: float) -> NormFunction:
    """f(t) = exp(-|t|^p), 0 < p <= 2."""
    p = float(p)
    if not 0 < p <= 2:
        raise ArgumentError(f"exp_pow needs p in (0, 2], got {p}")
    return NormFunction(
        f"exp_pow:p={_fmt(p)}",
        lambda t: np.exp(-np.power(t, p)),
        0.0,
        lambda T: math.exp(-(max(T, 0.0) ** p)),
    )


def omega_function(n: int) -> NormFunction:
    n = int(n)
    return NormFunction(
        f"omega:n={n}",
        lambda t: omega(n, t),
        0.0,
        lambda T: _omega_envelope(n, T) if T > 0 else 1.0,
    )


def mixture_function(n: int, atoms) -> NormFunction:
    n = int(n)
    atoms = _check_atoms(atoms)
    at_zero = sum(w for r, w in atoms if r == 0)
    moving = [(r, w) for r, w in atoms if r > 0]
    text = ";".join(f"{_fmt(r)}:{_fmt(w)}" for r, w in atoms)

    def tail(T):
        if T <= 0:
            return 1.0
        return sum(w * _omega_envelope(n, T * r) for r, w in moving)

    return NormFunction(
        f"mixture:n={n},atoms={text}",
        lambda t: schoenberg_mixture(n, atoms, t),
        at_zero,
        tail,
    )


def constant_function() -> NormFunction:
    return NormFunction("constant", np.ones_like, 1.0, lambda T: 0.0)


F_GRAMMAR = {
    "exp_pow": "exp_pow:p=<float in (0,2]>",
    "omega": "omega:n=<int>=2>",
    "mixture": "mixture:n=<int>,atoms=<r>:<w>;<r>:<w>;...",
    "constant": "constant",
}


def parse_norm_function(tag: str) -> NormFunction:
    """Build a NormFunction from its tag; errors name the grammar production."""
    tag = tag.strip()
    kind, _, rest = tag.partition(":")
    if kind == "constant" and not rest:
        return constant_function()
    if kind not in F_GRAMMAR or kind == "constant":
        raise ArgumentError(f"unknown f tag {tag!r}; forms: {', '.join(F_GRAMMAR.values())}")
    grammar = F_GRAMMAR[kind]
    if kind == "exp_pow":
        kv = _keyvals(kind, rest, ("p",), grammar)
        p = kv["p"]
        if "/" in p:
            num, den = p.split("/", 1)
            value = _parse_float(num, "exp_pow p") / _parse_float(den, "exp_pow p")
        else:
            value = _parse_float(p, "exp_pow p")
        return exp_pow(value)
    if kind == "omega":
        kv = _keyvals(kind, rest, ("n",), grammar)
        return omega_function(int(_parse_float(kv["n"], "omega n")))
    kv = _keyvals(kind, rest, ("n", "atoms"), grammar)
    atoms = []
    for item in kv["atoms"].split(";"):
        if ":" not in item:
            raise ArgumentError(f"mixture: atom {item!r} is not r:w; grammar: {grammar}")
        r, w = item.split(":", 1)
        atoms.append((_parse_float(r, "mixture r"), _parse_float(w, "mixture w")))
    return mixture_function(int(_parse_float(kv["n"], "mixture n")), atoms)


# ---------------------------------------------------------------------------
# Gram matrices


def _as_points(body: StarBody, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ArgumentError("points must be a non-empty (m, n) array")
    if pts.shape[1] != body.n:
        raise ArgumentError(f"points have dimension {pts.shape[1]}, body has n={body.n}")
    return pts


def _gram_batch(f: NormFunction, body: StarBody, configs: np.ndarray) -> np.ndarray:
    """Gram matrices for configurations of shape (B, m, n); exactly symmetric."""
    m = configs.shape[1]
    iu = np.triu_indices(m, 1)
    diffs = configs[:, iu[0], :] - configs[:, iu[1], :]
    upper = f(body.gauge(diffs).ravel()).reshape(diffs.shape[:2])
    gram = np.empty((configs.shape[0], m, m))
    gram[:, iu[0], iu[1]] = upper
    gram[:, iu[1], iu[0]] = upper
    diag = np.arange(m)
    gram[:, diag, diag] = f(0.0)
    return gram


def gram_matrix(f: NormFunction, body: StarBody, points) -> np.ndarray:
    """Matrix of f(||x_i - x_j||_K); symmetric by construction."""
    pts = _as_points(body, points)
    return _gram_batch(f, body, pts[None])[0]


def min_gram_eigenvalue(f: NormFunction, body: StarBody, points) -> float:
    """Smallest Gram eigenvalue, computed by the in-repo Jacobi solver."""
    value, _ = sym_eigen_min(gram_matrix(f, body, points))
    return value


def quadratic_form(f: NormFunction, body: StarBody, points, coefficients) -> float:
    c = np.asarray(coefficients, dtype=float)
    gram = gram_matrix(f, body, points)
    if c.shape != (gram.shape[0],):
        raise ArgumentError("one coefficient per point is required")
    return float(c @ gram @ c)


def default_psd_tolerance(m: int) -> float:
    """Allowance for eigensolver round-off: eigenvalues above -1e-8 m count as non-negative."""
    return 1e-8 * m


# ---------------------------------------------------------------------------
# Random configurations

LENGTH_SCALES = tuple(float(s) for s in np.geomspace(0.125, 4.0, 8))


def _lattice_section(rng, m, n):
    """m distinct points of a centred integer grid just large enough to hold them."""
    half = 1
    while (2 * half + 1) ** n < m:
        half += 1
    side = 2 * half + 1
    chosen = rng.choice(side ** n, size=m, replace=False)
    coords = np.stack(np.unravel_index(chosen, (side,) * n), axis=-1)
    return coords.astype(float) - half


def random_configuration(seed: int, trial: int, m: int, n: int) -> np.ndarray:
    """The configuration examined by ``trial``; a pure function of (seed, trial).

    Even trials are lattice sections, odd trials Gaussian clouds; the length
    scale cycles through :data:`LENGTH_SCALES`.
    """
    rng = rng_stream(seed, trial)
    scale = LENGTH_SCALES[(trial // 2) % len(LENGTH_SCALES)]
    if trial % 2 == 0:
        pts = _lattice_section(rng, m, n)
    else:
        pts = rng.standard_normal((m, n))
    return scale * pts


def sample_gram_minima(f: NormFunction, body: StarBody, m: int, trials: int, seed: int) -> np.ndarray:
    """Jacobi minimum eigenvalue for each of ``trials`` random m-point configurations."""
    if m < 1 or trials < 1:
        raise ArgumentError("m and trials must be positive")
    out = np.empty(trials)
    for t in range(trials):
        out[t] = min_gram_eigenvalue(f, body, random_configuration(seed, t, m, body.n))
    return out


# ---------------------------------------------------------------------------
# Witnesses


@dataclass(frozen=True)
class GramWitness:
    """Points and real coefficients with sum_ij c_i c_j f(||x_i - x_j||) < 0."""

    points: np.ndarray
    coefficients: np.ndarray
    quadratic_form_value: float
    min_eigenvalue: float
    f: str = ""
    body: str = ""
    seed: int | None = None
    trial: int | None = None

    def recompute(self) -> float:
        """Quadratic form from the stored points alone, parsing f and body afresh."""
        return quadratic_form(parse_norm_function(self.f), parse_body(self.body),
                              self.points, self.coefficients)

    def verify(self, tol: float = 0.0) -> bool:
        value = self.recompute()
        return value < -tol and abs(value - self.quadratic_form_value) <= 1e-10

    def to_dict(self) -> dict:
        return {
            "points": np.asarray(self.points).tolist(),
            "coefficients": np.asarray(self.coefficients).tolist(),
            "value": self.quadratic_form_value,
            "min_eigenvalue": self.min_eigenvalue,
            "f": self.f,
            "body": self.body,
            "seed": self.seed,
            "trial": self.trial,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "GramWitness":
        try:
            points = np.asarray(data["points"], dtype=float)
            coeffs = np.asarray(data["coefficients"], dtype=float)
            value = float(data["value"])
            min_eig = float(data.get("min_eigenvalue", value))
            f, body = str(data["f"]), str(data["body"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError(f"malformed witness: {exc}") from None
        if points.ndim != 2 or coeffs.shape != (points.shape[0],):
            raise ArgumentError("malformed witness: points and coefficients disagree in shape")
        return cls(points, coeffs, value, min_eig, f, body, data.get("seed"), data.get("trial"))

    @classmethod
    def from_json(cls, text: str) -> "GramWitness":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"malformed witness JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ArgumentError("malformed witness: expected a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# Refutation search


@dataclass
class SearchLog:
    """Counters filled in by :func:`refute_positive_definiteness`."""

    random_trials: int = 0
    refinement_evaluations: int = 0
    best_random: float = math.inf
    best_refined: float = math.inf
    best_trial: int | None = None


def _batch_minima(f, body, configs):
    # LAPACK in the hot loop; the reported witness is re-derived with Jacobi.
    return np.linalg.eigvalsh(_gram_batch(f, body, configs))[:, 0]


def _random_phase(f, body, m, trials, seed, workers, batch=512):
    starts = range(0, trials, batch)

    def run(start):
        stop = min(start + batch, trials)
        configs = np.stack([random_configuration(seed, t, m, body.n) for t in range(start, stop)])
        return _batch_minima(f, body, configs)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return np.concatenate(parts)


def _refine(f, body, config, evaluations, initial_step):
    """Steepest single-coordinate moves with step halving; returns (config, value, used)."""
    m, n = config.shape
    best = float(_batch_minima(f, body, config[None])[0])
    used = 1
    step = initial_step
    moves = 2 * m * n
    while used + moves <= evaluations and step > 1e-9 * initial_step:
        trial = np.repeat(config[None], moves, axis=0)
        idx = np.arange(m * n)
        flat = trial.reshape(moves, m * n)
        flat[idx, idx] += step
        flat[m * n + idx, idx] -= step
        values = _batch_minima(f, body, trial)
        used += moves
        k = int(np.argmin(values))
        if values[k] < best:
            best = float(values[k])
            config = trial[k]
        else:
            step *= 0.5
    return config, best, used


def refute_positive_definiteness(f: NormFunction, body: StarBody, m: int = 16, budget: int = 100_000,
                                 seed: int = 0, tol: float | None = None, workers: int = 1,
                                 log: SearchLog | None = None) -> GramWitness | None:
    """Search for a Gram matrix of f(||.||_K) with an eigenvalue below -tol.

    Half of ``budget`` goes to random configurations (see
    :func:`random_configuration`), the rest to refining the five most negative
    ones.  Returns None when nothing is found: that is inconclusive, not a
    proof of positive definiteness.
    """
    if m < 2:
        raise ArgumentError("m must be at least 2")
    if budget < 1:
        raise ArgumentError("budget must be at least 1")
    if tol is None:
        tol = default_psd_tolerance(m)
    log = log if log is not None else SearchLog()

    random_trials = max(1, budget // 2)
    minima = _random_phase(f, body, m, random_trials, seed, max(1, workers))
    log.random_trials = random_trials
    order = np.argsort(minima, kind="stable")[:5]
    log.best_random = float(minima[order[0]])
    log.best_trial = int(order[0])

    best_config = random_configuration(seed, int(order[0]), m, body.n)
    best_value = float(minima[order[0]])
    remaining = budget - random_trials
    share = remaining // len(order)
    for trial in order:
        if share < 2 * m * body.n + 1:
            break
        start = random_configuration(seed, int(trial), m, body.n)
        scale = LENGTH_SCALES[(int(trial) // 2) % len(LENGTH_SCALES)]
        config, value, used = _refine(f, body, start, share, 0.25 * scale)
        log.refinement_evaluations += used
        if value < best_value:
            best_config, best_value = config, value
            log.best_trial = int(trial)
    log.best_refined = best_value

    if not best_value < -tol:
        return None
    min_eig, vector = sym_eigen_min(gram_matrix(f, body, best_config))
    if not min_eig < -tol:
        return None
    coeffs = vector / np.linalg.norm(vector)
    value = quadratic_form(f, body, best_config, coeffs)
    return GramWitness(best_config, coeffs, value, min_eig, f.tag, body.spec, seed, log.best_trial)
