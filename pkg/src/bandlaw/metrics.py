"""Distances, log-potentials and the theoretical floors used by the experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SingularSampleError, SpecError

__all__ = [
    "EmpiricalMeasure",
    "LogFloor",
    "WindowBound",
    "kolmogorov_distance",
    "log_potential",
    "truncated_log_split",
    "truncation_threshold",
    "log_window_bound_check",
    "disk_law_distance",
    "angular_bias",
    "uniform_disk_log_potential",
    "replacement_gap",
    "theoretical_smin_floor",
    "delocalization_threshold",
    "stieltjes_envelope",
    "DISK_RADII",
]

DISK_RADII = np.round(np.arange(1, 151) * 0.01, 2)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point masses; weights are positive and sum to one."""

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        points = np.asarray(self.points).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if points.size == 0:
            raise ValueError("empirical measure needs at least one point")
        if points.shape != weights.shape:
            raise ValueError("points and weights differ in length")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        points = np.asarray(points).ravel()
        if points.size == 0:
            raise ValueError("empirical measure needs at least one point")
        return cls(points, np.full(points.size, 1.0 / points.size))

    @classmethod
    def squared_singular_values(cls, sigma) -> "EmpiricalMeasure":
        """``(1/n) sum delta_{sigma_i^2}``."""
        return cls.uniform(np.asarray(sigma, dtype=float) ** 2)

    def cdf(self, x) -> np.ndarray:
        """``mu((-inf, x])`` at each ``x`` (real supports only)."""
        order = np.argsort(self.points, kind="stable")
        pts = self.points[order]
        cum = np.concatenate([[0.0], np.cumsum(self.weights[order])])
        return cum[np.searchsorted(pts, x, side="right")]


def kolmogorov_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """``sup_{x >= 0} |mu([0, x]) - nu([0, x])|`` for measures on ``[0, inf)``.

    Both CDFs are right-continuous step functions, so the difference is
    constant on every gap between consecutive atoms of the merged support
    and the supremum is attained at an atom (or on ``[0, first atom)``,
    where it is 0).
    """
    for name, meas in (("mu", mu), ("nu", nu)):
        if np.iscomplexobj(meas.points) or np.any(meas.points < 0):
            raise ValueError(f"{name} must be supported on [0, inf)")
    grid = np.union1d(mu.points, nu.points)
    gap = np.abs(mu.cdf(grid) - nu.cdf(grid))
    return float(min(gap.max(), 1.0))


def log_potential(sigma) -> float:
    """``(1/n) sum log sigma_i``, i.e. ``(1/n) log |det M|`` for the singular values of ``M``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0:
        raise ValueError("empty singular value list")
    if np.any(sigma <= 0):
        raise SingularSampleError("singular sample: a singular value is 0, log-potential is -inf")
    return float(np.mean(np.log(sigma)))


def truncated_log_split(sigma, threshold: float):
    """Split the log-potential at ``threshold``.

    Returns
    -------
    head : float
        ``(1/n) sum log sigma_i`` over ``sigma_i > threshold``.
    tail : float
        Same sum over ``sigma_i <= threshold``.
    tail_count : int
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0:
        raise ValueError("empty singular value list")
    if np.any(sigma <= 0):
        raise SingularSampleError("singular sample: a singular value is 0, log-potential is -inf")
    logs = np.log(sigma)
    low = sigma <= threshold
    n = sigma.size
    tail = float(np.sum(logs[low]) / n)
    head = float(np.sum(logs[~low]) / n)
    return head, tail, int(low.sum())


def truncation_threshold(b_n: float, n: int, c: float = 0.05, gaussian: bool = True) -> float:
    """Small singular value cut ``b_n^{-1/5} n^c`` (Gaussian) or ``b_n^{-1/8} n^c``."""
    return b_n ** (-0.2 if gaussian else -0.125) * n**c


@dataclass(frozen=True)
class WindowBound:
    lhs: float
    rhs: float
    holds: bool


def log_window_bound_check(mu: EmpiricalMeasure, nu: EmpiricalMeasure, a: float, b: float) -> WindowBound:
    """Compare ``|int_[a,b] log d(mu - nu)|`` with ``2(|log b| + |log a|) sup_x |(mu-nu)([a, x])|``."""
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")

    def window_integral(meas):
        inside = (meas.points >= a) & (meas.points <= b)
        return float(np.sum(meas.weights[inside] * np.log(meas.points[inside])))

    def window_mass(meas, x):
        inside = meas.points >= a
        pts, w = meas.points[inside], meas.weights[inside]
        return np.array([w[pts <= xi].sum() for xi in np.atleast_1d(x)])

    lhs = abs(window_integral(mu) - window_integral(nu))
    atoms = np.union1d(mu.points, nu.points)
    grid = np.concatenate([[a], atoms[(atoms >= a) & (atoms <= b)]])
    dist = float(np.max(np.abs(window_mass(mu, grid) - window_mass(nu, grid))))
    rhs = 2.0 * (abs(math.log(b)) + abs(math.log(a))) * dist
    return WindowBound(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12)


def disk_law_distance(eigs, radii=DISK_RADII) -> float:
    """``max_r |#{|lambda| <= r} / n - min(r^2, 1)|`` over ``r = 0.01, ..., 1.50``."""
    mod = np.sort(np.abs(np.asarray(eigs).ravel()))
    if mod.size == 0:
        raise ValueError("empty eigenvalue list")
    radii = np.asarray(radii, dtype=float)
    frac = np.searchsorted(mod, radii, side="right") / mod.size
    return float(np.max(np.abs(frac - np.minimum(radii**2, 1.0))))


def angular_bias(eigs) -> float:
    """``|mean(lambda / |lambda|)|`` over nonzero eigenvalues; 0 for a rotation-invariant cloud."""
    eigs = np.asarray(eigs, dtype=complex).ravel()
    eigs = eigs[eigs != 0]
    if eigs.size == 0:
        return 0.0
    return float(abs(np.mean(eigs / np.abs(eigs))))


def uniform_disk_log_potential(z: complex) -> float:
    """``int log|z - w| dA(w) / pi`` over the unit disk."""
    r = abs(z)
    if r > 1:
        return math.log(r)
    return (r * r - 1.0) / 2.0


def replacement_gap(sigma_x, sigma_g) -> float:
    """``|log_potential(sigma_x) - log_potential(sigma_g)|``."""
    sigma_x, sigma_g = np.asarray(sigma_x), np.asarray(sigma_g)
    if sigma_x.shape != sigma_g.shape:
        raise ValueError(f"length mismatch: {sigma_x.shape} vs {sigma_g.shape}")
    return abs(log_potential(sigma_x) - log_potential(sigma_g))


@dataclass(frozen=True)
class LogFloor:
    """A lower bound on the least singular value, stored by its logarithm."""

    log_value: float
    kind: str

    @property
    def value(self) -> float | None:
        """The floor itself, or None if it underflows double precision."""
        if self.log_value < math.log(np.finfo(float).tiny):
            return None
        return math.exp(self.log_value)


def theoretical_smin_floor(kind: str, **params) -> LogFloor:
    """Least-singular-value floors, returned in log form.

    ``block-band``
        ``(3b)^{-25 n / b}``; params ``n``, ``b``.
    ``product``
        ``n^{-25 m}``; params ``n``, ``m``.
    ``hadamard``
        ``|z| exp(-R^2 n^{3 kappa} (sqrt(n) sigma_star / sigma)^2)``; params
        ``n``, ``z``, ``sigma_star`` (largest entry of the profile),
        ``sigma`` (largest row/column Euclidean norm), ``R > 1`` and
        ``kappa`` in ``(0, 1]``.  Requires
        ``|z| > max(sigma_star n^{2 kappa}, sigma / R)``.
    """
    def need(*names):
        missing = [k for k in names if k not in params]
        if missing:
            raise SpecError(f"{kind} floor needs parameters {missing}")
        return [params[k] for k in names]

    if kind == "block-band":
        n, b = need("n", "b")
        if not (n > 0 and b > 0):
            raise SpecError("block-band floor needs positive n and b")
        return LogFloor(-25.0 * (n / b) * math.log(3.0 * b), kind)
    if kind == "product":
        n, m = need("n", "m")
        if not (n > 0 and m > 0):
            raise SpecError("product floor needs positive n and m")
        return LogFloor(-25.0 * m * math.log(n), kind)
    if kind == "hadamard":
        n, z, s_star, s, R, kappa = need("n", "z", "sigma_star", "sigma", "R", "kappa")
        if not (n > 0 and s_star > 0 and s > 0):
            raise SpecError("hadamard floor needs positive n, sigma_star and sigma")
        if not R > 1:
            raise SpecError(f"hadamard floor needs R > 1, got R={R}")
        if not 0 < kappa <= 1:
            raise SpecError(f"hadamard floor needs kappa in (0, 1], got {kappa}")
        bound = max(s_star * n ** (2 * kappa), s / R)
        if not abs(z) > bound:
            raise SpecError(
                f"hadamard floor needs |z| > max(sigma_star n^(2 kappa), sigma / R) = {bound:.6g}, "
                f"got |z| = {abs(z):.6g}"
            )
        exponent = R**2 * n ** (3 * kappa) * (math.sqrt(n) * s_star / s) ** 2
        return LogFloor(math.log(abs(z)) - exponent, kind)
    raise SpecError(f"unknown floor kind {kind!r}; expected block-band, product or hadamard")


def delocalization_threshold(b: float, n: int, c: float, gaussian: bool = True) -> float:
    """Eigenvector sup-norm bound ``b^{-1/10} n^c`` (Gaussian) or ``b^{-1/16} n^c``."""
    if not b >= 1:
        raise ValueError(f"b must be >= 1, got {b}")
    return b ** (-0.1 if gaussian else -1.0 / 16.0) * n**c


def stieltjes_envelope(b_n: float, n: int, eta_im: float, constant: float = 10.0) -> float:
    """``(log n)^3 / (sqrt(b_n) Im(eta)^2) + C / (b_n Im(eta)^5)``."""
    log_n = math.log(n) if n > 1 else 0.0
    return log_n**3 / (math.sqrt(b_n) * eta_im**2) + constant / (b_n * eta_im**5)
