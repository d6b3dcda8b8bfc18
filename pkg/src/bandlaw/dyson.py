"""Scalar reduction of the matrix Dyson equation for the hermitized circular law.

For a doubly stochastic profile the free resolvent of the dilation of
``X - z`` is ``[[a, b], [b~, c]]`` (each block a multiple of the identity)
with

    c + c / D + eta = 0,    a + a / D + eta = 0,
    b = z D,                b~ = conj(z) D,        D = a c - b b~.

For purely imaginary ``eta`` one has ``b~ = conj(b)`` and ``b b~ = |b|^2``;
writing the off-diagonal product as ``b b~`` keeps the system holomorphic in
``eta`` so the same solver serves ``eta = t + i tau`` off the imaginary axis.
Subtracting the two diagonal equations forces ``a = c``, after which ``a``
is the fixed point of

    a  ->  -(a + eta) / ((a + eta)^2 - |z|^2),

a self-map of the upper half plane.  The free Stieltjes transform is
``m = (a + c) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DysonConvergenceError

__all__ = [
    "FreeStieltjesSolution",
    "solve_free_stieltjes",
    "solve_free_stieltjes_grid",
    "system_residual",
    "semicircle_reference",
    "free_measure_cdf",
    "free_measure_grid",
    "tabulate",
]

DAMPING = 0.5
MAX_ITER = 10_000
IM_FLOOR = 1e-12


@dataclass(frozen=True)
class FreeStieltjesSolution:
    a: complex
    b: complex
    c: complex
    m: complex
    z: complex
    eta: complex
    iterations: int
    residual: float


def system_residual(a, b, c, z, eta):
    """Max abs residual of the three scalar equations (array-friendly).

    The residual is divided by ``max(1, |eta|)``: for large ``|eta|`` the
    terms are of size ``|eta|`` and an absolute target of ``1e-12`` is below
    double precision.
    """
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(z != 0, np.conj(z) / np.where(z != 0, z, 1), 0)
        b_low = b * ratio
        D = a * c - b * b_low
        r1 = np.abs(c + c / D + eta)
        r2 = np.abs(a + a / D + eta)
        r3 = np.abs(b - z * D)
    scale = np.maximum(1.0, np.abs(eta))
    return np.maximum(np.maximum(r1, r2), r3) / scale


def _iterate(z, eta, tol, max_iter, a0):
    """Damped fixed point on arrays of ``eta``; returns (a, iterations, residual)."""
    eta = np.asarray(eta, dtype=complex)
    r2 = abs(z) ** 2
    a = np.broadcast_to(np.asarray(a0, dtype=complex), eta.shape).copy()
    iters = np.zeros(eta.shape, dtype=int)
    resid = np.full(eta.shape, np.inf)
    active = np.ones(eta.shape, dtype=bool)
    for k in range(1, max_iter + 1):
        ai, ei = a[active], eta[active]
        s = ai + ei
        step = -s / (s * s - r2)
        new = (1 - DAMPING) * ai + DAMPING * step
        bad = new.imag <= 0
        if np.any(bad):
            new[bad] = new[bad].real + 1j * IM_FLOOR
        a[active] = new
        iters[active] = k
        b = -z * new / (new + ei)
        res = system_residual(new, b, new, z, ei)
        resid[active] = res
        done = res <= tol
        if np.any(done):
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        if not np.any(active):
            break
    return a, iters, resid


def _check_eta(eta):
    eta = np.asarray(eta, dtype=complex)
    if np.any(~(eta.imag > 0)):
        raise ValueError("the free Stieltjes transform needs Im(eta) > 0")
    return eta


def solve_free_stieltjes(
    z: complex,
    eta: complex,
    tol: float = 1e-12,
    max_iter: int = MAX_ITER,
    initial: complex = 1j,
) -> FreeStieltjesSolution:
    """Solve the scalar system at ``(z, eta)`` on the branch with ``Im a > 0``.

    Parameters
    ----------
    z : complex
        Spectral shift.
    eta : complex
        Spectral parameter, ``Im eta > 0``.
    tol : float
        Target for the max residual of the three scalar equations.
    max_iter : int
        Iteration budget; exceeding it raises :class:`DysonConvergenceError`.
    initial : complex
        Starting value of ``a`` (continuation along a path of ``eta``).
    """
    z, eta = complex(z), complex(eta)
    _check_eta(eta)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    a, iters, resid = _iterate(z, np.array([eta]), tol, max_iter, initial)
    a, iters, resid = complex(a[0]), int(iters[0]), float(resid[0])
    if not resid <= tol:
        raise DysonConvergenceError(
            f"Dyson fixed point did not converge at z={z}, eta={eta}: residual {resid:.3e}",
            residual=resid,
            iterations=iters,
        )
    b = -z * a / (a + eta)
    return FreeStieltjesSolution(a=a, b=b, c=a, m=a, z=z, eta=eta, iterations=iters, residual=resid)


def solve_free_stieltjes_grid(z: complex, etas, tol: float = 1e-12, max_iter: int = MAX_ITER) -> np.ndarray:
    """Vectorized ``m_free(z, eta)`` over an array of ``eta``."""
    etas = _check_eta(etas)
    a, iters, resid = _iterate(complex(z), etas, tol, max_iter, 1j)
    if np.any(~(resid <= tol)):
        worst = int(np.nanargmax(np.where(np.isfinite(resid), resid, np.inf)))
        raise DysonConvergenceError(
            f"Dyson fixed point did not converge at z={z}, eta={etas.ravel()[worst]}: "
            f"residual {resid.ravel()[worst]:.3e}",
            residual=float(resid.ravel()[worst]),
            iterations=int(iters.ravel()[worst]),
        )
    return a


def semicircle_reference(eta: complex) -> complex:
    """Semicircle Stieltjes transform ``(-eta + sqrt(eta^2 - 4)) / 2`` with ``Im > 0``."""
    eta = complex(eta)
    if not eta.imag > 0:
        raise ValueError(f"needs Im(eta) > 0, got {eta}")
    # sqrt(eta-2)*sqrt(eta+2) has the branch cut on [-2, 2] and behaves like eta at infinity
    root = np.sqrt(eta - 2) * np.sqrt(eta + 2)
    m = (-eta + root) / 2
    if m.imag <= 0:
        m = (-eta - root) / 2
    return complex(m)


GRID_POINTS = 4000
DEFAULT_TAU = 1e-3


@lru_cache(maxsize=64)
def free_measure_grid(z: complex, tau: float = DEFAULT_TAU, points: int = GRID_POINTS, tol: float = 1e-10):
    """Grid ``t`` on ``[-(3+|z|), 3+|z|]`` and the regularized CDF of the free measure.

    The density ``(1/pi) Im m_free(t + i tau)`` is integrated by the
    trapezoid rule from the left end of the grid.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    half = 3.0 + abs(z)
    t = np.linspace(-half, half, points)
    m = solve_free_stieltjes_grid(z, t + 1j * tau, tol=tol)
    density = m.imag / np.pi
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(t))])
    t.setflags(write=False)
    cdf.setflags(write=False)
    return t, cdf


def free_measure_cdf(z: complex, x: float, tau: float = DEFAULT_TAU) -> float:
    """Approximate ``mu_z((-inf, x])`` by Stieltjes inversion at height ``tau``.

    ``mu_z`` is the limiting spectral measure of the dilation of ``X - z``.
    Values between grid points are interpolated linearly; the result is
    clipped to ``[0, 1]``.
    """
    t, cdf = free_measure_grid(complex(z), float(tau))
    value = float(np.interp(x, t, cdf, left=0.0, right=cdf[-1]))
    return min(max(value, 0.0), 1.0)


def tabulate(zs, etas, tol: float = 1e-12) -> list[FreeStieltjesSolution]:
    """Solutions over the product grid ``zs x etas``."""
    return [solve_free_stieltjes(z, eta, tol=tol) for z in zs for eta in etas]
