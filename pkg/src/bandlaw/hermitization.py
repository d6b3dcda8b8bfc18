"""Shifted matrices, Hermitian dilations and the cyclic product linearization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SpecError

__all__ = [
    "DilationMatrix",
    "LinearizationMatrix",
    "shift",
    "dilate",
    "hermitize",
    "linearize_product",
    "cyclic_products",
    "greedy_pairing_distance",
]


def _square(X, name="matrix"):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise SpecError(f"{name} must be square, got shape {X.shape}")
    return X


@dataclass(frozen=True)
class DilationMatrix:
    """The Hermitian ``2n x 2n`` matrix ``[[0, Xz], [Xz^*, 0]]``."""

    values: np.ndarray = field(repr=False)
    z: complex
    n: int

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class LinearizationMatrix:
    values: np.ndarray = field(repr=False)
    block_size: int
    n_blocks: int

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def block(self, k: int) -> np.ndarray:
        """Return the factor ``X_{k+1}`` (0-based ``k``)."""
        n, m = self.block_size, self.n_blocks
        if not 0 <= k < m:
            raise IndexError(k)
        row = (k - 1) % m
        return self.values[row * n:(row + 1) * n, k * n:(k + 1) * n]


def shift(X, z: complex = 0.0) -> np.ndarray:
    """Return ``X - z I``; the input is not modified."""
    X = _square(X)
    out = X.astype(np.result_type(X.dtype, np.asarray(z).dtype, np.float64), copy=True)
    idx = np.arange(X.shape[0])
    out[idx, idx] -= z
    return out


def dilate(Xz, z: complex = 0.0) -> DilationMatrix:
    """Embed ``Xz`` into the Hermitian dilation ``[[0, Xz], [Xz^*, 0]]``.

    ``z`` is recorded as metadata only; pass the already shifted matrix.
    """
    Xz = _square(Xz)
    n = Xz.shape[0]
    dtype = np.result_type(Xz.dtype, np.float64)
    Y = np.zeros((2 * n, 2 * n), dtype=dtype)
    Y[:n, n:] = Xz
    Y[n:, :n] = Xz.conj().T
    return DilationMatrix(values=Y, z=complex(z), n=n)


def hermitize(X, z: complex) -> DilationMatrix:
    """Shorthand for ``dilate(shift(X, z), z)``."""
    return dilate(shift(X, z), z)


def linearize_product(blocks) -> LinearizationMatrix:
    """Cyclic block linearization of the product ``X_1 X_2 ... X_m``.

    ``X_2, ..., X_m`` sit on the block superdiagonal and ``X_1`` in the
    bottom-left corner, so ``L^m`` is block diagonal with the cyclic
    products ``X_2 ... X_m X_1``, ``X_3 ... X_1 X_2``, ..., ``X_1 ... X_m``
    on its diagonal.  Each has the spectrum of ``X_1 ... X_m``.
    """
    blocks = [np.asarray(B) for B in blocks]
    if not blocks:
        raise SpecError("linearize_product needs at least one factor")
    n = blocks[0].shape[0]
    for k, B in enumerate(blocks):
        if B.shape != (n, n):
            raise SpecError(f"factor {k + 1} has shape {B.shape}, expected ({n}, {n})")
    m = len(blocks)
    dtype = np.result_type(*blocks, np.float64)
    L = np.zeros((n * m, n * m), dtype=dtype)
    for k, B in enumerate(blocks):
        row = (k - 1) % m
        L[row * n:(row + 1) * n, k * n:(k + 1) * n] = B
    return LinearizationMatrix(values=L, block_size=n, n_blocks=m)


def cyclic_products(blocks) -> list[np.ndarray]:
    """Diagonal blocks of ``L^m``: ``X_{k+1} X_{k+2} ... X_k`` for k = 1..m (cyclically)."""
    blocks = [np.asarray(B) for B in blocks]
    m = len(blocks)
    out = []
    for start in range(m):
        # row block `start` of L holds X_{start+2}; walking m steps gives the product
        P = blocks[(start + 1) % m]
        for step in range(2, m + 1):
            P = P @ blocks[(start + step) % m]
        out.append(P)
    return out


def greedy_pairing_distance(a, b) -> float:
    """Max distance of a greedy nearest-neighbour matching between two multisets.

    Pairs are fixed in increasing order of distance; each point is used once.
    Returns ``inf`` when the sizes differ.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    dist = np.abs(a[:, None] - b[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used_a = np.zeros(a.size, bool)
    used_b = np.zeros(b.size, bool)
    worst, matched = 0.0, 0
    for flat in order:
        i, j = divmod(int(flat), b.size)
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        worst = max(worst, float(dist[i, j]))
        matched += 1
        if matched == a.size:
            break
    return worst
