"""Dense spectral routines: eigenvalues, singular values, resolvents and counts."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SpecError, SpectralError
from .hermitization import DilationMatrix, dilate, shift

__all__ = [
    "SpectralSample",
    "DegenerateSpectrumWarning",
    "LOG_FLOOR",
    "singular_values",
    "eigenvalues",
    "hermitian_spectrum",
    "dilation_spectrum",
    "empirical_stieltjes",
    "stieltjes_from_eigenvalues",
    "green_diagonal",
    "eigenvector_max_infnorm",
    "interval_count",
    "spectral_sample",
]

# magnitudes are floored here before any logarithm
LOG_FLOOR = 1e-300
DEGENERACY_GAP = 1e-10


class DegenerateSpectrumWarning(RuntimeWarning):
    """Eigenvalues closer than the degeneracy gap; eigenvectors are not unique."""


def _square(M):
    M = np.asarray(M.values if isinstance(M, DilationMatrix) else M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpecError(f"expected a square matrix, got shape {M.shape}")
    return M


def _finite(values, what):
    if not np.all(np.isfinite(values)):
        raise SpectralError(f"{what} returned non-finite values")
    return values


def _call(fn, what, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"{what} did not converge: {exc}") from exc


def singular_values(M) -> np.ndarray:
    """Singular values in decreasing order.

    For a :class:`DilationMatrix` they are read off the nonnegative half of
    its Hermitian spectrum; otherwise a direct SVD is used.
    """
    if isinstance(M, DilationMatrix):
        evals = hermitian_spectrum(M)[0]
        sigma = np.abs(evals[M.n:])[::-1]
        return np.sort(sigma)[::-1]
    M = _square(M)
    if M.shape[0] == 0:
        return np.zeros(0)
    sigma = _call(np.linalg.svd, "SVD", M, compute_uv=False)
    return _finite(sigma, "SVD")


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues (with multiplicity) of a general square matrix."""
    M = _square(M)
    return _finite(_call(np.linalg.eigvals, "eigvals", M), "eigvals").astype(complex)


def hermitian_spectrum(Y, want_vectors: bool = False):
    """Real eigenvalues sorted increasingly, plus orthonormal eigenvectors if asked.

    Returns
    -------
    evals : ndarray of float
    evecs : ndarray or None
        Columns are eigenvectors.
    """
    Y = _square(Y)
    if want_vectors:
        evals, evecs = _call(np.linalg.eigh, "eigh", Y)
        return _finite(evals, "eigh"), evecs
    return _finite(_call(np.linalg.eigvalsh, "eigvalsh", Y), "eigvalsh"), None


def dilation_spectrum(X, z: complex = 0.0, *, via: str = "svd") -> np.ndarray:
    """Spectrum of the dilation of ``X - zI`` as the sorted multiset ``{+-sigma_i}``.

    ``via="svd"`` never forms the ``2n x 2n`` matrix; ``via="eigh"`` does and
    diagonalizes it.  Both return the same multiset.
    """
    if via == "eigh":
        return hermitian_spectrum(dilate(shift(X, z), z))[0]
    if via != "svd":
        raise ValueError(f"via must be 'svd' or 'eigh', got {via!r}")
    sigma = singular_values(shift(X, z))
    return np.concatenate([-sigma, sigma[::-1]])


def stieltjes_from_eigenvalues(evals, eta: complex) -> complex:
    """``mean(1 / (lambda_j - eta))`` over a real spectrum."""
    eta = complex(eta)
    if not eta.imag > 0:
        raise ValueError(f"Stieltjes transform needs Im(eta) > 0, got {eta}")
    evals = np.asarray(evals)
    if evals.size == 0:
        raise ValueError("empty spectrum")
    return complex(np.mean(1.0 / (evals - eta)))


def empirical_stieltjes(Y, eta: complex) -> complex:
    """Normalized resolvent trace ``(1/2n) Tr (Y - eta)^{-1}`` of a dilation.

    Any Hermitian matrix is accepted; the normalization is by its size.
    """
    evals = hermitian_spectrum(Y)[0]
    return stieltjes_from_eigenvalues(evals, eta)


def green_diagonal(Y, eta: complex) -> np.ndarray:
    """Diagonal of ``(Y - eta)^{-1}`` computed from the eigendecomposition."""
    eta = complex(eta)
    if not eta.imag > 0:
        raise ValueError(f"resolvent needs Im(eta) > 0, got {eta}")
    evals, evecs = hermitian_spectrum(Y, want_vectors=True)
    weights = np.abs(evecs) ** 2
    return weights @ (1.0 / (evals - eta))


def eigenvector_max_infnorm(M, *, return_reliable: bool = False):
    """Largest sup-norm among the unit eigenvectors of a general square matrix.

    The result lies in ``[n^{-1/2}, 1]``.  When two eigenvalues are closer
    than ``1e-10`` the eigenvectors inside that cluster are not well defined;
    a :class:`DegenerateSpectrumWarning` is issued and, with
    ``return_reliable=True``, the flag is returned alongside the value.
    """
    M = _square(M)
    n = M.shape[0]
    evals, evecs = _call(np.linalg.eig, "eig", M)
    _finite(evals, "eig")
    evecs = evecs / np.linalg.norm(evecs, axis=0, keepdims=True)
    value = float(np.max(np.abs(evecs)))
    reliable = True
    if n > 1:
        # sort by real part, then compare neighbours within a real-part window
        order = np.argsort(evals.real, kind="stable")
        ev = evals[order]
        for k in range(n - 1):
            j = k + 1
            while j < n and ev[j].real - ev[k].real < DEGENERACY_GAP:
                if abs(ev[j] - ev[k]) < DEGENERACY_GAP:
                    reliable = False
                    break
                j += 1
            if not reliable:
                break
    if not reliable:
        warnings.warn(
            "eigenvalue cluster with gap < 1e-10; eigenvector sup-norm is unreliable",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    return (value, reliable) if return_reliable else value


def interval_count(eigs, a: float, b: float) -> int:
    """Number of values in the closed interval ``[a, b]``."""
    if a > b:
        raise ValueError(f"interval endpoints out of order: [{a}, {b}]")
    eigs = np.sort(np.asarray(eigs, dtype=float))
    return int(np.searchsorted(eigs, b, side="right") - np.searchsorted(eigs, a, side="left"))


@dataclass
class SpectralSample:
    """Spectrum of one sampled matrix.

    ``eigenvector_infnorms`` holds the sup-norm of each unit eigenvector, in
    the same order as ``eigenvalues``.
    """

    eigenvalues: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    eigenvector_infnorms: np.ndarray | None = field(default=None, repr=False)
    spec: object = None
    seed: int | None = None
    trial: int | None = None

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def spectral_sample(M, *, vectors: bool = False, spec=None, seed=None, trial=None) -> SpectralSample:
    """Eigenvalues, singular values and optionally eigenvector sup-norms of ``M``."""
    M = _square(M)
    if vectors:
        evals, evecs = _call(np.linalg.eig, "eig", M)
        _finite(evals, "eig")
        evecs = evecs / np.linalg.norm(evecs, axis=0, keepdims=True)
        infnorms = np.max(np.abs(evecs), axis=0)
    else:
        evals, infnorms = eigenvalues(M), None
    return SpectralSample(
        eigenvalues=np.asarray(evals, dtype=complex),
        singular_values=singular_values(M),
        eigenvector_infnorms=infnorms,
        spec=spec,
        seed=seed,
        trial=trial,
    )
