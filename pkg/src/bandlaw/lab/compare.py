"""Monte Carlo Stieltjes transforms against the free (Dyson) limit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dyson import solve_free_stieltjes
from ..ensembles import EnsembleSpec, build_variance_profile, sample_matrix
from ..hermitization import shift
from ..metrics import stieltjes_envelope
from ..spectra import singular_values
from .runner import seed_for_trial

__all__ = ["FreeDeviation", "compare_to_free"]


@dataclass(frozen=True)
class FreeDeviation:
    z: complex
    eta: complex
    empirical: complex
    free: complex
    deviation: float
    envelope: float


def compare_to_free(
    spec: EnsembleSpec,
    zs,
    etas,
    trials: int = 20,
    master_seed: int = 0,
    constant: float = 10.0,
) -> list[FreeDeviation]:
    """Trial-averaged ``m_z(eta)`` of the dilation versus ``m_free(z, eta)``.

    The dilation spectrum is taken as ``{+-sigma_i(X - z)}``, which is the
    same multiset as the eigenvalues of the ``2n x 2n`` matrix.  Each row
    carries the envelope
    ``(log n)^3 / (sqrt(b_n) Im(eta)^2) + constant / (b_n Im(eta)^5)``.
    """
    zs = [complex(z) for z in zs]
    etas = [complex(e) for e in etas]
    if any(not e.imag > 0 for e in etas):
        raise ValueError("every eta needs Im(eta) > 0")
    profile = build_variance_profile(spec)
    sums = np.zeros((len(zs), len(etas)), dtype=complex)
    for t in range(trials):
        X = sample_matrix(spec, seed_for_trial(master_seed, t), t, profile=profile).values
        for i, z in enumerate(zs):
            s = singular_values(shift(X, z))
            spectrum = np.concatenate([-s, s])
            for j, eta in enumerate(etas):
                sums[i, j] += np.mean(1.0 / (spectrum - eta))
    means = sums / trials
    rows = []
    for i, z in enumerate(zs):
        for j, eta in enumerate(etas):
            free = solve_free_stieltjes(z, eta).m
            rows.append(
                FreeDeviation(
                    z=z,
                    eta=eta,
                    empirical=complex(means[i, j]),
                    free=free,
                    deviation=float(abs(means[i, j] - free)),
                    envelope=stieltjes_envelope(profile.b_n, spec.dim, eta.imag, constant),
                )
            )
    return rows
