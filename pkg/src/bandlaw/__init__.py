"""Seeded Monte Carlo laboratory for the circular law of random band matrices.

Modules
-------
ensembles      variance profiles and samplers (block band, periodic band,
               doubly stochastic profiles, product linearization, i.i.d.)
hermitization  ``X - z``, the Hermitian dilation and the product linearization
spectra        eigenvalues, singular values, Stieltjes transforms, resolvent diagonals
dyson          scalar Dyson system for the free Stieltjes transform
metrics        Kolmogorov distances, log-potentials, floors and thresholds
lab            experiment configs, the trial runner and the CLI back end
"""

from .dyson import FreeStieltjesSolution, semicircle_reference, solve_free_stieltjes
from .ensembles import (
    AtomSpec,
    EnsembleSpec,
    VarianceProfile,
    build_variance_profile,
    check_doubly_stochastic,
    sample_matrix,
    truncate_atom,
)
from .exceptions import DysonConvergenceError, SingularSampleError, SpecError, SpectralError
from .hermitization import dilate, hermitize, linearize_product, shift

__version__ = "0.1.0"

__all__ = [
    "AtomSpec",
    "DysonConvergenceError",
    "EnsembleSpec",
    "FreeStieltjesSolution",
    "SingularSampleError",
    "SpecError",
    "SpectralError",
    "VarianceProfile",
    "build_variance_profile",
    "check_doubly_stochastic",
    "dilate",
    "hermitize",
    "linearize_product",
    "sample_matrix",
    "semicircle_reference",
    "shift",
    "solve_free_stieltjes",
    "truncate_atom",
]
