"""Variance profiles and seeded samplers for band and doubly stochastic ensembles.

Every model here is written as ``X = B * Xi`` (entrywise), where ``B`` is a
deterministic table of standard deviations whose squares form a doubly
stochastic matrix and ``Xi`` has i.i.d. standardized atoms.  Sampling is keyed
by ``(seed, trial, stream)`` through a counter-based Philox generator, so
any trial can be regenerated alone and trials can run in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .exceptions import SpecError

__all__ = [
    "ATOM_FAMILIES",
    "ENSEMBLE_KINDS",
    "AtomSpec",
    "EnsembleSpec",
    "VarianceProfile",
    "SampledMatrix",
    "DoublyStochasticReport",
    "build_variance_profile",
    "sample_matrix",
    "truncate_atom",
    "check_doubly_stochastic",
    "random_doubly_stochastic_profile",
    "trial_generator",
]

ATOM_FAMILIES = (
    "real-gaussian",
    "complex-gaussian",
    "rademacher",
    "uniform-symmetric",
    "bernoulli-symmetric",
)

ENSEMBLE_KINDS = (
    "block-band",
    "periodic-band",
    "general-profile",
    "product-linearization",
    "iid-gaussian",
)

PROFILE_TOL = 1e-12


@dataclass(frozen=True)
class AtomSpec:
    """Distribution of the scalar atom ``xi`` (mean zero, unit second moment).

    Parameters
    ----------
    family : str
        One of :data:`ATOM_FAMILIES`. ``complex-gaussian`` has independent
        real and imaginary parts of variance 1/2 each.
        ``bernoulli-symmetric`` takes the values ``+-1/sqrt(p)`` with
        probability ``p/2`` each and 0 otherwise.
    subgaussian_constant : float, optional
        The constant ``K`` with ``E exp(|xi|^2 / K^2) <= 2``. Metadata only.
    density_bound : float, optional
        Upper bound on the density of ``xi`` (or of its real and imaginary
        parts). Metadata only.
    truncation : float, optional
        If set, draws are replaced by ``xi * 1{|xi| <= truncation}``.
    p : float
        Nonzero probability of ``bernoulli-symmetric``.
    """

    family: str = "real-gaussian"
    subgaussian_constant: float | None = None
    density_bound: float | None = None
    truncation: float | None = None
    p: float = 0.5

    def __post_init__(self):
        if self.family not in ATOM_FAMILIES:
            raise SpecError(
                f"unknown atom family {self.family!r}; expected one of {ATOM_FAMILIES}"
            )
        if self.truncation is not None and not self.truncation > 0:
            raise SpecError(f"truncation threshold must be positive, got {self.truncation}")
        if not 0 < self.p <= 1:
            raise SpecError(f"bernoulli nonzero probability must lie in (0, 1], got {self.p}")
        for name in ("subgaussian_constant", "density_bound"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise SpecError(f"{name} must be positive when given, got {value}")

    @property
    def is_complex(self) -> bool:
        return self.family == "complex-gaussian"

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw i.i.d. atoms of the given shape."""
        fam = self.family
        if fam == "real-gaussian":
            out = rng.standard_normal(size)
        elif fam == "complex-gaussian":
            re = rng.standard_normal(size)
            im = rng.standard_normal(size)
            out = (re + 1j * im) * np.sqrt(0.5)
        elif fam == "rademacher":
            out = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        elif fam == "uniform-symmetric":
            out = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
        else:
            u = rng.random(size)
            amp = 1.0 / np.sqrt(self.p)
            out = np.where(u < self.p / 2, -amp, np.where(u < self.p, amp, 0.0))
        if self.truncation is not None:
            out = np.where(np.abs(out) <= self.truncation, out, 0)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "subgaussian_constant": self.subgaussian_constant,
            "density_bound": self.density_bound,
            "truncation": self.truncation,
            "p": self.p,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AtomSpec":
        known = {"family", "subgaussian_constant", "density_bound", "truncation", "p"}
        extra = set(data) - known
        if extra:
            raise SpecError(f"unknown atom fields: {sorted(extra)}")
        return cls(**data)


def truncate_atom(atom: AtomSpec, threshold: float) -> AtomSpec:
    """Return ``atom`` hard-truncated at ``threshold``.

    Draws with ``|xi| > threshold`` become 0. A second truncation keeps the
    smaller of the two thresholds.
    """
    if not threshold > 0:
        raise SpecError(f"truncation threshold must be positive, got {threshold}")
    if atom.truncation is not None:
        threshold = min(threshold, atom.truncation)
    return replace(atom, truncation=float(threshold))


@dataclass
class EnsembleSpec:
    """Which matrix model to sample.

    Use the constructors :meth:`block_band`, :meth:`periodic_band`,
    :meth:`general`, :meth:`product` and :meth:`iid` rather than filling
    fields by hand. For ``product-linearization`` the sampled matrix is the
    ``(n*m) x (n*m)`` cyclic block linearization of ``m`` independent
    ``n x n`` factors with entries ``xi / sqrt(n)``.
    """

    kind: str
    n: int
    b: int | None = None
    d: int | None = None
    m: int | None = None
    profile: np.ndarray | None = field(default=None, repr=False)
    atom: AtomSpec = field(default_factory=AtomSpec)

    def __post_init__(self):
        if self.profile is not None:
            self.profile = np.asarray(self.profile, dtype=float)
        self.validate()

    @classmethod
    def block_band(cls, n, b, atom=None):
        return cls("block-band", n=n, b=b, atom=atom or AtomSpec())

    @classmethod
    def periodic_band(cls, n, d, atom=None):
        return cls("periodic-band", n=n, d=d, atom=atom or AtomSpec())

    @classmethod
    def general(cls, profile, atom=None):
        profile = np.asarray(profile, dtype=float)
        return cls("general-profile", n=profile.shape[0], profile=profile, atom=atom or AtomSpec())

    @classmethod
    def product(cls, n, m, atom=None):
        return cls("product-linearization", n=n, m=m, atom=atom or AtomSpec())

    @classmethod
    def iid(cls, n, atom=None):
        return cls("iid-gaussian", n=n, atom=atom or AtomSpec())

    @property
    def dim(self) -> int:
        """Side length of the sampled matrix."""
        if self.kind == "product-linearization":
            return self.n * self.m
        return self.n

    def validate(self) -> None:
        kind, n = self.kind, self.n
        if kind not in ENSEMBLE_KINDS:
            raise SpecError(f"unknown ensemble kind {kind!r}; expected one of {ENSEMBLE_KINDS}")
        if not isinstance(self.atom, AtomSpec):
            raise SpecError("atom must be an AtomSpec")
        if int(n) != n or n < 1:
            raise SpecError(f"n must be a positive integer, got {n}")
        if kind == "block-band":
            b = self.b
            if b is None or int(b) != b or b < 1:
                raise SpecError(f"block-band needs a positive integer block width b, got {b}")
            if n % b:
                raise SpecError(f"block-band requires b | n, got n={n}, b={b}")
            if n // b < 3:
                raise SpecError(
                    f"block-band requires at least 3 blocks (n/b >= 3) so the "
                    f"D/U/T blocks do not overlap, got n/b={n // b}"
                )
        elif kind == "periodic-band":
            d = self.d
            if d is None or int(d) != d or d < 1:
                raise SpecError(f"periodic-band needs a positive integer bandwidth d, got {d}")
            if (d - 1) % 2:
                raise SpecError(f"periodic-band requires (d-1)/2 to be an integer, got d={d}")
            if d > n:
                raise SpecError(f"periodic-band requires d <= n, got d={d}, n={n}")
        elif kind == "product-linearization":
            m = self.m
            if m is None or int(m) != m or m < 1:
                raise SpecError(f"product-linearization needs a positive integer m, got {m}")
        elif kind == "general-profile":
            prof = self.profile
            if prof is None or prof.ndim != 2 or prof.shape[0] != prof.shape[1]:
                raise SpecError("general-profile needs a square profile table")
            if prof.shape[0] != n:
                raise SpecError(f"profile is {prof.shape[0]}x{prof.shape[0]} but n={n}")
            if not np.all(np.isfinite(prof)) or np.any(prof < 0):
                raise SpecError("general-profile entries b_ij must be finite and nonnegative")
            report = check_doubly_stochastic(prof, PROFILE_TOL)
            if not report.passed:
                raise SpecError(
                    "general-profile squared table is not doubly stochastic: "
                    f"row {report.worst_row} deviates by {report.max_row_deviation:.3e}, "
                    f"column {report.worst_col} by {report.max_col_deviation:.3e}"
                )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "n": int(self.n)}
        for key in ("b", "d", "m"):
            value = getattr(self, key)
            if value is not None:
                out[key] = int(value)
        if self.profile is not None:
            out["profile"] = self.profile.tolist()
        out["atom"] = self.atom.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EnsembleSpec":
        data = dict(data)
        extra = set(data) - {"kind", "n", "b", "d", "m", "profile", "atom"}
        if extra:
            raise SpecError(f"unknown ensemble fields: {sorted(extra)}")
        if "kind" not in data:
            raise SpecError("ensemble needs a 'kind'")
        atom = AtomSpec.from_dict(data.pop("atom", {}) or {})
        if data.get("profile") is not None and "n" not in data:
            data["n"] = len(data["profile"])
        if "n" not in data:
            raise SpecError("ensemble needs 'n'")
        return cls(atom=atom, **data)


@dataclass(frozen=True)
class VarianceProfile:
    """Table of entry standard deviations ``b_ij``."""

    entries: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def squared(self) -> np.ndarray:
        return self.entries**2

    @property
    def b_n(self) -> float:
        """``1 / max b_ij^2``, the effective bandwidth."""
        return 1.0 / float(np.max(self.squared))

    @property
    def support(self) -> np.ndarray:
        return self.entries > 0


@dataclass(frozen=True)
class DoublyStochasticReport:
    max_row_deviation: float
    max_col_deviation: float
    worst_row: int
    worst_col: int
    passed: bool


def check_doubly_stochastic(profile, tol: float = PROFILE_TOL) -> DoublyStochasticReport:
    """Check that every row and column of ``b_ij^2`` sums to 1 within ``tol``."""
    entries = profile.entries if isinstance(profile, VarianceProfile) else np.asarray(profile, float)
    sq = entries**2
    row_dev = np.abs(sq.sum(axis=1) - 1.0)
    col_dev = np.abs(sq.sum(axis=0) - 1.0)
    worst_row = int(np.argmax(row_dev))
    worst_col = int(np.argmax(col_dev))
    max_row, max_col = float(row_dev[worst_row]), float(col_dev[worst_col])
    return DoublyStochasticReport(
        max_row_deviation=max_row,
        max_col_deviation=max_col,
        worst_row=worst_row,
        worst_col=worst_col,
        passed=max_row <= tol and max_col <= tol,
    )


def _block_band_profile(n: int, b: int) -> np.ndarray:
    m = n // b
    blocks = np.zeros((m, m))
    for i in range(m):
        blocks[i, i] = 1.0
        blocks[i, (i + 1) % m] = 1.0
        blocks[i, (i - 1) % m] = 1.0
    return np.kron(blocks, np.ones((b, b))) / np.sqrt(3.0 * b)


def _periodic_band_profile(n: int, d: int) -> np.ndarray:
    half = (d - 1) // 2
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    inside = (gap <= half) | (gap >= n - half)
    return np.where(inside, 1.0 / np.sqrt(d), 0.0)


def _product_profile(n: int, m: int) -> np.ndarray:
    # block (k, k+1) holds X_{k+2}; the corner block (m-1, 0) holds X_1
    blocks = np.zeros((m, m))
    for k in range(m):
        blocks[k, (k + 1) % m] = 1.0
    return np.kron(blocks, np.ones((n, n))) / np.sqrt(n)


def build_variance_profile(spec: EnsembleSpec) -> VarianceProfile:
    """Return the standard-deviation table of ``spec``.

    Nonzero entries are ``1/sqrt(3b)`` for block-band, ``1/sqrt(d)`` for
    periodic-band, ``1/sqrt(n)`` for the product linearization and the
    i.i.d. model; general profiles are returned as given.
    """
    spec.validate()
    kind = spec.kind
    if kind == "block-band":
        entries = _block_band_profile(spec.n, spec.b)
    elif kind == "periodic-band":
        entries = _periodic_band_profile(spec.n, spec.d)
    elif kind == "product-linearization":
        entries = _product_profile(spec.n, spec.m)
    elif kind == "iid-gaussian":
        entries = np.full((spec.n, spec.n), 1.0 / np.sqrt(spec.n))
    else:
        entries = np.array(spec.profile, dtype=float)
    entries.setflags(write=False)
    return VarianceProfile(entries)


def trial_generator(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, trial, stream)``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(stream)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SampledMatrix:
    values: np.ndarray = field(repr=False)
    spec: EnsembleSpec
    seed: int
    trial: int
    stream: int = 0


def sample_matrix(
    spec: EnsembleSpec,
    seed: int,
    trial: int,
    stream: int = 0,
    profile: VarianceProfile | None = None,
) -> SampledMatrix:
    """Draw ``x_ij = b_ij * xi_ij`` with exact zeros off the profile support.

    Atoms are drawn for all ``dim**2`` positions in row-major order, so entry
    ``(i, j)`` always consumes the same slot of the ``(seed, trial, stream)``
    stream regardless of the profile.  Real atoms give a float64 array,
    complex atoms a complex128 array.
    """
    if profile is None:
        profile = build_variance_profile(spec)
    rng = trial_generator(seed, trial, stream)
    xi = spec.atom.sample(rng, (spec.dim, spec.dim))
    values = np.where(profile.support, profile.entries * xi, 0)
    values = values.astype(np.complex128 if spec.atom.is_complex else np.float64)
    return SampledMatrix(values=values, spec=spec, seed=int(seed), trial=int(trial), stream=int(stream))


def random_doubly_stochastic_profile(n: int, n_shifts: int, seed: int = 0, spread: float = 0.5) -> np.ndarray:
    """Random inhomogeneous profile whose squares are exactly doubly stochastic.

    Squared entries are ``w_k`` at ``(P[i], Q[(i + s_k) mod n])`` for
    ``n_shifts`` distinct offsets ``s_k``, random row/column permutations
    ``P, Q`` and positive weights ``w_k`` drawn uniformly from
    ``[1 - spread, 1 + spread]`` and normalized to sum to 1.  Each row and
    column carries every weight once, so
    ``b_n >= n_shifts * (1 - spread) / (1 + spread)``.
    """
    if not 1 <= n_shifts <= n:
        raise SpecError(f"need 1 <= n_shifts <= n, got n_shifts={n_shifts}, n={n}")
    if not 0 <= spread < 1:
        raise SpecError(f"spread must lie in [0, 1), got {spread}")
    rng = np.random.default_rng(seed)
    shifts = rng.choice(n, size=n_shifts, replace=False)
    weights = rng.uniform(1 - spread, 1 + spread, n_shifts)
    weights /= weights.sum()
    rows, cols = rng.permutation(n), rng.permutation(n)
    sq = np.zeros((n, n))
    i = np.arange(n)
    for s, w in zip(shifts, weights):
        sq[rows, cols[(i + s) % n]] = w
    return np.sqrt(sq)
