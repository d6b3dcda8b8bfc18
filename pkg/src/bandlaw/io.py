"""JSON and CSV formats for specs, matrices, spectra and Dyson tables.

Floats are written with ``repr`` so every file round-trips exactly and two
runs on the same input produce byte-identical output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dyson import FreeStieltjesSolution
from .ensembles import EnsembleSpec
from .spectra import SpectralSample

__all__ = [
    "fmt",
    "parse_complex",
    "complex_to_json",
    "save_spec",
    "load_spec",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_spectral_csv",
    "read_spectral_csv",
    "write_dyson_csv",
    "SPECTRAL_COLUMNS",
    "DYSON_COLUMNS",
]

SPECTRAL_COLUMNS = ["index", "eig_re", "eig_im", "sigma", "infnorm"]
DYSON_COLUMNS = [
    "z_re", "z_im", "eta_re", "eta_im",
    "a_re", "a_im", "b_re", "b_im", "c_re", "c_im", "m_re", "m_im",
    "iterations", "residual",
]


def fmt(x) -> str:
    """Shortest round-trip text for a float; ``-0.0`` is written as ``0.0``."""
    x = float(x)
    return repr(x + 0.0)


def parse_complex(value) -> complex:
    """Accept a number, ``[re, im]`` pair, or a string such as ``"0.5+0.5j"``."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pair must have two entries, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real + 0.0, z.imag + 0.0]


def save_spec(spec: EnsembleSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")


def load_spec(path) -> EnsembleSpec:
    return EnsembleSpec.from_dict(json.loads(Path(path).read_text()))


def write_matrix_csv(M, path) -> None:
    """Dense row-major CSV; every cell is the text ``re,im``."""
    M = np.asarray(M)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in M:
            writer.writerow([f"{fmt(v.real)},{fmt(v.imag)}" for v in row.astype(complex)])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != out.shape[1]:
            raise ValueError(f"row {i} has {len(row)} cells, expected {out.shape[1]}")
        for j, cell in enumerate(row):
            re, im = cell.split(",")
            out[i, j] = complex(float(re), float(im))
    if out.size and np.all(out.imag == 0):
        return out.real.copy()
    return out


def write_spectral_csv(sample: SpectralSample, path) -> None:
    n = sample.n
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPECTRAL_COLUMNS)
        for i in range(n):
            lam = complex(sample.eigenvalues[i])
            sigma = fmt(sample.singular_values[i]) if i < len(sample.singular_values) else ""
            inf = ""
            if sample.eigenvector_infnorms is not None:
                inf = fmt(sample.eigenvector_infnorms[i])
            writer.writerow([i, fmt(lam.real), fmt(lam.imag), sigma, inf])


def read_spectral_csv(path) -> SpectralSample:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SPECTRAL_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    eigs = np.array([complex(float(r["eig_re"]), float(r["eig_im"])) for r in rows])
    sigma = np.array([float(r["sigma"]) for r in rows if r["sigma"] != ""])
    inf = None
    if rows and all(r["infnorm"] != "" for r in rows):
        inf = np.array([float(r["infnorm"]) for r in rows])
    return SpectralSample(eigenvalues=eigs, singular_values=sigma, eigenvector_infnorms=inf)


def write_dyson_csv(solutions: list[FreeStieltjesSolution], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DYSON_COLUMNS)
        for s in solutions:
            row = []
            for v in (s.z, s.eta, s.a, s.b, s.c, s.m):
                row += [fmt(v.real), fmt(v.imag)]
            writer.writerow(row + [s.iterations, fmt(s.residual)])
