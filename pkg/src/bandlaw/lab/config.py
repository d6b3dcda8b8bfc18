"""Experiment configuration and its JSON form."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..ensembles import EnsembleSpec
from ..exceptions import SpecError
from ..io import complex_to_json, parse_complex

__all__ = ["ExperimentConfig", "DEFAULT_PARAMS"]

# knobs read by individual metrics; any key given in the config overrides these
DEFAULT_PARAMS: dict[str, float] = {
    "c": 0.1,  # exponent n^c in delocalization and truncation thresholds
    "truncation_c": 0.05,
    "rigidity_length": 0.2,
    "rigidity_step": 0.01,
    "rigidity_window": 5.0,
    "floor_R": 2.0,
    "floor_kappa": 0.1,
}


@dataclass
class ExperimentConfig:
    """One seeded batch of trials.

    ``thresholds`` maps a metric name to an upper bound on its per-trial
    value; a threshold passes when at least ``pass_fraction`` of the
    successful trial values are within it.  Metrics that depend on ``eta``
    are reported as ``name(eta=...)`` and share the threshold of ``name``.
    """

    ensemble: EnsembleSpec
    shifts: list[complex] = field(default_factory=lambda: [0j])
    etas: list[complex] = field(default_factory=list)
    trials: int = 1
    master_seed: int = 0
    metrics: list[str] = field(default_factory=list)
    thresholds: dict[str, float] = field(default_factory=dict)
    output_dir: str = "run"
    pass_fraction: float = 1.0
    params: dict[str, float] = field(default_factory=dict)
    n_jobs: int = 1
    save_spectra: bool = False

    def __post_init__(self):
        self.shifts = [parse_complex(z) for z in self.shifts]
        self.etas = [parse_complex(e) for e in self.etas]
        self.metrics = list(self.metrics)
        self.thresholds = {str(k): float(v) for k, v in self.thresholds.items()}
        self.params = {str(k): float(v) for k, v in self.params.items()}
        self.validate()

    def validate(self) -> None:
        from .runner import METRICS

        if not isinstance(self.ensemble, EnsembleSpec):
            raise SpecError("ensemble must be an EnsembleSpec")
        if int(self.trials) != self.trials or self.trials < 1:
            raise SpecError(f"trials must be a positive integer, got {self.trials}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2**64:
            raise SpecError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.n_jobs) != self.n_jobs or self.n_jobs < 1:
            raise SpecError(f"n_jobs must be a positive integer, got {self.n_jobs}")
        if not 0 < self.pass_fraction <= 1:
            raise SpecError(f"pass_fraction must lie in (0, 1], got {self.pass_fraction}")
        unknown = [m for m in self.metrics if m not in METRICS]
        if unknown:
            raise SpecError(f"unknown metric names {unknown}; registered: {sorted(METRICS)}")
        if len(set(self.metrics)) != len(self.metrics):
            raise SpecError("duplicate metric names")
        stray = [k for k in self.thresholds if k not in self.metrics]
        if stray:
            raise SpecError(f"thresholds for metrics that are not requested: {stray}")
        bad_eta = [e for e in self.etas if not e.imag > 0]
        if bad_eta:
            raise SpecError(f"every eta needs Im(eta) > 0, got {bad_eta}")
        if any(METRICS[m].per_eta for m in self.metrics) and not self.etas:
            raise SpecError("an eta-dependent metric was requested but etas is empty")
        if any(METRICS[m].per_z for m in self.metrics) and not self.shifts:
            raise SpecError("a z-dependent metric was requested but shifts is empty")
        unknown_params = set(self.params) - set(DEFAULT_PARAMS)
        if unknown_params:
            raise SpecError(f"unknown params {sorted(unknown_params)}; known: {sorted(DEFAULT_PARAMS)}")

    def param(self, name: str) -> float:
        return self.params.get(name, DEFAULT_PARAMS[name])

    def to_dict(self) -> dict[str, Any]:
        return {
            "ensemble": self.ensemble.to_dict(),
            "shifts": [complex_to_json(z) for z in self.shifts],
            "etas": [complex_to_json(e) for e in self.etas],
            "trials": int(self.trials),
            "master_seed": int(self.master_seed),
            "metrics": list(self.metrics),
            "thresholds": dict(self.thresholds),
            "output_dir": str(self.output_dir),
            "pass_fraction": float(self.pass_fraction),
            "params": dict(self.params),
            "n_jobs": int(self.n_jobs),
            "save_spectra": bool(self.save_spectra),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise SpecError("experiment config must be a JSON object")
        known = {
            "ensemble", "shifts", "etas", "trials", "master_seed", "metrics", "thresholds",
            "output_dir", "pass_fraction", "params", "n_jobs", "save_spectra",
        }
        extra = set(data) - known
        if extra:
            raise SpecError(f"unknown config fields: {sorted(extra)}")
        if "ensemble" not in data:
            raise SpecError("config needs an 'ensemble'")
        data = dict(data)
        data["ensemble"] = EnsembleSpec.from_dict(data["ensemble"])
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()
