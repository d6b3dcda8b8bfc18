"""Seeded trial batches: sample, hermitize, decompose, measure, persist."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .. import metrics as mt
from ..dyson import solve_free_stieltjes
from ..ensembles import AtomSpec, EnsembleSpec, build_variance_profile, sample_matrix
from ..exceptions import DysonConvergenceError, SpecError, SpectralError
from ..io import fmt, write_spectral_csv
from ..spectra import (
    LOG_FLOOR,
    eigenvector_max_infnorm,
    interval_count,
    singular_values,
    spectral_sample,
    stieltjes_from_eigenvalues,
)
from ..hermitization import shift
from .config import ExperimentConfig

__all__ = [
    "METRICS",
    "MetricDef",
    "RunRecord",
    "RunFailure",
    "seed_for_trial",
    "reference_spec",
    "run_experiment",
    "run_trial",
    "summarize",
    "load_record",
    "SEED_SCHEME",
    "METRICS_COLUMNS",
]

METRICS_COLUMNS = ["trial", "z_re", "z_im", "metric", "value", "status"]
SEED_SCHEME = (
    "trial_seed = SeedSequence(master_seed, spawn_key=(trial,)).generate_state(1, uint64)[0]; "
    "matrix = Philox(SeedSequence(trial_seed, spawn_key=(trial, stream))), "
    "stream 0 = ensemble sample, stream 1 = i.i.d. Gaussian reference; "
    "atoms drawn row-major over all dim x dim positions"
)
REFERENCE_STREAM = 1


class RunFailure(RuntimeError):
    """Fewer than half of the trials completed."""


def seed_for_trial(master_seed: int, trial: int) -> int:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial),))
    return int(seq.generate_state(1, np.uint64)[0])


def reference_spec(spec: EnsembleSpec) -> EnsembleSpec:
    """Same-size i.i.d. Gaussian reference (complex if the ensemble's atom is complex)."""
    family = "complex-gaussian" if spec.atom.is_complex else "real-gaussian"
    return EnsembleSpec.iid(spec.dim, AtomSpec(family))


class TrialContext:
    """Lazily computed quantities of one trial, shared between metrics."""

    def __init__(self, config: ExperimentConfig, trial: int):
        self.config = config
        self.trial = trial
        self.seed = seed_for_trial(config.master_seed, trial)
        self.spec = config.ensemble
        self.profile = build_variance_profile(self.spec)
        self.X = sample_matrix(self.spec, self.seed, trial, profile=self.profile).values
        self.dim = self.X.shape[0]
        self._cache: dict = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def eigs(self):
        return self._memo("eigs", lambda: self.sample.eigenvalues)

    @property
    def sample(self):
        return self._memo("sample", lambda: spectral_sample(self.X, spec=self.spec, seed=self.seed, trial=self.trial))

    @property
    def G(self):
        def draw():
            ref = reference_spec(self.spec)
            return sample_matrix(ref, self.seed, self.trial, stream=REFERENCE_STREAM).values
        return self._memo("G", draw)

    def sigma(self, z):
        return self._memo(("sigma", z), lambda: singular_values(shift(self.X, z)))

    def sigma_ref(self, z):
        return self._memo(("sigma_ref", z), lambda: singular_values(shift(self.G, z)))

    def dilation_eigs(self, z):
        def build():
            s = self.sigma(z)
            return np.concatenate([-s, s[::-1]])
        return self._memo(("dil", z), build)

    def infnorm(self):
        return self._memo("infnorm", lambda: eigenvector_max_infnorm(self.X))


@dataclass(frozen=True)
class MetricDef:
    fn: Callable
    per_z: bool = False
    per_eta: bool = False
    description: str = ""


def _smin_floor(ctx: TrialContext, z) -> mt.LogFloor | None:
    spec = ctx.spec
    if spec.kind == "block-band":
        return mt.theoretical_smin_floor("block-band", n=spec.n, b=spec.b)
    if spec.kind == "product-linearization":
        return mt.theoretical_smin_floor("product", n=spec.n, m=spec.m)
    entries = ctx.profile.entries
    sigma_star = float(entries.max())
    sigma = float(math.sqrt(max((entries**2).sum(axis=0).max(), (entries**2).sum(axis=1).max())))
    try:
        return mt.theoretical_smin_floor(
            "hadamard",
            n=ctx.dim,
            z=z,
            sigma_star=sigma_star,
            sigma=sigma,
            R=ctx.config.param("floor_R"),
            kappa=ctx.config.param("floor_kappa"),
        )
    except SpecError:
        return None


def _smin_deficit(ctx, z):
    floor = _smin_floor(ctx, z)
    if floor is None:
        return None
    return floor.log_value - _smin_log(ctx, z)


def _smin_log(ctx, z):
    return math.log(max(float(ctx.sigma(z)[-1]), LOG_FLOOR))


def _kolmogorov(ctx, z):
    return mt.kolmogorov_distance(
        mt.EmpiricalMeasure.squared_singular_values(ctx.sigma(z)),
        mt.EmpiricalMeasure.squared_singular_values(ctx.sigma_ref(z)),
    )


def _rigidity_ratio(ctx, z):
    cfg = ctx.config
    length, step, half = cfg.param("rigidity_length"), cfg.param("rigidity_step"), cfg.param("rigidity_window")
    eigs = ctx.dilation_eigs(z)
    n = ctx.dim
    starts = np.arange(-half, half - length + 1e-12, step)
    worst = max(interval_count(eigs, a, a + length) for a in starts)
    return worst / (n * length)


def _stieltjes_deviation(ctx, z, eta):
    empirical = stieltjes_from_eigenvalues(ctx.dilation_eigs(z), eta)
    free = solve_free_stieltjes(z, eta).m
    return abs(empirical - free)


def _delocalization_excess(ctx):
    gaussian = ctx.spec.atom.family in ("real-gaussian", "complex-gaussian")
    bound = mt.delocalization_threshold(ctx.profile.b_n, ctx.dim, ctx.config.param("c"), gaussian)
    return ctx.infnorm() - bound


def _log_tail(ctx, z):
    gaussian = ctx.spec.atom.family in ("real-gaussian", "complex-gaussian")
    cut = mt.truncation_threshold(ctx.profile.b_n, ctx.dim, ctx.config.param("truncation_c"), gaussian)
    return mt.truncated_log_split(ctx.sigma(z), cut)[1]


METRICS: dict[str, MetricDef] = {
    "disk_law_distance": MetricDef(lambda ctx: mt.disk_law_distance(ctx.eigs), description="radial distance to the uniform disk law"),
    "angular_bias": MetricDef(lambda ctx: mt.angular_bias(ctx.eigs), description="|mean of e^{i arg lambda}| (diagnostic)"),
    "log_potential": MetricDef(lambda ctx, z: mt.log_potential(ctx.sigma(z)), per_z=True),
    "log_potential_error": MetricDef(
        lambda ctx, z: abs(mt.log_potential(ctx.sigma(z)) - mt.uniform_disk_log_potential(z)), per_z=True,
        description="|log-potential of X_z - uniform disk log-potential|",
    ),
    "reference_log_potential_error": MetricDef(
        lambda ctx, z: abs(mt.log_potential(ctx.sigma_ref(z)) - mt.uniform_disk_log_potential(z)), per_z=True,
        description="|log-potential of G_z - uniform disk log-potential|",
    ),
    "replacement_gap": MetricDef(lambda ctx, z: mt.replacement_gap(ctx.sigma(z), ctx.sigma_ref(z)), per_z=True),
    "kolmogorov": MetricDef(_kolmogorov, per_z=True, description="Kolmogorov distance of squared singular values vs Gaussian reference"),
    "smin_log": MetricDef(_smin_log, per_z=True),
    "smin_floor_deficit": MetricDef(_smin_deficit, per_z=True, description="theoretical log-floor minus observed log s_min (<= 0 means above floor)"),
    "log_tail": MetricDef(_log_tail, per_z=True, description="truncated small-singular-value part of the log-potential"),
    "rigidity_ratio": MetricDef(_rigidity_ratio, per_z=True, description="max interval count / (n |I|) over a sliding window"),
    "stieltjes_deviation": MetricDef(_stieltjes_deviation, per_z=True, per_eta=True),
    "eigvec_infnorm": MetricDef(lambda ctx: ctx.infnorm()),
    "delocalization_excess": MetricDef(_delocalization_excess, description="max eigenvector sup-norm minus threshold (<= 0 passes)"),
}


def _eta_label(name, eta):
    eta = complex(eta)
    return f"{name}(eta={fmt(eta.real)}{'+' if eta.imag >= 0 else '-'}{fmt(abs(eta.imag))}j)"


def base_metric(name: str) -> str:
    return name.split("(", 1)[0]


def run_trial(config_dict: dict, trial: int):
    """Compute every requested metric of one trial.

    Returns ``(trial, rows, error)`` where ``rows`` are metrics.csv rows
    (without the trial column) and ``error`` is None or a message.
    """
    config = ExperimentConfig.from_dict(config_dict)
    rows: list[tuple] = []
    error = None
    try:
        ctx = TrialContext(config, trial)
    except (SpectralError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return trial, rows, f"sampling failed: {exc}", None
    nan = float("nan")
    for name in config.metrics:
        mdef = METRICS[name]
        zs = config.shifts if mdef.per_z else [complex(nan, nan)]
        for z in zs:
            etas = config.etas if mdef.per_eta else [None]
            for eta in etas:
                label = _eta_label(name, eta) if eta is not None else name
                args = [ctx] + ([z] if mdef.per_z else []) + ([eta] if eta is not None else [])
                try:
                    value = mdef.fn(*args)
                    status = "ok" if value is not None else "n/a"
                    value = nan if value is None else float(value)
                except (SpectralError, DysonConvergenceError, np.linalg.LinAlgError) as exc:
                    value, status = nan, "failed"
                    error = error or f"{label}: {exc}"
                rows.append((z, label, value, status))
    spectra = None
    if config.save_spectra:
        spectra = ctx.sample
    return trial, rows, error, spectra


@dataclass
class RunRecord:
    """What a completed run reports; stored in ``manifest.json``."""

    digest: str
    trial_seeds: list[int]
    aggregates: dict[str, dict[str, float]]
    verdicts: dict[str, dict]
    failed_trials: list[int]
    n_trials: int
    wall_clock: float
    seed_scheme: str = SEED_SCHEME
    config: dict = field(default_factory=dict)
    output_dir: str | None = None

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts.values())

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _aggregate(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return {"count": 0}
    q5, q50, q95 = np.quantile(values, [0.05, 0.5, 0.95])
    return {
        "count": int(values.size),
        "mean": float(values.mean()),
        "std": float(values.std()),
        "min": float(values.min()),
        "max": float(values.max()),
        "q05": float(q5),
        "q50": float(q50),
        "q95": float(q95),
    }


def _write_metrics_csv(path, results):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for trial, rows, _, _ in results:
            for z, label, value, status in rows:
                writer.writerow([trial, fmt(z.real), fmt(z.imag), label, fmt(value), status])


def run_experiment(config: ExperimentConfig, output_dir=None, n_jobs: int | None = None) -> RunRecord:
    """Run all trials, persist ``manifest.json`` and ``metrics.csv``, return the record.

    Trials are independent and may run in a process pool; results are
    sorted by trial index before anything is written, so the output does
    not depend on scheduling.  Trials with any failed metric are excluded
    from aggregates.  Raises :class:`RunFailure` if fewer than half succeed.
    """
    start = time.perf_counter()
    config.validate()
    outdir = Path(output_dir if output_dir is not None else config.output_dir)
    jobs = n_jobs if n_jobs is not None else config.n_jobs
    cfg = config.to_dict()
    if jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_trial, [cfg] * config.trials, range(config.trials)))
    else:
        results = [run_trial(cfg, t) for t in range(config.trials)]
    results.sort(key=lambda r: r[0])

    failed = [t for t, _, err, _ in results if err is not None]
    by_metric: dict[str, list[float]] = {}
    for trial, rows, err, _ in results:
        if err is not None:
            continue
        for _, label, value, status in rows:
            if status == "ok":
                by_metric.setdefault(label, []).append(value)
    aggregates = {name: _aggregate(vals) for name, vals in sorted(by_metric.items())}

    verdicts = {}
    for name, bound in sorted(config.thresholds.items()):
        vals = [v for label, vs in by_metric.items() if base_metric(label) == name for v in vs]
        frac = float(np.mean(np.asarray(vals) <= bound)) if vals else 0.0
        verdicts[name] = {
            "threshold": bound,
            "fraction_within": frac,
            "required_fraction": config.pass_fraction,
            "worst": float(max(vals)) if vals else float("nan"),
            "passed": bool(vals) and frac >= config.pass_fraction,
        }

    outdir.mkdir(parents=True, exist_ok=True)
    _write_metrics_csv(outdir / "metrics.csv", results)
    if config.save_spectra:
        for trial, _, _, sample in results:
            if sample is not None:
                tdir = outdir / "trials" / str(trial)
                tdir.mkdir(parents=True, exist_ok=True)
                write_spectral_csv(sample, tdir / "spectra.csv")

    record = RunRecord(
        digest=config.digest(),
        trial_seeds=[seed_for_trial(config.master_seed, t) for t in range(config.trials)],
        aggregates=aggregates,
        verdicts=verdicts,
        failed_trials=failed,
        n_trials=config.trials,
        wall_clock=time.perf_counter() - start,
        config=cfg,
        output_dir=str(outdir),
    )
    (outdir / "manifest.json").write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n")
    if len(failed) * 2 > config.trials:
        raise RunFailure(f"{len(failed)} of {config.trials} trials failed; first error: "
                         f"{next(err for _, _, err, _ in results if err)}")
    return record


def load_record(outdir) -> RunRecord:
    path = Path(outdir) / "manifest.json"
    return RunRecord.from_dict(json.loads(path.read_text()))


def summarize(record: RunRecord) -> tuple[str, bool]:
    """Plain-text table of aggregates and threshold verdicts, plus the overall verdict."""
    lines = [
        f"run {record.digest[:12]}  trials={record.n_trials}  failed={len(record.failed_trials)}  "
        f"wall={record.wall_clock:.1f}s",
    ]
    if record.aggregates:
        width = max(len(k) for k in record.aggregates)
        lines.append(f"{'metric':<{width}}  {'mean':>11} {'std':>10} {'min':>11} {'q50':>11} {'max':>11}")
        for name, agg in record.aggregates.items():
            if agg.get("count", 0) == 0:
                lines.append(f"{name:<{width}}  (no values)")
                continue
            lines.append(
                f"{name:<{width}}  {agg['mean']:>11.4g} {agg['std']:>10.3g} {agg['min']:>11.4g} "
                f"{agg['q50']:>11.4g} {agg['max']:>11.4g}"
            )
    for name, v in record.verdicts.items():
        tag = "PASS" if v["passed"] else "FAIL"
        lines.append(
            f"{tag} {name}: {v['fraction_within']:.0%} of values <= {v['threshold']:g} "
            f"(need {v['required_fraction']:.0%}, worst {v['worst']:.4g})"
        )
    passed = record.passed
    lines.append("overall: " + ("PASS" if passed else "FAIL"))
    return "\n".join(lines), passed
