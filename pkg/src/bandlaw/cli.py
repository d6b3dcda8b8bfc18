"""Command line interface.

Exit codes: 0 pass, 1 threshold failure, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import metrics as mt
from .dyson import tabulate
from .ensembles import AtomSpec, EnsembleSpec, sample_matrix
from .exceptions import DysonConvergenceError, SpecError, SpectralError
from .hermitization import shift
from .io import fmt, load_spec, parse_complex, read_spectral_csv, write_dyson_csv, write_matrix_csv, write_spectral_csv
from .lab import ExperimentConfig, RunFailure, load_record, run_experiment, summarize
from .spectra import spectral_sample

EXIT_PASS, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _add_spec_args(p):
    p.add_argument("--spec", help="ensemble JSON file (overrides --kind and shape options)")
    p.add_argument("--kind", default="iid-gaussian")
    p.add_argument("--n", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--atom", default="real-gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)


def _spec_from_args(args) -> EnsembleSpec:
    if args.spec:
        return load_spec(args.spec)
    if args.n is None:
        raise SpecError("give --spec or --n")
    return EnsembleSpec(kind=args.kind, n=args.n, b=args.b, d=args.d, m=args.m, atom=AtomSpec(args.atom))


def _out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def cmd_sample(args):
    spec = _spec_from_args(args)
    X = sample_matrix(spec, args.seed, args.trial).values
    if args.out in (None, "-"):
        writer = csv.writer(sys.stdout, lineterminator="\n")
        for row in X:
            writer.writerow([f"{fmt(v.real)},{fmt(v.imag)}" for v in row.astype(complex)])
    else:
        write_matrix_csv(X, args.out)
    return EXIT_PASS


def cmd_spectrum(args):
    spec = _spec_from_args(args)
    X = sample_matrix(spec, args.seed, args.trial).values
    z = parse_complex(args.z)
    sample = spectral_sample(shift(X, z) if z else X, vectors=args.vectors, spec=spec, seed=args.seed, trial=args.trial)
    write_spectral_csv(sample, args.out if args.out not in (None, "-") else "/dev/stdout")
    return EXIT_PASS


def cmd_dyson(args):
    zs = [parse_complex(z) for z in args.z] or [0j]
    if args.eta:
        etas = [parse_complex(e) for e in args.eta]
    else:
        etas = list(1j * np.linspace(args.eta_min, args.eta_max, args.eta_count))
    rows = tabulate(zs, etas, tol=args.tol)
    write_dyson_csv(rows, args.out if args.out not in (None, "-") else "/dev/stdout")
    return EXIT_PASS


def _measure(path):
    return read_spectral_csv(path)


def cmd_metric(args):
    name = args.name
    files = args.inputs
    z = parse_complex(args.z)

    def need(k):
        if len(files) != k:
            raise SpecError(f"metric {name} needs {k} input file(s), got {len(files)}")
        return [_measure(f) for f in files]

    if name == "kolmogorov":
        s1, s2 = need(2)
        value = mt.kolmogorov_distance(
            mt.EmpiricalMeasure.squared_singular_values(s1.singular_values),
            mt.EmpiricalMeasure.squared_singular_values(s2.singular_values),
        )
    elif name == "disk-law":
        (s,) = need(1)
        value = mt.disk_law_distance(s.eigenvalues)
    elif name == "log-potential":
        (s,) = need(1)
        value = mt.log_potential(s.singular_values)
    elif name == "replacement-gap":
        s1, s2 = need(2)
        value = mt.replacement_gap(s1.singular_values, s2.singular_values)
    elif name == "eigvec-infnorm":
        (s,) = need(1)
        if s.eigenvector_infnorms is None:
            raise SpecError("spectrum file has no infnorm column values; rerun spectrum with --vectors")
        value = float(np.max(s.eigenvector_infnorms))
    elif name == "log-window":
        s1, s2 = need(2)
        res = mt.log_window_bound_check(
            mt.EmpiricalMeasure.squared_singular_values(s1.singular_values),
            mt.EmpiricalMeasure.squared_singular_values(s2.singular_values),
            args.a,
            args.b,
        )
        print(json.dumps({"lhs": res.lhs, "rhs": res.rhs, "holds": res.holds}))
        return EXIT_PASS if res.holds else EXIT_THRESHOLD
    elif name == "disk-log-potential":
        need(0)
        value = mt.uniform_disk_log_potential(z)
    else:
        raise SpecError(f"unknown metric {name!r}")
    print(fmt(value))
    if args.threshold is not None and not value <= args.threshold:
        return EXIT_THRESHOLD
    return EXIT_PASS


def cmd_run(args):
    config = ExperimentConfig.load(args.config)
    record = run_experiment(config, output_dir=args.out, n_jobs=args.jobs)
    text, passed = summarize(record)
    print(text)
    return EXIT_PASS if passed else EXIT_THRESHOLD


def cmd_summarize(args):
    try:
        record = load_record(args.dir)
    except FileNotFoundError as exc:
        raise SpecError(f"no manifest.json in {args.dir}") from exc
    text, passed = summarize(record)
    print(text)
    return EXIT_PASS if passed else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandlaw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="emit one sampled matrix as CSV")
    _add_spec_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", help="emit the spectrum of one sample as CSV")
    _add_spec_args(p)
    p.add_argument("--z", default="0", help="shift applied before decomposing")
    p.add_argument("--vectors", action="store_true", help="include eigenvector sup-norms")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dyson", help="tabulate the free Stieltjes transform")
    p.add_argument("--z", action="append", default=[])
    p.add_argument("--eta", action="append", default=[])
    p.add_argument("--eta-min", type=float, default=0.05)
    p.add_argument("--eta-max", type=float, default=1.0)
    p.add_argument("--eta-count", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dyson)

    p = sub.add_parser("metric", help="one-shot metric on spectrum CSV files")
    p.add_argument(
        "name",
        choices=["kolmogorov", "disk-law", "log-potential", "replacement-gap", "eigvec-infnorm", "log-window", "disk-log-potential"],
    )
    p.add_argument("inputs", nargs="*")
    p.add_argument("--z", default="0")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=5.0)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("experiment", help="run or summarize experiments")
    esub = p.add_subparsers(dest="action", required=True)
    r = esub.add_parser("run")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: config output_dir)")
    r.add_argument("--jobs", type=int, help="worker processes (default: config n_jobs)")
    r.set_defaults(func=cmd_run)
    s = esub.add_parser("summarize")
    s.add_argument("dir")
    s.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except (SpecError, ValueError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunFailure, SpectralError, DysonConvergenceError, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
