"""Command-line interface: basis inspection, classification, separation, generation, experiments."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from . import __version__
from .christoffel import classify, save_score_report
from .evaluation import label_accuracy
from .experiment import ExperimentConfig, run_experiment
from .ica import save_separation_result, separate
from .polybasis import enumerate_basis
from .synthdata import MixtureSpec, dump_generated_data, generate_mixture


class CliError(Exception):
    """User-facing failure: printed to stderr with exit code 1."""


def read_matrix_csv(path) -> np.ndarray:
    """Read a samples-as-rows CSV matrix; header row optional.

    Malformed content raises :class:`CliError` with the offending line number.
    """
    rows: list[list[float]] = []
    width = None
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not c.strip() for c in record):
                continue
            try:
                values = [float(c) for c in record]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise CliError(f"{path}:{lineno}: cannot parse row as numbers: {record!r}")
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise CliError(
                    f"{path}:{lineno}: expected {width} columns, found {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise CliError(f"{path}: no numeric rows found")
    return np.asarray(rows, dtype=np.float64)


def _cmd_basis(args) -> int:
    basis = enumerate_basis(args.n, args.d)
    if args.json:
        print(basis.to_json())
    else:
        for mono in basis.monomial_strings():
            print(mono)
    print(f"size={basis.size}")
    return 0


def _cmd_classify(args) -> int:
    X = read_matrix_csv(args.input)
    report = classify(X, args.d, args.eta)
    os.makedirs(args.out, exist_ok=True)
    save_score_report(
        report,
        os.path.join(args.out, "scores.csv"),
        os.path.join(args.out, "scores.json"),
    )
    kept = report.retained_count
    print(f"n={report.n_features} d={report.degree} m={report.basis_size}")
    print(f"threshold={report.threshold:.6g} eta={report.eta}")
    print(f"labels: kept(0)={kept} flagged(1)={report.theta.size - kept}")
    if report.condition_warning:
        print("warning: moment matrix was ill conditioned (see scores.json)")
    if args.labels:
        truth = read_matrix_csv(args.labels).ravel().astype(np.int64)
        if truth.size != report.theta.size:
            raise CliError(
                f"labels file has {truth.size} rows, data has {report.theta.size}"
            )
        print(f"accuracy={label_accuracy(report.labels, truth):.4f}")
    print(f"wrote {args.out}/scores.csv and {args.out}/scores.json")
    return 0


def _cmd_separate(args) -> int:
    X = read_matrix_csv(args.input)
    try:
        result = separate(X, args.d, args.eta, args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    save_separation_result(result, args.out)
    print(f"retained={result.retained_count} of {X.shape[0]} samples")
    print(f"converged={result.unmixing.converged} iterations={result.unmixing.iterations}")
    print(f"wrote S_hat.csv, B_hat.json, scores.csv, scores.json under {args.out}/")
    return 0


def _cmd_generate(args) -> int:
    params = {}
    if args.kind == "cubic_curve":
        n = 3
        params = {"beta": args.beta, "gamma": args.gamma}
    elif args.kind == "vanishing_pair":
        n = 5
    else:
        raise CliError(f"unknown generator kind {args.kind!r}")
    spec = MixtureSpec(n=n, eta=args.eta, p1_kind=args.kind, params=params)
    data = generate_mixture(spec, args.T, args.seed)
    dump_generated_data(data, args.out, spec=spec, seed=args.seed)
    print(f"wrote S.csv, X.csv, labels.csv, A.json, manifest.json under {args.out}/")
    return 0


def _cmd_experiment(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"bad experiment config {args.config}: {exc}") from exc
    overrides = {}
    if args.out:
        overrides["output_dir"] = args.out
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    report = run_experiment(config, n_jobs=args.jobs)
    print(f"ran {config.trials} trials over etas={list(config.etas)} degrees={list(config.degrees)}")
    for cell in report.cells:
        d = "-" if cell.degree < 0 else str(cell.degree)
        print(
            f"  {cell.method:>9} eta={cell.eta:<4g} d={d:>2}  "
            f"mse={cell.mse_trimmed:.4g}  upsilon={cell.upsilon_trimmed:.4f}  "
            f"runtime={cell.runtime_ms_mean:.1f}ms"
        )
    print(f"wrote report.csv, report.md, trials.csv, manifest.json under {config.output_dir}/")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cbss",
        description="Christoffel-score sample selection and blind source separation",
    )
    p.add_argument("--version", action="version", version=f"cbss {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("basis", help="print the monomial basis and its size")
    b.add_argument("-n", type=int, required=True, help="number of variables")
    b.add_argument("-d", type=int, required=True, help="maximal total degree")
    b.add_argument("--json", action="store_true", help="print as JSON exponent arrays")
    b.set_defaults(func=_cmd_basis)

    c = sub.add_parser("classify", help="score and label the samples of a CSV matrix")
    c.add_argument("input", help="CSV file, one sample per row")
    c.add_argument("-d", type=int, default=6, help="embedding degree (default 6)")
    c.add_argument("--eta", type=float, required=True, help="expected diffuse fraction")
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--labels", help="optional CSV of true 0/1 labels for accuracy")
    c.set_defaults(func=_cmd_classify)

    s = sub.add_parser("separate", help="classify, unmix retained samples, recover sources")
    s.add_argument("input", help="CSV file, one sample per row")
    s.add_argument("-d", type=int, default=6, help="embedding degree (default 6)")
    s.add_argument("--eta", type=float, required=True, help="expected diffuse fraction")
    s.add_argument("--seed", type=int, default=0, help="ICA restart seed")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=_cmd_separate)

    g = sub.add_parser("generate", help="draw a synthetic mixture data set")
    g.add_argument("--kind", choices=("cubic_curve", "vanishing_pair"), required=True)
    g.add_argument("--eta", type=float, required=True, help="diffuse fraction")
    g.add_argument("-T", type=int, required=True, help="number of samples")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--beta", type=float, default=1.5, help="cubic curve half-width")
    g.add_argument("--gamma", type=float, default=0.0, help="cubic curve free-component half-width")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=_cmd_generate)

    e = sub.add_parser("experiment", help="run a Monte-Carlo grid from a JSON config")
    e.add_argument("--config", required=True, help="experiment JSON file")
    e.add_argument("--out", help="override the config's output directory")
    e.add_argument("--trials", type=int, default=None, help="override the config's trial count")
    e.add_argument("--seed", type=int, default=None, help="override the config's seed")
    e.add_argument("--jobs", type=int, default=None, help="parallel workers (default: CBSS_THREADS)")
    e.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"error: linear algebra failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
