"""Command-line front end: ``diveval {eval,mu,axioms,perturb}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path
from typing import Sequence

from .axioms import (
    ConstraintId,
    SearchBounds,
    compare,
    constraint_matrix,
    load_table1,
    render_markdown,
    render_tsv,
    replay_counterexample,
)
from .core import MetricSpec
from .ingestion import (
    QrelsFile,
    attach_weights,
    format_qrels,
    format_run,
    format_weights,
    read_qrels,
    read_run,
    read_weights,
)
from .metaeval import ScoreMatrix, format_mu, mu_ranking
from .metrics import evaluate_grid
from .scenarios import PerturbationKind, PerturbationSpec, perturb_grades, perturb_weights, truncate_runs

JOBS_ENV = "DIVEVAL_JOBS"


class CliError(Exception):
    """A user-facing error; reported on stderr with a nonzero exit code."""


def default_jobs() -> int:
    value = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _parse_metrics(values: Sequence[str] | None) -> list[MetricSpec]:
    specs = []
    for text in values or []:
        try:
            specs.append(MetricSpec.parse(text))
        except ValueError as exc:
            raise CliError(str(exc)) from None
    return specs


def _run_paths(values: Sequence[str]) -> list[Path]:
    paths = []
    for v in values:
        p = Path(v)
        if p.is_dir():
            paths.extend(sorted(x for x in p.iterdir() if x.is_file() and not x.name.startswith(".")))
        elif p.exists():
            paths.append(p)
        else:
            raise CliError(f"run path not found: {p}")
    if not paths:
        raise CliError("no run files given")
    return paths


def _load_qrels(args) -> QrelsFile:
    if not args.qrels:
        raise CliError("--qrels is required")
    path = Path(args.qrels)
    if not path.is_file():
        raise CliError(f"qrels file not found: {path}")
    qrels = read_qrels(path, grade_map=args.grade_map, g_max=args.g_max,
                       exclude_general=args.exclude_general)
    if args.weights:
        if not Path(args.weights).is_file():
            raise CliError(f"weights file not found: {args.weights}")
        qrels = attach_weights(qrels, read_weights(args.weights))
    return qrels


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _default_grid() -> list[MetricSpec]:
    return [MetricSpec.parse(m) for m in load_table1().metrics]


def _score_matrix(args) -> ScoreMatrix:
    runs = [read_run(p) for p in _run_paths(args.runs)]
    qrels = _load_qrels(args)
    specs = _parse_metrics(args.metrics) or _default_grid()
    return evaluate_grid(specs, runs, qrels, jobs=args.jobs)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_eval(args) -> int:
    if not args.runs:
        raise CliError("--runs is required")
    _write(_score_matrix(args).to_tsv(), args.output)
    return 0


def cmd_mu(args) -> int:
    if args.scores:
        path = Path(args.scores)
        if not path.is_file():
            raise CliError(f"score file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            scores = ScoreMatrix.from_tsv(fh)
        selected = [s.strip() for s in args.metrics] if args.metrics else list(scores.metrics)
    elif args.runs:
        scores = _score_matrix(args)
        selected = list(scores.metrics)
    else:
        raise CliError("give --scores or --runs with --qrels")
    if len(selected) < 2:
        raise CliError("metric unanimity needs at least 2 metrics")
    try:
        reports = mu_ranking(selected, scores, strict=args.strict)
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None
    _write(format_mu(reports), args.output)
    return 0


def _bounds(args) -> SearchBounds:
    grid = tuple(float(x) for x in args.r_max_grid.split(",")) if args.r_max_grid else SearchBounds().r_max_grid
    try:
        return SearchBounds(n_max=args.n_max, m_max=args.m_max, r_max_grid=grid,
                            instance_count=args.instances, seed=args.seed, epsilon=args.epsilon)
    except ValueError as exc:
        raise CliError(f"bad search bounds: {exc}") from None


def cmd_axioms(args) -> int:
    if args.replay:
        text = Path(args.replay).read_text(encoding="utf-8")
        spec = _parse_metrics(args.metrics)[0] if args.metrics else None
        reports = [replay_counterexample(line, spec) for line in text.splitlines() if line.strip()]
        _write("".join(f"{r}\n" for r in reports), args.output)
        return 0 if all(r.holds for r in reports) else 1
    bounds = _bounds(args)
    table = load_table1() if args.expect else None
    if args.expect and args.expect != "table1":
        raise CliError(f"unknown reference {args.expect!r}; only 'table1' is embedded")
    specs = _parse_metrics(args.metrics)
    if table is not None:
        if specs and [s.label for s in specs] != [MetricSpec.parse(m).label for m in table.metrics]:
            raise CliError("--expect table1 runs the embedded metric grid; drop --metrics")
        specs = [MetricSpec.parse(m) for m in table.metrics]
        names = [r.name for r in table.rows]
    else:
        specs = specs or _default_grid()
        names = [s.label for s in specs]
    constraints = [ConstraintId.parse(c) for c in args.constraints] if args.constraints else None
    if table is not None and constraints is not None:
        raise CliError("--expect table1 checks all ten constraints; drop --constraints")
    matrix = constraint_matrix(specs, bounds, constraints, jobs=args.jobs)
    text = render_markdown(matrix, names) if args.format == "table" else render_tsv(matrix)
    _write(text, args.output)
    if args.counterexamples:
        lines = [json.dumps(v.counterexample, sort_keys=True) + "\n"
                 for row in matrix for v in row if v.counterexample is not None]
        _write("".join(lines), args.counterexamples)
    if table is not None:
        mismatches = compare(matrix, table)
        for metric, c, expected, got in mismatches:
            print(f"mismatch: {metric} {c}: expected {expected}, got {got}", file=sys.stderr)
        total = len(matrix) * len(table.constraints)
        print(f"table1: {total - len(mismatches)} of {total} cells agree", file=sys.stderr)
        return 1 if mismatches else 0
    return 0


def cmd_perturb(args) -> int:
    try:
        kind = PerturbationKind(args.kind)
    except ValueError:
        valid = ", ".join(k.value for k in PerturbationKind)
        raise CliError(f"unknown perturbation kind {args.kind!r}; valid kinds: {valid}") from None
    try:
        spec = PerturbationSpec(kind, args.seed, args.cap)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    header = spec.header()
    if kind in (PerturbationKind.GRADES, PerturbationKind.WEIGHTS):
        qrels = _load_qrels(args)
        if kind is PerturbationKind.GRADES:
            _write(header + format_qrels(perturb_grades(qrels, spec.seed)), args.output)
        else:
            _write(header + format_weights(perturb_weights(qrels, spec.seed)), args.output)
        return 0
    if not args.runs:
        raise CliError("truncation needs --runs")
    if not args.output:
        raise CliError("truncation writes one file per run; give -o DIR")
    paths = _run_paths(args.runs)
    runs = [read_run(p) for p in paths]
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, run in zip(paths, truncate_runs(runs, spec)):
        with open(out_dir / path.name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + format_run(run))
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _add_inputs(p: argparse.ArgumentParser, runs: bool = True) -> None:
    if runs:
        p.add_argument("--runs", nargs="+", metavar="PATH", help="run files or directories of run files")
    p.add_argument("--qrels", help="diversity qrels file (topic aspect doc grade)")
    p.add_argument("--weights", help="aspect weights file (topic aspect weight)")
    p.add_argument("--grade-map", choices=["exp", "linear"], default="exp",
                   help="integer grade to relevance mapping (default: exp)")
    p.add_argument("--g-max", type=int, default=None, help="maximum grade (default: detected)")
    p.add_argument("--exclude-general", action="store_true", help="drop aspect 0")


def _add_metrics(p: argparse.ArgumentParser, help_text: str) -> None:
    p.add_argument("--metrics", nargs="+", metavar="SPEC", help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diveval", description=__doc__)
    parser.add_argument("--jobs", type=int, default=default_jobs(),
                        help=f"worker processes (default: ${JOBS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="score runs; writes run/topic/metric/value TSV")
    _add_inputs(p)
    _add_metrics(p, "metric specs such as p@10 'rbu@1000:p=0.99,e=0.05' (default: reference grid)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mu", help="rank metrics by metric unanimity")
    p.add_argument("--scores", help="score TSV written by 'eval'")
    _add_inputs(p)
    _add_metrics(p, "metric ids to compare (default: all in the scores)")
    p.add_argument("--strict", action="store_true",
                   help="non-default: require strict improvements from the other metrics")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("axioms", help="check metrics against the ten constraints")
    _add_metrics(p, "metric specs (default: reference grid)")
    p.add_argument("--constraints", nargs="+", metavar="NAME", help="subset of constraints")
    p.add_argument("--expect", metavar="REF", help="compare with an embedded reference ('table1')")
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--m-max", type=int, default=1000)
    p.add_argument("--instances", type=int, default=1000, help="instances per universal constraint")
    p.add_argument("--r-max-grid", help="comma-separated saturation values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--format", choices=["tsv", "table"], default="table")
    p.add_argument("--counterexamples", metavar="FILE", help="write counterexamples as JSON lines")
    p.add_argument("--replay", metavar="FILE", help="replay JSON-lines counterexamples instead")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("perturb", help="write perturbed qrels, weights or runs")
    p.add_argument("--kind", required=True, help="grades, weights, truncate or truncate-capped")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=None, help="length cap for truncate-capped (default 50)")
    _add_inputs(p)
    p.add_argument("-o", "--output", help="output file, or directory for truncated runs")
    p.set_defaults(func=cmd_perturb)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = args.func(args)
        except CliError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = 2
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = 2
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
