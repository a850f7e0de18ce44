"""Command-line front end.

Exit codes: 0 on success, 1 on a domain or data error, 2 on a usage error.
Every failure prints one ``error: <code>: <message>`` line to stderr.
Structured output is JSON with sorted keys, or CSV where noted.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import warnings
from pathlib import Path

from . import benefit, data, experiments, oracle, threshold
from .calibration import Relation, calibration_report
from .core import Grid, make_context_from_jstar
from .errors import DomainError

ALPHA_HELP = "miscalibration budget in probability units, in [0, 1]"
M_HELP = "grid size: predictions take values i/m for i = 0..m (integer >= 2)"
JSTAR_HELP = "therapeutic threshold in grid-index units, strictly between 0 and m"
RELATION_HELP = "calibration relation bounding the miscalibration: ece or mce"
ECE_LEFT_HELP = "low-threshold clamp of the ECE closed form: floor_one (never below 1) or floor_zero (never below 0)"
JOBS_HELP = "worker threads (count; default: available CPUs)"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _relation(value: str) -> Relation:
    try:
        return Relation.parse(value)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fraction(value: str) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{value!r} is not finite")
    return v


def _alpha(value: str) -> float:
    v = _fraction(value)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"{value!r} is outside [0, 1]")
    return v


def _grid_size(value: str) -> int:
    v = int(value)
    if v < 2:
        raise argparse.ArgumentTypeError(f"{value!r} is below 2")
    return v


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{value!r} is not a positive integer")
    return v


def _add_m(p, required=True):
    p.add_argument("--m", type=_grid_size, required=required, help=M_HELP)


def _add_alpha(p, required=True):
    p.add_argument("--alpha", type=_alpha, required=required, help=ALPHA_HELP)


def _add_relation(p, required=True, default=None):
    p.add_argument("--relation", type=_relation, required=required, default=default, help=RELATION_HELP)


def _add_ece_left(p):
    p.add_argument("--ece-left", choices=threshold.ECE_LEFT_VARIANTS, default="floor_one", help=ECE_LEFT_HELP)


def _add_jobs(p):
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1, help=JOBS_HELP)


def _add_output(p, what="JSON"):
    p.add_argument("--output", help=f"file to write the {what} to (path; default: standard output)")


def _add_jstar_steps(p):
    p.add_argument(
        "--jstar-steps", type=_positive_int, default=experiments.DEFAULT_JSTAR_STEPS,
        help="number of evenly spaced therapeutic thresholds m*k/(steps+1) to average over (count)",
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_threshold(args) -> int:
    res = threshold.conservative_threshold(args.alpha, args.jstar, args.relation, Grid(args.m), ece_left=args.ece_left)
    _emit(_json(res.to_dict()), args.output)
    return 0


def cmd_calibration(args) -> int:
    pair = data.bin_dataset(data.read_csv(args.input), Grid(args.m))
    _emit(_json(calibration_report(pair).to_dict()), args.output)
    return 0


def cmd_curve(args) -> int:
    grid = Grid(args.m)
    pair = data.bin_dataset(data.read_csv(args.input), grid)
    ctx = make_context_from_jstar(args.jstar, grid)
    curve = benefit.decision_curve(pair, ctx)
    at_star = experiments.applied_index(args.jstar)
    at_hat = None
    if args.alpha is not None:
        if args.relation is None:
            raise UsageError("--alpha requires --relation")
        res = threshold.conservative_threshold(args.alpha, args.jstar, args.relation, grid, ece_left=args.ece_left)
        at_hat = experiments.applied_index(res.j_hat)

    text = curve.to_csv()
    if at_hat is not None:
        lines = text.splitlines()
        marked = [lines[0] + ",mark"]
        for j, line in enumerate(lines[1:]):
            tags = [t for t, k in (("jstar", at_star), ("jhat", at_hat)) if k == j]
            marked.append(line + "," + "+".join(tags))
        text = "\n".join(marked) + "\n"
    Path(args.output).write_text(text)

    calib = calibration_report(pair)
    summary = f"ece={calib.ece!r} mce={calib.mce!r} utility_at_jstar={curve.point(at_star).utility!r}"
    if at_hat is not None:
        summary += f" utility_at_jhat={curve.point(at_hat).utility!r}"
    print(summary)
    return 0


def cmd_evaluate(args) -> int:
    grid = Grid(args.m)
    ds = data.read_csv(args.input)
    jstars = threshold.jstar_grid(grid.m, args.jstar_steps)
    report = experiments.subgroup_eval(ds, grid, args.alpha, args.relation, jstars, args.ece_left, args.jobs)
    _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.output)
    return 0


def cmd_oracle(args) -> int:
    grid = Grid(args.m)
    if args.general and grid.m > oracle.GENERAL_MAX_M:
        raise oracle.OracleBudgetError(f"--general needs m <= {oracle.GENERAL_MAX_M}, got m={grid.m}")
    resolution = args.resolution or (10 if args.general else 40)
    cfg = oracle.OracleConfig(resolution=resolution, support_cap=args.support_cap)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        closed = threshold.conservative_threshold(args.alpha, args.jstar, args.relation, grid, ece_left=args.ece_left)
    j = closed.j_hat if args.j is None else args.j
    simple = oracle.oracle_cost(j, args.jstar, args.alpha, args.relation, grid, cfg, jobs=args.jobs)
    closed_cost = threshold.worst_case_cost(j, args.jstar, args.alpha, args.relation, grid)
    gap = abs(closed_cost - simple.approx_cost)
    doc = {
        "j_hat": closed.j_hat,
        "closed_form_cost": closed_cost,
        "oracle_cost": simple.approx_cost,
        "gap": gap,
        "bound": simple.discretization_bound,
        "pass": gap <= simple.discretization_bound,
        "certificate": simple.to_dict(),
    }
    if args.general:
        general = oracle.oracle_general(j, args.jstar, args.alpha, args.relation, grid, cfg)
        excess = general.approx_cost - simple.approx_cost
        doc["general"] = {
            "certificate": general.to_dict(),
            "excess_over_simple": excess,
            "pass": excess <= general.discretization_bound,
        }
        doc["pass"] = doc["pass"] and doc["general"]["pass"]
    _emit(_json(doc), args.output)
    return 0


def cmd_sweep(args) -> int:
    table = threshold.sweep(args.alpha, Grid(args.m), args.relation, args.jstar_steps, args.ece_left, args.jobs)
    _emit(table.to_csv() if args.format == "csv" else table.to_json(), args.output)
    return 0


def _synthetic_settings(args) -> dict:
    settings = data.parse_config(args.config) if args.config else {}
    for name in (f.name for f in dataclasses.fields(data.SyntheticSpec)):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    return settings


def cmd_generate(args) -> int:
    ds = data.generate(data.spec_from_mapping(_synthetic_settings(args)), Grid(args.m))
    _emit(data.format_csv(ds), args.output)
    return 0


def cmd_experiment(args) -> int:
    grid = Grid(args.m)
    ds = data.read_csv(args.input)
    if args.train_fraction is not None:
        _, ds = data.split(ds, args.train_fraction, args.seed)
    jstars = threshold.jstar_grid(grid.m, args.jstar_steps)
    if args.kind == "compare":
        pair = data.bin_dataset(ds, grid)
        report = experiments.compare_relations(pair, grid, jstars, args.ece_left, args.jobs)
        name = experiments.report_filename("compare", "both", "observed")
    else:
        if args.alpha is None or args.relation is None:
            raise UsageError(f"experiment {args.kind} requires --alpha and --relation")
        if args.kind == "gain":
            pair = data.bin_dataset(ds, grid)
            report = experiments.gain_delta(pair, args.alpha, args.relation, grid, jstars, args.ece_left, args.jobs)
        else:
            report = experiments.subgroup_eval(ds, grid, args.alpha, args.relation, jstars, args.ece_left, args.jobs)
        name = experiments.report_filename(args.kind, args.relation, args.alpha)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(report.to_csv())
    sys.stdout.write(report.to_json())
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conservative-thresholds", description="Treatment thresholds that stay safe under miscalibration.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("threshold", help="conservative threshold for one therapeutic threshold")
    _add_alpha(p); _add_m(p)
    p.add_argument("--jstar", type=_fraction, required=True, help=JSTAR_HELP)
    _add_relation(p); _add_ece_left(p); _add_output(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("calibration", help="ECE and MCE of a scored dataset")
    p.add_argument("--input", required=True, help="CSV with header score,outcome[,group] (path; scores in [0, 1])")
    _add_m(p); _add_output(p)
    p.set_defaults(func=cmd_calibration)

    p = sub.add_parser("curve", help="decision curve of a scored dataset")
    p.add_argument("--input", required=True, help="CSV with header score,outcome[,group] (path; scores in [0, 1])")
    _add_m(p)
    p.add_argument("--jstar", type=_fraction, required=True, help=JSTAR_HELP)
    _add_alpha(p, required=False); _add_relation(p, required=False); _add_ece_left(p)
    p.add_argument("--output", required=True, help="file to write the curve CSV to (path)")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("evaluate", help="per-group calibration and clinical utility")
    p.add_argument("--input", required=True, help="CSV with header score,outcome,group (path; scores in [0, 1])")
    _add_m(p); _add_alpha(p); _add_relation(p); _add_ece_left(p); _add_jstar_steps(p)
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format (json or csv)")
    _add_output(p, "report"); _add_jobs(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="brute-force worst-case regret versus the closed form")
    _add_m(p)
    p.add_argument("--jstar", type=_fraction, required=True, help=JSTAR_HELP)
    _add_alpha(p); _add_relation(p); _add_ece_left(p)
    p.add_argument("--j", type=_fraction, help="threshold to evaluate in grid-index units, in [0, m] (default: the closed-form conservative threshold)")
    p.add_argument("--resolution", type=_positive_int, help="adversary grid steps per unit probability (count >= 4; default 40, or 10 with --general)")
    p.add_argument("--general", action="store_true", help="also search adversaries with several level sets (needs m <= 12)")
    p.add_argument("--support-cap", type=_positive_int, default=3, help="most level sets a general adversary may use (count)")
    _add_output(p); _add_jobs(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="closed-form threshold across therapeutic thresholds")
    _add_alpha(p); _add_m(p); _add_relation(p); _add_ece_left(p)
    p.add_argument("--jstar-steps", type=_positive_int, default=experiments.DEFAULT_JSTAR_STEPS,
                   help="number of evenly spaced therapeutic thresholds m*k/(steps+1) (count >= 2)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (csv or json)")
    _add_output(p, "table"); _add_jobs(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("generate", help="synthetic scored dataset as CSV")
    _add_m(p)
    p.add_argument("--config", help="key = value file with synthetic settings; flags override it (path)")
    p.add_argument("--n", type=_positive_int, help="number of individuals (count)")
    p.add_argument("--seed", type=int, help="random seed (integer in [0, 2**64))")
    p.add_argument("--risk-law", dest="risk_law", choices=data.RISK_LAWS, help="distribution of true risk")
    p.add_argument("--corruption", choices=data.CORRUPTIONS, help="distortion applied to the scores")
    p.add_argument("--value", type=_fraction, help="two-point law: score of the first point (probability)")
    p.add_argument("--true-risk", dest="true_risk", type=_fraction, help="two-point law: true risk of the first point (probability)")
    p.add_argument("--mass", type=_fraction, help="two-point law: share of individuals at the first point (fraction)")
    p.add_argument("--other-value", dest="other_value", type=_fraction, help="two-point law: score of the second point (probability)")
    p.add_argument("--other-true-risk", dest="other_true_risk", type=_fraction, help="two-point law: true risk of the second point (probability)")
    p.add_argument("--location", type=_fraction, help="logit-normal law: mean of the risk logit (logit units)")
    p.add_argument("--scale", type=_fraction, help="logit-normal law: standard deviation of the risk logit (logit units)")
    p.add_argument("--shift", type=_fraction, help="logit_shift and subgroup_shift: offset added to the score logit (logit units)")
    p.add_argument("--factor", type=_fraction, help="logit_scale: multiplier on the score logit (unitless)")
    p.add_argument("--group-fraction", dest="group_fraction", type=_fraction, help="subgroup_shift: share of individuals shifted (fraction)")
    _add_output(p, "CSV")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="gain, subgroup or relation-comparison experiment")
    p.add_argument("kind", choices=("gain", "subgroup", "compare"), help="experiment to run")
    p.add_argument("--input", required=True, help="CSV with header score,outcome[,group] (path; scores in [0, 1])")
    _add_m(p); _add_alpha(p, required=False); _add_relation(p, required=False); _add_ece_left(p); _add_jstar_steps(p)
    p.add_argument("--train-fraction", type=_fraction, help="hold out this share for training and evaluate on the rest (fraction in (0, 1))")
    p.add_argument("--seed", type=int, default=0, help="seed of the train/test shuffle (integer in [0, 2**64))")
    p.add_argument("--output-dir", help="directory for the {experiment}_{relation}_{alpha}.csv table (path)")
    _add_jobs(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
