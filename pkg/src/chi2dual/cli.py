"""Command-line interface: data ingestion, test execution, calibration.

Data files are UTF-8 CSV, one observation per row, columns = coordinates,
optional header, blank lines skipped; any unparseable cell is a hard error
with its line number.  Reports print as JSON (17 significant digits,
locale-independent).  Exit codes: 0 = no rejection, 3 = rejection,
1 = error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .contamination import ContaminationSpec, contamination_test
from .core import ConstraintFamily, Sample
from .errors import Chi2DualError, SingularCovariance
from .exprparse import ExprError, compile_expression
from .linear import TestReport, test_linear
from .marginal import marginal_test, parse_marginal_spec
from .montecarlo import ReplicationPlan, run_plan
from .reportio import emit_json

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECT = 3

SEED_ENV_VAR = "CHI2DUAL_SEED"


class CliError(Exception):
    """User-facing error with a clean message and exit code 1."""


def read_csv_sample(path: str) -> Sample:
    """Parse a CSV of observations; header detected by non-numeric first row."""
    rows: list[list[float]] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(",")]
        try:
            values = [float(c) for c in cells]
        except ValueError:
            if lineno == 1 or (not rows and width is None):
                continue  # header row
            raise CliError(f"{path}:{lineno}: unparseable cell in {line!r}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise CliError(
                f"{path}:{lineno}: expected {width} columns, found {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise CliError(f"{path}: no observations")
    return Sample(np.array(rows), source=path)


def read_constraints(path: str, d: int) -> ConstraintFamily:
    """Constraints file: JSON {"constraints": [{"f": expr, "target": value}]}."""
    import json

    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    entries = payload.get("constraints") if isinstance(payload, dict) else payload
    if not isinstance(entries, list) or not entries:
        raise CliError(f"{path}: expected a non-empty list under 'constraints'")
    functions, targets, names = [], [], []
    for i, entry in enumerate(entries):
        try:
            expr = str(entry["f"])
            target = float(entry["target"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{path}: constraint {i}: need fields 'f' and 'target'") from exc
        try:
            functions.append(compile_expression(expr, d))
        except ExprError as exc:
            raise CliError(f"{path}: constraint {i}: {exc}") from exc
        targets.append(target)
        names.append(expr)
    return ConstraintFamily(tuple(functions), np.array(targets), names=tuple(names))


def _emit_report(report: TestReport, json_path: str | None) -> int:
    text = emit_json(report.to_json_dict())
    print(text)
    if json_path:
        Path(json_path).write_text(text + "\n", encoding="utf-8")
    return EXIT_REJECT if report.reject else EXIT_OK


def _parse_range(text: str, label: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise CliError(f"{label} must look like LO:HI, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise CliError(f"{label} must be numeric LO:HI, got {text!r}") from None
    return lo, hi


def _parse_pair(text: str, label: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise CliError(f"{label} must look like A,B, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise CliError(f"{label} must be numeric A,B, got {text!r}") from None


def cmd_linear_test(args: argparse.Namespace) -> int:
    sample = read_csv_sample(args.data)
    fam = read_constraints(args.constraints, sample.d)
    try:
        report = test_linear(sample, fam, args.alpha)
    except SingularCovariance as exc:
        raise CliError(
            f"{exc} (hint: drop linearly dependent constraints or add data)"
        ) from exc
    return _emit_report(report, args.json)


def cmd_marginal_test(args: argparse.Namespace) -> int:
    sample = read_csv_sample(args.data)
    spec = parse_marginal_spec(args.marginals, sample.d)
    report = marginal_test(sample, spec, args.alpha, m=args.m)
    return _emit_report(report, args.json)


def cmd_contam_test(args: argparse.Namespace) -> int:
    sample = read_csv_sample(args.data)
    theta_lo, theta_hi = _parse_range(args.theta_range, "--theta-range")
    lambda_lo, lambda_hi = _parse_range(args.lambda_range, "--lambda-range")
    gamma, nu = _parse_pair(args.pareto, "--pareto")
    spec = ContaminationSpec(
        theta_lo=theta_lo,
        theta_hi=theta_hi,
        lambda_lo=lambda_lo,
        lambda_hi=lambda_hi,
        pareto_gamma=gamma,
        pareto_nu=nu,
    )
    report = contamination_test(sample, spec, args.alpha)
    return _emit_report(report, args.json)


def cmd_calibrate(args: argparse.Namespace) -> int:
    import json

    try:
        payload = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {args.plan}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.plan}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if "base_seed" not in payload:
        payload["base_seed"] = int(os.environ.get(SEED_ENV_VAR, "0"))
    plan = ReplicationPlan.from_json_dict(payload)
    report = run_plan(plan)
    text = emit_json(report.to_json_dict())
    print(text)
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chi2dual",
        description="Dual chi-square divergence tests: linear constraints, "
        "marginal goodness of fit, contamination.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    linear = sub.add_parser("linear-test", help="test a finite set of moment constraints")
    linear.add_argument("--data", required=True, help="CSV of observations")
    linear.add_argument("--constraints", required=True, help="JSON constraints file")
    linear.add_argument("--alpha", type=float, default=0.05)
    linear.add_argument("--json", help="also write the report to this path")
    linear.set_defaults(func=cmd_linear_test)

    marg = sub.add_parser("marginal-test", help="test all marginal distributions")
    marg.add_argument("--data", required=True)
    marg.add_argument(
        "--marginals",
        required=True,
        help="per-coordinate CDFs, e.g. 'uniform(0,1);exp(1.0)'",
    )
    marg.add_argument("--alpha", type=float, default=0.05)
    marg.add_argument("--m", type=int, default=None, help="grid cut count (default n^(1/4) rule)")
    marg.add_argument("--json")
    marg.set_defaults(func=cmd_marginal_test)

    contam = sub.add_parser("contam-test", help="test exponentiality against contamination")
    contam.add_argument("--data", required=True)
    contam.add_argument("--theta-range", required=True, help="rate interval LO:HI")
    contam.add_argument("--lambda-range", default="-0.25:0.75", help="mixing interval LO:HI")
    contam.add_argument("--pareto", default="2.0,1.5", help="contaminant parameters G,NU")
    contam.add_argument("--alpha", type=float, default=0.05)
    contam.add_argument("--json")
    contam.set_defaults(func=cmd_contam_test)

    cal = sub.add_parser("calibrate", help="run a Monte Carlo replication plan")
    cal.add_argument("--plan", required=True, help="JSON plan file")
    cal.add_argument("--json")
    cal.set_defaults(func=cmd_calibrate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Chi2DualError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
