"""Command-line interface: assess, simulate, and plot subcommands.

Exit codes: 0 on success, 2 when the input fails validation, 3 when the
requested statistics are degenerate (zero-variance predictions).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io as dio
from .benefit import conditional_s_process, marginal_s_process
from .domain import (
    ITE_CONDITIONAL,
    ORDER_BY_DELTA,
    ORDER_BY_KEY,
    DegenerateVariance,
    OrderedSample,
    ProcessPath,
    TestReport,
    ValidationError,
    build_sample,
)
from .inference import bm_test, bridge_test
from .plotting import PlotSpec, write_plot
from .risk import per_arm_compound_test
from .simulation import (
    REFERENCE_BETA,
    ScenarioSpec,
    run_monte_carlo,
    scenario_from_catalog,
)

APPROACHES = ("conditional", "marginal", "both", "per-arm")
TESTS = ("bm", "bridge", "bridge-only", "both")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="itecalib",
        description=(
            "Assess moderate calibration of treatment-benefit and risk "
            "prediction models on randomized-trial data."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    assess = sub.add_parser(
        "assess", help="run calibration tests on a validation dataset"
    )
    assess.add_argument("--input", required=True, help="CSV dataset path")
    assess.add_argument(
        "--approach",
        choices=APPROACHES,
        default="conditional",
        help="which cumulative process(es) to test",
    )
    assess.add_argument(
        "--test",
        choices=TESTS,
        default="bridge",
        help="test family; per-arm supports bm and bridge",
    )
    assess.add_argument(
        "--order-by",
        metavar="COLUMN",
        help="order subjects by this dataset column instead of predicted benefit",
    )
    assess.add_argument("--alpha", type=float, default=0.05)
    assess.add_argument("--json", metavar="PATH", help="write the JSON report here")
    assess.add_argument("--plot", metavar="PATH", help="write an SVG figure here")

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    sim.add_argument("--set", type=int, required=True, choices=(1, 2, 3))
    sim.add_argument("--scenario", help="catalog scenario name (sets 2 and 3)")
    sim.add_argument(
        "--cell",
        metavar="b0=..,bx=..,ba=..,bxa=..",
        help="reference model coefficients",
    )
    sim.add_argument("--alpha", type=float, help="set-2 treated-arm logit shift")
    sim.add_argument("--gamma", type=float, help="set-2 treated-arm logit scale")
    sim.add_argument("--alpha0", type=float, help="set-3 control transform shift")
    sim.add_argument("--gamma0", type=float, help="set-3 control transform power")
    sim.add_argument("--alpha1", type=float, help="set-3 treated transform shift")
    sim.add_argument("--gamma1", type=float, help="set-3 treated transform power")
    sim.add_argument("--n", type=int, required=True, help="subjects per replicate")
    sim.add_argument("--reps", type=int, default=2000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument(
        "--workers", type=int, help="worker processes (default: ITECALIB_WORKERS or 1)"
    )
    sim.add_argument("--json", metavar="PATH", help="write the JSON summary here")
    sim.add_argument("--table", metavar="PATH", help="write the text table here")

    plot = sub.add_parser("plot", help="render the cumulative calibration figure")
    plot.add_argument("--input", required=True, help="CSV dataset path")
    plot.add_argument(
        "--approach",
        choices=("conditional", "marginal", "both"),
        default="conditional",
    )
    plot.add_argument("--order-by", metavar="COLUMN")
    plot.add_argument("--alpha", type=float, default=0.05)
    plot.add_argument("--output", required=True, metavar="PATH")
    return parser


def _load_sample(path: str, order_by: Optional[str]) -> OrderedSample:
    records = dio.parse_dataset(path, order_column=order_by)
    ordering = (
        ORDER_BY_KEY if order_by and order_by.strip().lower() != "delta" else ORDER_BY_DELTA
    )
    return build_sample(records, ordering)


def _paths_for(sample: OrderedSample, approach: str) -> list[ProcessPath]:
    if approach == "conditional":
        return [conditional_s_process(sample)]
    if approach == "marginal":
        return [marginal_s_process(sample)]
    return [conditional_s_process(sample), marginal_s_process(sample)]


def _run_test(path: ProcessPath, test: str) -> TestReport:
    if test == "bm":
        return bm_test(path)
    if test == "bridge-only":
        return bridge_test(path, bridge_only=True)
    return bridge_test(path)


def _format_report(label: str, report: TestReport) -> str:
    parts = [f"{label}:"]
    for name, value in (
        ("S_n", report.s_n),
        ("p_mean", report.p_mean),
        ("bridge_stat", report.bridge_stat),
        ("p_bridge", report.p_bridge),
        ("p_unified", report.p_unified),
        ("bm_stat", report.bm_stat),
        ("p_bm", report.p_bm),
        ("C_n", report.c_n),
    ):
        if value is not None:
            parts.append(f"{name}={value:.6g}")
    return "  ".join(parts)


def _cmd_assess(args) -> int:
    if args.approach == "per-arm" and args.test not in ("bm", "bridge"):
        raise ValidationError("per-arm assessment supports --test bm or bridge only")
    sample = _load_sample(args.input, args.order_by)
    results: dict[str, dict] = {}

    if args.approach == "per-arm":
        compound = per_arm_compound_test(sample, test=args.test)
        results["control"] = dio.test_report_dict(compound.control)
        results["treated"] = dio.test_report_dict(compound.treated)
        results["compound"] = {"p": compound.p_compound, "method": "fisher-4df"}
        print(_format_report("control", compound.control))
        print(_format_report("treated", compound.treated))
        print(f"compound:  p={compound.p_compound:.6g}")
        reports = [compound.control, compound.treated]
        paths: list[ProcessPath] = []
    else:
        paths = _paths_for(sample, args.approach)
        reports = []
        for path in paths:
            report = _run_test(path, args.test)
            label = "conditional" if path.kind == ITE_CONDITIONAL else "marginal"
            results[label] = dio.test_report_dict(report)
            reports.append(report)
            print(_format_report(label, report))

    if sample.tie_flag:
        print(
            "note: tied ordering values; within-tie order follows input position",
            file=sys.stderr,
        )
    for report in reports:
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)

    if args.json:
        dio.write_json(
            dio.assessment_json_dict(
                n=sample.n,
                ordering=sample.ordering,
                tie_flag=sample.tie_flag,
                alpha=args.alpha,
                approach=args.approach,
                test=args.test,
                results=results,
            ),
            args.json,
        )
    if args.plot:
        if not paths:
            raise ValidationError(
                "plotting is not available for the per-arm compound assessment"
            )
        write_plot(PlotSpec(paths=tuple(paths), alpha=args.alpha), args.plot)
    return 0


def _parse_cell(text: str) -> tuple[float, float, float, float]:
    values = {}
    for part in text.split(","):
        key, _, raw = part.partition("=")
        key = key.strip()
        if key not in ("b0", "bx", "ba", "bxa") or not raw:
            raise ValidationError(
                f"bad --cell component {part!r}; expected b0=..,bx=..,ba=..,bxa=.."
            )
        try:
            values[key] = float(raw)
        except ValueError:
            raise ValidationError(f"bad --cell value {raw!r}") from None
    missing = [k for k in ("b0", "bx", "ba", "bxa") if k not in values]
    if missing:
        raise ValidationError(f"--cell missing {', '.join(missing)}")
    return values["b0"], values["bx"], values["ba"], values["bxa"]


def _scenario_from_args(args) -> ScenarioSpec:
    beta = _parse_cell(args.cell) if args.cell else REFERENCE_BETA
    if args.scenario:
        if args.set == 1:
            raise ValidationError("set 1 has no scenario catalog; use --cell")
        try:
            spec = scenario_from_catalog(
                args.set, args.scenario, n=args.n, replicates=args.reps, seed=args.seed
            )
        except KeyError as err:
            raise ValidationError(str(err.args[0])) from None
        if args.cell:
            raise ValidationError("--scenario and --cell are mutually exclusive")
        return spec
    kwargs = {}
    if args.set == 2:
        kwargs["alpha"] = args.alpha if args.alpha is not None else 0.0
        kwargs["gamma"] = args.gamma if args.gamma is not None else 1.0
    if args.set == 3:
        for name in ("alpha0", "gamma0", "alpha1", "gamma1"):
            value = getattr(args, name)
            if value is not None:
                kwargs[name] = value
    return ScenarioSpec(
        set_id=args.set,
        n=args.n,
        replicates=args.reps,
        seed=args.seed,
        beta=beta,
        **kwargs,
    )


def _cmd_simulate(args) -> int:
    try:
        spec = _scenario_from_args(args)
    except ValueError as err:
        if isinstance(err, (ValidationError, DegenerateVariance)):
            raise
        raise ValidationError(str(err)) from None
    summary = run_monte_carlo(spec, workers=args.workers)
    table = dio.format_summary_table(summary)
    print(table, end="")
    if args.json:
        dio.write_json(summary.to_json_dict(), args.json)
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    return 0


def _cmd_plot(args) -> int:
    sample = _load_sample(args.input, args.order_by)
    paths = _paths_for(sample, args.approach)
    write_plot(PlotSpec(paths=tuple(paths), alpha=args.alpha), args.output)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "assess":
            return _cmd_assess(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_plot(args)
    except DegenerateVariance as err:
        print(f"error: {_qualify(err)}", file=sys.stderr)
        return 3
    except ValidationError as err:
        print(f"error: {_qualify(err)}", file=sys.stderr)
        return 2


def _qualify(err: Exception) -> str:
    module = type(err).__module__.rsplit(".", 1)[-1]
    return f"{module}: {err}"


if __name__ == "__main__":
    sys.exit(main())
