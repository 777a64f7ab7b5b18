"""Command-line entry point: run simulations, check traces, list presets."""

import argparse
import logging
import os
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from dremlab.config import LabConfig
from dremlab.errors import (
    ConfigError,
    StabilityError,
    TraceIOError,
    UnknownCheckError,
)
from dremlab.harness.acceptance import AcceptanceRunner
from dremlab.harness.simulation import run, run_summary
from dremlab.harness.trace_io import emit_csv, load_csv
from dremlab.models import AcceptanceReport, CheckStatus, Law, RunConfig
from dremlab.presets import PRESET_PARAMETERS, PRESETS, THETA0_VARIANTS, export_presets

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "DREMLAB_LOG_LEVEL"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

# CLI flag -> RunConfig field
_OVERRIDES = {
    "tau_s": "tau_s",
    "l": "l",
    "eps": "eps",
    "eps_bar": "eps_bar",
    "gamma0": "gamma0",
    "gamma1": "gamma1",
    "Gamma": "Gamma",
    "stride": "log_stride",
    "eig_method": "eig_method",
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _theta0(text: str) -> list[float]:
    """A named variant (zero, offset, near) or comma-separated numbers."""
    if text in THETA0_VARIANTS:
        return list(THETA0_VARIANTS[text])
    return _float_list(text)


def _laws(text: str) -> list[Law]:
    try:
        return [Law(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError:
        known = ", ".join(law.value for law in Law)
        raise argparse.ArgumentTypeError(f"unknown law in {text!r}; choose from {known}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dremlab",
        description="Simulate gradient, DREM and regularized DREM estimators and check the runs.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--config-dir", default=None, help="Directory with defaults.yaml")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Simulate a scenario")
    p_run.add_argument("--scenario", required=True, help="Preset name or scenario YAML file")
    p_run.add_argument("--laws", type=_laws, default=None, help="e.g. gradient,drem-regularized")
    p_run.add_argument("--theta0", type=_theta0, default=None, help="zero, offset, near or a,b,c")
    p_run.add_argument("--out", type=Path, default=None, help="CSV trace path")
    p_run.add_argument("--tau-s", dest="tau_s", type=float, default=None)
    p_run.add_argument("--l", type=float, default=None)
    p_run.add_argument("--eps", type=float, default=None)
    p_run.add_argument("--eps-bar", dest="eps_bar", type=float, default=None)
    p_run.add_argument("--gamma0", type=float, default=None)
    p_run.add_argument("--gamma1", type=float, default=None)
    p_run.add_argument("--Gamma", type=float, default=None, help="Scalar gradient gain")
    p_run.add_argument("--stride", type=int, default=None, help="Log every N-th step")
    p_run.add_argument("--horizon", type=float, default=None, help="Override a preset horizon")
    p_run.add_argument("--eig-method", dest="eig_method", choices=["jacobi", "lapack"])
    p_run.add_argument("--suite", default=None, help="Run these checks on the finished trace")

    p_check = sub.add_parser("check", help="Run acceptance checks on a CSV trace")
    p_check.add_argument("--trace", type=Path, required=True)
    p_check.add_argument("--suite", required=True, help="Suite name or check1,check2,...")

    p_presets = sub.add_parser("presets", help="List embedded scenarios")
    p_presets.add_argument("--export", type=Path, default=None, metavar="DIR")
    return parser


def configure_logging(level: Optional[str] = None) -> None:
    """Install a RichHandler on the root logger."""
    name = (level or os.environ.get(LOG_LEVEL_ENV) or "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.INFO),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def build_run_config(args: argparse.Namespace, lab: LabConfig) -> RunConfig:
    """Layer config defaults, preset parameters and command-line flags.

    Raises:
        ConfigError: If the combined parameters do not validate
    """
    scenario = lab.resolve_scenario(args.scenario, args.horizon)
    params: dict[str, Any] = dict(lab.defaults)
    params.update(PRESET_PARAMETERS.get(args.scenario, {}))
    for flag, field in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            params[field] = value
    if args.laws is not None:
        params["laws"] = args.laws
    if args.theta0 is not None:
        params["theta0"] = args.theta0
    try:
        return RunConfig(scenario=scenario, **params)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


def report_table(report: AcceptanceReport) -> Table:
    table = Table(title=f"Checks: {report.selection}")
    table.add_column("Check", no_wrap=True)
    table.add_column("Status")
    table.add_column("Measured", justify="right")
    table.add_column("Bound", justify="right")
    table.add_column("Detail")
    colors = {CheckStatus.PASS: "green", CheckStatus.FAIL: "red", CheckStatus.SKIP: "yellow"}
    for r in report.results:
        table.add_row(
            r.name,
            f"[{colors[r.status]}]{r.status.value}[/]",
            "" if r.measured is None else f"{r.measured:.6g}",
            "" if r.bound is None else f"{r.bound:.6g}",
            r.detail,
        )
    return table


def cmd_run(args: argparse.Namespace, lab: LabConfig, console: Console) -> int:
    cfg = build_run_config(args, lab)
    runner = AcceptanceRunner(lab.suites, lab.excitation)
    if args.suite is not None:
        runner.resolve(args.suite)
    trace = run(cfg)

    summary = Table(title=f"Run: {cfg.scenario.name}")
    summary.add_column("Quantity")
    summary.add_column("Value", justify="right")
    for key, value in run_summary(trace).items():
        summary.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(summary)

    if args.out is not None:
        path = emit_csv(trace, args.out)
        console.print(f"trace written to {path}")
    if args.suite is None:
        return EXIT_OK
    report = runner.run(trace, args.suite)
    console.print(report_table(report))
    return report.exit_code


def cmd_check(args: argparse.Namespace, lab: LabConfig, console: Console) -> int:
    runner = AcceptanceRunner(lab.suites, lab.excitation)
    # Resolve before loading so an unknown name is reported even for a bad trace
    runner.resolve(args.suite)
    report = runner.run(load_csv(args.trace), args.suite)
    console.print(report_table(report))
    return report.exit_code


def cmd_presets(args: argparse.Namespace, lab: LabConfig, console: Console) -> int:
    if args.export is not None:
        for path in export_presets(args.export):
            console.print(f"wrote {path}")
        return EXIT_OK

    table = Table(title="Embedded scenarios")
    table.add_column("Name", no_wrap=True)
    table.add_column("Description")
    table.add_column("Horizon", justify="right")
    table.add_column("theta")
    table.add_column("Parameters")
    for name, factory in PRESETS.items():
        spec = factory()
        params = ", ".join(f"{k}={v}" for k, v in PRESET_PARAMETERS[name].items())
        table.add_row(
            name,
            spec.description or "",
            f"{spec.horizon:g}",
            str(spec.theta_true),
            params,
        )
    console.print(table)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check": cmd_check, "presets": cmd_presets}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the dremlab console script."""
    from dotenv import load_dotenv

    load_dotenv()

    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    console = Console()
    try:
        lab = LabConfig.load(args.config_dir)
        return COMMANDS[args.command](args, lab, console)
    except (ConfigError, UnknownCheckError, StabilityError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except TraceIOError as e:
        logger.error("%s", e)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
