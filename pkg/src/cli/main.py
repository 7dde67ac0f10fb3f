"""Command-line entry point: ``emos-pooling <command> [options]``.

Commands chain through files::

    emos-pooling simulate --scenario uwme_wind --days 120 --stations 20 --out data/
    emos-pooling train --data data/ --out run/
    emos-pooling combine --data data/ --out run/
    emos-pooling verify --data data/ --out run/
    emos-pooling report --data data/ --out run/    # all three stages at once

Exit codes are 0 on success, 1 on invalid input or configuration and 2 when
an optimizer fails to converge in strict mode.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import yaml
from dotenv import load_dotenv

from src.config.loader import PipelineConfig, load_pipeline_config, scenario_names
from src.config.settings import get_settings
from src.data.dataset import load_dataset, write_dataset
from src.data.simulate import simulate_dataset
from src.engine.pipeline import (
    combine_components,
    run_pipeline,
    run_settings,
    stage,
    train_components,
    verify_systems,
)
from src.engine.reports import (
    COEFFICIENTS_FILE,
    PARAMETERS_FILE,
    read_coefficients,
    read_combinations,
    write_coefficients,
    write_combinations,
    write_reports,
    write_verification,
)
from src.errors import ConvergenceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONVERGENCE = 2

TRUTH_FILE = "truth.yaml"


def _methods(value: str) -> list[str]:
    return [m.strip() for m in value.split(",") if m.strip()]


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, required=True, help="Data set directory or manifest")
    parser.add_argument("--out", type=Path, required=True, help="Directory for output files")
    parser.add_argument("--config", type=Path, default=None, help="Pipeline YAML file")
    parser.add_argument("--window-days", type=int, default=None, help="Training window length")
    parser.add_argument(
        "--methods", type=_methods, default=None, help="Comma-separated, e.g. lp,slp,blp,bml,lp-pi"
    )
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--bootstrap-b", type=int, default=None, help="Bootstrap block length")
    parser.add_argument("--bootstrap-m", type=int, default=None, help="Bootstrap repetitions")
    parser.add_argument("--tau", type=int, default=None, help="DM forecast horizon in days")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emos-pooling",
        description="EMOS post-processing, forecast pooling and verification.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Write a synthetic data set")
    simulate.add_argument("--scenario", choices=scenario_names(), required=True)
    simulate.add_argument("--days", type=int, required=True, help="Number of days")
    simulate.add_argument("--stations", type=int, required=True, help="Number of stations")
    simulate.add_argument("--seed", type=int, default=0, help="Master seed")
    simulate.add_argument("--window-days", type=int, default=None, help="Planned window length")
    simulate.add_argument("--out", type=Path, required=True, help="Data set directory")

    for name, text in (
        ("train", "Fit the rolling EMOS components"),
        ("combine", "Fit the rolling pools from fitted components"),
        ("verify", "Score all systems and compare them pairwise"),
        ("report", "Run train, combine and verify and write every report"),
    ):
        _add_run_options(commands.add_parser(name, help=text))
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {
        "window_days": args.window_days,
        "methods": args.methods,
        "seed": args.seed,
        "bootstrap_b": args.bootstrap_b,
        "bootstrap_m": args.bootstrap_m,
        "tau": args.tau,
    }
    return load_pipeline_config(args.config, overrides)


def _simulate(args: argparse.Namespace) -> None:
    config = load_pipeline_config(overrides={"window_days": args.window_days})
    if args.days < config.window_days + 1:
        raise ValueError(
            f"--days must exceed the training window of {config.window_days} days"
        )
    dataset, truth = simulate_dataset(args.scenario, args.days, args.stations, args.seed)
    write_dataset(dataset, args.out)
    with open(args.out / TRUTH_FILE, "w") as f:
        yaml.safe_dump(truth.model_dump(mode="json"), f, sort_keys=False)


def _run(args: argparse.Namespace) -> None:
    config = _config(args)
    settings = run_settings(config)
    dataset = load_dataset(args.data)
    batch = dataset.to_batch()
    out: Path = args.out
    match args.command:
        case "report":
            write_reports(run_pipeline(config, dataset, settings), out)
        case "train":
            with stage("train"):
                coefficients = train_components(config, batch, settings)
            write_coefficients(coefficients, out / COEFFICIENTS_FILE)
        case "combine":
            coefficients = read_coefficients(out / COEFFICIENTS_FILE)
            with stage("combine"):
                combinations = combine_components(config, batch, coefficients, settings)
            write_combinations(combinations, out / PARAMETERS_FILE)
        case "verify":
            coefficients = read_coefficients(out / COEFFICIENTS_FILE)
            combinations = read_combinations(out / PARAMETERS_FILE)
            with stage("verify"):
                verification = verify_systems(
                    config, batch, coefficients, combinations, settings
                )
            write_verification(verification, out)


def _is_convergence_failure(exc: BaseException) -> bool:
    """True if ``exc`` or an error it was raised from is a ConvergenceError."""
    current: BaseException | None = exc
    while current is not None:
        if isinstance(current, ConvergenceError):
            return True
        current = current.__cause__
    return False


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    load_dotenv()
    settings = get_settings()
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which is the convergence code here
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        if args.command == "simulate":
            _simulate(args)
        else:
            _run(args)
    except (ValueError, OSError) as exc:
        if _is_convergence_failure(exc):
            logger.error(f"{args.command} failed to converge: {exc}")
            return EXIT_CONVERGENCE
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
