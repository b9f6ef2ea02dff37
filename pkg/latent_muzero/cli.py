"""Command line front-end: train, visualize, evaluate, curves and gradcheck.

Exit codes: 0 success, 1 usage or configuration errors, 2 runtime errors.
"""

import argparse
import logging
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from latent_muzero.checkpoint_functions import load_checkpoint
from latent_muzero.custom_errors import (
    CliUsageError,
    ConfigParseError,
    InvalidConfigValueError,
    UnknownConfigKeyError,
    UnknownMetricError,
)
from latent_muzero.data_saving_and_loading import save_csv
from latent_muzero.latent_viz_functions import visualize_checkpoint
from latent_muzero.learning_curve_functions import DEFAULT_METRIC, plot_learning_curves
from latent_muzero.models.ExperimentConfig import ExperimentConfig, parse_config
from latent_muzero.models.RunStatusJson import check_if_previous_run_was_successful
from latent_muzero.paths_functions import get_evaluation_directory
from latent_muzero.training_functions import evaluate_params, loss_gradient_check, run_training

EXIT_SUCCESS: int = 0
EXIT_USAGE: int = 1
EXIT_RUNTIME: int = 2
EVALUATION_FILE_NAME: str = "evaluation.csv"
LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

CONFIG_ERRORS = (CliUsageError, ConfigParseError, UnknownConfigKeyError, InvalidConfigValueError, UnknownMetricError)


class ArgumentParser(argparse.ArgumentParser):
    """Raises CliUsageError instead of exiting, so usage errors map to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliUsageError(message=f"{self.prog}: error: {message}")


def _flag_overrides(args: argparse.Namespace) -> list[str]:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"experiment.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"experiment.output_directory={args.out}")
    return overrides


def load_train_config(args: argparse.Namespace, logger: logging.Logger) -> ExperimentConfig:
    """Builds the run configuration: checkpoint config (when resuming without a file), file, then flags."""
    base = None
    if args.resume is not None and args.config is None:
        base = load_checkpoint(file_path=args.resume, logger=logger).config
    return parse_config(config_path=args.config, overrides=_flag_overrides(args=args), base=base, logger=logger)


def cmd_train(
    config: ExperimentConfig,
    resume_from: Optional[str | Path] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> int:
    if resume_from is None and check_if_previous_run_was_successful(run_directory=config.output_directory, logger=logger):
        logger.warning(msg=f"{config.output_directory} holds a completed run; its metrics and checkpoints are overwritten")
    result = run_training(config=config, resume_from=resume_from, logger=logger)
    last_row = result.metrics.tail(1).to_dicts()
    summary = f"mean return {last_row[0]['mean_return']:.2f}" if last_row else "no iterations run"
    print(f"Training finished in {result.run_directory}: {summary}; last checkpoint {result.last_checkpoint}")
    return EXIT_SUCCESS


def cmd_visualize(
    checkpoint_path: str | Path,
    n_trajectories: int,
    seed: Optional[int] = None,
    output_directory: Optional[str | Path] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> int:
    result = visualize_checkpoint(
        checkpoint_path=checkpoint_path,
        n_trajectories=n_trajectories,
        seed=seed,
        output_directory=output_directory,
        logger=logger,
    )
    print(f"Visualization written to {result.output_directory}: mean h/g divergence {result.mean_divergence:.6f}")
    return EXIT_SUCCESS


def cmd_evaluate(
    checkpoint_path: str | Path,
    episodes: int,
    seed: Optional[int] = None,
    output_directory: Optional[str | Path] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> int:
    """Greedy play without root noise; writes evaluation.csv (episode, return, length)."""
    if episodes < 1:
        raise CliUsageError(message=f"--episodes must be >= 1, got {episodes}")
    checkpoint = load_checkpoint(file_path=checkpoint_path, logger=logger)
    config = checkpoint.config
    report = evaluate_params(
        params=checkpoint.params,
        config=config,
        episodes=episodes,
        rng=np.random.default_rng(seed=config.seed if seed is None else seed),
    )
    directory = get_evaluation_directory(checkpoint_path=Path(checkpoint_path)) if output_directory is None else Path(output_directory)
    file_path = save_csv(dataframe=report.to_frame(), file_path=directory / EVALUATION_FILE_NAME)
    logger.info(msg=f"Evaluation of {checkpoint_path} over {episodes} episodes written to {file_path}")
    print(f"Evaluation over {episodes} episodes: mean return {report.mean_return:.2f} +/- {report.std_return:.2f}")
    return EXIT_SUCCESS


def cmd_curves(
    run_directories: Sequence[str | Path],
    metric: str = DEFAULT_METRIC,
    smoothing: int = 1,
    output_directory: str | Path = "learning_curves",
    title: str = "",
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> int:
    """One learning curve per run directory, written as learning_curves.csv and learning_curves.svg."""
    if smoothing < 1:
        raise CliUsageError(message=f"--smoothing must be >= 1, got {smoothing}")
    result = plot_learning_curves(
        run_directories=run_directories,
        output_directory=output_directory,
        metric=metric,
        smoothing_window=smoothing,
        title=title,
        logger=logger,
    )
    for curve in result.curves:
        final = f"{curve.values[-1]:.2f} after iteration {curve.iterations[-1]}" if len(curve.values) else "no iterations"
        print(f"{curve.label}: {metric} {final}")
    print(f"Learning curves written to {result.svg_path}")
    return EXIT_SUCCESS


def cmd_gradcheck(
    trials: int,
    seed: int = 0,
    tolerance: float = 1e-5,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> int:
    if trials < 1:
        raise CliUsageError(message=f"--trials must be >= 1, got {trials}")
    results = loss_gradient_check(trials=trials, seed=seed, tolerance=tolerance, logger=logger)
    worst = max(result.report.max_relative_error for result in results)
    failed = [result for result in results if not result.passed]
    print(f"Gradient check: {len(results) - len(failed)}/{len(results)} trials passed, max relative error {worst:.3e}")
    return EXIT_SUCCESS if not failed else EXIT_RUNTIME


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="latent-muzero", description="MuZero latent-space experiments on classic control tasks")
    parser.add_argument("--log-level", type=str, default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    train = subparsers.add_parser("train", help="Run self-play and training")
    train.add_argument("--config", type=str, default=None, help="Flat 'section.key = value' config file")
    train.add_argument("--seed", type=int, default=None, help="Overrides experiment.seed")
    train.add_argument("--out", type=str, default=None, help="Overrides experiment.output_directory")
    train.add_argument("--set", type=str, action="append", default=[], metavar="SECTION.KEY=VALUE", help="Config override, repeatable")
    train.add_argument("--resume", type=str, default=None, help="Checkpoint to continue from")

    visualize = subparsers.add_parser("visualize", help="Export and plot h-embedded and g-unrolled latents")
    visualize.add_argument("--checkpoint", type=str, required=True)
    visualize.add_argument("--trajectories", type=int, default=5, help="Number of freshly sampled episodes")
    visualize.add_argument("--seed", type=int, default=None, help="Episode sampler seed, the configured seed by default")
    visualize.add_argument("--out", type=str, default=None, help="Output directory, <run>/visualization/<checkpoint> by default")

    evaluate = subparsers.add_parser("evaluate", help="Greedy evaluation of a checkpoint")
    evaluate.add_argument("--checkpoint", type=str, required=True)
    evaluate.add_argument("--episodes", type=int, default=10)
    evaluate.add_argument("--seed", type=int, default=None)
    evaluate.add_argument("--out", type=str, default=None, help="Output directory, <run>/evaluation/<checkpoint> by default")

    curves = subparsers.add_parser("curves", help="Compare learning curves of several runs")
    curves.add_argument("runs", type=str, nargs="+", metavar="RUN_DIRECTORY")
    curves.add_argument("--metric", type=str, default=DEFAULT_METRIC, help="metrics.csv column to plot")
    curves.add_argument("--smoothing", type=int, default=1, help="Width of the trailing mean")
    curves.add_argument("--out", type=str, default="learning_curves", help="Output directory")
    curves.add_argument("--title", type=str, default="")

    gradcheck = subparsers.add_parser("gradcheck", help="Compare loss gradients with finite differences")
    gradcheck.add_argument("--trials", type=int, default=20)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--tolerance", type=float, default=1e-5)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(args=argv)
    except CliUsageError as error:
        print(error.message, file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    logger = logging.getLogger(name="latent_muzero")

    try:
        if args.command == "train":
            try:
                config = load_train_config(args=args, logger=logger)
            except FileNotFoundError as error:
                print(f"Error: {error}", file=sys.stderr)
                return EXIT_USAGE
            return cmd_train(config=config, resume_from=args.resume, logger=logger)
        if args.command == "visualize":
            return cmd_visualize(
                checkpoint_path=args.checkpoint, n_trajectories=args.trajectories, seed=args.seed,
                output_directory=args.out, logger=logger,
            )
        if args.command == "evaluate":
            return cmd_evaluate(
                checkpoint_path=args.checkpoint, episodes=args.episodes, seed=args.seed,
                output_directory=args.out, logger=logger,
            )
        if args.command == "curves":
            return cmd_curves(
                run_directories=args.runs, metric=args.metric, smoothing=args.smoothing,
                output_directory=args.out, title=args.title, logger=logger,
            )
        return cmd_gradcheck(trials=args.trials, seed=args.seed, tolerance=args.tolerance, logger=logger)
    except CONFIG_ERRORS as error:
        print(f"Error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as error:
        logger.debug(msg=traceback.format_exc())
        print(f"Error: {type(error).__name__}: {error}", file=sys.stderr)
        return EXIT_RUNTIME
