"""Learning curves of training runs, read back from their metrics files.

Each run contributes one curve: a metrics column against the self-play iteration. Curves of several
runs are drawn into one SVG so that algorithms and latent sizes can be compared side by side.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import orjson
import polars as pl
from numpy.typing import NDArray

from latent_muzero.custom_errors import UnknownMetricError
from latent_muzero.data_saving_and_loading import load_csv, save_csv
from latent_muzero.paths_functions import get_metrics_path, get_status_json_path
from latent_muzero.svg_functions import CurveSeries, PlotStyle, render_learning_curves, write_svg

DEFAULT_METRIC: str = "mean_return"
CURVES_CSV_NAME: str = "learning_curves.csv"
CURVES_SVG_NAME: str = "learning_curves.svg"


@dataclass
class LearningCurve:
    """One metric of one run over its self-play iterations.

    Attributes:
        label (str): Legend entry.
        run_directory (Path): Directory holding the run's metrics file.
        iterations (NDArray[np.int64]): Self-play iterations, ascending.
        values (NDArray[np.float64]): Metric values, smoothed if requested.
    """

    label: str
    run_directory: Path
    iterations: NDArray[np.int64]
    values: NDArray[np.float64]


@dataclass
class LearningCurvesResult:
    curves: list[LearningCurve]
    csv_path: Path
    svg_path: Path


def run_label(run_directory: str | Path, logger: logging.Logger = logging.getLogger(name=__name__)) -> str:
    """'<algorithm> L=<latent size>' from the run's status file, the directory name if that is unavailable."""
    run_directory = Path(run_directory)
    status_json_path = get_status_json_path(run_directory=run_directory)
    if status_json_path.exists():
        try:
            with open(file=status_json_path, mode="rb") as file:
                config = orjson.loads(file.read()).get("config", {})
            algorithm = config.get("experiment.algorithm")
            latent_size = config.get("model.latent_size")
            if algorithm is not None and latent_size is not None:
                return f"{algorithm} L={latent_size}"
        except Exception as e:
            logger.warning(msg=f"Could not read the run configuration from {status_json_path}: {e}")
    return run_directory.resolve().name


def smooth(values: pl.Series, window: int) -> pl.Series:
    """Trailing mean over `window` entries; the first entries average over what is available."""
    if window < 1:
        raise ValueError(f"The smoothing window must be >= 1, got {window}")
    if window == 1:
        return values.cast(pl.Float64)
    frame = pl.DataFrame({"value": values.cast(pl.Float64)})
    return frame.select(
        pl.col("value")
        .rolling_mean(window_size=window)
        .fill_null(pl.col("value").cum_sum() / pl.int_range(1, pl.len() + 1))
    ).to_series()


def load_learning_curve(
    run_directory: str | Path,
    metric: str = DEFAULT_METRIC,
    smoothing_window: int = 1,
    label: Optional[str] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> LearningCurve:
    """Reads one metric of a run.

    Args:
        run_directory: Run directory with a `metrics.csv`.
        metric: Any metrics column except `iteration`.
        smoothing_window: Width of the trailing mean, 1 for the raw values.
        label: Legend entry; derived from the run configuration when None.
        logger: Injected logger.

    Returns:
        LearningCurve: The metric sorted by iteration.

    Raises:
        FileNotFoundError: If the run has no metrics file.
        UnknownMetricError: If the metric is not a column of the metrics file.
    """
    run_directory = Path(run_directory)
    metrics = load_csv(file_path=get_metrics_path(run_directory=run_directory))
    available = [column for column in metrics.columns if column != "iteration"]
    if metric not in available:
        raise UnknownMetricError(metric=metric, available=available)

    metrics = metrics.select(["iteration", metric]).sort("iteration")
    values = smooth(values=metrics[metric], window=smoothing_window)
    logger.debug(msg=f"Read {metrics.height} iterations of {metric} from {run_directory}")
    return LearningCurve(
        label=run_label(run_directory=run_directory, logger=logger) if label is None else label,
        run_directory=run_directory,
        iterations=metrics["iteration"].to_numpy().astype(np.int64),
        values=values.to_numpy().astype(np.float64),
    )


def learning_curves_frame(curves: Sequence[LearningCurve]) -> pl.DataFrame:
    """Long format: one row per (run, iteration) with the plotted value."""
    frames = [
        pl.DataFrame(
            {"run": [curve.label] * len(curve.iterations), "iteration": curve.iterations, "value": curve.values},
            schema={"run": pl.String, "iteration": pl.Int64, "value": pl.Float64},
        )
        for curve in curves
    ]
    if not frames:
        return pl.DataFrame(schema={"run": pl.String, "iteration": pl.Int64, "value": pl.Float64})
    return pl.concat(frames, how="vertical")


def _unique_labels(curves: list[LearningCurve]) -> None:
    counts: dict[str, int] = {}
    for curve in curves:
        counts[curve.label] = counts.get(curve.label, 0) + 1
    for curve in curves:
        if counts[curve.label] > 1:
            curve.label = f"{curve.label} ({curve.run_directory.resolve().name})"


def plot_learning_curves(
    run_directories: Sequence[str | Path],
    output_directory: str | Path,
    metric: str = DEFAULT_METRIC,
    smoothing_window: int = 1,
    title: str = "",
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> LearningCurvesResult:
    """Draws one curve per run and writes `learning_curves.csv` and `learning_curves.svg`.

    Runs that share a label (same algorithm and latent size) are told apart by their directory name.

    Raises:
        FileNotFoundError: If a run has no metrics file.
        UnknownMetricError: If the metric is missing from a run.
        EmptyPlotInputError: If no run has a completed iteration.
    """
    output_directory = Path(output_directory)
    curves = [
        load_learning_curve(run_directory=run_directory, metric=metric, smoothing_window=smoothing_window, logger=logger)
        for run_directory in run_directories
    ]
    _unique_labels(curves=curves)

    csv_path = save_csv(dataframe=learning_curves_frame(curves=curves), file_path=output_directory / CURVES_CSV_NAME)
    document = render_learning_curves(
        curves=[CurveSeries(iterations=curve.iterations, values=curve.values, label=curve.label) for curve in curves],
        style=PlotStyle(
            title=title,
            margin={"top": 40, "right": 190, "bottom": 40, "left": 56},
            axis_labels=("iteration", metric, ""),
        ),
    )
    svg_path = write_svg(document=document, file_path=output_directory / CURVES_SVG_NAME)
    logger.info(msg=f"Learning curves of {len(curves)} runs ({metric}) written to {output_directory}")
    return LearningCurvesResult(curves=curves, csv_path=csv_path, svg_path=svg_path)
