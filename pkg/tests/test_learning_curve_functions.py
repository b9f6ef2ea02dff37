import xml.etree.ElementTree as ET

import numpy as np
import polars as pl
import pytest

from latent_muzero.custom_errors import EmptyPlotInputError, UnknownMetricError
from latent_muzero.data_saving_and_loading import load_csv, save_csv
from latent_muzero.learning_curve_functions import load_learning_curve, plot_learning_curves, run_label, smooth
from latent_muzero.models.RunStatusJson import RunStatusJson
from latent_muzero.paths_functions import get_metrics_path
from latent_muzero.svg_functions import SVG_NAMESPACE


def _write_run(run_directory, iterations, returns, algorithm=None, latent_size=None):
    save_csv(
        dataframe=pl.DataFrame(
            {"iteration": iterations, "mean_return": returns, "value_loss": [0.5] * len(iterations)},
            schema={"iteration": pl.Int64, "mean_return": pl.Float64, "value_loss": pl.Float64},
        ),
        file_path=get_metrics_path(run_directory=run_directory),
    )
    if algorithm is not None:
        RunStatusJson(
            run_directory=run_directory, config={"experiment.algorithm": algorithm, "model.latent_size": latent_size}
        ).save_to_disk()
    return run_directory


def test_smooth_is_a_trailing_mean():
    values = pl.Series("value", [1.0, 2.0, 3.0, 4.0, 5.0])
    assert smooth(values=values, window=1).to_list() == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert np.allclose(smooth(values=values, window=2).to_numpy(), [1.0, 1.5, 2.5, 3.5, 4.5]), "Window 2 is off"
    assert np.allclose(smooth(values=values, window=3).to_numpy(), [1.0, 1.5, 2.0, 3.0, 4.0]), "Window 3 is off"
    with pytest.raises(ValueError):
        smooth(values=values, window=0)


def test_load_learning_curve_sorts_and_labels(tmp_path):
    run_directory = _write_run(
        run_directory=tmp_path / "run_a", iterations=[2, 1, 3], returns=[20.0, 10.0, 30.0],
        algorithm="muzero_contrastive", latent_size=3,
    )
    curve = load_learning_curve(run_directory=run_directory)
    assert curve.label == "muzero_contrastive L=3", f"Label is {curve.label}"
    assert curve.iterations.tolist() == [1, 2, 3] and curve.values.tolist() == [10.0, 20.0, 30.0]
    assert load_learning_curve(run_directory=run_directory, metric="value_loss", label="x").values.tolist() == [0.5] * 3

    unlabelled = _write_run(run_directory=tmp_path / "seed_7", iterations=[1], returns=[9.0])
    assert run_label(run_directory=unlabelled) == "seed_7", "Runs without a status file are named after their directory"


def test_load_learning_curve_errors(tmp_path):
    run_directory = _write_run(run_directory=tmp_path / "run", iterations=[1, 2], returns=[1.0, 2.0])
    for metric in ("bogus", "iteration"):
        with pytest.raises(UnknownMetricError):
            load_learning_curve(run_directory=run_directory, metric=metric)
    with pytest.raises(FileNotFoundError):
        load_learning_curve(run_directory=tmp_path / "missing")


def test_plot_learning_curves_draws_one_polyline_per_run(tmp_path):
    runs = [
        _write_run(run_directory=tmp_path / "a", iterations=[1, 2, 3], returns=[10.0, 20.0, 30.0], algorithm="muzero", latent_size=3),
        _write_run(run_directory=tmp_path / "b", iterations=[1, 2, 3], returns=[5.0, 15.0, 40.0], algorithm="muzero", latent_size=3),
        _write_run(run_directory=tmp_path / "c", iterations=[1, 2], returns=[8.0, 9.0], algorithm="alphazero", latent_size=3),
    ]
    result = plot_learning_curves(run_directories=runs, output_directory=tmp_path / "out", smoothing_window=2, title="CartPole")
    labels = [curve.label for curve in result.curves]
    assert labels == ["muzero L=3 (a)", "muzero L=3 (b)", "alphazero L=3"], f"Labels are {labels}"

    frame = load_csv(file_path=result.csv_path)
    assert frame.columns == ["run", "iteration", "value"] and frame.height == 8, f"Curve data is {frame}"
    assert frame.filter(pl.col("run") == "muzero L=3 (a)")["value"].to_list() == [10.0, 15.0, 25.0]

    root = ET.parse(result.svg_path).getroot()
    polylines = list(root.iter(f"{{{SVG_NAMESPACE}}}polyline"))
    assert len(polylines) == 3, f"Expected one polyline per run, got {len(polylines)}"
    assert [polyline.find(f"{{{SVG_NAMESPACE}}}title").text for polyline in polylines] == labels
    assert len({polyline.get("stroke") for polyline in polylines}) == 3, "Every run needs its own colour"
    assert "CartPole" in [text.text for text in root.iter(f"{{{SVG_NAMESPACE}}}text")], "The title must be drawn"


def test_plot_learning_curves_without_iterations(tmp_path):
    empty = _write_run(run_directory=tmp_path / "empty", iterations=[], returns=[])
    with pytest.raises(EmptyPlotInputError):
        plot_learning_curves(run_directories=[empty], output_directory=tmp_path / "out")
