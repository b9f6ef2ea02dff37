import hashlib
from pathlib import Path

import polars as pl
import pytest

from latent_muzero.cli import EXIT_RUNTIME, EXIT_SUCCESS, EXIT_USAGE, main
from latent_muzero.data_saving_and_loading import get_checksum_path, load_csv, save_csv
from latent_muzero.paths_functions import get_latest_checkpoint, get_metrics_path

SMALL_CONFIG = """# two tiny CartPole iterations
experiment.seed = 3
model.latent_size = 4
model.hidden_size = 8
model.unroll_steps = 2
self_play.iterations = 2
self_play.episodes = 2
self_play.max_steps = 12
mcts.simulations = 3
replay.td_steps = 3
replay.batch_size = 4
optimizer.epochs = 2
training.checkpoint_interval = 1
training.deterministic_metrics = true
"""


def _checkpoint_digests(checkpoint_path: Path) -> dict[str, str]:
    return {
        path.name: hashlib.sha256(path.read_bytes()).hexdigest()
        for path in (checkpoint_path, get_checksum_path(file_path=checkpoint_path))
    }


def _write_config(tmp_path: Path, text: str = SMALL_CONFIG) -> Path:
    config_path = tmp_path / "small.cfg"
    config_path.write_text(text, encoding="utf-8")
    return config_path


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["evaluate"],
        ["train", "--seed", "not-a-number"],
        ["gradcheck", "--trials", "0"],
        ["curves"],
    ],
)
def test_usage_errors_exit_with_one(argv):
    assert main(argv=argv) == EXIT_USAGE, f"{argv} must be a usage error"


def test_config_errors_exit_with_one(tmp_path):
    assert main(argv=["train", "--config", str(tmp_path / "missing.cfg")]) == EXIT_USAGE
    config_path = _write_config(tmp_path=tmp_path)
    assert main(argv=["train", "--config", str(config_path), "--set", "model.latent_size=0"]) == EXIT_USAGE
    assert main(argv=["train", "--config", str(config_path), "--set", "model.width=3"]) == EXIT_USAGE
    assert main(argv=["train", "--config", str(_write_config(tmp_path=tmp_path, text="not a key value line\n"))]) == EXIT_USAGE


def test_missing_checkpoint_is_a_runtime_error(tmp_path):
    assert main(argv=["evaluate", "--checkpoint", str(tmp_path / "missing.lmzc")]) == EXIT_RUNTIME
    assert main(argv=["visualize", "--checkpoint", str(tmp_path / "missing.lmzc")]) == EXIT_RUNTIME


def test_gradcheck_command():
    assert main(argv=["gradcheck", "--trials", "2"]) == EXIT_SUCCESS


def test_train_evaluate_and_visualize(tmp_path):
    run_directory = tmp_path / "run"
    config_path = _write_config(tmp_path=tmp_path)
    assert main(argv=["train", "--config", str(config_path), "--out", str(run_directory)]) == EXIT_SUCCESS

    metrics = load_csv(file_path=get_metrics_path(run_directory=run_directory))
    assert metrics["iteration"].to_list() == [1, 2], f"Metrics iterations are {metrics['iteration'].to_list()}"
    checkpoint_path = get_latest_checkpoint(run_directory=run_directory)
    assert checkpoint_path is not None and checkpoint_path.name == "checkpoint_00002.lmzc"
    digests = _checkpoint_digests(checkpoint_path=checkpoint_path)
    assert len(digests) == 2, f"Expected a checkpoint and its sidecar, got {sorted(digests)}"

    assert main(argv=["evaluate", "--checkpoint", str(checkpoint_path), "--episodes", "2"]) == EXIT_SUCCESS
    evaluation = load_csv(file_path=run_directory / "evaluation" / "checkpoint_00002" / "evaluation.csv")
    assert evaluation.columns == ["episode", "return", "length"] and evaluation.height == 2
    assert _checkpoint_digests(checkpoint_path=checkpoint_path) == digests, "evaluate must not modify the checkpoint"

    assert main(argv=["visualize", "--checkpoint", str(checkpoint_path), "--trajectories", "2"]) == EXIT_SUCCESS
    visualization_directory = run_directory / "visualization" / "checkpoint_00002"
    for name in ("latents.csv", "projections.csv", "divergence.csv", "embedded_latents.svg", "latent_trajectories.svg"):
        assert (visualization_directory / name).exists(), f"{name} was not written"
    assert _checkpoint_digests(checkpoint_path=checkpoint_path) == digests, "visualize must not modify the checkpoint"


def test_resume_from_checkpoint_without_config(tmp_path):
    run_directory = tmp_path / "run"
    assert main(argv=["train", "--config", str(_write_config(tmp_path=tmp_path)), "--out", str(run_directory)]) == EXIT_SUCCESS
    checkpoint_path = get_latest_checkpoint(run_directory=run_directory)
    assert main(argv=["train", "--resume", str(checkpoint_path), "--set", "self_play.iterations=3"]) == EXIT_SUCCESS
    metrics = load_csv(file_path=get_metrics_path(run_directory=run_directory))
    assert metrics["iteration"].to_list() == [1, 2, 3], "Resuming must continue the checkpointed run directory"


def test_get_latest_checkpoint_of_empty_run(tmp_path):
    assert get_latest_checkpoint(run_directory=tmp_path) is None


def test_curves_command(tmp_path):
    runs = []
    for name, returns in (("muzero", [10.0, 30.0, 20.0]), ("alphazero", [12.0, 14.0, 40.0])):
        run_directory = tmp_path / name
        save_csv(
            dataframe=pl.DataFrame({"iteration": [1, 2, 3], "mean_return": returns}),
            file_path=get_metrics_path(run_directory=run_directory),
        )
        runs.append(str(run_directory))
    output_directory = tmp_path / "curves"

    argv = ["curves", *runs, "--smoothing", "2", "--out", str(output_directory), "--title", "CartPole"]
    assert main(argv=argv) == EXIT_SUCCESS
    curves = load_csv(file_path=output_directory / "learning_curves.csv")
    assert curves["run"].unique(maintain_order=True).to_list() == ["muzero", "alphazero"]
    assert curves.filter(pl.col("run") == "muzero")["value"].to_list() == [10.0, 20.0, 25.0], "Smoothing must be a trailing mean"
    assert (output_directory / "learning_curves.svg").exists()

    assert main(argv=["curves", *runs, "--metric", "bogus", "--out", str(output_directory)]) == EXIT_USAGE
    assert main(argv=["curves", *runs, "--smoothing", "0", "--out", str(output_directory)]) == EXIT_USAGE
    assert main(argv=["curves", str(tmp_path / "missing"), "--out", str(output_directory)]) == EXIT_RUNTIME
