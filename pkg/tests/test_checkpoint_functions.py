import numpy as np
import pytest

from latent_muzero.checkpoint_functions import (
    CHECKPOINT_MAGIC,
    Checkpoint,
    encode_checkpoint,
    load_checkpoint,
    rng_from_json,
    rng_state_to_json,
    save_checkpoint,
)
from latent_muzero.custom_errors import CheckpointVersionError, FileCorruptionError
from latent_muzero.data_saving_and_loading import get_checksum_path, save_zstd_with_checksum
from latent_muzero.enums.Algorithm import Algorithm
from latent_muzero.model_functions import initialize_params
from latent_muzero.models.ExperimentConfig import ExperimentConfig
from latent_muzero.models.NetworkParams import AdamState
from latent_muzero.models.ReplayBuffer import ReplayBuffer
from latent_muzero.models.TrajectoryRecord import TrajectoryRecord


def _checkpoint(tmp_path, algorithm=Algorithm.MUZERO_DECODER) -> Checkpoint:
    config = ExperimentConfig(algorithm=algorithm, latent_size=4, hidden_size=8, output_directory=tmp_path, seed=17)
    rng = np.random.default_rng(seed=config.seed)
    params = initialize_params(config=config, rng=rng)
    arrays = params.named_arrays()
    adam_state = AdamState(
        m={name: rng.normal(size=array.shape) for name, array in arrays.items()},
        v={name: rng.uniform(size=array.shape) for name, array in arrays.items()},
        step=7,
    )
    buffer = ReplayBuffer(window=3)
    for iteration in (1, 2):
        buffer.add(
            self_play_iteration=iteration,
            trajectories=[
                TrajectoryRecord(
                    observations=rng.normal(size=(4, 4)),
                    actions=[0, 1, 1],
                    rewards=[1.0, 1.0, 1.0],
                    search_policies=rng.dirichlet(alpha=np.ones(2), size=3),
                    root_values=rng.uniform(size=3),
                    terminal=iteration == 1,
                    truncated=iteration == 2,
                    self_play_iteration=iteration,
                    final_root_value=0.0 if iteration == 1 else 12.5,
                )
            ],
        )
    rows = [{"iteration": 1, "mean_return": 21.5, "total_loss": 3.25}, {"iteration": 2, "mean_return": 30.0, "total_loss": 2.0}]
    return Checkpoint(
        config=config, params=params, adam_state=adam_state, rng_state=rng_state_to_json(rng=rng),
        iteration=2, replay_buffer=buffer, metrics_rows=rows,
    )


@pytest.mark.parametrize("algorithm", [Algorithm.MUZERO_DECODER, Algorithm.ALPHAZERO])
def test_checkpoint_round_trip(tmp_path, algorithm):
    checkpoint = _checkpoint(tmp_path=tmp_path, algorithm=algorithm)
    file_path = save_checkpoint(checkpoint=checkpoint, file_path=tmp_path / "checkpoints" / "checkpoint_00002.lmzc")
    assert get_checksum_path(file_path=file_path).exists(), "A sha256 sidecar must be written"
    loaded = load_checkpoint(file_path=file_path)

    assert loaded.config == checkpoint.config, f"Config changed: {loaded.config}"
    assert loaded.iteration == 2 and loaded.version == checkpoint.version
    assert loaded.metrics_rows == checkpoint.metrics_rows
    original_arrays, loaded_arrays = checkpoint.params.named_arrays(), loaded.params.named_arrays()
    assert original_arrays.keys() == loaded_arrays.keys(), f"Parameter names differ: {sorted(loaded_arrays)}"
    for name, array in original_arrays.items():
        assert np.array_equal(array, loaded_arrays[name]) and loaded_arrays[name].dtype == np.float64, f"{name} differs"
        assert np.array_equal(checkpoint.adam_state.m[name], loaded.adam_state.m[name]), f"Adam m of {name} differs"
        assert np.array_equal(checkpoint.adam_state.v[name], loaded.adam_state.v[name]), f"Adam v of {name} differs"
    assert loaded.adam_state.step == 7

    original_draws = rng_from_json(rng_state=checkpoint.rng_state).random(size=5)
    loaded_draws = rng_from_json(rng_state=loaded.rng_state).random(size=5)
    assert np.array_equal(original_draws, loaded_draws), "The restored generator must continue the same stream"

    assert loaded.replay_buffer.window == 3 and loaded.replay_buffer.iterations == [1, 2]
    for original, restored in zip(checkpoint.replay_buffer.trajectories(), loaded.replay_buffer.trajectories()):
        for name in ("observations", "actions", "rewards", "search_policies", "root_values"):
            assert np.array_equal(getattr(original, name), getattr(restored, name)), f"Trajectory {name} differs"
        assert (original.terminal, original.truncated, original.final_root_value) == (
            restored.terminal, restored.truncated, restored.final_root_value,
        )
        assert restored.actions.dtype == np.int64


def test_generator_state_round_trip():
    rng = np.random.default_rng(seed=123)
    rng.normal(size=3)
    restored = rng_from_json(rng_state=rng_state_to_json(rng=rng))
    assert np.array_equal(rng.integers(0, 2**62, size=10), restored.integers(0, 2**62, size=10))
    with pytest.raises(ValueError):
        rng_from_json(rng_state={"bit_generator": "MT19937"})


def test_checkpoint_corruption_is_detected(tmp_path):
    checkpoint = _checkpoint(tmp_path=tmp_path)
    file_path = save_checkpoint(checkpoint=checkpoint, file_path=tmp_path / "checkpoint.lmzc")
    original = file_path.read_bytes()

    flipped = bytearray(original)
    flipped[len(flipped) // 2] ^= 0xFF
    file_path.write_bytes(bytes(flipped))
    with pytest.raises(FileCorruptionError):
        load_checkpoint(file_path=file_path)

    truncated_path = tmp_path / "truncated.lmzc"
    save_zstd_with_checksum(payload=encode_checkpoint(checkpoint=checkpoint)[:-16], file_path=truncated_path)
    with pytest.raises(FileCorruptionError):
        load_checkpoint(file_path=truncated_path)

    wrong_magic_path = tmp_path / "wrong_magic.lmzc"
    save_zstd_with_checksum(payload=b"NOPE" + encode_checkpoint(checkpoint=checkpoint)[4:], file_path=wrong_magic_path)
    with pytest.raises(FileCorruptionError):
        load_checkpoint(file_path=wrong_magic_path)


def test_checkpoint_version_and_missing_sidecar(tmp_path):
    checkpoint = _checkpoint(tmp_path=tmp_path)
    payload = encode_checkpoint(checkpoint=checkpoint)
    assert payload[:4] == CHECKPOINT_MAGIC

    future_path = tmp_path / "future.lmzc"
    save_zstd_with_checksum(payload=payload[:4] + (2).to_bytes(4, "little") + payload[8:], file_path=future_path)
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(file_path=future_path)

    file_path = save_checkpoint(checkpoint=checkpoint, file_path=tmp_path / "no_sidecar.lmzc")
    get_checksum_path(file_path=file_path).unlink()
    with pytest.raises(FileNotFoundError):
        load_checkpoint(file_path=file_path)
    with pytest.raises(FileNotFoundError):
        load_checkpoint(file_path=tmp_path / "missing.lmzc")
