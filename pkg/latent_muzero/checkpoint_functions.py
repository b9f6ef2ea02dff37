"""Versioned binary checkpoints.

Layout (all integers little-endian), compressed as a whole with Zstandard and written with a sha256 sidecar:

    magic    4 bytes  b"LMZC"
    version  u32
    sections tag (u8) | length (u64) | payload, in CheckpointSectionCode order

Arrays are stored as name (u16 length + utf-8) | dtype code (u8) | ndim (u8) | shape (u64 each) | raw bytes.
"""

import io
import logging
import traceback
from dataclasses import dataclass, field
from enum import IntEnum, unique
from pathlib import Path
from typing import Any, BinaryIO

import numpy as np
import orjson
from numpy.typing import NDArray

from latent_muzero.custom_errors import CheckpointVersionError, FileCorruptionError
from latent_muzero.data_saving_and_loading import load_zstd_with_checksum_verification, save_zstd_with_checksum
from latent_muzero.model_functions import params_from_arrays
from latent_muzero.models.ExperimentConfig import ExperimentConfig
from latent_muzero.models.MuZeroParams import MuZeroParams
from latent_muzero.models.NetworkParams import AdamState
from latent_muzero.models.ReplayBuffer import ReplayBuffer
from latent_muzero.models.TrajectoryRecord import TrajectoryRecord

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "rng_state_to_json", "rng_from_json"]

CHECKPOINT_MAGIC: bytes = b"LMZC"
CHECKPOINT_VERSION: int = 1


@unique
class CheckpointSectionCode(IntEnum):
    """Section tags of the checkpoint layout."""

    CONFIG = 1
    PARAMETERS = 2
    ADAM_STATE = 3
    RNG_STATE = 4
    ITERATION = 5
    REPLAY_BUFFER = 6
    METRICS = 7


@unique
class ArrayDtypeCode(IntEnum):
    FLOAT64 = 0
    INT64 = 1


DTYPES: dict[ArrayDtypeCode, np.dtype] = {
    ArrayDtypeCode.FLOAT64: np.dtype("<f8"),
    ArrayDtypeCode.INT64: np.dtype("<i8"),
}


@dataclass
class Checkpoint:
    """Everything needed to continue a run exactly where it stopped.

    Attributes:
        config (ExperimentConfig): Configuration of the run.
        params (MuZeroParams): Network parameters.
        adam_state (AdamState): Optimiser moments and step counter.
        rng_state (dict[str, Any]): JSON form of the master generator state.
        iteration (int): Last completed self-play iteration (0 before the first one).
        replay_buffer (ReplayBuffer): Buffered trajectories.
        metrics_rows (list[dict[str, Any]]): Metrics rows written so far.
        version (int): Format version.
    """

    config: ExperimentConfig
    params: MuZeroParams
    adam_state: AdamState
    rng_state: dict[str, Any]
    iteration: int
    replay_buffer: ReplayBuffer
    metrics_rows: list[dict[str, Any]] = field(default_factory=list)
    version: int = CHECKPOINT_VERSION


def rng_state_to_json(rng: np.random.Generator) -> dict[str, Any]:
    """The bit generator state with its 128-bit integers as decimal strings (orjson handles 64 bits only)."""
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": {key: str(value) for key, value in state["state"].items()},
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }


def rng_from_json(rng_state: dict[str, Any]) -> np.random.Generator:
    if rng_state.get("bit_generator") != "PCG64":
        raise ValueError(f"Unsupported bit generator {rng_state.get('bit_generator')!r}")
    bit_generator = np.random.PCG64()
    bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {key: int(value) for key, value in rng_state["state"].items()},
        "has_uint32": int(rng_state["has_uint32"]),
        "uinteger": int(rng_state["uinteger"]),
    }
    return np.random.Generator(bit_generator)


################################ Low-level writers and readers #########################################
def write_u8(outfile: BinaryIO, value: int) -> None:
    outfile.write(int(value).to_bytes(length=1, byteorder="little", signed=False))


def write_u16(outfile: BinaryIO, value: int) -> None:
    outfile.write(int(value).to_bytes(length=2, byteorder="little", signed=False))


def write_u32(outfile: BinaryIO, value: int) -> None:
    outfile.write(int(value).to_bytes(length=4, byteorder="little", signed=False))


def write_u64(outfile: BinaryIO, value: int) -> None:
    outfile.write(int(value).to_bytes(length=8, byteorder="little", signed=False))


def write_i64(outfile: BinaryIO, value: int) -> None:
    outfile.write(int(value).to_bytes(length=8, byteorder="little", signed=True))


def write_f64(outfile: BinaryIO, value: float) -> None:
    outfile.write(np.array([value], dtype="<f8").tobytes())


def _read_exact(infile: BinaryIO, num_bytes: int) -> bytes:
    data = infile.read(num_bytes)
    if len(data) != num_bytes:
        raise EOFError(f"End of checkpoint reached: needed {num_bytes} bytes, got {len(data)}")
    return data


def read_u8(infile: BinaryIO) -> int:
    return int.from_bytes(bytes=_read_exact(infile, 1), byteorder="little", signed=False)


def read_u16(infile: BinaryIO) -> int:
    return int.from_bytes(bytes=_read_exact(infile, 2), byteorder="little", signed=False)


def read_u32(infile: BinaryIO) -> int:
    return int.from_bytes(bytes=_read_exact(infile, 4), byteorder="little", signed=False)


def read_u64(infile: BinaryIO) -> int:
    return int.from_bytes(bytes=_read_exact(infile, 8), byteorder="little", signed=False)


def read_i64(infile: BinaryIO) -> int:
    return int.from_bytes(bytes=_read_exact(infile, 8), byteorder="little", signed=True)


def read_f64(infile: BinaryIO) -> float:
    return float(np.frombuffer(buffer=_read_exact(infile, 8), dtype="<f8")[0])


def write_array(outfile: BinaryIO, name: str, array: NDArray[Any]) -> None:
    encoded_name = name.encode("utf-8")
    code = ArrayDtypeCode.INT64 if np.issubdtype(array.dtype, np.integer) else ArrayDtypeCode.FLOAT64
    write_u16(outfile, len(encoded_name))
    outfile.write(encoded_name)
    write_u8(outfile, code)
    write_u8(outfile, array.ndim)
    for size in array.shape:
        write_u64(outfile, size)
    outfile.write(np.ascontiguousarray(array, dtype=DTYPES[code]).tobytes())


def read_array(infile: BinaryIO) -> tuple[str, NDArray[Any]]:
    name = _read_exact(infile, read_u16(infile)).decode("utf-8")
    dtype = DTYPES[ArrayDtypeCode(read_u8(infile))]
    shape = tuple(read_u64(infile) for _ in range(read_u8(infile)))
    count = int(np.prod(shape, dtype=np.int64))
    data = _read_exact(infile, dtype.itemsize * count)
    # Copy to get a writable, native-order array independent of the payload buffer.
    return name, np.frombuffer(buffer=data, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="), copy=True)


def write_array_dict(outfile: BinaryIO, arrays: dict[str, NDArray[Any]]) -> None:
    write_u32(outfile, len(arrays))
    for name in sorted(arrays):
        write_array(outfile, name, arrays[name])


def read_array_dict(infile: BinaryIO) -> dict[str, NDArray[Any]]:
    arrays: dict[str, NDArray[Any]] = {}
    for _ in range(read_u32(infile)):
        name, array = read_array(infile)
        arrays[name] = array
    return arrays


################################ Sections #########################################
def _encode_adam_state(adam_state: AdamState) -> bytes:
    buffer = io.BytesIO()
    write_u64(buffer, adam_state.step)
    write_array_dict(buffer, adam_state.m)
    write_array_dict(buffer, adam_state.v)
    return buffer.getvalue()


def _decode_adam_state(infile: BinaryIO) -> AdamState:
    step = read_u64(infile)
    m = read_array_dict(infile)
    v = read_array_dict(infile)
    return AdamState(m=m, v=v, step=step)


def _encode_replay_buffer(replay_buffer: ReplayBuffer) -> bytes:
    buffer = io.BytesIO()
    write_u32(buffer, replay_buffer.window)
    write_u32(buffer, len(replay_buffer.bins))
    for iteration, trajectories in replay_buffer.bins.items():
        write_i64(buffer, iteration)
        write_u32(buffer, len(trajectories))
        for trajectory in trajectories:
            write_u8(buffer, int(trajectory.terminal) | (int(trajectory.truncated) << 1))
            write_i64(buffer, trajectory.self_play_iteration)
            write_f64(buffer, trajectory.final_root_value)
            write_array_dict(
                buffer,
                {
                    "observations": trajectory.observations,
                    "actions": trajectory.actions,
                    "rewards": trajectory.rewards,
                    "search_policies": trajectory.search_policies,
                    "root_values": trajectory.root_values,
                },
            )
    return buffer.getvalue()


def _decode_replay_buffer(infile: BinaryIO) -> ReplayBuffer:
    replay_buffer = ReplayBuffer(window=read_u32(infile))
    for _ in range(read_u32(infile)):
        iteration = read_i64(infile)
        trajectories: list[TrajectoryRecord] = []
        for _ in range(read_u32(infile)):
            flags = read_u8(infile)
            self_play_iteration = read_i64(infile)
            final_root_value = read_f64(infile)
            arrays = read_array_dict(infile)
            trajectories.append(
                TrajectoryRecord(
                    terminal=bool(flags & 1),
                    truncated=bool(flags & 2),
                    self_play_iteration=self_play_iteration,
                    final_root_value=final_root_value,
                    **arrays,
                )
            )
        replay_buffer.bins[iteration] = trajectories
    return replay_buffer


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    sections: dict[CheckpointSectionCode, bytes] = {
        CheckpointSectionCode.CONFIG: orjson.dumps(checkpoint.config.to_dict()),
        CheckpointSectionCode.RNG_STATE: orjson.dumps(checkpoint.rng_state),
        CheckpointSectionCode.ITERATION: checkpoint.iteration.to_bytes(length=8, byteorder="little", signed=True),
        CheckpointSectionCode.REPLAY_BUFFER: _encode_replay_buffer(replay_buffer=checkpoint.replay_buffer),
        CheckpointSectionCode.METRICS: orjson.dumps(checkpoint.metrics_rows),
        CheckpointSectionCode.ADAM_STATE: _encode_adam_state(adam_state=checkpoint.adam_state),
    }
    parameters = io.BytesIO()
    write_array_dict(parameters, checkpoint.params.named_arrays())
    sections[CheckpointSectionCode.PARAMETERS] = parameters.getvalue()

    buffer = io.BytesIO()
    buffer.write(CHECKPOINT_MAGIC)
    write_u32(buffer, checkpoint.version)
    for code in sorted(sections):
        write_u8(buffer, code)
        write_u64(buffer, len(sections[code]))
        buffer.write(sections[code])
    return buffer.getvalue()


def decode_checkpoint(payload: bytes, file_path: str | Path = "<memory>") -> Checkpoint:
    """Parses a decompressed checkpoint payload.

    Raises:
        FileCorruptionError: For a wrong magic, truncated data or missing sections.
        CheckpointVersionError: For a format version other than CHECKPOINT_VERSION.
    """
    infile = io.BytesIO(payload)
    if infile.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise FileCorruptionError(file_path=file_path, error="Not a latent_muzero checkpoint (bad magic bytes)")
    try:
        version = read_u32(infile)
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(file_path=file_path, found_version=version, supported_version=CHECKPOINT_VERSION)
        sections: dict[CheckpointSectionCode, bytes] = {}
        while infile.tell() < len(payload):
            code = CheckpointSectionCode(read_u8(infile))
            sections[code] = _read_exact(infile, read_u64(infile))

        missing = [code.name for code in CheckpointSectionCode if code not in sections]
        if missing:
            raise FileCorruptionError(file_path=file_path, error=f"Missing checkpoint sections: {missing}")

        config = ExperimentConfig.from_dict(orjson.loads(sections[CheckpointSectionCode.CONFIG]))
        arrays = read_array_dict(io.BytesIO(sections[CheckpointSectionCode.PARAMETERS]))
        return Checkpoint(
            config=config,
            params=params_from_arrays(config=config, arrays=arrays),
            adam_state=_decode_adam_state(io.BytesIO(sections[CheckpointSectionCode.ADAM_STATE])),
            rng_state=orjson.loads(sections[CheckpointSectionCode.RNG_STATE]),
            iteration=int.from_bytes(sections[CheckpointSectionCode.ITERATION], byteorder="little", signed=True),
            replay_buffer=_decode_replay_buffer(io.BytesIO(sections[CheckpointSectionCode.REPLAY_BUFFER])),
            metrics_rows=orjson.loads(sections[CheckpointSectionCode.METRICS]),
            version=version,
        )
    except (EOFError, ValueError, KeyError, orjson.JSONDecodeError) as error:
        raise FileCorruptionError(file_path=file_path, error=f"Undecodable checkpoint content: {error}")


def save_checkpoint(
    checkpoint: Checkpoint,
    file_path: str | Path,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> Path:
    """Writes the checkpoint and its sha256 sidecar; returns the checkpoint path."""
    file_path = Path(file_path)
    try:
        save_zstd_with_checksum(payload=encode_checkpoint(checkpoint=checkpoint), file_path=file_path)
    except OSError:
        error = traceback.format_exc()
        logger.error(msg=f"Failed to write checkpoint {file_path}:\n{error}")
        raise
    logger.info(msg=f"Saved checkpoint of iteration {checkpoint.iteration} to {file_path}")
    return file_path


def load_checkpoint(
    file_path: str | Path,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> Checkpoint:
    """Reads and verifies a checkpoint. The file is opened read-only and never modified.

    Raises:
        FileNotFoundError: If the checkpoint or its sidecar is missing.
        FileCorruptionError: On checksum mismatch or undecodable content.
        CheckpointVersionError: On an unsupported format version.
    """
    file_path = Path(file_path)
    payload = load_zstd_with_checksum_verification(file_path=file_path, logger=logger)
    checkpoint = decode_checkpoint(payload=payload, file_path=file_path)
    logger.debug(msg=f"Loaded checkpoint {file_path} (iteration {checkpoint.iteration}, version {checkpoint.version})")
    return checkpoint
