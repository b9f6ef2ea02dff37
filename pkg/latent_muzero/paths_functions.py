"""Output layout of a run directory.

<run_directory>/
    metrics.csv
    run_status.json
    checkpoints/checkpoint_<iteration>.lmzc (+ .sha256)
    visualization/<checkpoint stem>/...
    evaluation/<checkpoint stem>/evaluation.csv
"""

import re
from pathlib import Path
from typing import Optional

METRICS_FILE_NAME: str = "metrics.csv"
STATUS_FILE_NAME: str = "run_status.json"
CHECKPOINT_DIRECTORY_NAME: str = "checkpoints"
CHECKPOINT_SUFFIX: str = ".lmzc"
CHECKPOINT_PATTERN = re.compile(r"^checkpoint_(\d+)\.lmzc$")


def get_metrics_path(run_directory: Path) -> Path:
    return Path(run_directory) / METRICS_FILE_NAME


def get_status_json_path(run_directory: Path) -> Path:
    return Path(run_directory) / STATUS_FILE_NAME


def get_checkpoint_path(run_directory: Path, iteration: int) -> Path:
    return Path(run_directory) / CHECKPOINT_DIRECTORY_NAME / f"checkpoint_{iteration:05d}{CHECKPOINT_SUFFIX}"


def get_latest_checkpoint(run_directory: Path) -> Optional[Path]:
    """Returns the checkpoint with the highest iteration number, None if there is none."""
    checkpoint_directory = Path(run_directory) / CHECKPOINT_DIRECTORY_NAME
    if not checkpoint_directory.exists():
        return None
    found: list[tuple[int, Path]] = []
    for path in checkpoint_directory.iterdir():
        match = CHECKPOINT_PATTERN.match(path.name)
        if match is not None:
            found.append((int(match.group(1)), path))
    return max(found)[1] if found else None


def get_run_directory_of_checkpoint(checkpoint_path: Path) -> Path:
    """The run directory a checkpoint was written into (its grandparent)."""
    return Path(checkpoint_path).resolve().parent.parent


def get_visualization_directory(checkpoint_path: Path) -> Path:
    return get_run_directory_of_checkpoint(checkpoint_path) / "visualization" / Path(checkpoint_path).stem


def get_evaluation_directory(checkpoint_path: Path) -> Path:
    return get_run_directory_of_checkpoint(checkpoint_path) / "evaluation" / Path(checkpoint_path).stem
