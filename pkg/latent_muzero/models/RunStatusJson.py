import logging
import time
import traceback
from pathlib import Path
from typing import Any, Optional

import orjson

from latent_muzero.paths_functions import get_status_json_path

success_status_string: str = "run_completed_successfully"


class RunStatusJson:
    """
    Status and metadata of one training run, written as `run_status.json` in the run directory.

    The file is rewritten after every self-play iteration, so an interrupted run still shows how far it got
    and why it stopped.

    Attributes:
        run_directory (Path): Directory holding metrics and checkpoints.
        config (dict[str, Any]): Configuration snapshot (`ExperimentConfig.to_dict()`).
        started_at (str): UTC start timestamp.
        completion_status (Optional[bool]): True once all iterations finished.
        exception_name (Optional[str]): Name of the exception that stopped the run, if any.
        failure_reason (Optional[str]): Message of that exception.
        last_iteration (Optional[int]): Last completed self-play iteration.
        resumed_from (Optional[str]): Checkpoint the run was resumed from.
        self_play_seconds (float): Accumulated self-play time.
        training_seconds (float): Accumulated gradient-step time.
        logger (logging.Logger): Logger instance for logging messages.
    """

    def __init__(
        self,
        run_directory: str | Path,
        config: dict[str, Any],
        resumed_from: Optional[str | Path] = None,
        logger: logging.Logger = logging.getLogger(name=__name__),
    ):
        self.logger: logging.Logger = logger
        self.run_directory: Path = Path(run_directory)
        self.config: dict[str, Any] = config
        self.started_at: str = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        self.completion_status: Optional[bool] = None
        self.exception_name: Optional[str] = None
        self.failure_reason: Optional[str] = None
        self.last_iteration: Optional[int] = None
        self.resumed_from: Optional[str] = str(resumed_from) if resumed_from is not None else None
        self.self_play_seconds: float = 0.0
        self.training_seconds: float = 0.0

    def mark_failed(self, exception: BaseException) -> None:
        self.completion_status = False
        self.exception_name = type(exception).__name__
        self.failure_reason = str(exception)

    def make_status_json(self) -> dict[str, Any]:
        return {
            success_status_string: str(bool(self.completion_status)),
            "exception_name": self.exception_name if self.exception_name is not None else "N/A",
            "failure_reason": self.failure_reason if self.failure_reason is not None else "N/A",
            "started_at": self.started_at,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
            "last_completed_iteration": self.last_iteration if self.last_iteration is not None else "N/A",
            "resumed_from": self.resumed_from if self.resumed_from is not None else "N/A",
            "run_directory": str(self.run_directory),
            "time_taken": {
                "Self-play time [s]": f"{self.self_play_seconds:.2f}",
                "Training time [s]": f"{self.training_seconds:.2f}",
            },
            "config": self.config,
        }

    def save_to_disk(self) -> None:
        """Writes the status JSON; failures other than permission errors are logged, not raised.

        Raises:
            PermissionError: If the run directory is not writable.
        """
        status_json_path = get_status_json_path(run_directory=self.run_directory)
        try:
            status_json_path.parent.mkdir(parents=True, exist_ok=True)
            with open(file=status_json_path, mode="wb") as f:
                f.write(orjson.dumps(self.make_status_json(), option=orjson.OPT_INDENT_2))
        except PermissionError:
            raise PermissionError(
                f"Permission error while trying to save the run status json to {status_json_path}. "
                "Please check the directory permissions."
            )
        except Exception:
            error_message = traceback.format_exc()
            self.logger.warning(msg=f"There was following error while saving the run status json:\n{error_message}")


def check_if_previous_run_was_successful(
    run_directory: str | Path,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> bool:
    """Reads `run_status.json` of a run directory; False if it is missing or unreadable."""
    status_json_path = get_status_json_path(run_directory=Path(run_directory))
    if not status_json_path.exists():
        return False
    try:
        with open(file=status_json_path, mode="rb") as file:
            status_json = orjson.loads(file.read())
        return str(status_json.get(success_status_string, "False")).lower() == "true"
    except PermissionError:
        raise PermissionError(f"Permission denied for reading {status_json_path}.")
    except Exception as e:
        logger.critical(f"Error reading {status_json_path}: {e}")
        return False
