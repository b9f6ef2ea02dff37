from pathlib import Path
from typing import Optional, Sequence


class ShapeMismatchError(Exception):
    """Reports arrays whose shapes do not fit the operation they are passed to"""
    def __init__(self, operation: str, expected: Sequence[int] | int, received: Sequence[int] | int):
        self.operation = operation
        self.expected = expected
        self.received = received
        self.message = f"Shape mismatch in {operation}: expected {expected}, received {received}."
        super().__init__(self.message)

class InvalidDistributionError(Exception):
    """Reports probability vectors that are negative or do not sum to one"""
    def __init__(self, error: str = "The vector is not a valid probability distribution"):
        self.message = error
        super().__init__(self.message)

class InvalidActionError(Exception):
    """Reports an action index outside of the action set of an environment or network"""
    def __init__(self, action: int, action_count: int):
        self.action = action
        self.action_count = action_count
        self.message = f"Invalid action {action}: valid actions are 0..{action_count - 1}."
        super().__init__(self.message)

class EpisodeAlreadyDoneError(Exception):
    """Reports a step request on an environment whose episode already ended"""
    def __init__(self, environment_name: str, message: str = "step() called after the episode ended"):
        self.environment_name = environment_name
        self.message = f"{environment_name}: {message}. Call reset() first."
        super().__init__(self.message)

class DecoderMissingError(Exception):
    """Reports decoder usage on parameters that were built without a decoder network"""
    def __init__(self, message="The parameters do not contain a decoder network"):
        self.message = message
        super().__init__(self.message)

class EmptyReplayBufferError(Exception):
    """Reports sampling from a replay buffer that holds no trajectories"""
    def __init__(self, message="Cannot sample training targets from an empty replay buffer"):
        self.message = message
        super().__init__(self.message)

class InsufficientDataError(Exception):
    """Reports a fit request on too few samples"""
    def __init__(self, n_samples: int, n_features: int, n_components: int):
        self.message = (
            f"Cannot fit {n_components} principal components on {n_samples} samples "
            f"of dimension {n_features}. Need at least 2 samples and n_components <= min(samples, dimension)."
        )
        super().__init__(self.message)

class TrajectoryLengthMismatchError(Exception):
    """Reports paired latent trajectories of different length"""
    def __init__(self, first_length: int, second_length: int):
        self.message = f"Trajectories must have equal length, got {first_length} and {second_length}."
        super().__init__(self.message)

class EmptyPlotInputError(Exception):
    """Reports a render request without any points or trajectories"""
    def __init__(self, message="Nothing to plot: no points and no trajectories were given"):
        self.message = message
        super().__init__(self.message)

class ConfigParseError(Exception):
    """Reports a malformed line in an experiment configuration file"""
    def __init__(self, line_number: int, line: str, error: str = "expected 'section.key = value'"):
        self.line_number = line_number
        self.line = line
        self.message = f"Config parse error on line {line_number}: {error}.\nLine: {line!r}"
        super().__init__(self.message)

class UnknownConfigKeyError(Exception):
    """Reports a configuration key outside of the documented key set"""
    def __init__(self, key: str, line_number: Optional[int] = None):
        self.key = key
        location = f" (line {line_number})" if line_number is not None else ""
        self.message = f"Unknown config key '{key}'{location}."
        super().__init__(self.message)

class InvalidConfigValueError(Exception):
    """Reports a configuration value that is out of range or of the wrong type"""
    def __init__(self, key: str, value: object, error: str):
        self.key = key
        self.value = value
        self.message = f"Invalid value {value!r} for config key '{key}': {error}."
        super().__init__(self.message)

class CheckpointVersionError(Exception):
    """Reports a checkpoint written with an unsupported format version"""
    def __init__(self, file_path: str | Path, found_version: int, supported_version: int):
        self.message = (
            f"Checkpoint {file_path} has format version {found_version}, "
            f"this build reads version {supported_version} only."
        )
        super().__init__(self.message)

class FileCorruptionError(Exception):
    """Reports errors related to file corruption detected via checksum mismatch or undecodable content"""
    def __init__(self, file_path: str | Path, error: str = "The stored and computed checksums do not match"):
        self.message = f"File corruption detected for file: {file_path}.\nError: {error}"
        super().__init__(self.message)

class CliUsageError(Exception):
    """Reports invalid command line usage"""
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)

class UnknownMetricError(Exception):
    """Reports a learning-curve metric that is not a column of the run's metrics file"""
    def __init__(self, metric: str, available: Sequence[str]):
        self.metric = metric
        self.available = list(available)
        self.message = f"Unknown metric '{metric}'. Available metrics: {', '.join(self.available)}."
        super().__init__(self.message)
