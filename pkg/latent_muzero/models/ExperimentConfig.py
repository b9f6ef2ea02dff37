"""Experiment configuration: a typed object read from flat `section.key = value` files."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from latent_muzero.custom_errors import ConfigParseError, InvalidConfigValueError, UnknownConfigKeyError
from latent_muzero.enums.Algorithm import Algorithm
from latent_muzero.enums.DiscrepancyFunction import DiscrepancyFunction
from latent_muzero.enums.EnvironmentName import EnvironmentName

ENVIRONMENT_KEY: str = "experiment.env"


@dataclass
class ExperimentConfig:
    """All hyperparameters of one run.

    Defaults are the constant hyperparameters of the CartPole column; `for_environment` switches to
    the MountainCar column where the two differ (iterations, episode length, TD steps, support size).
    """

    env: EnvironmentName = EnvironmentName.CARTPOLE
    algorithm: Algorithm = Algorithm.MUZERO
    seed: int = 0
    output_directory: Path = field(default_factory=lambda: Path("runs"))

    latent_size: int = 8
    hidden_size: int = 32
    support_size: int = 15
    unroll_steps: int = 5

    omega: float = 1.0
    discrepancy: DiscrepancyFunction = DiscrepancyFunction.SQUARED_ERROR

    self_play_iterations: int = 80
    episodes: int = 20
    max_steps: int = 500
    workers: int = 1

    simulations: int = 11
    dirichlet_alpha: float = 0.25
    exploration_fraction: float = 0.25
    c1: float = 1.25
    c2: float = 19652.0
    temperature: float = 1.0

    window: int = 10
    td_steps: int = 10
    discount: float = 0.997
    batch_size: int = 128
    prioritization: bool = False

    learning_rate: float = 0.02
    l2: float = 1e-4
    epochs: int = 40

    scale_unroll_loss: bool = True
    halve_dynamics_gradient: bool = True
    checkpoint_interval: int = 10
    deterministic_metrics: bool = False

    @classmethod
    def for_environment(cls, env: EnvironmentName) -> "ExperimentConfig":
        return cls(env=env, **ENVIRONMENT_DEFAULTS[env])

    def validate(self) -> "ExperimentConfig":
        """Checks ranges and returns self.

        Raises:
            InvalidConfigValueError: For the first out-of-range value.
        """
        for key in (
            "model.latent_size", "model.hidden_size", "model.unroll_steps", "self_play.iterations",
            "self_play.episodes", "self_play.max_steps", "self_play.workers", "mcts.simulations",
            "replay.window", "replay.td_steps", "replay.batch_size", "optimizer.epochs",
            "training.checkpoint_interval",
        ):
            value = getattr(self, CONFIG_KEYS[key][0])
            if value < 1:
                raise InvalidConfigValueError(key=key, value=value, error="must be a positive count")
        checks: list[tuple[str, bool, str]] = [
            ("model.support_size", self.support_size >= 2, "needs at least 2 support points"),
            ("replay.discount", 0.0 < self.discount <= 1.0, "must lie in (0, 1]"),
            ("regularizer.omega", self.omega >= 0.0, "must be >= 0"),
            ("optimizer.learning_rate", self.learning_rate > 0.0, "must be > 0"),
            ("optimizer.l2", self.l2 >= 0.0, "must be >= 0"),
            ("mcts.temperature", self.temperature >= 0.0, "must be >= 0"),
            ("mcts.exploration_fraction", 0.0 <= self.exploration_fraction <= 1.0, "must lie in [0, 1]"),
            ("mcts.dirichlet_alpha", self.dirichlet_alpha > 0.0, "must be > 0"),
            ("mcts.c1", self.c1 >= 0.0, "must be >= 0"),
            ("mcts.c2", self.c2 > 0.0, "must be > 0"),
            ("replay.prioritization", not self.prioritization, "prioritized replay is not supported"),
        ]
        for key, valid, error in checks:
            if not valid:
                raise InvalidConfigValueError(key=key, value=getattr(self, CONFIG_KEYS[key][0]), error=error)
        return self

    def to_dict(self) -> dict[str, Any]:
        """Snapshot keyed by the documented `section.key` names, JSON-serialisable."""
        snapshot: dict[str, Any] = {}
        for key, (attribute, _) in CONFIG_KEYS.items():
            value = getattr(self, attribute)
            snapshot[key] = str(value) if isinstance(value, (Path, EnvironmentName, Algorithm, DiscrepancyFunction)) else value
        return snapshot

    @classmethod
    def from_dict(cls, snapshot: dict[str, Any]) -> "ExperimentConfig":
        """Inverse of `to_dict`; unknown keys are rejected."""
        entries = [(None, key, value) for key, value in snapshot.items()]
        return _build_config(entries=entries)


ENVIRONMENT_DEFAULTS: dict[EnvironmentName, dict[str, Any]] = {
    EnvironmentName.CARTPOLE: {"self_play_iterations": 80, "max_steps": 500, "td_steps": 10, "support_size": 15},
    EnvironmentName.MOUNTAINCAR: {"self_play_iterations": 1000, "max_steps": 200, "td_steps": 50, "support_size": 20},
}


def _parse_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("expected an integer, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError("expected an integer")
        return int(value)
    return int(str(value).strip())


def _parse_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError("expected a number, got a boolean")
    return float(value) if isinstance(value, (int, float)) else float(str(value).strip())


def _parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


def _parse_path(value: Any) -> Path:
    text = str(value).strip()
    if not text:
        raise ValueError("expected a non-empty path")
    return Path(text)


# section.key -> (attribute, parser)
CONFIG_KEYS: dict[str, tuple[str, Callable[[Any], Any]]] = {
    "experiment.env": ("env", lambda value: EnvironmentName.get_member_from_string(value=str(value))),
    "experiment.algorithm": ("algorithm", lambda value: Algorithm.get_member_from_string(value=str(value))),
    "experiment.seed": ("seed", _parse_int),
    "experiment.output_directory": ("output_directory", _parse_path),
    "model.latent_size": ("latent_size", _parse_int),
    "model.hidden_size": ("hidden_size", _parse_int),
    "model.support_size": ("support_size", _parse_int),
    "model.unroll_steps": ("unroll_steps", _parse_int),
    "regularizer.omega": ("omega", _parse_float),
    "regularizer.discrepancy": ("discrepancy", lambda value: DiscrepancyFunction.get_member_from_string(value=str(value))),
    "self_play.iterations": ("self_play_iterations", _parse_int),
    "self_play.episodes": ("episodes", _parse_int),
    "self_play.max_steps": ("max_steps", _parse_int),
    "self_play.workers": ("workers", _parse_int),
    "mcts.simulations": ("simulations", _parse_int),
    "mcts.dirichlet_alpha": ("dirichlet_alpha", _parse_float),
    "mcts.exploration_fraction": ("exploration_fraction", _parse_float),
    "mcts.c1": ("c1", _parse_float),
    "mcts.c2": ("c2", _parse_float),
    "mcts.temperature": ("temperature", _parse_float),
    "replay.window": ("window", _parse_int),
    "replay.td_steps": ("td_steps", _parse_int),
    "replay.discount": ("discount", _parse_float),
    "replay.batch_size": ("batch_size", _parse_int),
    "replay.prioritization": ("prioritization", _parse_bool),
    "optimizer.learning_rate": ("learning_rate", _parse_float),
    "optimizer.l2": ("l2", _parse_float),
    "optimizer.epochs": ("epochs", _parse_int),
    "training.scale_unroll_loss": ("scale_unroll_loss", _parse_bool),
    "training.halve_dynamics_gradient": ("halve_dynamics_gradient", _parse_bool),
    "training.checkpoint_interval": ("checkpoint_interval", _parse_int),
    "training.deterministic_metrics": ("deterministic_metrics", _parse_bool),
}

ConfigEntry = tuple[Optional[int], str, Any]


def _read_config_lines(config_path: Path) -> list[ConfigEntry]:
    entries: list[ConfigEntry] = []
    with open(file=config_path, mode="r", encoding="utf-8") as file:
        for line_number, raw_line in enumerate(file, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            key, separator, value = line.partition("=")
            key = key.strip()
            if not separator or not key or "." not in key or " " in key:
                raise ConfigParseError(line_number=line_number, line=raw_line.rstrip("\n"))
            value = value.strip()
            if not value:
                raise ConfigParseError(line_number=line_number, line=raw_line.rstrip("\n"), error="missing value")
            entries.append((line_number, key, value))
    return entries


def parse_override(override: str) -> ConfigEntry:
    """Parses one `section.key=value` command line override."""
    key, separator, value = override.partition("=")
    if not separator or not key.strip() or not value.strip():
        raise ConfigParseError(line_number=0, line=override, error="--set expects 'section.key=value'")
    return (None, key.strip(), value.strip())


def _build_config(entries: Sequence[ConfigEntry]) -> ExperimentConfig:
    for line_number, key, _ in entries:
        if key not in CONFIG_KEYS:
            raise UnknownConfigKeyError(key=key, line_number=line_number)

    environment_values = [value for _, key, value in entries if key == ENVIRONMENT_KEY]
    env = EnvironmentName.CARTPOLE
    if environment_values:
        try:
            env = CONFIG_KEYS[ENVIRONMENT_KEY][1](environment_values[-1])
        except ValueError as error:
            raise InvalidConfigValueError(key=ENVIRONMENT_KEY, value=environment_values[-1], error=str(error))

    changes: dict[str, Any] = {}
    for _, key, value in entries:
        attribute, parser = CONFIG_KEYS[key]
        try:
            changes[attribute] = parser(value)
        except ValueError as error:
            raise InvalidConfigValueError(key=key, value=value, error=str(error))
    return replace(ExperimentConfig.for_environment(env=env), **changes).validate()


def parse_config(
    config_path: Optional[str | Path] = None,
    overrides: Sequence[str] = (),
    base: Optional[ExperimentConfig] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> ExperimentConfig:
    """Reads a config file and applies command line overrides.

    `experiment.env` is resolved first and selects the CartPole or MountainCar defaults; every other
    key then overrides those defaults, later entries winning over earlier ones.

    Args:
        config_path: Flat `section.key = value` file with `#` comments, or None for defaults only.
        overrides: Additional `section.key=value` strings applied after the file.
        base: Configuration whose values come before the file, e.g. the one stored in a checkpoint.
        logger: Injected logger.

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        FileNotFoundError: If the config file does not exist.
        ConfigParseError: For malformed lines, with the line number.
        UnknownConfigKeyError: For keys outside the documented key set.
        InvalidConfigValueError: For values that do not parse or are out of range.
    """
    entries: list[ConfigEntry] = []
    if base is not None:
        entries.extend((None, key, value) for key, value in base.to_dict().items())
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        entries.extend(_read_config_lines(config_path=config_path))
    entries.extend(parse_override(override=override) for override in overrides)
    config = _build_config(entries=entries)
    logger.debug(msg=f"Parsed configuration from {config_path} with {len(overrides)} overrides: {config}")
    return config
