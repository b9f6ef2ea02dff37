from pathlib import Path

import pytest

from latent_muzero.custom_errors import ConfigParseError, InvalidConfigValueError, UnknownConfigKeyError
from latent_muzero.enums.Algorithm import Algorithm
from latent_muzero.enums.DiscrepancyFunction import DiscrepancyFunction
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.models.ExperimentConfig import CONFIG_KEYS, ExperimentConfig, parse_config


def _write(tmp_path: Path, text: str) -> Path:
    config_path = tmp_path / "experiment.cfg"
    config_path.write_text(text, encoding="utf-8")
    return config_path


def test_defaults_per_environment():
    cartpole = ExperimentConfig()
    assert (cartpole.self_play_iterations, cartpole.max_steps, cartpole.td_steps, cartpole.support_size) == (80, 500, 10, 15)
    assert (cartpole.simulations, cartpole.c1, cartpole.c2, cartpole.discount) == (11, 1.25, 19652.0, 0.997)
    assert (cartpole.learning_rate, cartpole.l2, cartpole.batch_size, cartpole.window) == (0.02, 1e-4, 128, 10)
    mountaincar = ExperimentConfig.for_environment(env=EnvironmentName.MOUNTAINCAR)
    assert (mountaincar.self_play_iterations, mountaincar.max_steps, mountaincar.td_steps, mountaincar.support_size) == (
        1000, 200, 50, 20,
    ), f"MountainCar defaults are wrong: {mountaincar}"


def test_parse_config_file_with_comments(tmp_path):
    config_path = _write(
        tmp_path,
        "# MountainCar contrastive run\n"
        "model.latent_size = 6   # small latent space\n"
        "\n"
        "experiment.algorithm = muzero_contrastive\n"
        "experiment.env = MountainCar\n"
        "regularizer.discrepancy = cosine\n"
        "training.deterministic_metrics = true\n",
    )
    config = parse_config(config_path=config_path)
    assert config.env is EnvironmentName.MOUNTAINCAR and config.algorithm is Algorithm.MUZERO_CONTRASTIVE
    assert config.latent_size == 6 and config.discrepancy is DiscrepancyFunction.COSINE and config.deterministic_metrics
    assert config.td_steps == 50, "experiment.env must select the MountainCar column wherever it appears in the file"


def test_overrides_and_base(tmp_path):
    config_path = _write(tmp_path, "experiment.seed = 1\nself_play.episodes = 4\n")
    config = parse_config(config_path=config_path, overrides=["experiment.seed=5", "replay.td_steps=7"])
    assert (config.seed, config.episodes, config.td_steps) == (5, 4, 7), f"Overrides were not applied: {config}"

    base = ExperimentConfig(env=EnvironmentName.MOUNTAINCAR, latent_size=3, seed=2, support_size=20)
    resumed = parse_config(overrides=["experiment.seed=9"], base=base)
    assert (resumed.env, resumed.latent_size, resumed.seed) == (EnvironmentName.MOUNTAINCAR, 3, 9)


@pytest.mark.parametrize(
    "text, error, line_number",
    [
        ("experiment.seed = 1\nnot a key value line\n", ConfigParseError, 2),
        ("experiment.seed =\n", ConfigParseError, 1),
        ("experiment.seed = 1\nmodel.width = 3\n", UnknownConfigKeyError, None),
        ("model.latent_size = 0\n", InvalidConfigValueError, None),
        ("replay.discount = 1.5\n", InvalidConfigValueError, None),
        ("mcts.exploration_fraction = -0.1\n", InvalidConfigValueError, None),
        ("replay.prioritization = true\n", InvalidConfigValueError, None),
        ("experiment.env = atari\n", InvalidConfigValueError, None),
        ("self_play.episodes = 2.5\n", InvalidConfigValueError, None),
    ],
)
def test_invalid_config_files(tmp_path, text, error, line_number):
    with pytest.raises(error) as raised:
        parse_config(config_path=_write(tmp_path, text))
    if line_number is not None:
        assert raised.value.line_number == line_number, f"Reported line {raised.value.line_number}, expected {line_number}"


def test_unknown_key_reports_its_line(tmp_path):
    with pytest.raises(UnknownConfigKeyError) as raised:
        parse_config(config_path=_write(tmp_path, "experiment.seed = 1\nmodel.width = 3\n"))
    assert "line 2" in raised.value.message and raised.value.key == "model.width"


def test_missing_file_and_bad_override(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_config(config_path=tmp_path / "missing.cfg")
    with pytest.raises(ConfigParseError):
        parse_config(overrides=["experiment.seed"])


def test_snapshot_round_trip(tmp_path):
    config = ExperimentConfig(
        env=EnvironmentName.MOUNTAINCAR, algorithm=Algorithm.MUZERO_DECODER, output_directory=tmp_path / "run",
        omega=0.5, discrepancy=DiscrepancyFunction.COSINE, support_size=20, workers=3,
    )
    snapshot = config.to_dict()
    assert set(snapshot) == set(CONFIG_KEYS), "The snapshot must list every documented key"
    assert snapshot["experiment.env"] == "mountaincar" and snapshot["experiment.output_directory"] == str(tmp_path / "run")
    assert ExperimentConfig.from_dict(snapshot) == config, "from_dict(to_dict()) must give the same configuration"
