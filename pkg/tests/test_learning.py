"""Scaled learning reproductions. Each one takes tens of minutes to hours; run with LATENT_MUZERO_RUN_SLOW=1."""

import os

import numpy as np
import pytest

from latent_muzero.enums.Algorithm import Algorithm
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.latent_viz_functions import visualize_latents
from latent_muzero.model_functions import decode, initialize_params, represent
from latent_muzero.models.ExperimentConfig import ExperimentConfig
from latent_muzero.nn_functions import value_of
from latent_muzero.training_functions import run_self_play, run_training

RUN_SLOW = os.environ.get("LATENT_MUZERO_RUN_SLOW") == "1"
SEEDS = (0, 1, 2)
SCALED_MOUNTAINCAR_ITERATIONS = 150

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not RUN_SLOW, reason="set LATENT_MUZERO_RUN_SLOW=1 to run the learning reproductions"),
]


def _mountaincar_config(tmp_path, algorithm, seed) -> ExperimentConfig:
    config = ExperimentConfig.for_environment(env=EnvironmentName.MOUNTAINCAR)
    return ExperimentConfig.from_dict(
        {
            **config.to_dict(),
            "experiment.algorithm": str(algorithm),
            "experiment.seed": seed,
            "experiment.output_directory": str(tmp_path / f"{algorithm}_{seed}"),
            "self_play.iterations": SCALED_MOUNTAINCAR_ITERATIONS,
            "self_play.workers": 4,
        }
    )


def test_cartpole_muzero_learns(tmp_path):
    successes = 0
    for seed in SEEDS:
        config = ExperimentConfig(seed=seed, workers=4, output_directory=tmp_path / f"cartpole_{seed}")
        result = run_training(config=config)
        final_mean = float(result.metrics["mean_return"].tail(10).mean())
        print(f"CartPole seed {seed}: mean return over the final 10 iterations {final_mean:.1f}")
        successes += final_mean >= 300.0
    assert successes >= 2, f"Only {successes} of {len(SEEDS)} seeds reached a mean return of 300"


def test_contrastive_loss_keeps_trajectories_closer(tmp_path):
    wins = 0
    for seed in SEEDS:
        divergences = {}
        for algorithm in (Algorithm.MUZERO, Algorithm.MUZERO_CONTRASTIVE):
            config = _mountaincar_config(tmp_path=tmp_path, algorithm=algorithm, seed=seed)
            params = run_training(config=config).params
            trajectories = run_self_play(
                params=params, config=config, self_play_iteration=0, rng=np.random.default_rng(seed=1000 + seed), episodes=20
            )
            divergences[algorithm] = visualize_latents(
                params=params, trajectories=trajectories, output_directory=tmp_path / f"viz_{algorithm}_{seed}"
            ).mean_divergence
        print(f"MountainCar seed {seed}: mean h/g divergence {divergences}")
        wins += divergences[Algorithm.MUZERO_CONTRASTIVE] < divergences[Algorithm.MUZERO]
    assert wins >= 2, f"The contrastive variant was closer on only {wins} of {len(SEEDS)} seeds"


def _reconstruction_mse(params, observations) -> float:
    reconstructed = value_of(decode(params=params, latent=represent(params=params, observation=observations)))
    return float(np.mean((reconstructed - observations) ** 2))


def test_decoder_halves_reconstruction_error(tmp_path):
    for seed in SEEDS:
        config = _mountaincar_config(tmp_path=tmp_path, algorithm=Algorithm.MUZERO_DECODER, seed=seed)
        initial_params = initialize_params(config=config, rng=np.random.default_rng(seed=config.seed))
        trained_params = run_training(config=config).params
        held_out = run_self_play(
            params=trained_params, config=config, self_play_iteration=0, rng=np.random.default_rng(seed=2000 + seed), episodes=5
        )
        observations = np.concatenate([trajectory.observations for trajectory in held_out], axis=0)
        before = _reconstruction_mse(params=initial_params, observations=observations)
        after = _reconstruction_mse(params=trained_params, observations=observations)
        assert after <= 0.5 * before, f"Seed {seed}: reconstruction MSE went from {before} to only {after}"
