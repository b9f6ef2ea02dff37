import math
import os

import numpy as np
import pytest

from latent_muzero.custom_errors import EpisodeAlreadyDoneError, InvalidActionError
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.environment_functions import (
    ENV_SPECS,
    Environment,
    cartpole_step,
    mountaincar_step,
    simulate_step,
)

RUN_SLOW = os.environ.get("LATENT_MUZERO_RUN_SLOW") == "1"


class ReferenceCartPole:
    """Cart-pole written out from the classic control equations, kept separate from the package code."""

    gravity, masscart, masspole, length, force_mag, tau = 9.8, 1.0, 0.1, 0.5, 10.0, 0.02
    theta_threshold_radians = 12 * 2 * math.pi / 360
    x_threshold = 2.4

    def __init__(self, state):
        self.state = [float(value) for value in state]

    def step(self, action):
        x, x_dot, theta, theta_dot = self.state
        total_mass = self.masspole + self.masscart
        polemass_length = self.masspole * self.length
        force = self.force_mag if action == 1 else -self.force_mag
        costheta, sintheta = math.cos(theta), math.sin(theta)
        temp = (force + polemass_length * theta_dot**2 * sintheta) / total_mass
        thetaacc = (self.gravity * sintheta - costheta * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * costheta**2 / total_mass)
        )
        xacc = temp - polemass_length * thetaacc * costheta / total_mass
        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * xacc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * thetaacc
        self.state = [x, x_dot, theta, theta_dot]
        done = abs(x) > self.x_threshold or abs(theta) > self.theta_threshold_radians
        return np.array(self.state), 1.0, done


class ReferenceMountainCar:
    min_position, max_position, max_speed, goal_position, goal_velocity = -1.2, 0.6, 0.07, 0.5, 0.0
    force, gravity = 0.001, 0.0025

    def __init__(self, state):
        self.state = [float(value) for value in state]

    def step(self, action):
        position, velocity = self.state
        velocity += (action - 1) * self.force + math.cos(3 * position) * (-self.gravity)
        velocity = float(np.clip(velocity, -self.max_speed, self.max_speed))
        position += velocity
        position = float(np.clip(position, self.min_position, self.max_position))
        if position == self.min_position and velocity < 0:
            velocity = 0.0
        self.state = [position, velocity]
        done = position >= self.goal_position and velocity >= self.goal_velocity
        return np.array(self.state), -1.0, done


REFERENCES = {EnvironmentName.CARTPOLE: ReferenceCartPole, EnvironmentName.MOUNTAINCAR: ReferenceMountainCar}


def _compare_with_reference(environment_name, total_steps, seed):
    rng = np.random.default_rng(seed=seed)
    environment = Environment(name=environment_name)
    action_count = ENV_SPECS[environment_name].action_count
    worst_error = 0.0
    steps = 0
    while steps < total_steps:
        observation = environment.reset(rng=rng)
        reference = REFERENCES[environment_name](observation)
        while True:
            action = int(rng.integers(low=0, high=action_count))
            result = environment.step(action=action)
            expected_state, expected_reward, expected_done = reference.step(action)
            steps += 1
            worst_error = max(worst_error, float(np.abs(result.observation - expected_state).max()))
            assert result.reward == expected_reward, f"Reward {result.reward} differs from {expected_reward}"
            assert result.terminal == expected_done, f"Terminal flag differs at state {expected_state}"
            if result.done:
                break
    assert worst_error <= 1e-12, f"{environment_name} deviates from the reference by {worst_error}"


@pytest.mark.parametrize("environment_name", [EnvironmentName.CARTPOLE, EnvironmentName.MOUNTAINCAR])
def test_dynamics_match_reference(environment_name):
    _compare_with_reference(environment_name=environment_name, total_steps=20_000, seed=11)


@pytest.mark.slow
@pytest.mark.skipif(not RUN_SLOW, reason="set LATENT_MUZERO_RUN_SLOW=1 to run the 10^6-step comparison")
@pytest.mark.parametrize("environment_name", [EnvironmentName.CARTPOLE, EnvironmentName.MOUNTAINCAR])
def test_dynamics_match_reference_million_steps(environment_name):
    _compare_with_reference(environment_name=environment_name, total_steps=1_000_000, seed=12)


def test_reset_distributions():
    rng = np.random.default_rng(seed=0)
    cartpole = Environment(name=EnvironmentName.CARTPOLE)
    mountaincar = Environment(name=EnvironmentName.MOUNTAINCAR)
    for _ in range(200):
        state = cartpole.reset(rng=rng)
        assert state.shape == (4,) and np.all(np.abs(state) <= 0.05), f"CartPole reset out of range: {state}"
        state = mountaincar.reset(rng=rng)
        assert -0.6 <= state[0] <= -0.4 and state[1] == 0.0, f"MountainCar reset out of range: {state}"


def test_truncation_at_time_limit():
    rng = np.random.default_rng(seed=0)
    environment = Environment(name=EnvironmentName.MOUNTAINCAR, max_steps=5)
    environment.reset(rng=rng)
    results = [environment.step(action=1) for _ in range(5)]
    assert [result.truncated for result in results] == [False] * 4 + [True], "Truncation must fire on step 5 only"
    assert not any(result.terminal for result in results), "MountainCar cannot reach the goal in 5 steps"
    with pytest.raises(EpisodeAlreadyDoneError):
        environment.step(action=1)
    assert environment.spec.max_steps == 5 and ENV_SPECS[EnvironmentName.MOUNTAINCAR].max_steps == 200


def test_terminal_transitions_and_errors():
    falling = np.array([0.0, 0.0, 0.2, 2.0])
    result = cartpole_step(state=falling, action=0)
    assert result.terminal and not result.truncated and result.reward == 1.0, f"Expected a terminal step, got {result}"
    with pytest.raises(EpisodeAlreadyDoneError):
        cartpole_step(state=result.observation, action=0)
    with pytest.raises(InvalidActionError):
        cartpole_step(state=np.zeros(4), action=2)
    with pytest.raises(InvalidActionError):
        mountaincar_step(state=np.array([-0.5, 0.0]), action=-1)

    near_goal = np.array([0.49, 0.07])
    result = mountaincar_step(state=near_goal, action=2)
    assert result.terminal and result.reward == -1.0, f"Expected the goal to be reached, got {result}"

    left_wall = mountaincar_step(state=np.array([-1.19, -0.07]), action=0)
    assert left_wall.observation[0] == -1.2 and left_wall.observation[1] == 0.0, f"Left wall not inelastic: {left_wall}"

    with pytest.raises(EpisodeAlreadyDoneError):
        Environment(name=EnvironmentName.CARTPOLE).step(action=0)


def test_simulate_step_ignores_time_limit():
    result = simulate_step(environment_name=EnvironmentName.MOUNTAINCAR, state=np.array([-0.5, 0.0]), action=2)
    assert not result.truncated, "Planning transitions must never truncate"
    expected = mountaincar_step(state=np.array([-0.5, 0.0]), action=2, elapsed_steps=0, max_steps=None)
    assert np.array_equal(result.observation, expected.observation), "simulate_step differs from the step function"
