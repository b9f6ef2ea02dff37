"""Deterministic CartPole and MountainCar with the canonical classic-control dynamics.

States are float64 vectors and are fully observed, so the observation is a copy of the state.
The pure step functions detect an already-finished state themselves; `Environment` adds the
step counter that drives truncation.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import EpisodeAlreadyDoneError, InvalidActionError
from latent_muzero.enums.EnvironmentName import EnvironmentName

Observation = NDArray[np.float64]

CARTPOLE_GRAVITY: float = 9.8
CARTPOLE_CART_MASS: float = 1.0
CARTPOLE_POLE_MASS: float = 0.1
CARTPOLE_TOTAL_MASS: float = CARTPOLE_CART_MASS + CARTPOLE_POLE_MASS
CARTPOLE_HALF_LENGTH: float = 0.5
CARTPOLE_POLE_MASS_LENGTH: float = CARTPOLE_POLE_MASS * CARTPOLE_HALF_LENGTH
CARTPOLE_FORCE: float = 10.0
CARTPOLE_TAU: float = 0.02
CARTPOLE_X_THRESHOLD: float = 2.4
CARTPOLE_THETA_THRESHOLD: float = 12 * 2 * math.pi / 360
CARTPOLE_RESET_BOUND: float = 0.05

MOUNTAINCAR_MIN_POSITION: float = -1.2
MOUNTAINCAR_MAX_POSITION: float = 0.6
MOUNTAINCAR_MAX_SPEED: float = 0.07
MOUNTAINCAR_GOAL_POSITION: float = 0.5
MOUNTAINCAR_FORCE: float = 0.001
MOUNTAINCAR_GRAVITY: float = 0.0025


@dataclass(frozen=True)
class EnvSpec:
    action_count: int
    obs_dim: int
    max_steps: int


ENV_SPECS: dict[EnvironmentName, EnvSpec] = {
    EnvironmentName.CARTPOLE: EnvSpec(action_count=2, obs_dim=4, max_steps=500),
    EnvironmentName.MOUNTAINCAR: EnvSpec(action_count=3, obs_dim=2, max_steps=200),
}


@dataclass
class StepResult:
    observation: Observation
    reward: float
    terminal: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminal or self.truncated


def _check_action(action: int, action_count: int) -> None:
    if not 0 <= int(action) < action_count:
        raise InvalidActionError(action=int(action), action_count=action_count)


def _check_steps(environment_name: EnvironmentName, elapsed_steps: int, max_steps: Optional[int]) -> None:
    if max_steps is not None and elapsed_steps >= max_steps:
        raise EpisodeAlreadyDoneError(
            environment_name=str(environment_name),
            message=f"the time limit of {max_steps} steps was already reached",
        )


def cartpole_is_terminal(state: NDArray[np.float64]) -> bool:
    x, _, theta, _ = state
    return bool(
        x < -CARTPOLE_X_THRESHOLD
        or x > CARTPOLE_X_THRESHOLD
        or theta < -CARTPOLE_THETA_THRESHOLD
        or theta > CARTPOLE_THETA_THRESHOLD
    )


def cartpole_reset(rng: np.random.Generator) -> Observation:
    """Draws every state component uniformly from [-0.05, 0.05]."""
    return rng.uniform(low=-CARTPOLE_RESET_BOUND, high=CARTPOLE_RESET_BOUND, size=4)


def cartpole_step(
    state: NDArray[np.float64],
    action: int,
    elapsed_steps: int = 0,
    max_steps: Optional[int] = ENV_SPECS[EnvironmentName.CARTPOLE].max_steps,
) -> StepResult:
    """Advances the cart-pole by one Euler step of 0.02 s.

    Args:
        state: (x, x_dot, theta, theta_dot).
        action: 0 pushes left, 1 pushes right.
        elapsed_steps: Steps already taken in this episode.
        max_steps: Time limit, None disables truncation.

    Returns:
        StepResult: Reward is +1 on every step, including the terminating one.

    Raises:
        InvalidActionError: For actions other than 0 and 1.
        EpisodeAlreadyDoneError: If the state is already terminal or the time limit was reached.
    """
    _check_action(action=action, action_count=2)
    if cartpole_is_terminal(state=state):
        raise EpisodeAlreadyDoneError(environment_name=str(EnvironmentName.CARTPOLE))
    _check_steps(environment_name=EnvironmentName.CARTPOLE, elapsed_steps=elapsed_steps, max_steps=max_steps)

    x, x_dot, theta, theta_dot = (float(component) for component in state)
    force = CARTPOLE_FORCE if action == 1 else -CARTPOLE_FORCE
    cos_theta = math.cos(theta)
    sin_theta = math.sin(theta)

    temp = (force + CARTPOLE_POLE_MASS_LENGTH * theta_dot**2 * sin_theta) / CARTPOLE_TOTAL_MASS
    theta_acc = (CARTPOLE_GRAVITY * sin_theta - cos_theta * temp) / (
        CARTPOLE_HALF_LENGTH * (4.0 / 3.0 - CARTPOLE_POLE_MASS * cos_theta**2 / CARTPOLE_TOTAL_MASS)
    )
    x_acc = temp - CARTPOLE_POLE_MASS_LENGTH * theta_acc * cos_theta / CARTPOLE_TOTAL_MASS

    x = x + CARTPOLE_TAU * x_dot
    x_dot = x_dot + CARTPOLE_TAU * x_acc
    theta = theta + CARTPOLE_TAU * theta_dot
    theta_dot = theta_dot + CARTPOLE_TAU * theta_acc

    next_state = np.array([x, x_dot, theta, theta_dot], dtype=np.float64)
    terminal = cartpole_is_terminal(state=next_state)
    truncated = not terminal and max_steps is not None and elapsed_steps + 1 >= max_steps
    return StepResult(observation=next_state, reward=1.0, terminal=terminal, truncated=truncated)


def mountaincar_is_terminal(state: NDArray[np.float64]) -> bool:
    return bool(state[0] >= MOUNTAINCAR_GOAL_POSITION)


def mountaincar_reset(rng: np.random.Generator) -> Observation:
    """Position uniform in [-0.6, -0.4], velocity exactly 0."""
    return np.array([rng.uniform(low=-0.6, high=-0.4), 0.0], dtype=np.float64)


def mountaincar_step(
    state: NDArray[np.float64],
    action: int,
    elapsed_steps: int = 0,
    max_steps: Optional[int] = ENV_SPECS[EnvironmentName.MOUNTAINCAR].max_steps,
) -> StepResult:
    """Advances the mountain car by one step.

    Args:
        state: (position, velocity).
        action: 0 pushes left, 1 does nothing, 2 pushes right.
        elapsed_steps: Steps already taken in this episode.
        max_steps: Time limit, None disables truncation.

    Returns:
        StepResult: Reward is -1 on every step.

    Raises:
        InvalidActionError: For actions outside {0, 1, 2}.
        EpisodeAlreadyDoneError: If the goal was already reached or the time limit was reached.
    """
    _check_action(action=action, action_count=3)
    if mountaincar_is_terminal(state=state):
        raise EpisodeAlreadyDoneError(environment_name=str(EnvironmentName.MOUNTAINCAR))
    _check_steps(environment_name=EnvironmentName.MOUNTAINCAR, elapsed_steps=elapsed_steps, max_steps=max_steps)

    position, velocity = float(state[0]), float(state[1])
    velocity += (action - 1) * MOUNTAINCAR_FORCE + math.cos(3 * position) * (-MOUNTAINCAR_GRAVITY)
    velocity = min(max(velocity, -MOUNTAINCAR_MAX_SPEED), MOUNTAINCAR_MAX_SPEED)
    position += velocity
    position = min(max(position, MOUNTAINCAR_MIN_POSITION), MOUNTAINCAR_MAX_POSITION)
    if position == MOUNTAINCAR_MIN_POSITION and velocity < 0:
        velocity = 0.0

    next_state = np.array([position, velocity], dtype=np.float64)
    terminal = mountaincar_is_terminal(state=next_state)
    truncated = not terminal and max_steps is not None and elapsed_steps + 1 >= max_steps
    return StepResult(observation=next_state, reward=-1.0, terminal=terminal, truncated=truncated)


RESET_FUNCTIONS: dict[EnvironmentName, Callable[[np.random.Generator], Observation]] = {
    EnvironmentName.CARTPOLE: cartpole_reset,
    EnvironmentName.MOUNTAINCAR: mountaincar_reset,
}

STEP_FUNCTIONS: dict[EnvironmentName, Callable[..., StepResult]] = {
    EnvironmentName.CARTPOLE: cartpole_step,
    EnvironmentName.MOUNTAINCAR: mountaincar_step,
}

TERMINAL_FUNCTIONS: dict[EnvironmentName, Callable[[NDArray[np.float64]], bool]] = {
    EnvironmentName.CARTPOLE: cartpole_is_terminal,
    EnvironmentName.MOUNTAINCAR: mountaincar_is_terminal,
}


def simulate_step(environment_name: EnvironmentName, state: NDArray[np.float64], action: int) -> StepResult:
    """One transition of the true simulator without a time limit, as used for planning."""
    return STEP_FUNCTIONS[environment_name](state, action, 0, None)


class Environment:
    """Single-owner episode runner around the pure dynamics.

    Attributes:
        name (EnvironmentName): The task.
        spec (EnvSpec): Action count, observation size and time limit.
        state (Optional[Observation]): Current state, None before the first reset.
        elapsed_steps (int): Steps taken since the last reset.
    """

    def __init__(self, name: EnvironmentName, max_steps: Optional[int] = None):
        self.name: EnvironmentName = name
        default_spec = ENV_SPECS[name]
        self.spec: EnvSpec = EnvSpec(
            action_count=default_spec.action_count,
            obs_dim=default_spec.obs_dim,
            max_steps=default_spec.max_steps if max_steps is None else max_steps,
        )
        self.state: Optional[Observation] = None
        self.elapsed_steps: int = 0
        self.done: bool = False

    def reset(self, rng: np.random.Generator) -> Observation:
        self.state = RESET_FUNCTIONS[self.name](rng)
        self.elapsed_steps = 0
        self.done = False
        return self.state.copy()

    def step(self, action: int) -> StepResult:
        if self.state is None or self.done:
            raise EpisodeAlreadyDoneError(environment_name=str(self.name))
        result = STEP_FUNCTIONS[self.name](self.state, action, self.elapsed_steps, self.spec.max_steps)
        self.state = result.observation
        self.elapsed_steps += 1
        self.done = result.done
        return StepResult(
            observation=result.observation.copy(),
            reward=result.reward,
            terminal=result.terminal,
            truncated=result.truncated,
        )

    def __repr__(self):
        return f"Environment(name={self.name}, spec={self.spec}, elapsed_steps={self.elapsed_steps})"
