from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import ShapeMismatchError
from latent_muzero.nn_functions import validate_distribution


@dataclass
class TrajectoryRecord:
    """One self-play episode of T steps.

    Attributes:
        observations (NDArray[np.float64]): o_0..o_T, shape (T + 1, obs_dim).
        actions (NDArray[np.int64]): a_1..a_T, shape (T,).
        rewards (NDArray[np.float64]): r_1..r_T, shape (T,).
        search_policies (NDArray[np.float64]): Visit policies pi_0..pi_{T-1}, shape (T, action_count).
        root_values (NDArray[np.float64]): Search root values nu_0..nu_{T-1}, shape (T,).
        terminal (bool): The episode ended in a terminal state.
        truncated (bool): The episode hit the time limit.
        self_play_iteration (int): Outer-loop iteration that produced the episode.
        final_root_value (float): Root value of a search on o_T when truncated, else 0.
    """

    observations: NDArray[np.float64]
    actions: NDArray[np.int64]
    rewards: NDArray[np.float64]
    search_policies: NDArray[np.float64]
    root_values: NDArray[np.float64]
    terminal: bool
    truncated: bool
    self_play_iteration: int = 0
    final_root_value: float = 0.0

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.search_policies = np.asarray(self.search_policies, dtype=np.float64)
        self.root_values = np.asarray(self.root_values, dtype=np.float64)
        length = len(self.actions)
        for name, array in (
            ("observations", self.observations[1:]),
            ("rewards", self.rewards),
            ("search_policies", self.search_policies),
            ("root_values", self.root_values),
        ):
            if len(array) != length:
                raise ShapeMismatchError(operation=f"TrajectoryRecord.{name}", expected=length, received=len(array))
        if length > 0:
            validate_distribution(probabilities=self.search_policies)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def episode_return(self) -> float:
        return float(self.rewards.sum())

    @property
    def action_count(self) -> int:
        return self.search_policies.shape[1]
