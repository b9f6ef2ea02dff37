from dataclasses import dataclass
from typing import Any, Optional, Protocol

import numpy as np
from numpy.typing import NDArray

from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.environment_functions import simulate_step
from latent_muzero.model_functions import alphazero_predict, dynamics, predict, represent
from latent_muzero.models.MuZeroParams import MuZeroParams
from latent_muzero.nn_functions import softmax
from latent_muzero.support_functions import support_to_scalar


@dataclass
class InferenceResult:
    """What the search needs to expand a node.

    Attributes:
        state (Any): Latent (MuZero) or simulator state (AlphaZero) stored in the node.
        reward (float): Scalar reward of the transition into the node, 0 for the root.
        policy_logits (Optional[NDArray[np.float64]]): Prior logits over actions, None for terminal states.
        value (float): Scalar value estimate, 0 for terminal states.
        terminal (bool): True if the transition ended the episode.
    """

    state: Any
    reward: float
    policy_logits: Optional[NDArray[np.float64]]
    value: float
    terminal: bool = False


class SearchModel(Protocol):
    """Protocol for the model the tree search plans with, so MuZero and AlphaZero share one search."""

    action_count: int

    def initial_inference(self, root_input: NDArray[np.float64]) -> InferenceResult: ...

    def recurrent_inference(self, state: Any, action: int) -> InferenceResult: ...


class MuZeroSearchModel(SearchModel):
    """Plans inside the learned latent MDP; the real environment is never consulted."""

    def __init__(self, params: MuZeroParams):
        self.params: MuZeroParams = params
        self.action_count: int = params.action_count

    def _value(self, value_logits) -> float:
        return float(support_to_scalar(probabilities=softmax(value_logits), anchors=self.params.value_anchors))

    def initial_inference(self, root_input: NDArray[np.float64]) -> InferenceResult:
        latent = represent(params=self.params, observation=root_input)
        policy_logits, value_logits = predict(params=self.params, latent=latent)
        return InferenceResult(state=latent, reward=0.0, policy_logits=policy_logits, value=self._value(value_logits))

    def recurrent_inference(self, state: Any, action: int) -> InferenceResult:
        reward_logits, latent = dynamics(params=self.params, latent=state, action=action)
        policy_logits, value_logits = predict(params=self.params, latent=latent)
        reward = float(support_to_scalar(probabilities=softmax(reward_logits), anchors=self.params.reward_anchors))
        return InferenceResult(state=latent, reward=reward, policy_logits=policy_logits, value=self._value(value_logits))


class AlphaZeroSearchModel(SearchModel):
    """Plans with the true simulator; f evaluates raw observations."""

    def __init__(self, params: MuZeroParams, environment_name: EnvironmentName):
        self.params: MuZeroParams = params
        self.environment_name: EnvironmentName = environment_name
        self.action_count: int = params.action_count

    def _evaluate(self, observation: NDArray[np.float64]) -> tuple[NDArray[np.float64], float]:
        policy_logits, value_logits = alphazero_predict(params=self.params, observation=observation)
        value = float(support_to_scalar(probabilities=softmax(value_logits), anchors=self.params.value_anchors))
        return policy_logits, value

    def initial_inference(self, root_input: NDArray[np.float64]) -> InferenceResult:
        policy_logits, value = self._evaluate(observation=root_input)
        return InferenceResult(state=np.array(root_input, dtype=np.float64), reward=0.0, policy_logits=policy_logits, value=value)

    def recurrent_inference(self, state: Any, action: int) -> InferenceResult:
        result = simulate_step(environment_name=self.environment_name, state=state, action=action)
        if result.terminal:
            return InferenceResult(
                state=result.observation, reward=result.reward, policy_logits=None, value=0.0, terminal=True
            )
        policy_logits, value = self._evaluate(observation=result.observation)
        return InferenceResult(state=result.observation, reward=result.reward, policy_logits=policy_logits, value=value)


def make_search_model(params: MuZeroParams, environment_name: EnvironmentName) -> SearchModel:
    if params.is_alphazero:
        return AlphaZeroSearchModel(params=params, environment_name=environment_name)
    return MuZeroSearchModel(params=params)
