"""Representation, dynamics, prediction and decoder networks of the value-equivalent model."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import DecoderMissingError, InvalidActionError, ShapeMismatchError
from latent_muzero.environment_functions import ENV_SPECS
from latent_muzero.models.ExperimentConfig import ExperimentConfig
from latent_muzero.models.GradTape import GradTape
from latent_muzero.models.MuZeroParams import MuZeroParams
from latent_muzero.models.NetworkParams import ParameterDict
from latent_muzero.nn_functions import Value, concatenate, minmax_normalize, mlp_forward, scale_gradient, value_of
from latent_muzero.support_functions import environment_anchors


@dataclass
class UnrollOutput:
    """Per-step outputs of a K-step unroll.

    latents, policy_logits and value_logits hold K + 1 entries (k = 0..K); reward_logits holds K
    entries (k = 1..K); decoded holds K + 1 entries when the decoder was applied.
    """

    latents: list[Value] = field(default_factory=list)
    policy_logits: list[Value] = field(default_factory=list)
    value_logits: list[Value] = field(default_factory=list)
    reward_logits: list[Value] = field(default_factory=list)
    decoded: Optional[list[Value]] = None

    @property
    def unroll_steps(self) -> int:
        return len(self.reward_logits)


def one_hot(actions, action_count: int) -> NDArray[np.float64]:
    """One-hot encodes an action or an array of actions.

    Raises:
        InvalidActionError: If any action is outside 0..action_count-1.
    """
    indices = np.asarray(actions, dtype=np.int64)
    if np.any(indices < 0) or np.any(indices >= action_count):
        invalid = int(indices[(indices < 0) | (indices >= action_count)].flat[0])
        raise InvalidActionError(action=invalid, action_count=action_count)
    return np.eye(action_count, dtype=np.float64)[indices]


def represent(params: MuZeroParams, observation: Value, tape: Optional[GradTape] = None) -> Value:
    """h: observation -> minmax-normalised latent state."""
    if params.h is None:
        raise ValueError("AlphaZero parameters have no representation network; use alphazero_predict")
    if value_of(observation).shape[-1] != params.obs_dim:
        raise ShapeMismatchError(operation="represent", expected=params.obs_dim, received=value_of(observation).shape[-1])
    (latent,) = mlp_forward(params=params.h, input=observation, tape=tape)
    return minmax_normalize(v=latent, tape=tape)


def dynamics(params: MuZeroParams, latent: Value, action, tape: Optional[GradTape] = None) -> tuple[Value, Value]:
    """g: (latent, action) -> (reward logits over the reward support, next normalised latent).

    The action is one-hot encoded and concatenated to the latent before the first layer.
    """
    if params.g is None:
        raise ValueError("AlphaZero parameters have no dynamics network")
    encoded = one_hot(actions=action, action_count=params.action_count)
    next_latent, reward_logits = mlp_forward(params=params.g, input=concatenate(latent, encoded, tape=tape), tape=tape)
    return reward_logits, minmax_normalize(v=next_latent, tape=tape)


def predict(params: MuZeroParams, latent: Value, tape: Optional[GradTape] = None) -> tuple[Value, Value]:
    """f: latent -> (policy logits, value logits over the value support)."""
    policy_logits, value_logits = mlp_forward(params=params.f, input=latent, tape=tape)
    return policy_logits, value_logits


def decode(params: MuZeroParams, latent: Value, tape: Optional[GradTape] = None) -> Value:
    """Decoder: latent -> reconstructed observation (linear output)."""
    if params.decoder is None:
        raise DecoderMissingError()
    (observation,) = mlp_forward(params=params.decoder, input=latent, tape=tape)
    return observation


def alphazero_predict(params: MuZeroParams, observation: Value, tape: Optional[GradTape] = None) -> tuple[Value, Value]:
    """The AlphaZero baseline network: f applied directly to the raw observation."""
    if value_of(observation).shape[-1] != params.f.input_size:
        raise ShapeMismatchError(
            operation="alphazero_predict", expected=params.f.input_size, received=value_of(observation).shape[-1]
        )
    return predict(params=params, latent=observation, tape=tape)


def unroll(
    params: MuZeroParams,
    observation: Value,
    actions,
    tape: Optional[GradTape] = None,
    with_decoder: bool = False,
    dynamics_gradient_scale: float = 1.0,
) -> UnrollOutput:
    """Embeds the root observation and steps the dynamics through the given actions.

    Args:
        params: Model weights.
        observation: Root observation, shape (obs_dim,) or (batch, obs_dim).
        actions: Shape (K,) or (batch, K).
        tape: Records the computation when given.
        with_decoder: Also decode every latent.
        dynamics_gradient_scale: Factor applied to the gradient entering each dynamics output latent.

    Returns:
        UnrollOutput: K + 1 latents / predictions and K reward logits.
    """
    action_array = np.asarray(actions, dtype=np.int64)
    unroll_steps = action_array.shape[-1] if action_array.ndim > 0 else 0
    output = UnrollOutput(decoded=[] if with_decoder else None)

    latent = represent(params=params, observation=observation, tape=tape)
    for k in range(unroll_steps + 1):
        if k > 0:
            reward_logits, latent = dynamics(params=params, latent=latent, action=action_array[..., k - 1], tape=tape)
            if dynamics_gradient_scale != 1.0:
                latent = scale_gradient(v=latent, factor=dynamics_gradient_scale, tape=tape)
            output.reward_logits.append(reward_logits)
        policy_logits, value_logits = predict(params=params, latent=latent, tape=tape)
        output.latents.append(latent)
        output.policy_logits.append(policy_logits)
        output.value_logits.append(value_logits)
        if output.decoded is not None:
            output.decoded.append(decode(params=params, latent=latent, tape=tape))
    return output


def _model_dimensions(config: ExperimentConfig) -> dict:
    spec = ENV_SPECS[config.env]
    value_anchors, reward_anchors = environment_anchors(environment_name=config.env, support_size=config.support_size)
    return {
        "obs_dim": spec.obs_dim,
        "action_count": spec.action_count,
        "value_anchors": value_anchors,
        "reward_anchors": reward_anchors,
    }


def initialize_params(config: ExperimentConfig, rng: np.random.Generator) -> MuZeroParams:
    """Fresh networks for the configured environment and algorithm."""
    return MuZeroParams.initialize(
        rng=rng,
        latent_size=config.latent_size,
        hidden_size=config.hidden_size,
        with_decoder=config.algorithm.needs_decoder,
        alphazero=not config.algorithm.uses_learned_model,
        **_model_dimensions(config=config),
    )


def params_from_arrays(config: ExperimentConfig, arrays: ParameterDict) -> MuZeroParams:
    """Rebuilds parameters of the configured shape from named arrays, e.g. read from a checkpoint."""
    dimensions = _model_dimensions(config=config)
    latent_size = dimensions["obs_dim"] if not config.algorithm.uses_learned_model else config.latent_size
    return MuZeroParams.from_named_arrays(arrays=arrays, latent_size=latent_size, **dimensions)
