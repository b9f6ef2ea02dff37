"""Self-play, replay targets, the MuZero loss with its two latent regularizers, and the outer training loop."""

import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import polars as pl
from numpy.typing import NDArray

from latent_muzero.checkpoint_functions import Checkpoint, load_checkpoint, rng_from_json, rng_state_to_json, save_checkpoint
from latent_muzero.custom_errors import DecoderMissingError, EmptyReplayBufferError
from latent_muzero.data_saving_and_loading import save_csv
from latent_muzero.enums.Algorithm import Algorithm
from latent_muzero.enums.DiscrepancyFunction import DiscrepancyFunction
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.enums.RegularizerMode import RegularizerMode
from latent_muzero.environment_functions import Environment
from latent_muzero.mcts_functions import MctsConfig, run_search
from latent_muzero.model_functions import alphazero_predict, decode, initialize_params, represent, unroll
from latent_muzero.models.ExperimentConfig import ExperimentConfig
from latent_muzero.models.GradTape import GradTape
from latent_muzero.models.MuZeroParams import MuZeroParams
from latent_muzero.models.NetworkParams import AdamState, ParameterDict
from latent_muzero.models.ReplayBuffer import ReplayBuffer
from latent_muzero.models.RunStatusJson import RunStatusJson
from latent_muzero.models.SearchModel import SearchModel, make_search_model
from latent_muzero.models.TrajectoryRecord import TrajectoryRecord
from latent_muzero.nn_functions import (
    GradCheckReport,
    Value,
    adam_step,
    add,
    cosine_distance,
    finite_diff_check,
    l2_norm_squared,
    scale,
    softmax_cross_entropy,
    squared_error,
    stop_gradient,
    value_of,
    weighted_sum,
)
from latent_muzero.paths_functions import get_checkpoint_path, get_metrics_path
from latent_muzero.support_functions import scalar_to_support

METRICS_COLUMNS: tuple[str, ...] = (
    "iteration",
    "mean_return",
    "mean_episode_length",
    "reward_loss",
    "value_loss",
    "policy_loss",
    "contrastive_loss",
    "decoder_loss",
    "total_loss",
    "wall_seconds",
)


@dataclass(frozen=True)
class LossConfig:
    """How the per-step losses are combined.

    Attributes:
        mode (RegularizerMode): Active latent regularizer.
        omega (float): Weight of the regularizer.
        l2 (float): Coefficient of the reported L2 term (its gradient is applied by adam_step).
        discrepancy (DiscrepancyFunction): l^d used by both regularizers.
        scale_unroll_loss (bool): Weight the losses of unroll steps k >= 1 by 1 / K.
        dynamics_gradient_scale (float): Factor on the gradient entering every dynamics output.
    """

    mode: RegularizerMode = RegularizerMode.NONE
    omega: float = 1.0
    l2: float = 1e-4
    discrepancy: DiscrepancyFunction = DiscrepancyFunction.SQUARED_ERROR
    scale_unroll_loss: bool = True
    dynamics_gradient_scale: float = 0.5


def make_loss_config(config: ExperimentConfig) -> LossConfig:
    return LossConfig(
        mode=config.algorithm.regularizer,
        omega=config.omega,
        l2=config.l2,
        discrepancy=config.discrepancy,
        scale_unroll_loss=config.scale_unroll_loss,
        dynamics_gradient_scale=0.5 if config.halve_dynamics_gradient else 1.0,
    )


def make_mcts_config(config: ExperimentConfig) -> MctsConfig:
    return MctsConfig(
        simulations=config.simulations,
        c1=config.c1,
        c2=config.c2,
        discount=config.discount,
        dirichlet_alpha=config.dirichlet_alpha,
        exploration_fraction=config.exploration_fraction,
        temperature=config.temperature,
    )


@dataclass
class TrainTarget:
    """One replay sample rooted at position t of a trajectory, unrolled for K steps.

    Attributes:
        observation (NDArray[np.float64]): o_t.
        actions (NDArray[np.int64]): a_{t+1}..a_{t+K}; uniformly random beyond the episode end.
        reward_targets (NDArray[np.float64]): u_{t+1}..u_{t+K}, 0 beyond the episode end.
        value_targets (NDArray[np.float64]): z_t..z_{t+K}.
        policy_targets (NDArray[np.float64]): pi_t..pi_{t+K}, shape (K + 1, action_count); uniform where masked.
        future_observations (NDArray[np.float64]): o_{t+1}..o_{t+K}, zeros beyond o_T.
        mask (NDArray[np.bool_]): mask[k] is True iff t + k < T (a search was run in that state).
    """

    observation: NDArray[np.float64]
    actions: NDArray[np.int64]
    reward_targets: NDArray[np.float64]
    value_targets: NDArray[np.float64]
    policy_targets: NDArray[np.float64]
    future_observations: NDArray[np.float64]
    mask: NDArray[np.bool_]

    @property
    def unroll_steps(self) -> int:
        return len(self.actions)


@dataclass
class LossBreakdown:
    """Batch-mean loss terms.

    `total` = reward + value + policy + omega * (active regularizer) + l2_term. `objective` is the part
    that is differentiated on the tape (total without l2_term); `objective_output` is its tape node.
    """

    reward_loss: float = 0.0
    value_loss: float = 0.0
    policy_loss: float = 0.0
    contrastive_loss: float = 0.0
    decoder_loss: float = 0.0
    l2_term: float = 0.0
    total: float = 0.0
    objective: float = 0.0
    objective_output: Optional[Value] = field(default=None, repr=False, compare=False)

    def as_metrics(self) -> dict[str, float]:
        return {
            "reward_loss": self.reward_loss,
            "value_loss": self.value_loss,
            "policy_loss": self.policy_loss,
            "contrastive_loss": self.contrastive_loss,
            "decoder_loss": self.decoder_loss,
            "total_loss": self.total,
        }


def average_breakdowns(breakdowns: Sequence[LossBreakdown]) -> LossBreakdown:
    if not breakdowns:
        return LossBreakdown()
    count = len(breakdowns)
    names = ("reward_loss", "value_loss", "policy_loss", "contrastive_loss", "decoder_loss", "l2_term", "total", "objective")
    return LossBreakdown(**{name: sum(getattr(b, name) for b in breakdowns) / count for name in names})


################################ Self-play #########################################
def self_play_episode(
    environment: Environment,
    model: SearchModel,
    mcts_config: MctsConfig,
    rng: np.random.Generator,
    self_play_iteration: int = 0,
) -> TrajectoryRecord:
    """Plays one episode, searching before every move.

    Stops at a terminal state or at the time limit. On truncation one more search is run on the final
    observation so that value targets can bootstrap from it.
    """
    observation = environment.reset(rng=rng)
    observations = [observation]
    actions: list[int] = []
    rewards: list[float] = []
    policies: list[NDArray[np.float64]] = []
    root_values: list[float] = []
    while True:
        search = run_search(model=model, root_input=observation, config=mcts_config, rng=rng)
        step = environment.step(action=search.chosen_action)
        policies.append(search.visit_policy)
        root_values.append(search.root_value)
        actions.append(search.chosen_action)
        rewards.append(step.reward)
        observation = step.observation
        observations.append(observation)
        if step.done:
            break

    final_root_value = 0.0
    if step.truncated:
        final_root_value = run_search(model=model, root_input=observation, config=mcts_config, rng=rng).root_value
    return TrajectoryRecord(
        observations=np.stack(observations),
        actions=np.array(actions, dtype=np.int64),
        rewards=np.array(rewards, dtype=np.float64),
        search_policies=np.stack(policies),
        root_values=np.array(root_values, dtype=np.float64),
        terminal=step.terminal,
        truncated=step.truncated,
        self_play_iteration=self_play_iteration,
        final_root_value=final_root_value,
    )


@dataclass
class SelfPlayJob:
    params: MuZeroParams
    environment_name: EnvironmentName
    max_steps: int
    mcts_config: MctsConfig
    seed: int
    self_play_iteration: int


def play_job(job: SelfPlayJob) -> TrajectoryRecord:
    """Runs one episode from its own seed; module level so a process pool can pickle it."""
    return self_play_episode(
        environment=Environment(name=job.environment_name, max_steps=job.max_steps),
        model=make_search_model(params=job.params, environment_name=job.environment_name),
        mcts_config=job.mcts_config,
        rng=np.random.default_rng(seed=job.seed),
        self_play_iteration=job.self_play_iteration,
    )


def run_self_play(
    params: MuZeroParams,
    config: ExperimentConfig,
    self_play_iteration: int,
    rng: np.random.Generator,
    mcts_config: Optional[MctsConfig] = None,
    episodes: Optional[int] = None,
) -> list[TrajectoryRecord]:
    """Plays the episodes of one iteration against a parameter snapshot.

    Per-episode seeds are drawn from `rng` up front, so the trajectories (returned in episode order)
    do not depend on `config.workers`.
    """
    episodes = config.episodes if episodes is None else episodes
    mcts_config = make_mcts_config(config=config) if mcts_config is None else mcts_config
    seeds = rng.integers(low=0, high=2**63 - 1, size=episodes, dtype=np.int64)
    jobs = [
        SelfPlayJob(
            params=params, environment_name=config.env, max_steps=config.max_steps,
            mcts_config=mcts_config, seed=int(seed), self_play_iteration=self_play_iteration,
        )
        for seed in seeds
    ]
    if config.workers > 1 and episodes > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, episodes)) as executor:
            return list(executor.map(play_job, jobs))
    return [play_job(job) for job in jobs]


################################ Targets #########################################
def compute_value_target(trajectory: TrajectoryRecord, t: int, td_steps: int, discount: float) -> float:
    """n-step return z_t.

    z_t = sum_{i < min(td, T - t)} discount^i * r_{t+i+1}, plus discount^td * nu_{t+td} if t + td < T.
    Past the end there is no bootstrap for terminal episodes; truncated episodes bootstrap with
    discount^(T - t) * final_root_value. t == T is allowed and yields the bootstrap alone.
    """
    length = len(trajectory)
    if not 0 <= t <= length:
        raise IndexError(f"Position {t} is outside of the trajectory of length {length}")
    value = 0.0
    for i in range(min(td_steps, length - t)):
        value += discount**i * float(trajectory.rewards[t + i])
    if t + td_steps < length:
        value += discount**td_steps * float(trajectory.root_values[t + td_steps])
    elif trajectory.truncated:
        value += discount ** (length - t) * trajectory.final_root_value
    return value


def make_target(
    trajectory: TrajectoryRecord,
    t: int,
    unroll_steps: int,
    td_steps: int,
    discount: float,
    rng: np.random.Generator,
) -> TrainTarget:
    length = len(trajectory)
    action_count = trajectory.action_count
    obs_dim = trajectory.observations.shape[1]
    actions = np.zeros(unroll_steps, dtype=np.int64)
    reward_targets = np.zeros(unroll_steps, dtype=np.float64)
    value_targets = np.zeros(unroll_steps + 1, dtype=np.float64)
    policy_targets = np.full((unroll_steps + 1, action_count), 1.0 / action_count, dtype=np.float64)
    future_observations = np.zeros((unroll_steps, obs_dim), dtype=np.float64)
    mask = np.zeros(unroll_steps + 1, dtype=bool)

    for k in range(unroll_steps + 1):
        index = t + k
        mask[k] = index < length
        if index <= length:
            value_targets[k] = compute_value_target(trajectory=trajectory, t=index, td_steps=td_steps, discount=discount)
        if index < length:
            policy_targets[k] = trajectory.search_policies[index]
        if k == 0:
            continue
        if index - 1 < length:
            actions[k - 1] = trajectory.actions[index - 1]
            reward_targets[k - 1] = trajectory.rewards[index - 1]
            future_observations[k - 1] = trajectory.observations[index]
        else:
            actions[k - 1] = rng.integers(low=0, high=action_count)
    return TrainTarget(
        observation=trajectory.observations[t].copy(),
        actions=actions,
        reward_targets=reward_targets,
        value_targets=value_targets,
        policy_targets=policy_targets,
        future_observations=future_observations,
        mask=mask,
    )


def sample_batch(
    buffer: ReplayBuffer,
    batch_size: int,
    unroll_steps: int,
    td_steps: int,
    discount: float,
    rng: np.random.Generator,
) -> list[TrainTarget]:
    """Samples (trajectory, position) pairs uniformly over all buffered positions.

    Raises:
        EmptyReplayBufferError: If the buffer holds no positions.
    """
    trajectories = buffer.trajectories()
    lengths = np.array([len(trajectory) for trajectory in trajectories], dtype=np.int64)
    if lengths.sum() == 0:
        raise EmptyReplayBufferError()
    ends = np.cumsum(lengths)
    targets: list[TrainTarget] = []
    for _ in range(batch_size):
        flat = int(rng.integers(low=0, high=int(ends[-1])))
        trajectory_index = int(np.searchsorted(ends, flat, side="right"))
        t = flat - int(ends[trajectory_index] - lengths[trajectory_index])
        targets.append(
            make_target(
                trajectory=trajectories[trajectory_index], t=t, unroll_steps=unroll_steps,
                td_steps=td_steps, discount=discount, rng=rng,
            )
        )
    return targets


################################ Loss #########################################
def trainable_arrays(params: MuZeroParams, loss_config: LossConfig) -> ParameterDict:
    """Arrays that receive gradients; the decoder only when its loss is active (omega > 0)."""
    arrays = params.named_arrays()
    if loss_config.mode is not RegularizerMode.DECODER or loss_config.omega == 0:
        arrays = {name: array for name, array in arrays.items() if not name.startswith("decoder.")}
    return arrays


def _discrepancy(first: Value, second: Value, function: DiscrepancyFunction, tape: Optional[GradTape]) -> Value:
    if function is DiscrepancyFunction.COSINE:
        return cosine_distance(first=first, second=second, tape=tape)
    return squared_error(first=first, second=second, tape=tape)


def _stack(targets: Sequence[TrainTarget], name: str) -> NDArray[Any]:
    return np.stack([getattr(target, name) for target in targets])


def _as_float(v: Optional[Value]) -> float:
    return 0.0 if v is None else float(value_of(v))


def _alphazero_loss(
    params: MuZeroParams, targets: Sequence[TrainTarget], loss_config: LossConfig, tape: Optional[GradTape]
) -> LossBreakdown:
    weight = 1.0 / len(targets)
    policy_logits, value_logits = alphazero_predict(params=params, observation=_stack(targets, "observation"), tape=tape)
    value_support = scalar_to_support(x=_stack(targets, "value_targets")[:, 0], anchors=params.value_anchors)
    value_loss = weighted_sum(softmax_cross_entropy(logits=value_logits, target=value_support, tape=tape), weights=weight, tape=tape)
    policy_loss = weighted_sum(
        softmax_cross_entropy(logits=policy_logits, target=_stack(targets, "policy_targets")[:, 0], tape=tape),
        weights=weight,
        tape=tape,
    )
    objective = add(terms=[value_loss, policy_loss], tape=tape)
    l2_term = loss_config.l2 * l2_norm_squared(params=trainable_arrays(params=params, loss_config=loss_config))
    return LossBreakdown(
        value_loss=_as_float(value_loss),
        policy_loss=_as_float(policy_loss),
        l2_term=l2_term,
        total=_as_float(objective) + l2_term,
        objective=_as_float(objective),
        objective_output=objective,
    )


def batch_loss(
    params: MuZeroParams,
    targets: Sequence[TrainTarget],
    loss_config: LossConfig,
    tape: Optional[GradTape] = None,
    target_params: Optional[MuZeroParams] = None,
) -> LossBreakdown:
    """Mean MuZero loss of a batch of targets, evaluated in one vectorised unroll.

    Per unroll step k the reward (k >= 1), value and policy cross-entropies are weighted by 1 for
    k = 0 and by 1 / K for k >= 1 (when `scale_unroll_loss`). The contrastive regularizer compares
    stop_gradient(h(o_{t+k})) with the unrolled latent s^k for k >= 1; the decoder regularizer compares
    decode(s^k) with o_{t+k} for k >= 0. Both skip masked steps. With omega == 0 the regularizer is
    only reported; it is not recorded on the tape.

    `target_params` embeds the contrastive targets (defaults to `params`); passing a frozen copy keeps
    finite differences from moving the stop-gradient targets.

    Raises:
        EmptyReplayBufferError: If no targets are given.
        DecoderMissingError: In decoder mode without a decoder network.
    """
    if len(targets) == 0:
        raise EmptyReplayBufferError(message="batch_loss needs at least one training target")
    if params.is_alphazero:
        return _alphazero_loss(params=params, targets=targets, loss_config=loss_config, tape=tape)
    if loss_config.mode is RegularizerMode.DECODER and params.decoder is None:
        raise DecoderMissingError()

    batch_size = len(targets)
    observations = _stack(targets, "observation")
    actions = _stack(targets, "actions")
    future_observations = _stack(targets, "future_observations")
    policy_targets = _stack(targets, "policy_targets")
    mask = _stack(targets, "mask").astype(np.float64)
    value_supports = scalar_to_support(x=_stack(targets, "value_targets"), anchors=params.value_anchors)
    reward_supports = scalar_to_support(x=_stack(targets, "reward_targets"), anchors=params.reward_anchors)
    unroll_steps = actions.shape[1]

    output = unroll(
        params=params,
        observation=observations,
        actions=actions,
        tape=tape,
        dynamics_gradient_scale=loss_config.dynamics_gradient_scale,
    )
    unroll_weight = 1.0 / unroll_steps if loss_config.scale_unroll_loss and unroll_steps > 0 else 1.0
    step_weights = [1.0] + [unroll_weight] * unroll_steps

    reward_terms, value_terms, policy_terms = [], [], []
    for k in range(unroll_steps + 1):
        weight = step_weights[k] / batch_size
        value_cross_entropy = softmax_cross_entropy(logits=output.value_logits[k], target=value_supports[:, k], tape=tape)
        value_terms.append(weighted_sum(v=value_cross_entropy, weights=weight, tape=tape))
        policy_cross_entropy = softmax_cross_entropy(logits=output.policy_logits[k], target=policy_targets[:, k], tape=tape)
        policy_terms.append(weighted_sum(v=policy_cross_entropy, weights=weight, tape=tape))
        if k > 0:
            reward_cross_entropy = softmax_cross_entropy(
                logits=output.reward_logits[k - 1], target=reward_supports[:, k - 1], tape=tape
            )
            reward_terms.append(weighted_sum(v=reward_cross_entropy, weights=weight, tape=tape))
    reward_loss = add(terms=reward_terms, tape=tape) if reward_terms else None
    value_loss = add(terms=value_terms, tape=tape)
    policy_loss = add(terms=policy_terms, tape=tape)

    regularizer_tape = tape if loss_config.omega > 0 else None
    regularizer_terms: list[Value] = []
    if loss_config.mode is RegularizerMode.CONTRASTIVE:
        for k in range(1, unroll_steps + 1):
            embedded = represent(
                params=params if target_params is None else target_params,
                observation=future_observations[:, k - 1],
                tape=regularizer_tape,
            )
            target_latent = stop_gradient(v=embedded, tape=regularizer_tape)
            distance = _discrepancy(
                first=target_latent, second=output.latents[k], function=loss_config.discrepancy, tape=regularizer_tape
            )
            regularizer_terms.append(
                weighted_sum(v=distance, weights=mask[:, k] * step_weights[k] / batch_size, tape=regularizer_tape)
            )
    elif loss_config.mode is RegularizerMode.DECODER:
        for k in range(unroll_steps + 1):
            decoded = decode(params=params, latent=output.latents[k], tape=regularizer_tape)
            observed = observations if k == 0 else future_observations[:, k - 1]
            distance = _discrepancy(first=decoded, second=observed, function=loss_config.discrepancy, tape=regularizer_tape)
            regularizer_terms.append(
                weighted_sum(v=distance, weights=mask[:, k] * step_weights[k] / batch_size, tape=regularizer_tape)
            )
    regularizer_loss = add(terms=regularizer_terms, tape=regularizer_tape) if regularizer_terms else None

    objective_terms = [term for term in (reward_loss, value_loss, policy_loss) if term is not None]
    if regularizer_loss is not None and loss_config.omega > 0:
        objective_terms.append(scale(v=regularizer_loss, factor=loss_config.omega, tape=tape))
    objective = add(terms=objective_terms, tape=tape)

    l2_term = loss_config.l2 * l2_norm_squared(params=trainable_arrays(params=params, loss_config=loss_config))
    regularizer_value = _as_float(regularizer_loss)
    return LossBreakdown(
        reward_loss=_as_float(reward_loss),
        value_loss=_as_float(value_loss),
        policy_loss=_as_float(policy_loss),
        contrastive_loss=regularizer_value if loss_config.mode is RegularizerMode.CONTRASTIVE else 0.0,
        decoder_loss=regularizer_value if loss_config.mode is RegularizerMode.DECODER else 0.0,
        l2_term=l2_term,
        total=_as_float(objective) + l2_term,
        objective=_as_float(objective),
        objective_output=objective,
    )


def muzero_loss(
    params: MuZeroParams,
    target: TrainTarget,
    loss_config: LossConfig,
    tape: Optional[GradTape] = None,
) -> LossBreakdown:
    """The loss of a single training target."""
    return batch_loss(params=params, targets=[target], loss_config=loss_config, tape=tape)


def loss_gradients(
    params: MuZeroParams, targets: Sequence[TrainTarget], loss_config: LossConfig
) -> tuple[LossBreakdown, ParameterDict]:
    """Evaluates the batch loss on a fresh tape and returns the gradients of every trainable array."""
    tape = GradTape()
    breakdown = batch_loss(params=params, targets=targets, loss_config=loss_config, tape=tape)
    tape.backward(output=breakdown.objective_output)
    arrays = trainable_arrays(params=params, loss_config=loss_config)
    return breakdown, {name: tape.gradient(array) for name, array in arrays.items()}


def apply_gradients(
    params: MuZeroParams,
    gradients: ParameterDict,
    adam_state: AdamState,
    learning_rate: float,
    l2: float,
) -> tuple[MuZeroParams, AdamState]:
    arrays = {name: array for name, array in params.named_arrays().items() if name in gradients}
    updated, adam_state = adam_step(
        params=arrays, grads=gradients, state=adam_state, learning_rate=learning_rate, l2=l2
    )
    return params.with_arrays(arrays={**params.named_arrays(), **updated}), adam_state


def train_step(
    params: MuZeroParams,
    adam_state: AdamState,
    buffer: ReplayBuffer,
    config: ExperimentConfig,
    rng: np.random.Generator,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> tuple[MuZeroParams, AdamState, LossBreakdown]:
    """Samples one batch, differentiates its mean loss and applies one Adam step.

    Returns:
        tuple[MuZeroParams, AdamState, LossBreakdown]: New parameters, optimiser state and the
        loss measured before the update.
    """
    loss_config = make_loss_config(config=config)
    targets = sample_batch(
        buffer=buffer,
        batch_size=config.batch_size,
        unroll_steps=config.unroll_steps if not params.is_alphazero else 0,
        td_steps=config.td_steps,
        discount=config.discount,
        rng=rng,
    )
    breakdown, gradients = loss_gradients(params=params, targets=targets, loss_config=loss_config)
    params, adam_state = apply_gradients(
        params=params, gradients=gradients, adam_state=adam_state, learning_rate=config.learning_rate, l2=config.l2
    )
    logger.debug(msg=f"Train step {adam_state.step}: total={breakdown.total:.6f}")
    return params, adam_state, breakdown


def initial_adam_state(params: MuZeroParams, config: ExperimentConfig) -> AdamState:
    return AdamState.zeros_like(params=trainable_arrays(params=params, loss_config=make_loss_config(config=config)))


################################ Outer loop #########################################
@dataclass
class TrainingResult:
    params: MuZeroParams
    adam_state: AdamState
    replay_buffer: ReplayBuffer
    metrics: pl.DataFrame
    run_directory: Path
    last_checkpoint: Optional[Path]


def metrics_frame(metrics_rows: Sequence[dict[str, Any]]) -> pl.DataFrame:
    schema = {name: (pl.Int64 if name == "iteration" else pl.Float64) for name in METRICS_COLUMNS}
    return pl.DataFrame(data=[{name: row[name] for name in METRICS_COLUMNS} for row in metrics_rows], schema=schema)


def run_training(
    config: ExperimentConfig,
    resume_from: Optional[str | Path] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> TrainingResult:
    """Alternates self-play and training for `config.self_play_iterations` iterations.

    Each iteration plays `episodes` episodes against the current parameters, adds them to the replay
    buffer (evicting iterations outside the window), runs `epochs` train steps and appends one metrics
    row. Checkpoints are written every `checkpoint_interval` iterations and after the last one.

    Args:
        config: The run configuration; `output_directory` is the run directory.
        resume_from: Checkpoint to continue from. Parameters, optimiser, generator, replay buffer
            and metrics are restored, so the continuation equals an uninterrupted run.
        logger: Injected logger.

    Returns:
        TrainingResult: Final state, the metrics table and the last checkpoint path.
    """
    run_directory = Path(config.output_directory)
    status = RunStatusJson(run_directory=run_directory, config=config.to_dict(), resumed_from=resume_from, logger=logger)

    if resume_from is not None:
        checkpoint = load_checkpoint(file_path=resume_from, logger=logger)
        params = checkpoint.params
        adam_state = checkpoint.adam_state
        rng = rng_from_json(rng_state=checkpoint.rng_state)
        replay_buffer = checkpoint.replay_buffer
        replay_buffer.window = config.window
        metrics_rows = list(checkpoint.metrics_rows)
        start_iteration = checkpoint.iteration + 1
        logger.info(msg=f"Resuming from {resume_from} after iteration {checkpoint.iteration}")
    else:
        rng = np.random.default_rng(seed=config.seed)
        params = initialize_params(config=config, rng=rng)
        adam_state = initial_adam_state(params=params, config=config)
        replay_buffer = ReplayBuffer(window=config.window, logger=logger)
        metrics_rows = []
        start_iteration = 1

    last_checkpoint: Optional[Path] = None
    try:
        for iteration in range(start_iteration, config.self_play_iterations + 1):
            iteration_start = time.perf_counter()
            trajectories = run_self_play(params=params, config=config, self_play_iteration=iteration, rng=rng)
            replay_buffer.add(self_play_iteration=iteration, trajectories=trajectories)
            self_play_done = time.perf_counter()

            breakdowns: list[LossBreakdown] = []
            for _ in range(config.epochs):
                params, adam_state, breakdown = train_step(
                    params=params, adam_state=adam_state, buffer=replay_buffer, config=config, rng=rng, logger=logger
                )
                breakdowns.append(breakdown)
            training_done = time.perf_counter()

            mean_breakdown = average_breakdowns(breakdowns=breakdowns)
            row: dict[str, Any] = {
                "iteration": iteration,
                "mean_return": float(np.mean([trajectory.episode_return for trajectory in trajectories])),
                "mean_episode_length": float(np.mean([len(trajectory) for trajectory in trajectories])),
                **{name: float(value) for name, value in mean_breakdown.as_metrics().items()},
                "wall_seconds": 0.0 if config.deterministic_metrics else float(training_done - iteration_start),
            }
            metrics_rows.append(row)
            save_csv(dataframe=metrics_frame(metrics_rows=metrics_rows), file_path=get_metrics_path(run_directory=run_directory))

            if iteration % config.checkpoint_interval == 0 or iteration == config.self_play_iterations:
                last_checkpoint = save_checkpoint(
                    checkpoint=Checkpoint(
                        config=config,
                        params=params,
                        adam_state=adam_state,
                        rng_state=rng_state_to_json(rng=rng),
                        iteration=iteration,
                        replay_buffer=replay_buffer,
                        metrics_rows=metrics_rows,
                    ),
                    file_path=get_checkpoint_path(run_directory=run_directory, iteration=iteration),
                    logger=logger,
                )

            status.last_iteration = iteration
            status.self_play_seconds += self_play_done - iteration_start
            status.training_seconds += training_done - self_play_done
            status.save_to_disk()
            logger.info(
                msg=(
                    f"Iteration {iteration}/{config.self_play_iterations}: mean return {row['mean_return']:.2f}, "
                    f"mean length {row['mean_episode_length']:.1f}, total loss {row['total_loss']:.4f}, "
                    f"{training_done - iteration_start:.1f} s"
                )
            )
    except Exception as exception:
        error = traceback.format_exc()
        logger.error(msg=f"Training stopped with an error:\n{error}")
        status.mark_failed(exception=exception)
        status.save_to_disk()
        raise

    status.completion_status = True
    status.save_to_disk()
    return TrainingResult(
        params=params,
        adam_state=adam_state,
        replay_buffer=replay_buffer,
        metrics=metrics_frame(metrics_rows=metrics_rows),
        run_directory=run_directory,
        last_checkpoint=last_checkpoint,
    )


################################ Evaluation #########################################
@dataclass
class EvaluationReport:
    returns: NDArray[np.float64]
    lengths: NDArray[np.int64]

    @property
    def mean_return(self) -> float:
        return float(self.returns.mean())

    @property
    def std_return(self) -> float:
        return float(self.returns.std())

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            data={
                "episode": np.arange(1, len(self.returns) + 1, dtype=np.int64),
                "return": self.returns,
                "length": self.lengths,
            }
        )


def evaluate_params(
    params: MuZeroParams,
    config: ExperimentConfig,
    episodes: int,
    rng: np.random.Generator,
) -> EvaluationReport:
    """Greedy play without root noise; undiscounted returns per episode."""
    trajectories = run_self_play(
        params=params,
        config=config,
        self_play_iteration=0,
        rng=rng,
        mcts_config=make_mcts_config(config=config).greedy(),
        episodes=episodes,
    )
    return EvaluationReport(
        returns=np.array([trajectory.episode_return for trajectory in trajectories], dtype=np.float64),
        lengths=np.array([len(trajectory) for trajectory in trajectories], dtype=np.int64),
    )


################################ Gradient check #########################################
GRADCHECK_STEP: float = 1e-5
GRADCHECK_ABSOLUTE_FLOOR: float = 1e-3


@dataclass
class LossGradCheckTrial:
    algorithm: str
    discrepancy: DiscrepancyFunction
    latent_size: int
    unroll_steps: int
    report: GradCheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed


def random_targets(
    params: MuZeroParams, batch_size: int, unroll_steps: int, rng: np.random.Generator
) -> list[TrainTarget]:
    """Synthetic targets with in-range scalars, random policies and a partly masked tail."""
    targets: list[TrainTarget] = []
    action_count, obs_dim = params.action_count, params.obs_dim
    for index in range(batch_size):
        valid_steps = unroll_steps + 1 - (index % 2)
        mask = np.arange(unroll_steps + 1) < valid_steps
        targets.append(
            TrainTarget(
                observation=rng.normal(size=obs_dim),
                actions=rng.integers(low=0, high=action_count, size=unroll_steps),
                reward_targets=rng.uniform(low=params.reward_anchors[0], high=params.reward_anchors[-1], size=unroll_steps),
                value_targets=rng.uniform(low=params.value_anchors[0], high=params.value_anchors[-1], size=unroll_steps + 1),
                policy_targets=rng.dirichlet(alpha=np.ones(action_count), size=unroll_steps + 1),
                future_observations=rng.normal(size=(unroll_steps, obs_dim)),
                mask=mask,
            )
        )
    return targets


def loss_gradient_check(
    trials: int = 20,
    seed: int = 0,
    tolerance: float = 1e-5,
    hidden_size: int = 4,
    support_size: int = 5,
    batch_size: int = 2,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> list[LossGradCheckTrial]:
    """Checks the taped gradient of the full loss against central differences.

    Trial i uses configuration i of a fixed cycle over L in {2, 4}, K in {1, 3}, every regularizer
    (both discrepancy functions for the two regularized variants) and finally the AlphaZero loss,
    each on tiny freshly drawn networks and random targets. 20 trials cover every MuZero variant.
    """
    rng = np.random.default_rng(seed=seed)
    variants = [
        (Algorithm.MUZERO, DiscrepancyFunction.SQUARED_ERROR),
        (Algorithm.MUZERO_CONTRASTIVE, DiscrepancyFunction.SQUARED_ERROR),
        (Algorithm.MUZERO_CONTRASTIVE, DiscrepancyFunction.COSINE),
        (Algorithm.MUZERO_DECODER, DiscrepancyFunction.SQUARED_ERROR),
        (Algorithm.MUZERO_DECODER, DiscrepancyFunction.COSINE),
    ]
    cases = [
        (algorithm, discrepancy, latent_size, unroll_steps)
        for latent_size in (2, 4)
        for unroll_steps in (1, 3)
        for algorithm, discrepancy in variants
    ]
    cases.append((Algorithm.ALPHAZERO, DiscrepancyFunction.SQUARED_ERROR, 4, 0))

    results: list[LossGradCheckTrial] = []
    for trial_index in range(trials):
        algorithm, discrepancy, latent_size, unroll_steps = cases[trial_index % len(cases)]
        config = ExperimentConfig(
            algorithm=algorithm,
            latent_size=latent_size,
            hidden_size=hidden_size,
            support_size=support_size,
            unroll_steps=max(unroll_steps, 1),
            discrepancy=discrepancy,
        )
        params = initialize_params(config=config, rng=rng)
        loss_config = make_loss_config(config=config)
        targets = random_targets(params=params, batch_size=batch_size, unroll_steps=unroll_steps, rng=rng)
        frozen = params.copy()
        all_arrays = params.named_arrays()

        def loss_fn(arrays: ParameterDict, tape: Optional[GradTape]) -> Value:
            candidate = params.with_arrays(arrays={**all_arrays, **arrays})
            breakdown = batch_loss(
                params=candidate, targets=targets, loss_config=loss_config, tape=tape, target_params=frozen
            )
            return breakdown.objective_output

        report = finite_diff_check(
            loss_fn=loss_fn,
            params=trainable_arrays(params=params, loss_config=loss_config),
            tol=tolerance,
            step=GRADCHECK_STEP,
            absolute_floor=GRADCHECK_ABSOLUTE_FLOOR,
        )
        trial = LossGradCheckTrial(
            algorithm=str(algorithm),
            discrepancy=discrepancy,
            latent_size=latent_size,
            unroll_steps=unroll_steps,
            report=report,
        )
        results.append(trial)
        logger.info(
            msg=(
                f"Gradient check {trial.algorithm} ({discrepancy}, L={latent_size}, K={unroll_steps}): "
                f"max relative error {report.max_relative_error:.2e} over {report.entries_checked} entries, "
                f"{'passed' if trial.passed else 'FAILED'}"
            )
        )
    return results
