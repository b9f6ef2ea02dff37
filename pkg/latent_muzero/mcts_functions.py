"""PUCT tree search over the learned latent MDP or the true simulator.

The search follows the usual MuZero conventions: the root is expanded and noised before the first
simulation, unvisited children contribute a q-term of 0, returns are backed up without sign flips
and the tree is discarded after every move.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from latent_muzero.models.MinMaxStats import MinMaxStats
from latent_muzero.models.SearchModel import InferenceResult, SearchModel
from latent_muzero.models.SearchNode import SearchNode
from latent_muzero.nn_functions import softmax, validate_distribution


@dataclass(frozen=True)
class MctsConfig:
    simulations: int = 11
    c1: float = 1.25
    c2: float = 19652.0
    discount: float = 0.997
    dirichlet_alpha: float = 0.25
    exploration_fraction: float = 0.25
    temperature: float = 1.0
    add_noise: bool = True

    def greedy(self) -> "MctsConfig":
        """The evaluation variant: no root noise, argmax over visits."""
        return MctsConfig(
            simulations=self.simulations, c1=self.c1, c2=self.c2, discount=self.discount,
            dirichlet_alpha=self.dirichlet_alpha, exploration_fraction=self.exploration_fraction,
            temperature=0.0, add_noise=False,
        )


@dataclass
class SearchResult:
    """Outcome of one search.

    Attributes:
        visit_policy (NDArray[np.float64]): Action distribution derived from root visit counts.
        root_value (float): Mean backed-up return at the root.
        chosen_action (int): The action to play.
        child_visits (NDArray[np.int64]): Raw visit count per root action.
    """

    visit_policy: NDArray[np.float64]
    root_value: float
    chosen_action: int
    child_visits: NDArray[np.int64]


def expand_node(node: SearchNode, result: InferenceResult, action_count: int) -> None:
    """Stores the inference result in the node and creates one child per action with the policy prior."""
    node.latent = result.state
    node.reward = result.reward
    node.terminal = result.terminal
    if result.terminal:
        return
    priors = softmax(result.policy_logits)
    for action in range(action_count):
        node.children[action] = SearchNode(prior=float(priors[action]))


def add_root_noise(
    priors: NDArray[np.float64],
    rng: np.random.Generator,
    dirichlet_alpha: float = 0.25,
    exploration_fraction: float = 0.25,
    noise: Optional[NDArray[np.float64]] = None,
) -> NDArray[np.float64]:
    """Mixes a Dirichlet(alpha) sample into the priors.

    Args:
        priors: Root prior, sums to one.
        rng: Source of the Dirichlet sample.
        dirichlet_alpha: Concentration of the symmetric Dirichlet.
        exploration_fraction: Weight of the noise in the mixture.
        noise: Explicit noise vector; drawn from rng when None.

    Returns:
        NDArray[np.float64]: (1 - fraction) * priors + fraction * noise.
    """
    priors = np.asarray(priors, dtype=np.float64)
    if noise is None:
        noise = rng.dirichlet(alpha=np.full(len(priors), dirichlet_alpha))
    return (1.0 - exploration_fraction) * priors + exploration_fraction * np.asarray(noise, dtype=np.float64)


def ucb_score(
    parent: SearchNode,
    child: SearchNode,
    min_max_stats: MinMaxStats,
    c1: float = 1.25,
    c2: float = 19652.0,
    discount: float = 0.997,
) -> float:
    """PUCT score of one child: prior term plus the min-max normalized q-value (0 while unvisited).

    A parent without visits (a fresh root on the first simulation) counts as visited once.
    """
    parent_visits = max(parent.visit_count, 1)
    pb_c = c1 + math.log((parent_visits + c2 + 1) / c2)
    pb_c *= math.sqrt(parent_visits) / (child.visit_count + 1)
    prior_score = pb_c * child.prior
    if child.visit_count > 0:
        value_score = min_max_stats.normalize(child.reward + discount * child.value())
    else:
        value_score = 0.0
    return prior_score + value_score


def select_child(node: SearchNode, min_max_stats: MinMaxStats, config: MctsConfig) -> tuple[int, SearchNode]:
    """Returns the child with the highest UCB score; ties go to the lowest action index."""
    best_action, best_score = -1, -math.inf
    for action in sorted(node.children):
        score = ucb_score(
            parent=node, child=node.children[action], min_max_stats=min_max_stats,
            c1=config.c1, c2=config.c2, discount=config.discount,
        )
        if score > best_score:
            best_action, best_score = action, score
    return best_action, node.children[best_action]


def backup(search_path: list[SearchNode], value: float, discount: float, min_max_stats: MinMaxStats) -> None:
    """Propagates a leaf value to the root; single player, so no sign changes.

    Walking leaf to root, each node is credited with the running return G, and G is then
    discounted through the node's incoming reward: G <- reward + discount * G.
    """
    for node in reversed(search_path):
        node.value_sum += value
        node.visit_count += 1
        min_max_stats.update(node.reward + discount * node.value())
        value = node.reward + discount * value


def visit_policy(root: SearchNode, temperature: float = 1.0, action_count: Optional[int] = None) -> NDArray[np.float64]:
    """Action distribution p(a) proportional to visits(a)^(1 / temperature).

    temperature == 0 gives the argmax one-hot with ties broken toward the lowest action.

    Raises:
        ValueError: If no child has been visited.
    """
    action_count = len(root.children) if action_count is None else action_count
    visits = np.zeros(action_count, dtype=np.float64)
    for action, child in root.children.items():
        visits[action] = child.visit_count
    if visits.sum() <= 0:
        raise ValueError("visit_policy needs at least one visited child")
    if temperature == 0:
        policy = np.zeros(action_count, dtype=np.float64)
        policy[int(np.argmax(visits))] = 1.0
        return policy
    # Scaling by the maximum first keeps small temperatures from overflowing.
    tempered = (visits / visits.max()) ** (1.0 / temperature)
    return tempered / tempered.sum()


def sample_action(policy: NDArray[np.float64], rng: np.random.Generator) -> int:
    """Draws an action index from a probability vector.

    Raises:
        InvalidDistributionError: If the policy is not a distribution.
    """
    probabilities = validate_distribution(probabilities=policy)
    return int(rng.choice(len(probabilities), p=probabilities))


def run_search(
    model: SearchModel,
    root_input: NDArray[np.float64],
    config: MctsConfig,
    rng: np.random.Generator,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> SearchResult:
    """Runs exactly `config.simulations` simulations from a fresh root.

    Args:
        model: Latent model (MuZero) or simulator-backed model (AlphaZero).
        root_input: Current observation.
        config: Search constants.
        rng: Source of the root noise and of the sampled action.
        logger: Injected logger.

    Returns:
        SearchResult: Visit policy, root value and the chosen action.
    """
    root = SearchNode(prior=1.0)
    expand_node(node=root, result=model.initial_inference(root_input=root_input), action_count=model.action_count)

    if config.add_noise and config.exploration_fraction > 0:
        priors = np.array([root.children[action].prior for action in range(model.action_count)])
        noisy = add_root_noise(
            priors=priors, rng=rng, dirichlet_alpha=config.dirichlet_alpha,
            exploration_fraction=config.exploration_fraction,
        )
        for action in range(model.action_count):
            root.children[action].prior = float(noisy[action])

    min_max_stats = MinMaxStats()
    for _ in range(config.simulations):
        node = root
        search_path = [root]
        action = 0
        while node.expanded:
            action, node = select_child(node=node, min_max_stats=min_max_stats, config=config)
            search_path.append(node)

        if node.terminal:
            value = 0.0
        else:
            parent = search_path[-2]
            result = model.recurrent_inference(state=parent.latent, action=action)
            expand_node(node=node, result=result, action_count=model.action_count)
            value = result.value
        backup(search_path=search_path, value=value, discount=config.discount, min_max_stats=min_max_stats)

    policy = visit_policy(root=root, temperature=config.temperature, action_count=model.action_count)
    if config.temperature == 0:
        chosen_action = int(np.argmax(policy))
    else:
        chosen_action = sample_action(policy=policy, rng=rng)
    child_visits = np.array([root.children[action].visit_count for action in range(model.action_count)], dtype=np.int64)
    logger.debug(msg=f"Search finished: visits={child_visits.tolist()}, root_value={root.value():.4f}, action={chosen_action}")
    return SearchResult(visit_policy=policy, root_value=root.value(), chosen_action=chosen_action, child_visits=child_visits)
