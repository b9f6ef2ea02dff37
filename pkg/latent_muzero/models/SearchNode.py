from typing import Any, Optional


class SearchNode:
    """One node of the search tree.

    Attributes:
        prior (float): Prior probability assigned by the parent's policy.
        visit_count (int): Number of simulations that passed through this node.
        value_sum (float): Sum of the returns backed up through this node.
        reward (float): Scalar reward predicted (or observed) on the edge into this node.
        latent (Any): Latent state (MuZero) or simulator state (AlphaZero), None until expanded.
        children (dict[int, SearchNode]): Child nodes keyed by action.
        terminal (bool): True if the simulator reported a terminal transition into this node.
    """

    __slots__ = ("prior", "visit_count", "value_sum", "reward", "latent", "children", "terminal")

    def __init__(self, prior: float):
        self.prior: float = prior
        self.visit_count: int = 0
        self.value_sum: float = 0.0
        self.reward: float = 0.0
        self.latent: Optional[Any] = None
        self.children: dict[int, "SearchNode"] = {}
        self.terminal: bool = False

    @property
    def expanded(self) -> bool:
        return len(self.children) > 0

    def value(self) -> float:
        if self.visit_count == 0:
            return 0.0
        return self.value_sum / self.visit_count

    def __repr__(self):
        return (
            f"SearchNode(prior={self.prior:.4f}, visit_count={self.visit_count}, value={self.value():.4f}, "
            f"reward={self.reward:.4f}, children={sorted(self.children)})"
        )
