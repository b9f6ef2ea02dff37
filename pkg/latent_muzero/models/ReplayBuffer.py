import logging
from collections import OrderedDict
from typing import Iterable

from latent_muzero.models.TrajectoryRecord import TrajectoryRecord


class ReplayBuffer:
    """Trajectories binned by self-play iteration; only the `window` most recent iterations are kept."""

    def __init__(self, window: int = 10, logger: logging.Logger = logging.getLogger(name=__name__)):
        if window < 1:
            raise ValueError(f"Replay window must be >= 1, got {window}")
        self.window: int = window
        self.logger: logging.Logger = logger
        self.bins: OrderedDict[int, list[TrajectoryRecord]] = OrderedDict()

    def add(self, self_play_iteration: int, trajectories: Iterable[TrajectoryRecord]) -> None:
        """Appends the trajectories of one iteration and evicts iterations outside the window."""
        self.bins.setdefault(self_play_iteration, []).extend(trajectories)
        while len(self.bins) > self.window:
            evicted, records = self.bins.popitem(last=False)
            self.logger.debug(msg=f"Evicted self-play iteration {evicted} ({len(records)} trajectories) from the replay buffer")

    @property
    def iterations(self) -> list[int]:
        return list(self.bins)

    def trajectories(self) -> list[TrajectoryRecord]:
        return [trajectory for records in self.bins.values() for trajectory in records]

    def position_count(self) -> int:
        return sum(len(trajectory) for trajectory in self.trajectories())

    def __len__(self) -> int:
        return sum(len(records) for records in self.bins.values())

    def __repr__(self):
        return f"ReplayBuffer(window={self.window}, iterations={self.iterations}, trajectories={len(self)})"
