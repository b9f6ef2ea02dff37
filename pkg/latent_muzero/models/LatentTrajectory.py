from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import ShapeMismatchError
from latent_muzero.enums.TrajectorySource import TrajectorySource


@dataclass
class LatentTrajectory:
    """Latent states along one recorded action sequence.

    Attributes:
        points (NDArray[np.float64]): One latent per step, shape (steps + 1, L).
        source (TrajectorySource): EMBEDDED_H (h applied to each observation) or UNROLLED_G (g chained from the root).
        actions (NDArray[np.int64]): The action sequence, shape (steps,).
    """

    points: NDArray[np.float64]
    source: TrajectorySource
    actions: NDArray[np.int64]

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.actions = np.asarray(self.actions, dtype=np.int64).reshape(-1)
        if self.source is TrajectorySource.UNROLLED_G and len(self.points) != len(self.actions) + 1:
            raise ShapeMismatchError(
                operation="LatentTrajectory(unrolled_g)", expected=len(self.actions) + 1, received=len(self.points)
            )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def latent_size(self) -> int:
        return int(self.points.shape[1])
