from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import ShapeMismatchError


@dataclass
class PcaModel:
    """A fitted principal component basis.

    Attributes:
        mean (NDArray[np.float64]): Mean of the fitted data, shape (L,).
        components (NDArray[np.float64]): Orthonormal rows, ordered by descending eigenvalue, shape (n_components, L).
        explained_variance (NDArray[np.float64]): Covariance eigenvalue of each component.
        explained_variance_ratio (NDArray[np.float64]): Eigenvalue over the total variance (trace).
    """

    mean: NDArray[np.float64]
    components: NDArray[np.float64]
    explained_variance: NDArray[np.float64]
    explained_variance_ratio: NDArray[np.float64]

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    @property
    def latent_size(self) -> int:
        return int(self.components.shape[1])

    def project(self, points) -> NDArray[np.float64]:
        """(points - mean) @ components.T, shape (n, n_components).

        Raises:
            ShapeMismatchError: If the point dimension differs from the fitted one.
        """
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if x.shape[-1] != self.latent_size:
            raise ShapeMismatchError(operation="PcaModel.project", expected=self.latent_size, received=x.shape[-1])
        return (x - self.mean) @ self.components.T

    def reconstruct(self, coordinates) -> NDArray[np.float64]:
        return np.atleast_2d(np.asarray(coordinates, dtype=np.float64)) @ self.components + self.mean
