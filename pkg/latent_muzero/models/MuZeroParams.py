from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from latent_muzero.models.NetworkParams import MlpParams, ParameterDict
from latent_muzero.nn_functions import init_params

NETWORK_PREFIXES: tuple[str, ...] = ("h", "g", "f", "decoder")


@dataclass
class MuZeroParams:
    """Weights of the learned abstract MDP.

    Attributes:
        h (Optional[MlpParams]): Representation, obs_dim -> [L]. None for the AlphaZero baseline.
        g (Optional[MlpParams]): Dynamics, L + action_count -> [L latent, S reward]. None for AlphaZero.
        f (MlpParams): Prediction, L (obs_dim for AlphaZero) -> [action_count policy, S value].
        decoder (Optional[MlpParams]): Latent decoder, L -> [obs_dim].
        value_anchors (NDArray[np.float64]): Support of the value head (not trained).
        reward_anchors (NDArray[np.float64]): Support of the reward head (not trained).
    """

    h: Optional[MlpParams]
    g: Optional[MlpParams]
    f: MlpParams
    decoder: Optional[MlpParams]
    latent_size: int
    action_count: int
    obs_dim: int
    value_anchors: NDArray[np.float64]
    reward_anchors: NDArray[np.float64]

    @property
    def support_size(self) -> int:
        return len(self.value_anchors)

    @property
    def is_alphazero(self) -> bool:
        return self.h is None

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        obs_dim: int,
        action_count: int,
        latent_size: int,
        value_anchors: NDArray[np.float64],
        reward_anchors: NDArray[np.float64],
        hidden_size: int = 32,
        with_decoder: bool = False,
        alphazero: bool = False,
    ) -> "MuZeroParams":
        """Draws fresh networks; h, g, f and the decoder are initialised in that order."""
        support_size = len(value_anchors)
        hidden = (hidden_size, hidden_size)
        if alphazero:
            f = init_params(rng=rng, dims=(obs_dim, *hidden), head_sizes=(action_count, support_size))
            return cls(
                h=None, g=None, f=f, decoder=None, latent_size=obs_dim, action_count=action_count,
                obs_dim=obs_dim, value_anchors=value_anchors, reward_anchors=reward_anchors,
            )
        h = init_params(rng=rng, dims=(obs_dim, *hidden), head_sizes=(latent_size,))
        g = init_params(rng=rng, dims=(latent_size + action_count, *hidden), head_sizes=(latent_size, support_size))
        f = init_params(rng=rng, dims=(latent_size, *hidden), head_sizes=(action_count, support_size))
        decoder = init_params(rng=rng, dims=(latent_size, *hidden), head_sizes=(obs_dim,)) if with_decoder else None
        return cls(
            h=h, g=g, f=f, decoder=decoder, latent_size=latent_size, action_count=action_count,
            obs_dim=obs_dim, value_anchors=value_anchors, reward_anchors=reward_anchors,
        )

    def networks(self) -> dict[str, MlpParams]:
        present = {"h": self.h, "g": self.g, "f": self.f, "decoder": self.decoder}
        return {prefix: network for prefix, network in present.items() if network is not None}

    def named_arrays(self) -> ParameterDict:
        """All trainable arrays by reference, keyed '<network>.<layer>.<weights|biases>'."""
        arrays: ParameterDict = {}
        for prefix, network in self.networks().items():
            arrays.update(network.named_arrays(prefix=prefix))
        return arrays

    @classmethod
    def from_named_arrays(
        cls,
        arrays: ParameterDict,
        latent_size: int,
        action_count: int,
        obs_dim: int,
        value_anchors: NDArray[np.float64],
        reward_anchors: NDArray[np.float64],
    ) -> "MuZeroParams":
        """Rebuilds the networks from arrays keyed as by `named_arrays`; absent networks stay None."""
        def network(prefix: str) -> Optional[MlpParams]:
            if not any(key.startswith(f"{prefix}.") for key in arrays):
                return None
            return MlpParams.from_named_arrays(arrays=arrays, prefix=prefix)

        f = network("f")
        if f is None:
            raise KeyError("Parameter arrays do not contain the prediction network 'f'")
        return cls(
            h=network("h"), g=network("g"), f=f, decoder=network("decoder"),
            latent_size=latent_size, action_count=action_count, obs_dim=obs_dim,
            value_anchors=value_anchors, reward_anchors=reward_anchors,
        )

    def with_arrays(self, arrays: ParameterDict) -> "MuZeroParams":
        """Returns the same structure built on the given arrays (used after an optimiser step)."""
        return MuZeroParams.from_named_arrays(
            arrays=arrays, latent_size=self.latent_size, action_count=self.action_count, obs_dim=self.obs_dim,
            value_anchors=self.value_anchors, reward_anchors=self.reward_anchors,
        )

    def copy(self) -> "MuZeroParams":
        return self.with_arrays({name: array.copy() for name, array in self.named_arrays().items()})
