from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import ShapeMismatchError

ParameterDict = dict[str, NDArray[np.float64]]


@dataclass
class DenseLayerParams:
    """Weights (out x in) and biases (out) of one fully connected layer."""

    weights: NDArray[np.float64]
    biases: NDArray[np.float64]

    def __post_init__(self):
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ShapeMismatchError(
                operation="DenseLayerParams",
                expected=(self.weights.shape[0],),
                received=self.biases.shape,
            )

    @property
    def in_features(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_features(self) -> int:
        return int(self.weights.shape[0])


@dataclass
class MlpParams:
    """Two hidden ELU layers followed by one linear output head per prediction target.

    Attributes:
        layer1 (DenseLayerParams): input -> hidden.
        layer2 (DenseLayerParams): hidden -> hidden.
        heads (list[DenseLayerParams]): hidden -> head output, evaluated side by side.
    """

    layer1: DenseLayerParams
    layer2: DenseLayerParams
    heads: list[DenseLayerParams] = field(default_factory=list)

    def __post_init__(self):
        if self.layer1.out_features != self.layer2.in_features:
            raise ShapeMismatchError(
                operation="MlpParams",
                expected=self.layer1.out_features,
                received=self.layer2.in_features,
            )
        for head in self.heads:
            if head.in_features != self.layer2.out_features:
                raise ShapeMismatchError(
                    operation="MlpParams head",
                    expected=self.layer2.out_features,
                    received=head.in_features,
                )

    @property
    def input_size(self) -> int:
        return self.layer1.in_features

    @property
    def hidden_size(self) -> int:
        return self.layer1.out_features

    def layers(self) -> list[tuple[str, DenseLayerParams]]:
        named = [("layer1", self.layer1), ("layer2", self.layer2)]
        named.extend((f"head{index}", head) for index, head in enumerate(self.heads))
        return named

    def named_arrays(self, prefix: str) -> ParameterDict:
        """Returns every array of the network keyed as '<prefix>.<layer>.<weights|biases>'.

        The arrays are returned by reference, not copied.
        """
        arrays: ParameterDict = {}
        for layer_name, layer in self.layers():
            arrays[f"{prefix}.{layer_name}.weights"] = layer.weights
            arrays[f"{prefix}.{layer_name}.biases"] = layer.biases
        return arrays

    @classmethod
    def from_named_arrays(cls, arrays: ParameterDict, prefix: str) -> "MlpParams":
        def layer(layer_name: str) -> DenseLayerParams:
            return DenseLayerParams(
                weights=arrays[f"{prefix}.{layer_name}.weights"],
                biases=arrays[f"{prefix}.{layer_name}.biases"],
            )

        head_count = sum(
            1 for key in arrays if key.startswith(f"{prefix}.head") and key.endswith(".weights")
        )
        return cls(
            layer1=layer("layer1"),
            layer2=layer("layer2"),
            heads=[layer(f"head{index}") for index in range(head_count)],
        )


@dataclass
class AdamState:
    """First and second moment estimates per parameter plus the step counter."""

    m: ParameterDict
    v: ParameterDict
    step: int = 0

    @classmethod
    def zeros_like(cls, params: ParameterDict) -> "AdamState":
        return cls(
            m={name: np.zeros_like(array) for name, array in params.items()},
            v={name: np.zeros_like(array) for name, array in params.items()},
            step=0,
        )
