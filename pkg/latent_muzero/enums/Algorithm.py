from enum import Enum, unique
from typing import Sequence, cast

from latent_muzero.enums.RegularizerMode import RegularizerMode


@unique
class Algorithm(Enum):
    "Enum class holding the trainable agents: MuZero, its two regularized variants and the AlphaZero baseline"
    MUZERO = "muzero"
    MUZERO_CONTRASTIVE = "muzero_contrastive"
    MUZERO_DECODER = "muzero_decoder"
    ALPHAZERO = "alphazero"

    def __str__(self):
        return self.value

    @classmethod
    def members_list(cls) -> Sequence[str]:
        """Returns a sequence of the Algorithm member values."""
        return cast(Sequence[str], [member.value for member in cls])

    @classmethod
    def get_member_from_string(cls, value: str) -> "Algorithm":
        """Returns the Algorithm member corresponding to the given value string.

        Raises:
            ValueError: If no member matches the provided value.
        """
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"Invalid value '{value}' for Algorithm. Valid values are: {[member.value for member in cls]}")

    @property
    def uses_learned_model(self) -> bool:
        """False only for AlphaZero, which plans with the true simulator."""
        return self is not Algorithm.ALPHAZERO

    @property
    def needs_decoder(self) -> bool:
        return self is Algorithm.MUZERO_DECODER

    @property
    def regularizer(self) -> RegularizerMode:
        """The latent-space regularizer trained alongside the MuZero loss."""
        if self is Algorithm.MUZERO_CONTRASTIVE:
            return RegularizerMode.CONTRASTIVE
        if self is Algorithm.MUZERO_DECODER:
            return RegularizerMode.DECODER
        return RegularizerMode.NONE
