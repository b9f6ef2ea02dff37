from enum import Enum, unique
from typing import Sequence, cast


@unique
class RegularizerMode(Enum):
    "Enum class holding the latent-space regularizers that can be added to the MuZero loss"
    NONE = "none"
    CONTRASTIVE = "contrastive"
    DECODER = "decoder"

    def __str__(self):
        return self.value

    @classmethod
    def members_list(cls) -> Sequence["RegularizerMode"]:
        """Returns all RegularizerMode members."""
        return cast(Sequence[RegularizerMode], [member for member in cls])

