from enum import Enum, unique


@unique
class TrajectorySource(Enum):
    """Tags a latent trajectory by the network that produced it.

    EMBEDDED_H: every observed state passed through the representation network.
    UNROLLED_G: the root embedding simulated forward through the dynamics network.
    """

    EMBEDDED_H = "embedded_h"
    UNROLLED_G = "unrolled_g"

    def __str__(self):
        return self.value

    @classmethod
    def get_plot_colors_dict(cls) -> dict[str, str]:
        return {
            cls.EMBEDDED_H.value: "#1F77B4",
            cls.UNROLLED_G.value: "#2CA02C",
        }
