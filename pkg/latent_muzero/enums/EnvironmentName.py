"""Contains the EnvironmentName used to select a classic-control task."""

from enum import Enum, unique
from typing import Sequence, cast


@unique
class EnvironmentName(Enum):
    """Provides constants for the supported environments.

    The value doubles as the config spelling (``experiment.env = cartpole``).
    """

    CARTPOLE = "cartpole"
    MOUNTAINCAR = "mountaincar"

    def __str__(self):
        return self.value

    @classmethod
    def members_list(cls) -> Sequence[str]:
        """Returns a sequence of the string values of all EnvironmentName members."""
        return cast(Sequence[str], [member.value for member in cls])

    @classmethod
    def get_member_from_string(cls, value: str) -> "EnvironmentName":
        """Returns the EnvironmentName member corresponding to the given value string.

        Args:
            value (str): The string value of the member (e.g., "cartpole"), case-insensitive.

        Returns:
            EnvironmentName: The matching member.

        Raises:
            ValueError: If no member matches the provided value.
        """
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"Invalid value '{value}' for {cls.__name__}. Valid values are: {[member.value for member in cls]}")

    @classmethod
    def make_pretty_string(cls, environment_name: "EnvironmentName") -> str:
        """Converts an EnvironmentName member to a human-readable task name."""
        pretty_mappings = {
            cls.CARTPOLE: "CartPole",
            cls.MOUNTAINCAR: "MountainCar",
        }
        return pretty_mappings.get(environment_name, "Unknown Environment")
