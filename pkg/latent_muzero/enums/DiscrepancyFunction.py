from enum import Enum, unique


@unique
class DiscrepancyFunction(Enum):
    "Enum class holding the discrepancy functions l^d available to both regularizers"
    SQUARED_ERROR = "squared_error"
    COSINE = "cosine"

    def __str__(self):
        return self.value

    @classmethod
    def get_member_from_string(cls, value: str) -> "DiscrepancyFunction":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"Invalid value '{value}' for DiscrepancyFunction. Valid values are: {[member.value for member in cls]}")
