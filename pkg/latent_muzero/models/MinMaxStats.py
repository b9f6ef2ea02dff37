import math


class MinMaxStats:
    """Running bounds of the q-values seen during one search, used to rescale them to [0, 1]."""

    def __init__(self):
        self.min_q: float = math.inf
        self.max_q: float = -math.inf

    def update(self, value: float) -> None:
        self.min_q = min(self.min_q, value)
        self.max_q = max(self.max_q, value)

    def normalize(self, value: float) -> float:
        # Identity until two distinct q-values were seen.
        if self.max_q > self.min_q:
            return (value - self.min_q) / (self.max_q - self.min_q)
        return value
