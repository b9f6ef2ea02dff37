"""Contains a minimal reverse-mode gradient tape over numpy arrays."""

from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = ["GradTape", "TapeVariable"]

BackwardFunction = Callable[[NDArray[np.float64]], Sequence[Optional[NDArray[np.float64]]]]


class TapeVariable:
    """A value recorded on a GradTape.

    Attributes:
        value (NDArray[np.float64]): The forward value.
        grad (Optional[NDArray[np.float64]]): Accumulated gradient of the tape output, None until reached.
        index (int): Position on the tape; parents always have a smaller index than children.
    """

    __slots__ = ("value", "grad", "index")

    def __init__(self, value: NDArray[np.float64], index: int):
        self.value: NDArray[np.float64] = value
        self.grad: Optional[NDArray[np.float64]] = None
        self.index: int = index

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"TapeVariable(index={self.index}, shape={self.value.shape})"


class GradTape:
    """Ordered record of forward intermediates for computing exact gradients of a scalar.

    Parameters are registered with `watch`, which returns the same variable for the same
    array object so that a network applied several times accumulates one gradient. Leaves
    created with `constant` have no parents; this is how a value is gradient-stopped.
    A tape is single-owner and is used for exactly one backward pass.

    Examples:
        >>> tape = GradTape()
        >>> w = np.array([2.0])
        >>> x = tape.watch(w)
        >>> y = tape.record(value=x.value ** 2, parents=(x,), backward=lambda g: (2 * x.value * g,))
        >>> tape.backward(y)
        >>> tape.gradient(w)
        array([4.])
    """

    def __init__(self):
        self._variables: list[TapeVariable] = []
        self._parents: list[tuple[TapeVariable, ...]] = []
        self._backward_functions: list[Optional[BackwardFunction]] = []
        self._watched: dict[int, TapeVariable] = {}
        # Keeps watched arrays alive so their ids stay unique for the tape's lifetime.
        self._watched_arrays: dict[int, NDArray[np.float64]] = {}
        self._backward_done: bool = False

    def __len__(self):
        return len(self._variables)

    def _append(
        self,
        value: NDArray[np.float64],
        parents: tuple[TapeVariable, ...],
        backward: Optional[BackwardFunction],
    ) -> TapeVariable:
        variable = TapeVariable(value=value, index=len(self._variables))
        self._variables.append(variable)
        self._parents.append(parents)
        self._backward_functions.append(backward)
        return variable

    def watch(self, array: NDArray[np.float64]) -> TapeVariable:
        """Registers a parameter array and returns its leaf variable."""
        key = id(array)
        if key not in self._watched:
            self._watched[key] = self._append(value=array, parents=(), backward=None)
            self._watched_arrays[key] = array
        return self._watched[key]

    def constant(self, value) -> TapeVariable:
        """Records a leaf through which no gradient reaches anything else."""
        return self._append(value=np.asarray(value, dtype=np.float64), parents=(), backward=None)

    def as_variable(self, value) -> TapeVariable:
        if isinstance(value, TapeVariable):
            return value
        return self.constant(value=value)

    def record(
        self,
        value: NDArray[np.float64],
        parents: tuple[TapeVariable, ...],
        backward: BackwardFunction,
    ) -> TapeVariable:
        """Records an operation output.

        Args:
            value: The forward result.
            parents: The variables the result was computed from.
            backward: Maps the gradient of the result to one gradient (or None) per parent.

        Returns:
            TapeVariable: The recorded output.
        """
        return self._append(value=value, parents=parents, backward=backward)

    def backward(self, output: TapeVariable) -> None:
        """Propagates d(output)/d(.) to every variable recorded before `output`.

        Raises:
            ValueError: If output is not a scalar or backward was already run on this tape.
        """
        if self._backward_done:
            raise ValueError("backward() was already called on this GradTape; record a new tape.")
        if output.value.size != 1:
            raise ValueError(f"backward() needs a scalar output, got shape {output.value.shape}.")
        self._backward_done = True
        output.grad = np.ones_like(output.value)

        for index in range(output.index, -1, -1):
            variable = self._variables[index]
            backward_function = self._backward_functions[index]
            if variable.grad is None or backward_function is None:
                continue
            parent_grads = backward_function(variable.grad)
            for parent, parent_grad in zip(self._parents[index], parent_grads):
                if parent_grad is None:
                    continue
                if parent.grad is None:
                    parent.grad = np.array(parent_grad, dtype=np.float64)
                else:
                    parent.grad = parent.grad + parent_grad

    def gradient(self, array: NDArray[np.float64]) -> NDArray[np.float64]:
        """Returns the gradient of a watched array; zeros when the array never influenced the output."""
        variable = self._watched.get(id(array))
        if variable is None or variable.grad is None:
            return np.zeros_like(array, dtype=np.float64)
        return variable.grad
