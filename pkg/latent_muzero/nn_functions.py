"""Differentiable building blocks for the small MuZero networks.

Every operation takes an optional GradTape. Without a tape it works on plain numpy arrays and
returns an array; with a tape it records itself and returns a TapeVariable. Both paths evaluate
the same numpy expressions, so forward values agree bitwise. All arithmetic is float64.
Operations act on the last axis, so a leading batch axis is supported throughout.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import InvalidDistributionError, ShapeMismatchError
from latent_muzero.models.GradTape import GradTape, TapeVariable
from latent_muzero.models.NetworkParams import AdamState, DenseLayerParams, MlpParams, ParameterDict

Value = NDArray[np.float64] | TapeVariable

MINMAX_EPSILON: float = 1e-8
COSINE_EPSILON: float = 1e-12
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.999
ADAM_EPSILON: float = 1e-8
DISTRIBUTION_TOLERANCE: float = 1e-9


def value_of(x: Value) -> NDArray[np.float64]:
    return x.value if isinstance(x, TapeVariable) else np.asarray(x, dtype=np.float64)


def elu(x):
    """Exponential linear unit with unit alpha: x if x > 0 else exp(x) - 1."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_forward(v: Value, tape: Optional[GradTape] = None) -> Value:
    x = value_of(v)
    out = elu(x)
    if tape is None:
        return out
    derivative = np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))
    return tape.record(value=out, parents=(tape.as_variable(v),), backward=lambda g: (g * derivative,))


def softmax(logits) -> NDArray[np.float64]:
    z = np.asarray(logits, dtype=np.float64)
    shifted = np.exp(z - z.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> NDArray[np.float64]:
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def validate_distribution(probabilities, tolerance: float = DISTRIBUTION_TOLERANCE) -> NDArray[np.float64]:
    """Checks that every row is nonnegative and sums to one.

    Raises:
        InvalidDistributionError: If any row violates either condition.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise InvalidDistributionError(error="Distribution is empty or contains non-finite entries")
    if np.any(p < 0):
        raise InvalidDistributionError(error=f"Distribution has negative entries: {p.min()}")
    sums = p.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tolerance):
        raise InvalidDistributionError(error=f"Distribution rows must sum to 1 +/- {tolerance}, got {sums}")
    return p


def dense_forward(layer: DenseLayerParams, input: Value, tape: Optional[GradTape] = None) -> Value:
    """Computes W @ input + b for one input vector or a batch of row vectors."""
    x = value_of(input)
    if x.shape[-1] != layer.in_features:
        raise ShapeMismatchError(operation="dense_forward", expected=layer.in_features, received=x.shape[-1])
    out = x @ layer.weights.T + layer.biases
    if tape is None:
        return out

    weights = tape.watch(layer.weights)
    biases = tape.watch(layer.biases)

    def backward(g):
        g2 = g.reshape(-1, layer.out_features)
        x2 = x.reshape(-1, layer.in_features)
        return (g @ layer.weights, g2.T @ x2, g2.sum(axis=0))

    return tape.record(value=out, parents=(tape.as_variable(input), weights, biases), backward=backward)


def mlp_forward(params: MlpParams, input: Value, tape: Optional[GradTape] = None) -> list[Value]:
    """Runs the two ELU layers and returns the output of every head."""
    hidden = elu_forward(dense_forward(layer=params.layer1, input=input, tape=tape), tape=tape)
    hidden = elu_forward(dense_forward(layer=params.layer2, input=hidden, tape=tape), tape=tape)
    return [dense_forward(layer=head, input=hidden, tape=tape) for head in params.heads]


def softmax_cross_entropy(logits: Value, target, tape: Optional[GradTape] = None) -> Value:
    """Cross-entropy -sum(target * log softmax(logits)) per row.

    The target is a constant probability vector (or a batch of them) of the same shape as logits.

    Raises:
        ShapeMismatchError: If logits and target shapes differ.
        InvalidDistributionError: If a target row is not a probability distribution.
    """
    z = value_of(logits)
    t = np.asarray(target, dtype=np.float64)
    if z.shape != t.shape:
        raise ShapeMismatchError(operation="softmax_cross_entropy", expected=z.shape, received=t.shape)
    validate_distribution(probabilities=t)
    out = -(t * log_softmax(z)).sum(axis=-1)
    if tape is None:
        return out
    probabilities = softmax(z)
    return tape.record(
        value=out,
        parents=(tape.as_variable(logits),),
        backward=lambda g: ((probabilities - t) * np.asarray(g)[..., None],),
    )


def minmax_normalize(v: Value, tape: Optional[GradTape] = None) -> Value:
    """Scales each row to [0, 1]: (v - min v) / (max v - min v + 1e-8).

    The backward pass is exact, including the dependence on the row minimum and maximum
    (ties resolved to the first index). A constant row maps to zeros, and rows whose range is below 1e-8
    get a zero gradient.
    """
    x = value_of(v)
    lowest = x.min(axis=-1, keepdims=True)
    highest = x.max(axis=-1, keepdims=True)
    denominator = highest - lowest + MINMAX_EPSILON
    out = (x - lowest) / denominator
    if tape is None:
        return out

    def backward(g):
        width = x.shape[-1]
        g2 = np.asarray(g).reshape(-1, width)
        out2 = out.reshape(-1, width)
        d2 = denominator.reshape(-1, 1)
        rows = np.arange(g2.shape[0])
        grad = g2 / d2
        sum_g = g2.sum(axis=1)
        sum_g_out = (g2 * out2).sum(axis=1)
        x2 = x.reshape(-1, width)
        grad[rows, x2.argmin(axis=1)] += (sum_g_out - sum_g) / d2[:, 0]
        grad[rows, x2.argmax(axis=1)] -= sum_g_out / d2[:, 0]
        grad[(highest - lowest).reshape(-1) < MINMAX_EPSILON] = 0.0
        return (grad.reshape(x.shape),)

    return tape.record(value=out, parents=(tape.as_variable(v),), backward=backward)


def stop_gradient(v: Value, tape: Optional[GradTape] = None) -> Value:
    """Identity forward; the result is a fresh constant leaf, so no gradient flows back through it."""
    x = value_of(v).copy()
    if tape is None:
        return x
    return tape.constant(value=x)


def scale_gradient(v: Value, factor: float, tape: Optional[GradTape] = None) -> Value:
    """Identity forward; multiplies the incoming gradient by `factor`."""
    if tape is None:
        return value_of(v)
    return tape.record(value=value_of(v), parents=(tape.as_variable(v),), backward=lambda g: (g * factor,))


def concatenate(first: Value, second: Value, tape: Optional[GradTape] = None) -> Value:
    """Concatenates along the last axis."""
    a, b = value_of(first), value_of(second)
    out = np.concatenate([a, b], axis=-1)
    if tape is None:
        return out
    split = a.shape[-1]
    return tape.record(
        value=out,
        parents=(tape.as_variable(first), tape.as_variable(second)),
        backward=lambda g: (g[..., :split], g[..., split:]),
    )


def squared_error(first: Value, second: Value, tape: Optional[GradTape] = None) -> Value:
    """Mean over the last axis of (first - second)^2, one value per row."""
    a, b = value_of(first), value_of(second)
    if a.shape != b.shape:
        raise ShapeMismatchError(operation="squared_error", expected=a.shape, received=b.shape)
    difference = a - b
    width = a.shape[-1]
    out = (difference * difference).sum(axis=-1) / width
    if tape is None:
        return out

    def backward(g):
        grad = 2.0 * difference * np.asarray(g)[..., None] / width
        return (grad, -grad)

    return tape.record(value=out, parents=(tape.as_variable(first), tape.as_variable(second)), backward=backward)


def cosine_distance(first: Value, second: Value, tape: Optional[GradTape] = None) -> Value:
    """1 - <a, b> / (|a| |b| + 1e-12) per row."""
    a, b = value_of(first), value_of(second)
    if a.shape != b.shape:
        raise ShapeMismatchError(operation="cosine_distance", expected=a.shape, received=b.shape)
    norm_a = np.sqrt((a * a).sum(axis=-1, keepdims=True))
    norm_b = np.sqrt((b * b).sum(axis=-1, keepdims=True))
    dot = (a * b).sum(axis=-1, keepdims=True)
    denominator = norm_a * norm_b + COSINE_EPSILON
    out = 1.0 - (dot / denominator)[..., 0]
    if tape is None:
        return out

    def backward(g):
        g = np.asarray(g)[..., None]
        safe_a = np.maximum(norm_a, COSINE_EPSILON)
        safe_b = np.maximum(norm_b, COSINE_EPSILON)
        d_a = b / denominator - dot * norm_b * a / (safe_a * denominator**2)
        d_b = a / denominator - dot * norm_a * b / (safe_b * denominator**2)
        return (-g * d_a, -g * d_b)

    return tape.record(value=out, parents=(tape.as_variable(first), tape.as_variable(second)), backward=backward)


def weighted_sum(v: Value, weights, tape: Optional[GradTape] = None) -> Value:
    """Scalar sum(v * weights) with constant weights broadcast against v."""
    x = value_of(v)
    w = np.broadcast_to(np.asarray(weights, dtype=np.float64), x.shape)
    out = np.asarray((x * w).sum())
    if tape is None:
        return out
    return tape.record(value=out, parents=(tape.as_variable(v),), backward=lambda g: (g * w,))


def add(terms: Sequence[Value], tape: Optional[GradTape] = None) -> Value:
    """Sums same-shaped terms."""
    values = [value_of(term) for term in terms]
    out = values[0]
    for value in values[1:]:
        out = out + value
    if tape is None:
        return out
    return tape.record(
        value=np.asarray(out),
        parents=tuple(tape.as_variable(term) for term in terms),
        backward=lambda g: tuple(g for _ in terms),
    )


def scale(v: Value, factor: float, tape: Optional[GradTape] = None) -> Value:
    out = value_of(v) * factor
    if tape is None:
        return out
    return tape.record(value=out, parents=(tape.as_variable(v),), backward=lambda g: (g * factor,))


def l2_norm_squared(params: ParameterDict) -> float:
    return float(sum(float((array * array).sum()) for array in params.values()))


def adam_step(
    params: ParameterDict,
    grads: ParameterDict,
    state: AdamState,
    learning_rate: float,
    l2: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    epsilon: float = ADAM_EPSILON,
) -> tuple[ParameterDict, AdamState]:
    """One bias-corrected Adam update with coupled L2 (l2 * param added to the gradient first).

    Inputs are not modified; new parameter and state dictionaries are returned.

    Raises:
        ShapeMismatchError: If a gradient or moment does not match its parameter.
        ValueError: If the learning rate is not positive.
    """
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
    step = state.step + 1
    bias_correction1 = 1.0 - beta1**step
    bias_correction2 = 1.0 - beta2**step

    new_params: ParameterDict = {}
    new_m: ParameterDict = {}
    new_v: ParameterDict = {}
    for name, param in params.items():
        grad = grads[name]
        if grad.shape != param.shape or state.m[name].shape != param.shape:
            raise ShapeMismatchError(operation=f"adam_step[{name}]", expected=param.shape, received=grad.shape)
        effective_grad = grad + l2 * param if l2 != 0 else grad
        m = beta1 * state.m[name] + (1.0 - beta1) * effective_grad
        v = beta2 * state.v[name] + (1.0 - beta2) * (effective_grad * effective_grad)
        m_hat = m / bias_correction1
        v_hat = v / bias_correction2
        new_params[name] = param - learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(m=new_m, v=new_v, step=step)


@dataclass
class GradCheckReport:
    """Outcome of comparing analytic gradients with central differences."""

    max_relative_error: float
    max_absolute_error: float
    entries_checked: int
    tolerance: float
    failures: list[tuple[str, tuple[int, ...], float, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


LossFunction = Callable[[ParameterDict, Optional[GradTape]], Value]


def finite_diff_check(
    loss_fn: LossFunction,
    params: ParameterDict,
    tol: float = 1e-5,
    step: float = 1e-6,
    absolute_floor: float = 1e-4,
) -> GradCheckReport:
    """Compares the tape gradient of a scalar loss with central finite differences.

    The relative error of an entry is |analytic - numeric| / max(|analytic|, |numeric|, absolute_floor);
    the floor keeps entries whose true gradient is ~0 from dividing roundoff by roundoff.

    Args:
        loss_fn: Evaluates the loss from a parameter dictionary; with a tape it must record on it.
        params: Parameters at which to check, not modified.
        tol: Entries above this relative error are listed as failures.
        step: Central difference step.
        absolute_floor: Lower bound of the relative error denominator.

    Returns:
        GradCheckReport: Maximum errors and the failing entries.
    """
    tape = GradTape()
    output = loss_fn(params, tape)
    if not isinstance(output, TapeVariable):
        output = tape.constant(value=output)
    tape.backward(output)
    analytic = {name: tape.gradient(array) for name, array in params.items()}

    report = GradCheckReport(max_relative_error=0.0, max_absolute_error=0.0, entries_checked=0, tolerance=tol)
    for name, array in params.items():
        for index in np.ndindex(array.shape):
            perturbed = dict(params)
            shifted = array.copy()
            shifted[index] = array[index] + step
            perturbed[name] = shifted
            loss_plus = float(value_of(loss_fn(perturbed, None)))
            shifted = array.copy()
            shifted[index] = array[index] - step
            perturbed[name] = shifted
            loss_minus = float(value_of(loss_fn(perturbed, None)))

            numeric = (loss_plus - loss_minus) / (2.0 * step)
            exact = float(analytic[name][index])
            absolute_error = abs(exact - numeric)
            relative_error = absolute_error / max(abs(exact), abs(numeric), absolute_floor)
            report.entries_checked += 1
            report.max_absolute_error = max(report.max_absolute_error, absolute_error)
            report.max_relative_error = max(report.max_relative_error, relative_error)
            if relative_error > tol:
                report.failures.append((name, index, exact, numeric, relative_error))
    return report


def init_dense(rng: np.random.Generator, in_features: int, out_features: int) -> DenseLayerParams:
    """Glorot-uniform weights, zero biases."""
    limit = np.sqrt(6.0 / (in_features + out_features))
    return DenseLayerParams(
        weights=rng.uniform(low=-limit, high=limit, size=(out_features, in_features)),
        biases=np.zeros(out_features, dtype=np.float64),
    )


def init_params(
    rng: np.random.Generator,
    dims: tuple[int, int, int],
    head_sizes: Sequence[int] = (),
) -> MlpParams:
    """Initialises a two-layer MLP.

    Args:
        rng: Seeded generator; equal seeds give bit-identical parameters.
        dims: (input, hidden, hidden) widths, e.g. (4, 32, 32).
        head_sizes: Output width of each linear head.

    Returns:
        MlpParams: Layers drawn in the order layer1, layer2, heads.
    """
    input_size, hidden1, hidden2 = dims
    layer1 = init_dense(rng=rng, in_features=input_size, out_features=hidden1)
    layer2 = init_dense(rng=rng, in_features=hidden1, out_features=hidden2)
    heads = [init_dense(rng=rng, in_features=hidden2, out_features=size) for size in head_sizes]
    return MlpParams(layer1=layer1, layer2=layer2, heads=heads)
