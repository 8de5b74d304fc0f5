"""
Central finite-difference check of reverse-mode gradients.
"""

import logging
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .tape import Tape, Value

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Tape, list[Value]], Value]


def grad_check(
    scalar_fn: ScalarFn,
    inputs: Sequence[ArrayLike],
    h: float = 1e-5,
    tol: float = 1e-4,
    floor: float = 1e-8,
) -> float:
    """
    Compare the tape gradient of a scalar function with central differences.

    Args:
        scalar_fn: Builds the scalar on the given tape from one leaf per input.
        inputs: Arrays to differentiate against (copied to float64).
        h: Finite-difference step.
        tol: Errors above this are logged as a warning.
        floor: Lower bound of the relative-error denominator.

    Returns:
        max |analytic - numeric| / max(|analytic|, |numeric|, floor) over every element.
    """
    arrays = [np.array(x, dtype=np.float64, copy=True) for x in inputs]

    tape = Tape(np.float64)
    leaves = [tape.leaf(x) for x in arrays]
    loss = scalar_fn(tape, leaves)
    if loss.data.size != 1:
        raise ValueError(f"scalar_fn must return a single value, got shape {loss.shape}")
    tape.backward(loss)
    analytic = [leaf.grad.copy() for leaf in leaves]

    def evaluate() -> float:
        fresh = Tape(np.float64)
        return float(scalar_fn(fresh, [fresh.leaf(x) for x in arrays]).data.reshape(-1)[0])

    worst = 0.0
    for position, (array, grad) in enumerate(zip(arrays, analytic, strict=True)):
        for index in np.ndindex(array.shape):
            original = array[index]
            array[index] = original + h
            f_plus = evaluate()
            array[index] = original - h
            f_minus = evaluate()
            array[index] = original

            numeric = (f_plus - f_minus) / (2.0 * h)
            exact = float(grad[index])
            error = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
            if error > worst:
                worst = error
                if error > tol:
                    logger.debug(f"input {position} {index}: analytic {exact:.8g} vs numeric {numeric:.8g}")

    if worst > tol:
        logger.warning(f"gradient check failed: max relative error {worst:.3e} > {tol:.1e}")
    return worst
