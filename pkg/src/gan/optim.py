"""RMSprop optimizer."""

from typing import Dict, Tuple

import numpy as np

from autodiff import GradientSet

from .exceptions import ConfigurationError, NonFiniteGradientError


def init_state(params: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Zero accumulators shaped like ``params``."""
    return {name: np.zeros_like(value) for name, value in params.items()}


def rmsprop_step(params: Dict[str, np.ndarray], grads: GradientSet, state: Dict[str, np.ndarray],
                 lr: float, decay: float, epsilon: float,
                 prefix: str = "") -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
    """Apply one RMSprop update.

    v <- decay * v + (1 - decay) * g**2 and theta <- theta - lr * g / (sqrt(v) + epsilon),
    elementwise. Inputs are not modified.

    Args:
        params: Current parameters by name.
        grads: Gradients; looked up as ``prefix + name``.
        state: Accumulators by name, shaped like ``params``.
        lr: Learning rate.
        decay: Accumulator decay.
        epsilon: Denominator offset.
        prefix: Prefix of the gradient keys (the graph parameter namespace).

    Returns:
        The updated parameters and accumulators.

    Raises:
        NonFiniteGradientError: If any gradient entry is NaN or infinite.
    """
    new_params, new_state = {}, {}
    for name, value in params.items():
        g = grads[prefix + name]
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(prefix + name)
        if state[name].shape != value.shape or g.shape != value.shape:
            raise ConfigurationError(f"optimizer state for {name!r} does not match the parameter shape")
        v = decay * state[name] + (1.0 - decay) * g * g
        new_state[name] = v
        new_params[name] = value - lr * g / (np.sqrt(v) + epsilon)
    return new_params, new_state
