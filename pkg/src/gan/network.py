"""Fully-connected networks built on the autodiff graph."""

from typing import Dict, Optional

import numpy as np

from autodiff import Graph, Node

from .models import MLPSpec, NetworkState


def init_params(spec: MLPSpec, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    """Draw initial weights for ``spec``.

    Weights are uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.

    Args:
        spec: The network specification.
        rng: The training random stream.

    Returns:
        A map ``W{i}`` -> (fan_in, fan_out) matrix and ``b{i}`` -> (1, fan_out) row.
    """
    params = {}
    for i, (fan_in, fan_out) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[f"W{i}"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params[f"b{i}"] = np.zeros((1, fan_out))
    return params


def bind(graph: Graph, state: NetworkState, prefix: str, trainable: bool) -> Dict[str, Node]:
    """Add the weights of ``state`` to ``graph`` as parameters or constants.

    Parameter nodes are named ``{prefix}.{name}`` so that the gradients of two
    networks sharing a graph stay apart.
    """
    if trainable:
        return {name: graph.parameter(f"{prefix}.{name}", value) for name, value in state.params.items()}
    return {name: graph.constant(value, name=f"{prefix}.{name}") for name, value in state.params.items()}


def forward(graph: Graph, spec: MLPSpec, nodes: Dict[str, Node], inputs: Node,
            condition: Optional[Node] = None) -> Node:
    """Run the network on ``inputs``, with the condition appended as extra columns."""
    h = graph.concat_cols(inputs, condition) if condition is not None else inputs
    for i in range(spec.n_layers):
        h = graph.add_row(graph.matmul(h, nodes[f"W{i}"]), nodes[f"b{i}"])
        if i < spec.n_layers - 1:
            h = graph.relu(h)
    if spec.final_activation == "sigmoid":
        h = graph.sigmoid(h)
    return h
