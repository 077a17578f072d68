"""Core reverse-mode automatic differentiation.

This module implements a small eager computation graph over dense float64
matrices. Every operation is registered with a numeric vector-Jacobian product
used by :func:`backward`, and most also carry a rule that expresses the same
product with graph operations. The latter lets :func:`input_gradient_node`
build an input gradient as ordinary nodes, which is what a gradient penalty
needs in order to be differentiated again with respect to parameters.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Set, Tuple

import numpy as np

from .exceptions import (
    AutodiffError,
    DependencyError,
    DomainError,
    HigherOrderError,
    NonScalarRootError,
    ShapeMismatchError,
)
from .models import GradientSet, Node

logger = logging.getLogger(__name__)

LEAF_OPS = ("constant", "parameter")


@dataclass(frozen=True)
class Operation:
    """A registered graph operation.

    Attributes:
        name: The operation tag stored on produced nodes.
        arity: Number of node operands.
        check: Validates operand shapes and attributes, raising on mismatch.
        forward: Computes the payload from operand payloads.
        vjp: Numeric vector-Jacobian product, one array (or None) per operand.
        graph_vjp: The same product built from graph nodes, or None when the
            operation is only first-order differentiable.
    """
    name: str
    arity: int
    check: Callable
    forward: Callable
    vjp: Callable
    graph_vjp: Optional[Callable] = None


_OPERATIONS: Dict[str, Operation] = {}


def register(name: str, arity: int, check: Callable, forward: Callable, vjp: Callable,
             graph_vjp: Optional[Callable] = None) -> None:
    """Register an operation under ``name``."""
    _OPERATIONS[name] = Operation(name, arity, check, forward, vjp, graph_vjp)


def _as_matrix(value) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    if array.ndim == 0:
        return array.reshape(1, 1)
    if array.ndim == 1:
        return array.reshape(1, -1)
    if array.ndim != 2:
        raise ShapeMismatchError("leaf", [array.shape], "leaves must be at most 2-D")
    return array


class Graph:
    """An ordered, eagerly evaluated computation graph.

    Nodes are appended in creation order, so parents always precede their
    children. A graph is not thread-safe; build one graph per thread.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self._parameter_names: Set[str] = set()

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def parameters(self) -> List[Node]:
        """Trainable parameter nodes in creation order."""
        return [node for node in self.nodes if node.trainable]

    def _append(self, value: np.ndarray, op: str, parents: Tuple[int, ...] = (),
                attrs: Optional[dict] = None, name: Optional[str] = None,
                trainable: bool = False) -> Node:
        node = Node(index=len(self.nodes), value=value, op=op, parents=parents,
                    attrs=attrs or {}, name=name, trainable=trainable)
        self.nodes.append(node)
        return node

    def constant(self, value, name: Optional[str] = None) -> Node:
        """Add a non-trainable leaf.

        Inputs that are differentiated with :func:`input_gradient_node` are
        plain constants too.
        """
        return self._append(_as_matrix(value), "constant", name=name)

    def parameter(self, name: str, value) -> Node:
        """Add a trainable leaf.

        Args:
            name: Unique parameter name within the graph.
            value: The parameter matrix.

        Returns:
            The new parameter node.
        """
        if name in self._parameter_names:
            raise AutodiffError(f"duplicate parameter name {name!r}")
        self._parameter_names.add(name)
        return self._append(_as_matrix(value).copy(), "parameter", name=name, trainable=True)

    def apply(self, op_name: str, *operands: Node, **attrs) -> Node:
        """Append the result of a registered operation.

        Args:
            op_name: The registered operation tag.
            operands: Operand nodes of this graph.
            attrs: Scalar attributes of the operation.

        Returns:
            The new node with its payload computed.

        Raises:
            ShapeMismatchError: If the operand shapes are incompatible.
        """
        operation = _OPERATIONS[op_name]
        if len(operands) != operation.arity:
            raise ShapeMismatchError(op_name, [o.shape for o in operands],
                                     f"expected {operation.arity} operands")
        for operand in operands:
            if operand.index >= len(self.nodes) or self.nodes[operand.index] is not operand:
                raise DependencyError(f"{op_name}: operand does not belong to this graph")
        values = [o.value for o in operands]
        operation.check(op_name, values, attrs)
        value = operation.forward(values, attrs)
        return self._append(value, op_name, tuple(o.index for o in operands), attrs)

    # Convenience wrappers; each is a thin call to ``apply``.

    def matmul(self, a: Node, b: Node) -> Node:
        return self.apply("matmul", a, b)

    def add(self, a: Node, b: Node) -> Node:
        return self.apply("add", a, b)

    def add_row(self, a: Node, bias: Node) -> Node:
        """Add a 1xk bias row to every row of ``a``."""
        return self.apply("add_row", a, bias)

    def mul(self, a: Node, b: Node) -> Node:
        return self.apply("mul", a, b)

    def scale(self, a: Node, factor: float) -> Node:
        return self.apply("scale", a, factor=float(factor))

    def shift(self, a: Node, offset: float) -> Node:
        return self.apply("shift", a, offset=float(offset))

    def relu(self, a: Node) -> Node:
        return self.apply("relu", a)

    def step(self, a: Node) -> Node:
        return self.apply("step", a)

    def sigmoid(self, a: Node) -> Node:
        return self.apply("sigmoid", a)

    def log(self, a: Node) -> Node:
        return self.apply("log", a)

    def square(self, a: Node) -> Node:
        return self.apply("square", a)

    def clip(self, a: Node, low: float, high: float) -> Node:
        return self.apply("clip", a, low=float(low), high=float(high))

    def row_norm(self, a: Node) -> Node:
        return self.apply("row_norm", a)

    def row_normalize(self, a: Node) -> Node:
        return self.apply("row_normalize", a)

    def mean(self, a: Node) -> Node:
        """Mean over the batch (rows); returns a 1xk node."""
        return self.apply("mean", a)

    def mean_all(self, a: Node) -> Node:
        return self.apply("mean_all", a)

    def sum_all(self, a: Node) -> Node:
        return self.apply("sum_all", a)

    def sum_rows(self, a: Node) -> Node:
        return self.apply("sum_rows", a)

    def sum_cols(self, a: Node) -> Node:
        return self.apply("sum_cols", a)

    def broadcast_rows(self, a: Node, rows: int) -> Node:
        return self.apply("broadcast_rows", a, rows=int(rows))

    def broadcast_cols(self, a: Node, cols: int) -> Node:
        return self.apply("broadcast_cols", a, cols=int(cols))

    def concat_cols(self, a: Node, b: Node) -> Node:
        return self.apply("concat_cols", a, b)

    def slice_cols(self, a: Node, start: int, stop: int) -> Node:
        return self.apply("slice_cols", a, start=int(start), stop=int(stop))

    def pad_cols(self, a: Node, start: int, total: int) -> Node:
        return self.apply("pad_cols", a, start=int(start), total=int(total))

    def transpose(self, a: Node) -> Node:
        return self.apply("transpose", a)


# Shape checks ---------------------------------------------------------------

def _any(name, values, attrs):
    return None


def _same_shape(name, values, attrs):
    if values[0].shape != values[1].shape:
        raise ShapeMismatchError(name, [v.shape for v in values], "operands must have equal shapes")


def _check_matmul(name, values, attrs):
    a, b = values
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(name, [a.shape, b.shape], "inner dimensions differ")


def _check_add_row(name, values, attrs):
    a, bias = values
    if bias.shape != (1, a.shape[1]):
        raise ShapeMismatchError(name, [a.shape, bias.shape], "bias must be a 1xk row")


def _check_concat(name, values, attrs):
    if values[0].shape[0] != values[1].shape[0]:
        raise ShapeMismatchError(name, [v.shape for v in values], "row counts differ")


def _check_slice(name, values, attrs):
    start, stop = attrs["start"], attrs["stop"]
    if not 0 <= start <= stop <= values[0].shape[1]:
        raise ShapeMismatchError(name, [values[0].shape], f"column range [{start}, {stop}) out of bounds")


def _check_pad(name, values, attrs):
    if attrs["start"] < 0 or attrs["start"] + values[0].shape[1] > attrs["total"]:
        raise ShapeMismatchError(name, [values[0].shape], f"cannot place at column {attrs['start']} of {attrs['total']}")


def _check_row_vector(name, values, attrs):
    if values[0].shape[0] != 1:
        raise ShapeMismatchError(name, [values[0].shape], "operand must be a single row")


def _check_col_vector(name, values, attrs):
    if values[0].shape[1] != 1:
        raise ShapeMismatchError(name, [values[0].shape], "operand must be a single column")


def _check_log(name, values, attrs):
    if np.any(values[0] <= 0):
        raise DomainError(f"{name}: operand has non-positive entries")


def _check_clip(name, values, attrs):
    if not attrs["low"] <= attrs["high"]:
        raise DomainError(f"{name}: low bound exceeds high bound")


def _row_normalized(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.sqrt(np.sum(a * a, axis=1, keepdims=True))
    safe = np.where(norms > 0, norms, 1.0)
    return np.where(norms > 0, a / safe, 0.0), norms


def _sigmoid(a: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * a))


# Registrations --------------------------------------------------------------

register(
    "matmul", 2, _check_matmul,
    lambda v, at: v[0] @ v[1],
    lambda g, v, out, at: (g @ v[1].T, v[0].T @ g),
    lambda G, g, p, out, at: (G.matmul(g, G.transpose(p[1])), G.matmul(G.transpose(p[0]), g)),
)
register(
    "add", 2, _same_shape,
    lambda v, at: v[0] + v[1],
    lambda g, v, out, at: (g, g),
    lambda G, g, p, out, at: (g, g),
)
register(
    "add_row", 2, _check_add_row,
    lambda v, at: v[0] + v[1],
    lambda g, v, out, at: (g, g.sum(axis=0, keepdims=True)),
    lambda G, g, p, out, at: (g, G.sum_rows(g)),
)
register(
    "mul", 2, _same_shape,
    lambda v, at: v[0] * v[1],
    lambda g, v, out, at: (g * v[1], g * v[0]),
    lambda G, g, p, out, at: (G.mul(g, p[1]), G.mul(g, p[0])),
)
register(
    "scale", 1, _any,
    lambda v, at: v[0] * at["factor"],
    lambda g, v, out, at: (g * at["factor"],),
    lambda G, g, p, out, at: (G.scale(g, at["factor"]),),
)
register(
    "shift", 1, _any,
    lambda v, at: v[0] + at["offset"],
    lambda g, v, out, at: (g,),
    lambda G, g, p, out, at: (g,),
)
# The subgradient of ReLU at exactly 0 is 0.
register(
    "relu", 1, _any,
    lambda v, at: np.where(v[0] > 0, v[0], 0.0),
    lambda g, v, out, at: (np.where(v[0] > 0, g, 0.0),),
    lambda G, g, p, out, at: (G.mul(g, G.step(p[0])),),
)
register(
    "step", 1, _any,
    lambda v, at: (v[0] > 0).astype(np.float64),
    lambda g, v, out, at: (None,),
    lambda G, g, p, out, at: (None,),
)
register(
    "sigmoid", 1, _any,
    lambda v, at: _sigmoid(v[0]),
    lambda g, v, out, at: (g * out * (1.0 - out),),
    lambda G, g, p, out, at: (G.mul(g, G.mul(out, G.shift(G.scale(out, -1.0), 1.0))),),
)
register(
    "log", 1, _check_log,
    lambda v, at: np.log(v[0]),
    lambda g, v, out, at: (g / v[0],),
)
register(
    "square", 1, _any,
    lambda v, at: v[0] * v[0],
    lambda g, v, out, at: (2.0 * v[0] * g,),
    lambda G, g, p, out, at: (G.mul(g, G.scale(p[0], 2.0)),),
)
register(
    "clip", 1, _check_clip,
    lambda v, at: np.clip(v[0], at["low"], at["high"]),
    lambda g, v, out, at: (np.where((v[0] >= at["low"]) & (v[0] <= at["high"]), g, 0.0),),
    lambda G, g, p, out, at: (G.mul(g, G.constant(((p[0].value >= at["low"]) & (p[0].value <= at["high"])).astype(np.float64))),),
)
register(
    "row_norm", 1, _any,
    lambda v, at: np.sqrt(np.sum(v[0] * v[0], axis=1, keepdims=True)),
    lambda g, v, out, at: (g * _row_normalized(v[0])[0],),
    lambda G, g, p, out, at: (G.mul(G.broadcast_cols(g, p[0].shape[1]), G.row_normalize(p[0])),),
)


def _row_normalize_vjp(g, v, out, at):
    unit, norms = _row_normalized(v[0])
    radial = np.sum(g * unit, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return (np.where(norms > 0, (g - unit * radial) / safe, 0.0),)


register(
    "row_normalize", 1, _any,
    lambda v, at: _row_normalized(v[0])[0],
    _row_normalize_vjp,
)
register(
    "mean", 1, _any,
    lambda v, at: v[0].mean(axis=0, keepdims=True),
    lambda g, v, out, at: (np.broadcast_to(g / v[0].shape[0], v[0].shape).copy(),),
    lambda G, g, p, out, at: (G.scale(G.broadcast_rows(g, p[0].shape[0]), 1.0 / p[0].shape[0]),),
)
register(
    "mean_all", 1, _any,
    lambda v, at: np.array([[v[0].mean()]]),
    lambda g, v, out, at: (np.full(v[0].shape, g[0, 0] / v[0].size),),
    lambda G, g, p, out, at: (G.scale(G.broadcast_rows(G.broadcast_cols(g, p[0].shape[1]), p[0].shape[0]),
                                      1.0 / (p[0].shape[0] * p[0].shape[1])),),
)
register(
    "sum_all", 1, _any,
    lambda v, at: np.array([[v[0].sum()]]),
    lambda g, v, out, at: (np.full(v[0].shape, g[0, 0]),),
    lambda G, g, p, out, at: (G.broadcast_rows(G.broadcast_cols(g, p[0].shape[1]), p[0].shape[0]),),
)
register(
    "sum_rows", 1, _any,
    lambda v, at: v[0].sum(axis=0, keepdims=True),
    lambda g, v, out, at: (np.broadcast_to(g, v[0].shape).copy(),),
    lambda G, g, p, out, at: (G.broadcast_rows(g, p[0].shape[0]),),
)
register(
    "sum_cols", 1, _any,
    lambda v, at: v[0].sum(axis=1, keepdims=True),
    lambda g, v, out, at: (np.broadcast_to(g, v[0].shape).copy(),),
    lambda G, g, p, out, at: (G.broadcast_cols(g, p[0].shape[1]),),
)
register(
    "broadcast_rows", 1, _check_row_vector,
    lambda v, at: np.repeat(v[0], at["rows"], axis=0),
    lambda g, v, out, at: (g.sum(axis=0, keepdims=True),),
    lambda G, g, p, out, at: (G.sum_rows(g),),
)
register(
    "broadcast_cols", 1, _check_col_vector,
    lambda v, at: np.repeat(v[0], at["cols"], axis=1),
    lambda g, v, out, at: (g.sum(axis=1, keepdims=True),),
    lambda G, g, p, out, at: (G.sum_cols(g),),
)
register(
    "concat_cols", 2, _check_concat,
    lambda v, at: np.concatenate([v[0], v[1]], axis=1),
    lambda g, v, out, at: (g[:, :v[0].shape[1]], g[:, v[0].shape[1]:]),
    lambda G, g, p, out, at: (G.slice_cols(g, 0, p[0].shape[1]),
                              G.slice_cols(g, p[0].shape[1], out.shape[1])),
)


def _pad(g: np.ndarray, start: int, total: int) -> np.ndarray:
    padded = np.zeros((g.shape[0], total))
    padded[:, start:start + g.shape[1]] = g
    return padded


register(
    "slice_cols", 1, _check_slice,
    lambda v, at: v[0][:, at["start"]:at["stop"]].copy(),
    lambda g, v, out, at: (_pad(g, at["start"], v[0].shape[1]),),
    lambda G, g, p, out, at: (G.pad_cols(g, at["start"], p[0].shape[1]),),
)
register(
    "pad_cols", 1, _check_pad,
    lambda v, at: _pad(v[0], at["start"], at["total"]),
    lambda g, v, out, at: (g[:, at["start"]:at["start"] + v[0].shape[1]],),
    lambda G, g, p, out, at: (G.slice_cols(g, at["start"], at["start"] + p[0].shape[1]),),
)
register(
    "transpose", 1, _any,
    lambda v, at: v[0].T.copy(),
    lambda g, v, out, at: (g.T,),
    lambda G, g, p, out, at: (G.transpose(g),),
)


def node_ops(graph: Graph, op_name: str, *operands: Node, **attrs) -> Node:
    """Append an operation node to ``graph``; see :meth:`Graph.apply`."""
    return graph.apply(op_name, *operands, **attrs)


def _check_root(root: Node) -> None:
    if root.shape != (1, 1):
        raise NonScalarRootError(root.shape)


def backward(graph: Graph, root: Node) -> GradientSet:
    """Compute exact reverse-mode gradients of a scalar node.

    Args:
        graph: The graph holding ``root``.
        root: A 1x1 node.

    Returns:
        A GradientSet with one entry per trainable parameter of the graph;
        parameters the root does not depend on get zero gradients.

    Raises:
        NonScalarRootError: If ``root`` is not 1x1.
    """
    _check_root(root)
    adjoints: List[Optional[np.ndarray]] = [None] * (root.index + 1)
    adjoints[root.index] = np.ones((1, 1))
    for index in range(root.index, -1, -1):
        g = adjoints[index]
        node = graph.nodes[index]
        if g is None or node.op in LEAF_OPS:
            continue
        values = [graph.nodes[p].value for p in node.parents]
        contributions = _OPERATIONS[node.op].vjp(g, values, node.value, node.attrs)
        for parent, contribution in zip(node.parents, contributions):
            if contribution is None:
                continue
            if adjoints[parent] is None:
                adjoints[parent] = np.array(contribution, dtype=np.float64)
            else:
                adjoints[parent] = adjoints[parent] + contribution

    grads = {}
    for node in graph.parameters:
        g = adjoints[node.index] if node.index <= root.index else None
        grads[node.name] = g if g is not None else np.zeros_like(node.value)
    return GradientSet(grads)


def _ancestors(graph: Graph, root: Node) -> Set[int]:
    seen = {root.index}
    stack = [root.index]
    while stack:
        for parent in graph.nodes[stack.pop()].parents:
            if parent not in seen:
                seen.add(parent)
                stack.append(parent)
    return seen


def input_gradient_node(graph: Graph, root: Node, input_node: Node) -> Node:
    """Build the gradient of ``root`` with respect to ``input_node`` as a node.

    The result is assembled from graph operations, so norms, squares and means
    applied to it take part in a later :func:`backward` call. This is what lets
    a gradient penalty reach the critic parameters.

    Args:
        graph: The graph holding both nodes.
        root: A 1x1 node depending on ``input_node``.
        input_node: The node to differentiate with respect to.

    Returns:
        A node with the shape of ``input_node``.

    Raises:
        NonScalarRootError: If ``root`` is not 1x1.
        DependencyError: If ``root`` does not depend on ``input_node``.
        HigherOrderError: If the path uses an operation without a graph rule.
    """
    _check_root(root)
    ancestors = _ancestors(graph, root)
    if input_node.index not in ancestors:
        raise DependencyError(
            f"node {root.index} ({root.op}) does not depend on node {input_node.index} ({input_node.op})")

    # Only nodes lying on a path from the input to the root carry adjoints.
    on_path = {input_node.index}
    for index in range(input_node.index + 1, root.index + 1):
        if index in ancestors and any(p in on_path for p in graph.nodes[index].parents):
            on_path.add(index)

    adjoints: Dict[int, Node] = {root.index: graph.constant(np.ones((1, 1)))}
    for index in range(root.index, input_node.index, -1):
        if index not in on_path or index not in adjoints:
            continue
        node = graph.nodes[index]
        rule = _OPERATIONS[node.op].graph_vjp
        if rule is None:
            raise HigherOrderError(f"operation {node.op!r} has no graph-level gradient rule")
        parents = [graph.nodes[p] for p in node.parents]
        contributions = rule(graph, adjoints[index], parents, node, node.attrs)
        for parent, contribution in zip(node.parents, contributions):
            if contribution is None or parent not in on_path:
                continue
            if parent in adjoints:
                adjoints[parent] = graph.add(adjoints[parent], contribution)
            else:
                adjoints[parent] = contribution

    if input_node.index not in adjoints:
        logger.debug("input gradient vanishes identically for node %d", input_node.index)
        return graph.constant(np.zeros(input_node.shape))
    return adjoints[input_node.index]
