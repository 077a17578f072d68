"""Data models for the autodiff module.

This module defines the value nodes stored in a computation graph and the
gradient map returned by reverse-mode differentiation.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional, Tuple, Union

import numpy as np


@dataclass(eq=False)
class Node:
    """A value node of a computation graph.

    Attributes:
        index: Position of the node in its graph; parents always have smaller indices.
        value: The eagerly computed payload, a 2-D float64 matrix.
        op: The tag of the operation that produced the node.
        parents: Indices of the operand nodes.
        attrs: Non-node operation arguments (scalars, slice bounds).
        name: Parameter name for trainable leaves.
        trainable: Whether the node is a trainable parameter.
    """
    index: int
    value: np.ndarray
    op: str
    parents: Tuple[int, ...] = ()
    attrs: Dict[str, Any] = field(default_factory=dict)
    name: Optional[str] = None
    trainable: bool = False

    @property
    def shape(self) -> Tuple[int, int]:
        return self.value.shape

    def item(self) -> float:
        """Return the payload of a 1x1 node as a float."""
        return float(self.value[0, 0])


@dataclass
class GradientSet:
    """Gradients of a scalar with respect to every trainable parameter.

    Attributes:
        grads: Map from parameter name to a matrix shaped like the parameter.
    """
    grads: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, key: Union[str, Node]) -> np.ndarray:
        if isinstance(key, Node):
            key = key.name
        return self.grads[key]

    def __contains__(self, key: Union[str, Node]) -> bool:
        if isinstance(key, Node):
            key = key.name
        return key in self.grads

    def __iter__(self) -> Iterator[str]:
        return iter(self.grads)

    def __len__(self) -> int:
        return len(self.grads)

    def items(self):
        return self.grads.items()
