"""Autodiff module for synthpower.

This module provides a minimal reverse-mode automatic differentiation engine
over dense float64 matrices, including graph-level input gradients for
second-order terms such as gradient penalties.
"""

__version__ = '1.0.0'
__all__ = [
    'Graph', 'Node', 'GradientSet', 'node_ops', 'backward', 'input_gradient_node',
    'AutodiffError', 'ShapeMismatchError', 'DomainError', 'NonScalarRootError',
    'DependencyError', 'HigherOrderError',
]

from .core import Graph, node_ops, backward, input_gradient_node
from .models import Node, GradientSet
from .exceptions import (
    AutodiffError,
    ShapeMismatchError,
    DomainError,
    NonScalarRootError,
    DependencyError,
    HigherOrderError,
)
