"""Exception classes for the autodiff module.

This module defines the errors raised while building or differentiating a
computation graph.
"""

from typing import Sequence, Tuple


class AutodiffError(Exception):
    """Base exception class for autodiff errors.

    Autodiff failures belong to the training stage family, so the default
    exit code is the training code.
    """

    def __init__(self, message: str, code: int = 4):
        """Initialize the autodiff error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class ShapeMismatchError(AutodiffError):
    """Exception raised when operand shapes do not fit an operation."""

    def __init__(self, operation: str, shapes: Sequence[Tuple[int, ...]], detail: str = ""):
        """Initialize the shape mismatch error.

        Args:
            operation: The name of the graph operation.
            shapes: The shapes of the operands that were passed.
            detail: Optional explanation of the expected shapes.
        """
        shown = ", ".join(str(tuple(s)) for s in shapes)
        message = f"{operation}: incompatible operand shapes {shown}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.operation = operation
        self.shapes = [tuple(s) for s in shapes]


class DomainError(AutodiffError):
    """Exception raised when an operand lies outside an operation's domain."""


class NonScalarRootError(AutodiffError):
    """Exception raised when differentiation starts from a non-scalar node."""

    def __init__(self, shape: Tuple[int, ...]):
        super().__init__(f"differentiation root must have shape (1, 1), got {tuple(shape)}")
        self.shape = tuple(shape)


class DependencyError(AutodiffError):
    """Exception raised when the root does not depend on the requested input."""


class HigherOrderError(AutodiffError):
    """Exception raised when an operation cannot be differentiated as a graph node.

    Input gradients are built out of graph operations so that they can be
    differentiated again; operations without such a rule raise this error.
    """
