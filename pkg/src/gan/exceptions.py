"""Exception classes for the gan module.

This module defines the errors raised while configuring, training, sampling
and persisting generative models.
"""

from typing import Sequence


class GANError(Exception):
    """Base exception class for generative-model errors.

    These errors belong to the training stage family.
    """

    def __init__(self, message: str, code: int = 4):
        """Initialize the GAN error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class ConfigurationError(GANError):
    """Exception raised for an invalid MLPSpec or TrainConfig."""


class ActivationRangeError(GANError):
    """Exception raised when critic outputs are not probabilities.

    The naive objective takes logarithms of the critic output, so it needs a
    sigmoid final activation.
    """


class NonFiniteGradientError(GANError):
    """Exception raised when an optimizer receives a non-finite gradient."""

    def __init__(self, parameter: str):
        super().__init__(f"non-finite gradient for parameter {parameter!r}")
        self.parameter = parameter


class DivergenceError(GANError):
    """Exception raised when a training loss becomes non-finite."""

    def __init__(self, iteration: int, which: str):
        super().__init__(f"{which} loss became non-finite at iteration {iteration}")
        self.iteration = iteration
        self.which = which


class UnknownConditionError(GANError):
    """Exception raised when a condition label is not in the vocabulary."""

    def __init__(self, label: str, vocabulary: Sequence[str]):
        super().__init__(f"unknown condition label {label!r}; vocabulary is {list(vocabulary)}")
        self.label = label
        self.vocabulary = list(vocabulary)


class CheckpointError(GANError):
    """Exception raised when a checkpoint file cannot be read.

    Checkpoint files are inputs of later stages, so these count as ingest
    errors.
    """

    def __init__(self, message: str, code: int = 3):
        super().__init__(message, code)


class CheckpointVersionError(CheckpointError):
    """Exception raised for an unsupported checkpoint format version."""

    def __init__(self, version, supported: Sequence[int]):
        super().__init__(f"unsupported checkpoint format_version {version!r}; supported versions: {list(supported)}")
        self.version = version
        self.supported = list(supported)
