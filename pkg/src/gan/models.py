"""Data models for the gan module.

This module defines network specifications, training configuration, condition
vectors and the trained-model checkpoint.
"""

import enum
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .exceptions import ConfigurationError, UnknownConditionError

FORMAT_VERSION = 1
FINAL_ACTIVATIONS = ("sigmoid", "linear", "identity")


class Objective(str, enum.Enum):
    """Training objective."""
    NAIVE_GAN = "naive_gan"
    WGAN_GP = "wgan_gp"


@dataclass(frozen=True)
class MLPSpec:
    """Fully-connected network specification.

    Attributes:
        layer_widths: Widths from input to output; at least two entries.
        hidden_activation: Activation between layers; only ReLU is supported.
        final_activation: One of ``sigmoid``, ``linear`` or ``identity``.
    """
    layer_widths: tuple
    hidden_activation: str = "relu"
    final_activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 2:
            raise ConfigurationError("an MLP needs at least an input and an output width")
        if any(w < 1 for w in self.layer_widths):
            raise ConfigurationError(f"layer widths must be positive, got {list(self.layer_widths)}")
        if self.hidden_activation != "relu":
            raise ConfigurationError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.final_activation not in FINAL_ACTIVATIONS:
            raise ConfigurationError(
                f"final activation must be one of {FINAL_ACTIVATIONS}, got {self.final_activation!r}")

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    def to_dict(self) -> dict:
        return {
            "layer_widths": list(self.layer_widths),
            "hidden_activation": self.hidden_activation,
            "final_activation": self.final_activation,
        }


@dataclass
class TrainConfig:
    """Generative-model training configuration.

    Attributes:
        objective: Naive GAN minimax loss or conditional WGAN-gp.
        iterations: Number of generator updates.
        batch_size: Rows per minibatch.
        noise_dim: Dimension of the latent vector z.
        lambda_gp: Gradient penalty coefficient; only used with WGAN-gp.
        learning_rate: RMSprop step size.
        rmsprop_decay: RMSprop accumulator decay.
        rmsprop_epsilon: RMSprop denominator offset.
        critic_steps_per_generator_step: Critic updates per generator update.
        seed: Seed of the training random stream.
        condition_vocab: Ordered condition labels; present iff conditional.
        sample_with_replacement: Draw minibatch rows with replacement.
        trace_stride: Record losses every ``trace_stride`` iterations.
    """
    objective: Objective = Objective.WGAN_GP
    iterations: int = 1000
    batch_size: int = 50
    noise_dim: int = 10
    lambda_gp: Optional[float] = 1.0
    learning_rate: float = 1e-3
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    critic_steps_per_generator_step: int = 1
    seed: int = 0
    condition_vocab: Optional[List[str]] = None
    sample_with_replacement: bool = False
    trace_stride: int = 1

    def __post_init__(self):
        self.objective = Objective(self.objective)
        if self.objective is Objective.WGAN_GP:
            if self.lambda_gp is None or self.lambda_gp < 0:
                raise ConfigurationError(f"lambda_gp must be nonnegative for WGAN-gp, got {self.lambda_gp}")
        elif self.lambda_gp is not None:
            raise ConfigurationError("lambda_gp is only used by the WGAN-gp objective")
        if self.iterations < 0 or self.batch_size < 1 or self.noise_dim < 1:
            raise ConfigurationError("iterations must be >= 0, batch_size and noise_dim >= 1")
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 < self.rmsprop_decay < 1:
            raise ConfigurationError(f"rmsprop_decay must lie in (0, 1), got {self.rmsprop_decay}")
        if not self.rmsprop_epsilon > 0:
            raise ConfigurationError("rmsprop_epsilon must be positive")
        if self.critic_steps_per_generator_step < 1 or self.trace_stride < 1:
            raise ConfigurationError("critic_steps_per_generator_step and trace_stride must be >= 1")
        if self.condition_vocab is not None:
            self.condition_vocab = [str(label) for label in self.condition_vocab]
            if not self.condition_vocab or len(set(self.condition_vocab)) != len(self.condition_vocab):
                raise ConfigurationError("condition_vocab must be a nonempty list of distinct labels")
        self.seed = int(self.seed)

    @property
    def conditional(self) -> bool:
        return self.condition_vocab is not None

    @property
    def condition_width(self) -> int:
        return len(self.condition_vocab) if self.condition_vocab else 0

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "noise_dim": self.noise_dim,
            "lambda_gp": self.lambda_gp,
            "learning_rate": self.learning_rate,
            "rmsprop_decay": self.rmsprop_decay,
            "rmsprop_epsilon": self.rmsprop_epsilon,
            "critic_steps_per_generator_step": self.critic_steps_per_generator_step,
            "seed": self.seed,
            "condition_vocab": self.condition_vocab,
            "sample_with_replacement": self.sample_with_replacement,
            "trace_stride": self.trace_stride,
        }


def encode_condition(labels: Union[str, Iterable[str]], vocabulary: Sequence[str]) -> np.ndarray:
    """Build a one-hot or multi-hot condition vector.

    Args:
        labels: A label or an iterable of labels; an empty iterable encodes
            "none of the vocabulary".
        vocabulary: The ordered condition vocabulary.

    Returns:
        A float vector of zeros and ones with one entry per vocabulary label.

    Raises:
        UnknownConditionError: If a label is not in the vocabulary.
    """
    if isinstance(labels, str):
        labels = [labels]
    vector = np.zeros(len(vocabulary))
    for label in labels:
        if label not in vocabulary:
            raise UnknownConditionError(label, vocabulary)
        vector[list(vocabulary).index(label)] = 1.0
    return vector


def validate_condition(vector, vocabulary: Sequence[str]) -> np.ndarray:
    """Check that ``vector`` is a {0,1} vector over ``vocabulary``."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != len(vocabulary):
        raise ConfigurationError(
            f"condition vector must have length {len(vocabulary)} (vocabulary {list(vocabulary)})")
    if not np.all((vector == 0.0) | (vector == 1.0)):
        raise ConfigurationError("condition vector entries must be 0 or 1")
    return vector


@dataclass(eq=False)
class NetworkState:
    """An MLP specification together with its weights.

    Attributes:
        spec: The network specification.
        params: Map from parameter name (``W0``, ``b0``, ...) to matrix.
    """
    spec: MLPSpec
    params: Dict[str, np.ndarray]

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkState) or self.spec != other.spec:
            return False
        if set(self.params) != set(other.params):
            return False
        return all(np.array_equal(self.params[k], other.params[k]) for k in self.params)


@dataclass
class LossTrace:
    """Recorded per-iteration losses.

    Attributes:
        iteration: Iteration indices that were recorded.
        generator: Generator loss at each recorded iteration.
        critic: Critic loss (last critic step) at each recorded iteration.
    """
    iteration: List[int] = field(default_factory=list)
    generator: List[float] = field(default_factory=list)
    critic: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.iteration)


@dataclass(eq=False)
class ModelCheckpoint:
    """A trained generator/critic pair with its training record.

    Attributes:
        generator: Generator network; input is noise followed by the condition.
        critic: Critic network; input is data followed by the condition.
        config: The training configuration.
        loss_trace: Recorded losses.
        data_dim: Width of the data rows.
        metadata: Free-form run notes (objective forms, data summary).
        format_version: Serialization format version.
    """
    generator: NetworkState
    critic: NetworkState
    config: TrainConfig
    loss_trace: LossTrace
    data_dim: int
    metadata: Dict[str, str] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def conditional(self) -> bool:
        return self.config.conditional

    @property
    def condition_vocab(self) -> Optional[List[str]]:
        return self.config.condition_vocab

    def __eq__(self, other) -> bool:
        return (isinstance(other, ModelCheckpoint)
                and self.generator == other.generator
                and self.critic == other.critic
                and self.config.to_dict() == other.config.to_dict()
                and self.loss_trace == other.loss_trace
                and self.data_dim == other.data_dim
                and self.metadata == other.metadata
                and self.format_version == other.format_version)
