"""
Generative models for synthetic data.

This package trains fully-connected generator/critic pairs with either the
naive GAN minimax objective or the conditional WGAN-gp objective, samples
synthetic rows from trained generators and persists checkpoints.
"""

__version__ = '1.0.0'
__all__ = [
    'MLPSpec', 'TrainConfig', 'Objective', 'NetworkState', 'LossTrace', 'ModelCheckpoint',
    'encode_condition', 'validate_condition',
    'CriticLoss', 'naive_gan_losses', 'interpolate', 'wgan_gp_critic_loss', 'train', 'sample', 'preset',
    'rmsprop_step', 'save_checkpoint', 'load_checkpoint',
    'GANError', 'ConfigurationError', 'ActivationRangeError', 'NonFiniteGradientError',
    'DivergenceError', 'UnknownConditionError', 'CheckpointError', 'CheckpointVersionError',
]

from .checkpoint import load_checkpoint, save_checkpoint
from .core import CriticLoss, interpolate, naive_gan_losses, preset, sample, train, wgan_gp_critic_loss
from .exceptions import (
    ActivationRangeError,
    CheckpointError,
    CheckpointVersionError,
    ConfigurationError,
    DivergenceError,
    GANError,
    NonFiniteGradientError,
    UnknownConditionError,
)
from .models import (
    LossTrace,
    MLPSpec,
    ModelCheckpoint,
    NetworkState,
    Objective,
    TrainConfig,
    encode_condition,
    validate_condition,
)
from .optim import rmsprop_step
