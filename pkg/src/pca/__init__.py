"""
Principal component analysis.

This package fits principal components with a cyclic Jacobi eigensolver
(through the Gram matrix when there are fewer rows than features), projects
data to component scores, maps scores back and persists fitted models.
"""

__version__ = '1.0.0'
__all__ = [
    'PCAModel', 'jacobi_eigh', 'fit', 'transform', 'inverse_transform', 'save_model', 'load_model',
    'PCAError', 'ComponentCountError', 'InsufficientRowsError', 'FeatureMismatchError',
    'EigensolverError', 'ModelFormatError',
]

from .core import fit, inverse_transform, jacobi_eigh, load_model, save_model, transform
from .exceptions import (
    ComponentCountError,
    EigensolverError,
    FeatureMismatchError,
    InsufficientRowsError,
    ModelFormatError,
    PCAError,
)
from .models import PCAModel
