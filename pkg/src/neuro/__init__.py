"""
Neuroimaging ingestion.

This package reads single-file NIfTI-1 volumes, normalizes and flattens them
into sample rows, attaches tag sidecars and renders real or synthetic slices.
"""

__version__ = '1.0.0'
__all__ = [
    'Volume', 'VolumeMatrix', 'VolumeDataset',
    'read_nifti', 'read_nifti_file', 'normalize', 'flatten', 'reshape', 'load_tags', 'ingest_directory',
    'encode_pgm', 'render_slices', 'synthetic_volumes',
    'NeuroError', 'NiftiError', 'NiftiHeaderSizeError', 'NiftiMagicError', 'NiftiDatatypeError',
    'NiftiDimensionError', 'NiftiTruncatedError', 'VolumeShapeError', 'SliceIndexError',
]

from .core import (
    encode_pgm,
    flatten,
    ingest_directory,
    load_tags,
    normalize,
    read_nifti,
    read_nifti_file,
    render_slices,
    reshape,
    synthetic_volumes,
)
from .exceptions import (
    NeuroError,
    NiftiDatatypeError,
    NiftiDimensionError,
    NiftiError,
    NiftiHeaderSizeError,
    NiftiMagicError,
    NiftiTruncatedError,
    SliceIndexError,
    VolumeShapeError,
)
from .models import Volume, VolumeDataset, VolumeMatrix
