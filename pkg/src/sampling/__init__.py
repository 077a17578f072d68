"""
Sampleable sources and replicate drawing.

This package draws replicates by resampling Gaussian sources, bootstrapping
fixed pools and sampling trained generators, derives per-replicate seeds,
splits tagged datasets and reads and writes F32D dataset files with their tag
sidecars.
"""

__version__ = '1.0.0'
__all__ = [
    'Strategy', 'GaussianSource', 'EmpiricalSource', 'GenerativeSource', 'TaggedDataset',
    'derive_seed', 'gaussian_sampler', 'draw', 'split_by_tag',
    'Sidecar', 'encode_f32d', 'decode_f32d', 'read_f32d', 'write_f32d', 'parse_sidecar', 'format_sidecar',
    'sidecar_path', 'read_tagged_dataset', 'write_tagged_dataset',
    'SamplingError', 'IncompatibleStrategyError', 'PoolTooSmallError', 'CovarianceError',
    'UnknownTagError', 'DatasetFormatError', 'SidecarError',
]

from .core import derive_seed, draw, gaussian_sampler, split_by_tag
from .dataset import (
    Sidecar,
    decode_f32d,
    encode_f32d,
    format_sidecar,
    parse_sidecar,
    read_f32d,
    read_tagged_dataset,
    sidecar_path,
    write_f32d,
    write_tagged_dataset,
)
from .exceptions import (
    CovarianceError,
    DatasetFormatError,
    IncompatibleStrategyError,
    PoolTooSmallError,
    SamplingError,
    SidecarError,
    UnknownTagError,
)
from .models import EmpiricalSource, GaussianSource, GenerativeSource, Strategy, TaggedDataset
