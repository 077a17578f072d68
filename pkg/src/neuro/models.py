"""Data models for the neuro module."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from sampling import TaggedDataset


@dataclass(eq=False)
class Volume:
    """A single 3D volume.

    Attributes:
        dims: ``(nx, ny, nz)``.
        voxels: float32 array of shape ``dims``; x varies fastest in the
            flattened order.
        affine: 4x4 voxel-to-world transform, carried but not interpreted.
        nan_count: Number of NaN voxels replaced by 0 when the file was read.
        name: File name the volume was read from, if any.
    """
    dims: Tuple[int, int, int]
    voxels: np.ndarray
    affine: np.ndarray = field(default_factory=lambda: np.eye(4))
    nan_count: int = 0
    name: Optional[str] = None

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))


@dataclass(eq=False)
class VolumeMatrix:
    """Volumes flattened into sample rows.

    Attributes:
        rows: ``(N, nx*ny*nz)`` float64 matrix, one row per volume.
        dims: Shared volume dims; ``None`` for an empty matrix.
        empty: True when no volume was flattened (the matrix then has width 0).
    """
    rows: np.ndarray
    dims: Optional[Tuple[int, int, int]]
    empty: bool = False


@dataclass(eq=False)
class VolumeDataset:
    """A directory of volumes ingested for the fMRI pipeline.

    Attributes:
        dataset: Normalized flattened volumes with their tags; ``keys`` holds
            the file names.
        dims: Shared volume dims.
        nan_counts: Replaced NaN voxels per file, only for files that had any.
        normalization: Name of the intensity normalization applied.
    """
    dataset: TaggedDataset
    dims: Tuple[int, int, int]
    nan_counts: Dict[str, int] = field(default_factory=dict)
    normalization: str = "minmax"
