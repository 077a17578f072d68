"""Core neuroimaging functionality.

This module reads single-file NIfTI-1 volumes, normalizes their intensities,
flattens them into sample rows for PCA, attaches tag sidecars and renders
slices as grayscale PGM images.
"""

import logging
import os
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
from multiprocess.pool import ThreadPool

from gan import ModelCheckpoint
from gan import sample as sample_generator
from pca import PCAModel, inverse_transform
from sampling import TaggedDataset, parse_sidecar

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

logger = logging.getLogger(__name__)

HEADER_SIZE = 348
NIFTI_MAGIC = b"n+1\x00"
DEFAULT_SIDECAR = "tags.tsv"
VOLUME_SUFFIX = ".nii"

# Supported datatype codes and their numpy item types.
DATATYPES = {2: "u1", 4: "i2", 16: "f4"}

HEADER_FIELDS = [
    ("sizeof_hdr", "i4"),        # 0
    ("data_type", "S10"),        # 4
    ("db_name", "S18"),          # 14
    ("extents", "i4"),           # 32
    ("session_error", "i2"),     # 36
    ("regular", "S1"),           # 38
    ("dim_info", "u1"),          # 39
    ("dim", "i2", (8,)),         # 40
    ("intent_p", "f4", (3,)),    # 56
    ("intent_code", "i2"),       # 68
    ("datatype", "i2"),          # 70
    ("bitpix", "i2"),            # 72
    ("slice_start", "i2"),       # 74
    ("pixdim", "f4", (8,)),      # 76
    ("vox_offset", "f4"),        # 108
    ("scl_slope", "f4"),         # 112
    ("scl_inter", "f4"),         # 116
    ("slice_end", "i2"),         # 120
    ("slice_code", "u1"),        # 122
    ("xyzt_units", "u1"),        # 123
    ("cal_max", "f4"),           # 124
    ("cal_min", "f4"),           # 128
    ("slice_duration", "f4"),    # 132
    ("toffset", "f4"),           # 136
    ("glmax", "i4"),             # 140
    ("glmin", "i4"),             # 144
    ("descrip", "S80"),          # 148
    ("aux_file", "S24"),         # 228
    ("qform_code", "i2"),        # 252
    ("sform_code", "i2"),        # 254
    ("quatern", "f4", (3,)),     # 256
    ("qoffset", "f4", (3,)),     # 268
    ("srow_x", "f4", (4,)),      # 280
    ("srow_y", "f4", (4,)),      # 296
    ("srow_z", "f4", (4,)),      # 312
    ("intent_name", "S16"),      # 328
    ("magic", "S4"),             # 344
]
HEADER_DTYPE = np.dtype(HEADER_FIELDS)

PathLike = Union[str, os.PathLike]


def _byte_order(data: bytes) -> str:
    """Detect the header byte order from sizeof_hdr."""
    little = int(np.frombuffer(data, dtype="<i4", count=1)[0])
    if little == HEADER_SIZE:
        return "<"
    if int(np.frombuffer(data, dtype=">i4", count=1)[0]) == HEADER_SIZE:
        return ">"
    raise NiftiHeaderSizeError(little)


def _spatial_dims(dim: np.ndarray) -> Tuple[int, int, int]:
    ndim = int(dim[0])
    if ndim > 4:
        raise NiftiDimensionError(f"dim[0] is {ndim}; only 3D volumes (or 4D with one frame) are supported")
    if ndim < 3:
        raise NiftiDimensionError(f"dim[0] is {ndim}; expected a 3D volume")
    if ndim == 4 and int(dim[4]) != 1:
        raise NiftiDimensionError(f"4D series with {int(dim[4])} frames; only a trailing singleton is accepted")
    dims = tuple(int(v) for v in dim[1:4])
    if min(dims) < 1:
        raise NiftiDimensionError(f"spatial dims {dims} must be positive")
    return dims


def _affine(header) -> np.ndarray:
    if int(header["sform_code"]) > 0:
        return np.vstack([header["srow_x"], header["srow_y"], header["srow_z"], [0.0, 0.0, 0.0, 1.0]]).astype(np.float64)
    pixdim = header["pixdim"]
    return np.diag([float(pixdim[1]), float(pixdim[2]), float(pixdim[3]), 1.0])


def read_nifti(data: bytes, name: Optional[str] = None) -> Volume:
    """Decode a single-file NIfTI-1 image.

    The byte order is taken from sizeof_hdr. Stored values are scaled by
    ``scl_slope`` and ``scl_inter`` when the slope is finite and nonzero.
    Non-finite voxels are replaced by 0 and counted in ``nan_count``. The
    affine comes from the sform rows when ``sform_code > 0`` and from the
    voxel spacings otherwise.

    Args:
        data: The complete file contents.
        name: Optional file name recorded on the volume.

    Returns:
        The decoded Volume.

    Raises:
        NiftiTruncatedError: If the header or the payload is cut short.
        NiftiHeaderSizeError: If sizeof_hdr is not 348.
        NiftiMagicError: If the magic is not the single-file magic.
        NiftiDimensionError: If the image is not a 3D volume.
        NiftiDatatypeError: If the datatype is not float32, int16 or uint8.
    """
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise NiftiTruncatedError("NIfTI header truncated", HEADER_SIZE, len(data))
    endian = _byte_order(data)
    header = np.frombuffer(data, dtype=HEADER_DTYPE.newbyteorder(endian), count=1)[0]
    magic = data[344:348]
    if magic != NIFTI_MAGIC:
        raise NiftiMagicError(magic)
    dims = _spatial_dims(header["dim"])
    datatype = int(header["datatype"])
    if datatype not in DATATYPES:
        raise NiftiDatatypeError(datatype)
    offset = float(header["vox_offset"])
    if not np.isfinite(offset) or offset < HEADER_SIZE or offset != int(offset):
        raise NiftiError(f"vox_offset {offset} must be an integer >= {HEADER_SIZE}")
    offset = int(offset)

    item = np.dtype(DATATYPES[datatype]).newbyteorder(endian)
    count = dims[0] * dims[1] * dims[2]
    needed = offset + count * item.itemsize
    if len(data) < needed:
        raise NiftiTruncatedError("NIfTI voxel payload truncated", needed, len(data))
    values = np.frombuffer(data, dtype=item, count=count, offset=offset).astype(np.float64)
    slope, intercept = float(header["scl_slope"]), float(header["scl_inter"])
    with np.errstate(over="ignore", invalid="ignore"):
        if np.isfinite(slope) and slope != 0.0:
            values = values * slope + (intercept if np.isfinite(intercept) else 0.0)
        voxels = values.astype(np.float32)
    bad = ~np.isfinite(voxels)
    nan_count = int(bad.sum())
    if nan_count:
        voxels[bad] = 0.0
        logger.warning("%s: replaced %d non-finite voxels with 0", name or "volume", nan_count)
    return Volume(dims=dims, voxels=voxels.reshape(dims, order="F"), affine=_affine(header),
                  nan_count=nan_count, name=name)


def read_nifti_file(path: PathLike) -> Volume:
    """Read a ``.nii`` file; see :func:`read_nifti`."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise NeuroError(f"cannot read {path}: {e.strerror}") from e
    return read_nifti(data, name=Path(path).name)


def normalize(volume: Volume) -> Volume:
    """Min-max rescale voxels to [0, 1]; a constant volume maps to zeros."""
    values = volume.voxels.astype(np.float64)
    low, high = values.min(), values.max()
    if high == low:
        scaled = np.zeros_like(values)
    else:
        scaled = (values - low) / (high - low)
    return Volume(dims=volume.dims, voxels=scaled.astype(np.float32), affine=volume.affine,
                  nan_count=volume.nan_count, name=volume.name)


def flatten(volumes: Sequence[Volume]) -> VolumeMatrix:
    """Stack volumes as rows, x varying fastest within a row.

    Raises:
        VolumeShapeError: If a volume's dims differ from the first volume's.
    """
    if not volumes:
        return VolumeMatrix(rows=np.zeros((0, 0)), dims=None, empty=True)
    dims = tuple(volumes[0].dims)
    for i, volume in enumerate(volumes):
        if tuple(volume.dims) != dims:
            raise VolumeShapeError(i, dims, tuple(volume.dims))
    rows = np.stack([volume.voxels.reshape(-1, order="F") for volume in volumes]).astype(np.float64)
    return VolumeMatrix(rows=rows, dims=dims)


def reshape(row, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`flatten` for one row."""
    row = np.asarray(row)
    dims = tuple(int(v) for v in dims)
    if row.ndim != 1 or row.shape[0] != int(np.prod(dims)):
        raise VolumeShapeError(0, dims, tuple(row.shape))
    return row.reshape(dims, order="F")


def load_tags(text: str, filenames: Sequence[str]) -> Tuple[List[FrozenSet[str]], List[str]]:
    """Parse a tag sidecar for a list of volume files.

    Returns:
        ``(tags, vocabulary)`` with one tag set per file in ``filenames`` order.

    Raises:
        SidecarError: If a file has no entry, an entry names an unknown file
            or a file is listed twice.
    """
    sidecar = parse_sidecar(text)
    tags = sidecar.tags_for(list(filenames))
    logger.info("loaded tags for %d volumes, vocabulary of %d", len(tags), len(sidecar.vocabulary))
    return tags, sidecar.vocabulary


def _read_normalized(path: Path) -> Volume:
    return normalize(read_nifti_file(path))


def ingest_directory(directory: PathLike, sidecar: Optional[PathLike] = None, threads: int = 1) -> VolumeDataset:
    """Read, normalize and flatten every ``.nii`` file of a directory.

    Files are taken in sorted name order. The sidecar defaults to
    ``tags.tsv`` inside the directory and is keyed by file name.

    Raises:
        NeuroError: If the directory holds no volume or the sidecar is
            missing.
    """
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir() if p.suffix == VOLUME_SUFFIX) if directory.is_dir() else []
    if not paths:
        raise NeuroError(f"no {VOLUME_SUFFIX} volumes in {directory}")
    sidecar = Path(sidecar) if sidecar is not None else directory / DEFAULT_SIDECAR
    try:
        text = sidecar.read_text(encoding="utf-8")
    except OSError as e:
        raise NeuroError(f"cannot read tag sidecar {sidecar}: {e.strerror}") from e

    logger.info("reading %d volumes from %s", len(paths), directory)
    if threads > 1:
        with ThreadPool(threads) as pool:
            volumes = pool.map(_read_normalized, paths)
    else:
        volumes = [_read_normalized(p) for p in paths]
    matrix = flatten(volumes)
    names = [p.name for p in paths]
    tags, vocabulary = load_tags(text, names)
    nan_counts = {v.name: v.nan_count for v in volumes if v.nan_count}
    return VolumeDataset(dataset=TaggedDataset(matrix.rows, tags, vocabulary, keys=names),
                         dims=matrix.dims, nan_counts=nan_counts)


def _gray_levels(voxels: np.ndarray) -> np.ndarray:
    values = voxels.astype(np.float64)
    low, high = values.min(), values.max()
    if high == low:
        return np.full(values.shape, 128, dtype=np.uint8)
    return np.rint((values - low) / (high - low) * 255.0).astype(np.uint8)


def encode_pgm(image: np.ndarray) -> bytes:
    """Binary PGM (P5) bytes for an 8-bit image, first row at the top."""
    height, width = image.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + np.ascontiguousarray(image, dtype=np.uint8).tobytes()


def render_slices(volume: Volume, axis: int, indices: Sequence[int], directory: PathLike,
                  stem: str = "volume") -> List[Path]:
    """Write the selected slices of ``volume`` as grayscale PGM images.

    Intensities are min-max mapped to 0..255 over the whole volume, so slices
    of one volume share a scale; a constant volume renders as gray 128. For
    axis 2 the image row is y and the column is x.

    Returns:
        The written paths, named ``{stem}_axis{axis}_{index:03d}.pgm``.

    Raises:
        SliceIndexError: If the axis or an index is out of range.
    """
    if axis not in (0, 1, 2):
        raise SliceIndexError(f"slice axis must be 0, 1 or 2, got {axis}")
    for index in indices:
        if not 0 <= index < volume.dims[axis]:
            raise SliceIndexError(f"slice {index} outside 0..{volume.dims[axis] - 1} on axis {axis}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    levels = _gray_levels(volume.voxels)
    paths = []
    for index in indices:
        path = directory / f"{stem}_axis{axis}_{index:03d}.pgm"
        path.write_bytes(encode_pgm(np.take(levels, index, axis=axis).T))
        paths.append(path)
    logger.debug("rendered %d slices of %s", len(paths), volume.name or stem)
    return paths


def synthetic_volumes(checkpoint: ModelCheckpoint, model: PCAModel, dims: Sequence[int], n: int,
                      condition=None, seed: int = 0) -> List[Volume]:
    """Sample PCA scores from a generator and map them back to voxel space.

    Raises:
        VolumeShapeError: If the PCA model's feature count is not the voxel
            count of ``dims``.
    """
    dims = tuple(int(v) for v in dims)
    if model.n_features != int(np.prod(dims)):
        raise VolumeShapeError(0, dims, (model.n_features,))
    rows = inverse_transform(model, sample_generator(checkpoint, n, condition=condition, seed=seed))
    return [Volume(dims=dims, voxels=reshape(row, dims).astype(np.float32), name=f"synthetic_{i:03d}")
            for i, row in enumerate(rows)]
