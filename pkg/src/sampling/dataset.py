"""Dataset files: F32D matrices and tag sidecars.

F32D layout, all integers little-endian u32::

    "F32D" | version | rank | dims[rank] | payload (float32 LE, row-major)

Tag sidecar grammar, one record per line::

    #vocabulary<TAB>tag,tag,...     optional, at most once, before entries
    # free text                     comment
    key<TAB>tag,tag,...             one entry; the tag list may be empty

Blank lines are ignored. Keys are row indices for F32D datasets and file
names for volume directories.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DatasetFormatError, SidecarError
from .models import TaggedDataset

logger = logging.getLogger(__name__)

F32D_MAGIC = b"F32D"
F32D_VERSION = 1
SIDECAR_SUFFIX = ".tags"
VOCABULARY_DIRECTIVE = "#vocabulary"

PathLike = Union[str, os.PathLike]


def encode_f32d(array) -> bytes:
    """Serialize ``array`` (any rank >= 1) as F32D bytes."""
    array = np.asarray(array)
    if array.ndim < 1:
        raise DatasetFormatError("F32D needs an array of rank >= 1")
    header = np.array([F32D_VERSION, array.ndim, *array.shape], dtype="<u4")
    return F32D_MAGIC + header.tobytes() + np.ascontiguousarray(array, dtype="<f4").tobytes()


def decode_f32d(data: bytes) -> np.ndarray:
    """Parse F32D bytes into a float64 array of the declared shape.

    Raises:
        DatasetFormatError: On a wrong magic, unsupported version, truncated
            header or a payload whose length does not match the dims.
    """
    if len(data) < 12:
        raise DatasetFormatError(f"F32D header truncated: {len(data)} bytes")
    if data[:4] != F32D_MAGIC:
        raise DatasetFormatError(f"not an F32D file (magic {data[:4]!r})")
    version, rank = (int(v) for v in np.frombuffer(data, dtype="<u4", count=2, offset=4))
    if version != F32D_VERSION:
        raise DatasetFormatError(f"unsupported F32D version {version}; supported: [{F32D_VERSION}]")
    offset = 12 + 4 * rank
    if rank < 1 or len(data) < offset:
        raise DatasetFormatError(f"F32D header truncated or rank {rank} invalid")
    dims = tuple(int(v) for v in np.frombuffer(data, dtype="<u4", count=rank, offset=12))
    expected = 4 * int(np.prod(dims, dtype=np.int64))
    if len(data) - offset != expected:
        raise DatasetFormatError(
            f"F32D payload holds {len(data) - offset} bytes, dims {list(dims)} need {expected}")
    if expected == 0:
        return np.zeros(dims)
    return np.frombuffer(data, dtype="<f4", offset=offset).reshape(dims).astype(np.float64)


def write_f32d(path: PathLike, array) -> None:
    """Write ``array`` to ``path`` in F32D format."""
    Path(path).write_bytes(encode_f32d(array))


def read_f32d(path: PathLike) -> np.ndarray:
    """Read an F32D file.

    Raises:
        DatasetFormatError: If the file cannot be read or is malformed.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DatasetFormatError(f"cannot read {path}: {e.strerror}") from e
    return decode_f32d(data)


@dataclass
class Sidecar:
    """A parsed tag sidecar.

    Attributes:
        vocabulary: Declared tags followed by undeclared ones in order of
            first use.
        entries: ``(key, tags)`` pairs in file order.
        added: Tags used by entries but missing from the declared vocabulary.
    """
    vocabulary: List[str]
    entries: List[Tuple[str, FrozenSet[str]]] = field(default_factory=list)
    added: List[str] = field(default_factory=list)

    def tags_for(self, keys: Sequence[str]) -> List[FrozenSet[str]]:
        """Return tag sets in the order of ``keys``; every key must appear exactly once.

        Raises:
            SidecarError: If a key is missing or the sidecar lists keys that
                are not in ``keys``.
        """
        mapping = dict(self.entries)
        missing = [key for key in keys if key not in mapping]
        if missing:
            raise SidecarError(f"sidecar has no entry for {missing[:5]}" + (" ..." if len(missing) > 5 else ""))
        extra = sorted(set(mapping) - set(keys))
        if extra:
            raise SidecarError(f"sidecar lists unknown entries {extra[:5]}" + (" ..." if len(extra) > 5 else ""))
        return [mapping[key] for key in keys]


def _split_tags(text: str) -> List[str]:
    return [tag.strip() for tag in text.split(",") if tag.strip()]


def parse_sidecar(text: str) -> Sidecar:
    """Parse sidecar text.

    Tags used by entries but absent from the declared vocabulary are appended
    to it with a warning.

    Raises:
        SidecarError: On a line without a tab, a repeated key or a repeated
            vocabulary directive.
    """
    declared: Optional[List[str]] = None
    entries: List[Tuple[str, FrozenSet[str]]] = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith(VOCABULARY_DIRECTIVE + "\t"):
            if declared is not None or entries:
                raise SidecarError(f"line {lineno}: the vocabulary must be declared once, before any entry")
            declared = _split_tags(line.split("\t", 1)[1])
            if len(set(declared)) != len(declared):
                raise SidecarError(f"line {lineno}: vocabulary repeats a tag")
            continue
        if line.startswith("#"):
            continue
        if "\t" not in line:
            raise SidecarError(f"line {lineno}: expected '<key><TAB><tags>', got {line!r}")
        key, tags = line.split("\t", 1)
        key = key.strip()
        if key in seen:
            raise SidecarError(f"line {lineno}: duplicate entry for {key!r}")
        seen.add(key)
        entries.append((key, frozenset(_split_tags(tags))))

    vocabulary = list(declared) if declared is not None else []
    added = []
    for _, tags in entries:
        for tag in sorted(tags):
            if tag not in vocabulary:
                vocabulary.append(tag)
                added.append(tag)
    if declared is not None and added:
        logger.warning("sidecar uses tags missing from its vocabulary, added: %s", ", ".join(added))
    return Sidecar(vocabulary, entries, added if declared is not None else [])


def format_sidecar(keys: Sequence[str], tags: Sequence[FrozenSet[str]], vocabulary: Sequence[str]) -> str:
    """Render sidecar text; tags are listed in vocabulary order."""
    order = {tag: j for j, tag in enumerate(vocabulary)}
    lines = [f"{VOCABULARY_DIRECTIVE}\t{','.join(vocabulary)}"]
    for key, row_tags in zip(keys, tags):
        lines.append(f"{key}\t{','.join(sorted(row_tags, key=order.__getitem__))}")
    return "\n".join(lines) + "\n"


def sidecar_path(path: PathLike) -> Path:
    """The sidecar next to a dataset file: same basename, ``.tags`` suffix."""
    return Path(path).with_suffix(SIDECAR_SUFFIX)


def read_tagged_dataset(path: PathLike) -> TaggedDataset:
    """Read an F32D matrix and its sidecar, if any, into a TaggedDataset.

    Sidecar keys are row indices ``0 .. N-1``. Without a sidecar every row has
    an empty tag set.

    Raises:
        DatasetFormatError: If the matrix is not rank 2 or either file is
            malformed.
    """
    rows = read_f32d(path)
    if rows.ndim != 2:
        raise DatasetFormatError(f"{path}: a dataset must be a rank-2 matrix, got dims {list(rows.shape)}")
    side = sidecar_path(path)
    if not side.exists():
        return TaggedDataset(rows, [frozenset()] * rows.shape[0], [])
    try:
        sidecar = parse_sidecar(side.read_text(encoding="utf-8"))
    except OSError as e:
        raise SidecarError(f"cannot read {side}: {e.strerror}") from e
    keys = [str(i) for i in range(rows.shape[0])]
    return TaggedDataset(rows, sidecar.tags_for(keys), sidecar.vocabulary)


def write_tagged_dataset(dataset: TaggedDataset, path: PathLike) -> None:
    """Write ``dataset`` as an F32D file plus sidecar."""
    write_f32d(path, dataset.rows)
    keys = [str(i) for i in range(len(dataset))]
    sidecar_path(path).write_text(format_sidecar(keys, dataset.tags, dataset.vocabulary), encoding="utf-8")
