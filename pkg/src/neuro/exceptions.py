"""Exception classes for the neuro module.

This module defines the errors raised while reading NIfTI-1 volumes,
flattening them into sample rows and rendering slices.
"""

from typing import Tuple


class NeuroError(Exception):
    """Base exception class for neuroimaging ingestion errors."""

    def __init__(self, message: str, code: int = 3):
        """Initialize the neuro error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class NiftiError(NeuroError):
    """Base exception class for malformed NIfTI-1 files."""


class NiftiHeaderSizeError(NiftiError):
    """Exception raised when sizeof_hdr is not 348 in either byte order."""

    def __init__(self, value: int):
        super().__init__(f"sizeof_hdr is {value}, expected 348; not a NIfTI-1 header")
        self.value = value


class NiftiMagicError(NiftiError):
    """Exception raised for a magic string other than the single-file one."""

    def __init__(self, magic: bytes):
        hint = "; separate header/image pairs are not supported" if magic == b"ni1\x00" else ""
        super().__init__(f"NIfTI magic is {magic!r}, expected b'n+1\\x00'{hint}")
        self.magic = magic


class NiftiDatatypeError(NiftiError):
    """Exception raised for a datatype code outside float32, int16 and uint8."""

    def __init__(self, datatype: int):
        super().__init__(f"unsupported NIfTI datatype code {datatype}; supported: 2 (uint8), 4 (int16), 16 (float32)")
        self.datatype = datatype


class NiftiDimensionError(NiftiError):
    """Exception raised for a dim array that is not a 3D volume."""


class NiftiTruncatedError(NiftiError):
    """Exception raised when the header or the voxel payload is cut short."""

    def __init__(self, message: str, expected: int, got: int):
        super().__init__(f"{message}: need {expected} bytes, got {got}")
        self.expected = expected
        self.got = got


class VolumeShapeError(NeuroError):
    """Exception raised when volumes or rows do not share dimensions."""

    def __init__(self, index: int, expected: Tuple[int, ...], got: Tuple[int, ...]):
        super().__init__(f"volume {index} has dims {got}, expected {expected}")
        self.index = index
        self.expected = expected
        self.got = got


class SliceIndexError(NeuroError):
    """Exception raised for a slice axis or index outside the volume."""
