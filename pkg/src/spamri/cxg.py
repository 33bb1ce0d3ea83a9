"""CXG1 binary tensor format.

Layout: magic bytes ``CXG1``, u8 dtype code (0 = complex64 interleaved
little-endian, 1 = float32, 2 = u8), u8 ndim, ndim x u64 little-endian dims,
then the raw row-major payload.  Used for images, k-space, masks, and coil
maps on disk.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CXG1"

_CODES = {0: np.dtype("<c8"), 1: np.dtype("<f4"), 2: np.dtype("u1")}


def _code_for(arr: np.ndarray) -> int:
    if np.issubdtype(arr.dtype, np.complexfloating):
        return 0
    if np.issubdtype(arr.dtype, np.floating):
        return 1
    if arr.dtype == np.uint8 or arr.dtype == bool:
        return 2
    raise ValueError(f"unsupported dtype {arr.dtype} for CXG1")


def save_cxg(path, arr: np.ndarray) -> None:
    """Write an array as a CXG1 file; dtype is narrowed to the wire format."""
    arr = np.asarray(arr)
    code = _code_for(arr)
    payload = np.ascontiguousarray(arr, dtype=_CODES[code])
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BB", code, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        f.write(payload.tobytes())


def load_cxg(path) -> np.ndarray:
    """Read a CXG1 file back into a numpy array."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a CXG1 file")
    code, ndim = struct.unpack_from("<BB", raw, 4)
    if code not in _CODES:
        raise ValueError(f"{path}: unknown dtype code {code}")
    dims = struct.unpack_from(f"<{ndim}Q", raw, 6)
    dtype = _CODES[code]
    offset = 6 + 8 * ndim
    n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    expected = offset + n * dtype.itemsize
    if len(raw) != expected:
        raise ValueError(f"{path}: payload size mismatch")
    return np.frombuffer(raw, dtype=dtype, count=n, offset=offset).reshape(dims).copy()
