"""Reader and writer for the IDX binary tensor format (MNIST files).

Layout: a 4-byte magic ``00 00 <dtype> <ndim>`` followed by ``ndim``
big-endian uint32 dimension sizes and the raw element bytes. The MNIST
image files use magic 0x00000803 (ubyte, 3 dims) and the label files
0x00000801 (ubyte, 1 dim).
"""
from __future__ import annotations

import struct

import numpy as np

from .exceptions import IdxFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

_DTYPE_CODES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_CODE_FOR_KIND = {v.newbyteorder("="): k for k, v in _DTYPE_CODES.items()}


def read_idx(path) -> np.ndarray:
    """Decode an IDX file into an array with native byte order."""
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < 4:
        raise IdxFormatError("file shorter than the 4-byte magic", offset=0)
    zero_a, zero_b, dtype_code, ndim = struct.unpack(">BBBB", raw[:4])
    if zero_a != 0 or zero_b != 0:
        raise IdxFormatError(
            f"bad magic prefix 0x{zero_a:02x}{zero_b:02x}", offset=0
        )
    if dtype_code not in _DTYPE_CODES:
        raise IdxFormatError(f"unknown dtype code 0x{dtype_code:02x}", offset=2)
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise IdxFormatError(
            f"truncated header: {ndim} dimension sizes expected", offset=len(raw)
        )
    shape = struct.unpack(f">{ndim}I", raw[4:header_end])
    dtype = _DTYPE_CODES[dtype_code]
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    expected = header_end + count * dtype.itemsize
    if len(raw) < expected:
        raise IdxFormatError(
            f"truncated data: expected {expected} bytes, file has {len(raw)}",
            offset=len(raw),
        )
    if len(raw) > expected:
        raise IdxFormatError(
            f"{len(raw) - expected} trailing bytes after the tensor",
            offset=expected,
        )
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=header_end)
    return data.reshape(shape).astype(dtype.newbyteorder("="))


def write_idx(path, array: np.ndarray) -> None:
    """Encode an array into the IDX layout (inverse of ``read_idx``)."""
    array = np.asarray(array)
    native = array.dtype.newbyteorder("=")
    if native not in _CODE_FOR_KIND:
        raise IdxFormatError(f"dtype {array.dtype} has no IDX code")
    code = _CODE_FOR_KIND[native]
    with open(path, "wb") as handle:
        handle.write(struct.pack(">BBBB", 0, 0, code, array.ndim))
        handle.write(struct.pack(f">{array.ndim}I", *array.shape))
        handle.write(array.astype(_DTYPE_CODES[code]).tobytes())


def idx_info(path) -> dict:
    """Header summary without loading the payload into a new array."""
    array = read_idx(path)
    return {
        "shape": list(array.shape),
        "dtype": str(array.dtype),
        "n_items": int(array.shape[0]) if array.ndim else 1,
    }
