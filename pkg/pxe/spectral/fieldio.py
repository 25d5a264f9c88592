"""Binary field records (.pxfld)

A record is a 40-byte little-endian header followed by N^d complex128 samples
in C order:

    magic   8s   b"PXFLD1\\0\\0"
    d       u32
    N       u32
    L       f64
    z       f64
    tau     f64

A file holds one or more consecutive records (a trajectory or a space-time
slice sequence).
"""

import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from ..core.errors import StructuralError
from ..core.logger import logger
from ..core.utils import atomic_write
from .lateral_grid import Field, LateralGrid

MAGIC = b"PXFLD1\x00\x00"
HEADER = struct.Struct("<8sIIddd")


def encode_field(f: Field) -> bytes:
    """Serialize one field record"""
    grid = f.grid
    header = HEADER.pack(MAGIC, grid.dimension, grid.points, grid.length, f.z, f.tau)
    payload = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return header + payload


def decode_fields(data: bytes) -> List[Field]:
    """Parse all records in a byte string"""
    fields = []
    offset = 0
    while offset < len(data):
        if len(data) - offset < HEADER.size:
            raise StructuralError(f"truncated field header at byte {offset}")
        magic, d, n, length, z, tau = HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise StructuralError(f"bad field magic {magic!r} at byte {offset}")
        grid = LateralGrid(d, n, length)
        offset += HEADER.size
        nbytes = grid.size * 16
        if len(data) - offset < nbytes:
            raise StructuralError(f"truncated field payload at byte {offset}")
        values = np.frombuffer(data, dtype="<c16", count=grid.size, offset=offset)
        fields.append(Field(grid, values.reshape(grid.shape).astype(complex), z, tau))
        offset += nbytes
    return fields


def write_fields(path: Union[str, Path], fields: Sequence[Field]) -> bool:
    """Write records to a .pxfld file atomically"""
    ok = atomic_write(path, b"".join(encode_field(f) for f in fields), mode="wb")
    if ok:
        logger.debug(f"Wrote {len(fields)} field record(s) to {path}")
    return ok


def write_field(path: Union[str, Path], f: Field) -> bool:
    return write_fields(path, [f])


def read_fields(path: Union[str, Path]) -> List[Field]:
    """Read all records from a .pxfld file"""
    return decode_fields(Path(path).read_bytes())
