"""Binary field snapshots.

Layout (little endian):
    bytes  0..15   magic "SPINLAYERSNAP001"
    bytes 16..19   field id: "MCEL" (cell 3-vector field),
                   "HYEE" (face components), "EYEE" (edge components)
    bytes 20..31   three uint32 cell counts
    bytes 32..55   three float64 spacings dx, dy, dz
    bytes 56..63   float64 time stamp
    payload        float64 arrays, row major:
                   MCEL -> one (nx, ny, nz, 3) block of triples
                   HYEE -> (nx+1,ny,nz), (nx,ny+1,nz), (nx,ny,nz+1) blocks
                   EYEE -> (nx,ny+1,nz+1), (nx+1,ny,nz+1), (nx+1,ny+1,nz)

Files are written to "<path>.partial" and renamed into place so a crash
never leaves a truncated file under the final name.
"""

import os
import struct

import numpy as np

MAGIC = b"SPINLAYERSNAP001"
_HEADER = struct.Struct("<16s4s3I3dd")

FIELD_M = b"MCEL"
FIELD_H = b"HYEE"
FIELD_E = b"EYEE"


def _payload_shapes(field_id: bytes, dims: tuple) -> list:
    nx, ny, nz = dims
    if field_id == FIELD_M:
        return [(nx, ny, nz, 3)]
    if field_id == FIELD_H:
        return [(nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)]
    if field_id == FIELD_E:
        return [(nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)]
    raise ValueError(f"unknown snapshot field id {field_id!r}")


def write_snapshot(path, field_id: bytes, dims: tuple, spacings: tuple,
                   t: float, arrays) -> None:
    shapes = _payload_shapes(field_id, dims)
    if len(arrays) != len(shapes):
        raise ValueError(f"{field_id!r} expects {len(shapes)} arrays")
    header = _HEADER.pack(MAGIC, field_id, *map(int, dims), *map(float, spacings),
                          float(t))
    tmp = str(path) + ".partial"
    with open(tmp, "wb") as fh:
        fh.write(header)
        for arr, shape in zip(arrays, shapes):
            a = np.ascontiguousarray(arr, dtype="<f8")
            if a.shape != shape:
                raise ValueError(f"array shape {a.shape} does not match {shape}")
            fh.write(a.tobytes())
    os.replace(tmp, path)


def read_snapshot(path):
    """Returns (field_id, dims, spacings, t, list of arrays)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, field_id, nx, ny, nz, dx, dy, dz, t = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad snapshot magic {magic!r}")
        dims = (nx, ny, nz)
        arrays = []
        for shape in _payload_shapes(field_id, dims):
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated snapshot payload")
            arrays.append(np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
    return field_id, dims, (dx, dy, dz), t, arrays
