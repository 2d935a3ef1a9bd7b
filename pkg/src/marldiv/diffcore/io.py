"""Bit-exact binary checkpoints for named parameter tensors.

Layout (little-endian): magic ``MRLD``, format version u32, tensor count
u32, then per tensor: name length u16 + utf-8 name, ndim u8, each dim as
u32, then the float64 payload in C order.  Nothing here is platform
dependent, so a file written on one machine loads bit-identically on
another.
"""

from __future__ import annotations

import struct

import numpy as np

from .tensor import Tensor

_MAGIC = b"MRLD"
_VERSION = 1


def save_params(path, params: dict[str, Tensor]):
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(params)))
        for name, p in params.items():
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"parameter name too long: {name[:32]!r}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            # ascontiguousarray would promote 0-d to shape (1,)
            data = np.asarray(p.data, dtype=np.float64)
            if not data.flags["C_CONTIGUOUS"]:
                data = np.ascontiguousarray(data)
            fh.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(data.astype("<f8", copy=False).tobytes(order="C"))


def load_params(path) -> dict[str, Tensor]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint (bad magic)")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    params: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        data = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).reshape(shape)
        offset += 8 * size
        if name in params:
            raise ValueError(f"{path}: duplicate parameter name {name!r}")
        params[name] = Tensor(data.copy())
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes")
    return params
