"""Ordered named-tensor store with a binary file format.

Layout (little-endian): magic b"DYSW", u32 version (=1), u32 entry count,
then per entry u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
float32 row-major payload. Entry order is preserved, so a round trip is
bit-exact and byte-identical files mean identical weights.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import BadMagic, DuplicateName, ShapeOverflow, UnsupportedEncoding

MAGIC = b"DYSW"
VERSION = 1


class WeightStore:
    """Insertion-ordered mapping of parameter name -> float32 array."""

    def __init__(self, entries=None):
        self._data: dict[str, np.ndarray] = {}
        if entries is not None:
            items = entries.items() if hasattr(entries, "items") else entries
            for name, arr in items:
                self.add(name, arr)

    def add(self, name: str, arr) -> None:
        if name in self._data:
            raise DuplicateName(f"duplicate weight entry {name!r}")
        self._data[name] = np.asarray(arr, dtype=np.float32)

    def __contains__(self, name):
        return name in self._data

    def __getitem__(self, name) -> np.ndarray:
        return self._data[name]

    def __len__(self):
        return len(self._data)

    def names(self):
        return list(self._data)

    def items(self):
        return self._data.items()

    def copy(self) -> "WeightStore":
        return WeightStore((k, v.copy()) for k, v in self._data.items())

    def allclose(self, other: "WeightStore", atol=0.0) -> bool:
        if self.names() != other.names():
            return False
        return all(np.allclose(v, other[k], atol=atol, rtol=0.0)
                   for k, v in self.items())

    def identical(self, other: "WeightStore") -> bool:
        """Bitwise equality: same names, order, shapes, and bytes."""
        if self.names() != other.names():
            return False
        return all(v.shape == other[k].shape and v.tobytes() == other[k].tobytes()
                   for k, v in self.items())


def encode_weights(store: WeightStore) -> bytes:
    out = [MAGIC, struct.pack("<II", VERSION, len(store))]
    for name, arr in store.items():
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ShapeOverflow(f"weight name too long ({len(raw)} bytes)")
        if arr.ndim > 255:
            raise ShapeOverflow(f"{name}: rank {arr.ndim} exceeds format limit")
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(out)


def decode_weights(data: bytes) -> WeightStore:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("not a DYSW weight blob")
    if len(data) < 12:
        raise ShapeOverflow("truncated DYSW header")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise UnsupportedEncoding(f"unsupported DYSW version {version}")
    store = WeightStore()
    off = 12
    for _ in range(count):
        if off + 2 > len(data):
            raise ShapeOverflow("truncated DYSW entry header")
        (name_len,) = struct.unpack_from("<H", data, off)
        off += 2
        if off + name_len + 1 > len(data):
            raise ShapeOverflow("truncated DYSW entry name")
        name = data[off:off + name_len].decode("utf-8")
        off += name_len
        rank = data[off]
        off += 1
        if off + 4 * rank > len(data):
            raise ShapeOverflow(f"{name}: truncated dim table")
        dims = struct.unpack_from(f"<{rank}I", data, off)
        off += 4 * rank
        n_elems = int(np.prod(dims, dtype=np.int64)) if rank else 1
        nbytes = 4 * n_elems
        if off + nbytes > len(data):
            raise ShapeOverflow(f"{name}: payload shorter than declared shape {dims}")
        arr = np.frombuffer(data[off:off + nbytes], dtype="<f4").reshape(dims)
        off += nbytes
        store.add(name, arr.copy())
    if off != len(data):
        raise ShapeOverflow(f"{len(data) - off} trailing bytes after last entry")
    return store


def save_weights(store: WeightStore, path) -> None:
    with open(path, "wb") as f:
        f.write(encode_weights(store))


def load_weights(path) -> WeightStore:
    with open(path, "rb") as f:
        return decode_weights(f.read())
