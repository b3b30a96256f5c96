"""Binary feature file shared by the low-level and high-level paths.

Layout (all integers little-endian):

    magic   4 bytes  b"ATFV"
    version u32      currently 1
    source  u16 length + utf-8 bytes (e.g. "lowlevel", "fallback", "vgg16")
    dim     u32      vector length, identical for every record
    count   u32      number of records
    records: per image, u16 id length + utf-8 id, then dim float64 values

The format is canonical: reading a file and re-serialising it yields
identical bytes.
"""

import struct

import numpy as np

from .errors import DataError

MAGIC = b"ATFV"
VERSION = 1


def write_features(path, vectors, source):
    """Write an ordered mapping of image id -> 1-D float vector."""
    items = list(vectors.items())
    if not items:
        raise DataError("refusing to write an empty feature file")
    dim = len(items[0][1])
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        src = source.encode("utf-8")
        fh.write(struct.pack("<H", len(src)))
        fh.write(src)
        fh.write(struct.pack("<II", dim, len(items)))
        for image_id, vec in items:
            arr = np.asarray(vec, dtype="<f8")
            if arr.ndim != 1 or arr.size != dim:
                raise DataError(
                    f"vector for {image_id!r} has length {arr.size}, expected {dim}")
            ident = image_id.encode("utf-8")
            fh.write(struct.pack("<H", len(ident)))
            fh.write(ident)
            fh.write(arr.tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise DataError(f"truncated feature file while reading {what}")
    return buf


def read_features(path):
    """Read a feature file; returns (source, dim, ordered id->vector dict)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise DataError(f"{path}: not a feature file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise DataError(f"{path}: unsupported feature file version {version}")
        (srclen,) = struct.unpack("<H", _read_exact(fh, 2, "source length"))
        source = _read_exact(fh, srclen, "source").decode("utf-8")
        dim, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        vectors = {}
        for _ in range(count):
            (idlen,) = struct.unpack("<H", _read_exact(fh, 2, "id length"))
            image_id = _read_exact(fh, idlen, "id").decode("utf-8")
            if image_id in vectors:
                raise DataError(f"{path}: duplicate id {image_id!r}")
            raw = _read_exact(fh, dim * 8, f"vector for {image_id!r}")
            vectors[image_id] = np.frombuffer(raw, dtype="<f8").copy()
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after {count} records")
    return source, dim, vectors
