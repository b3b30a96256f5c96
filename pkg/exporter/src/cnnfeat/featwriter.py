"""Writer for the annotation pipeline's binary feature file format.

This mirrors the consumer's documented layout (all little-endian):
magic ``ATFV``, u32 version (1), u16-length-prefixed source tag, u32
vector dimension, u32 record count, then per record a u16-length-
prefixed utf-8 id followed by dim float64 values.
"""

import struct

import numpy as np

MAGIC = b"ATFV"
VERSION = 1


def write_features(path, vectors, source):
    """Write an ordered mapping of image id -> 1-D float vector."""
    items = list(vectors.items())
    if not items:
        raise ValueError("refusing to write an empty feature file")
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
                raise ValueError(
                    f"vector for {image_id!r} has length {arr.size}, "
                    f"expected {dim}")
            ident = image_id.encode("utf-8")
            fh.write(struct.pack("<H", len(ident)))
            fh.write(ident)
            fh.write(arr.tobytes())
