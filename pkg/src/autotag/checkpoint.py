"""Versioned binary checkpoints with a trailing integrity checksum.

Layout: magic, version, a JSON blob (config echo plus training
metadata), then named float64 tensors, then sha256 over everything
before it. Loading rebuilds the model exactly; a truncated or edited
file fails the checksum."""

import hashlib
import json
import struct

import numpy as np

from .attention import AttentionParams
from .balance import BalancedNet
from .decoder import AnnotationModel, CellParams
from .errors import DataError

MAGIC = b"ATCK"
VERSION = 1


def save_checkpoint(path, model, config, metadata):
    blob = json.dumps({"config": config, "metadata": metadata},
                      sort_keys=True).encode("utf-8")
    tensors = model.named_parameters()

    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", len(blob))
    out += blob
    out += struct.pack("<I", len(tensors))
    for name, arr in tensors:
        arr = np.asarray(arr, dtype="<f8")  # keeps 0-d tensors 0-d
        nm = name.encode("utf-8")
        out += struct.pack("<H", len(nm))
        out += nm
        out += struct.pack("<B", arr.ndim)
        for s in arr.shape:
            out += struct.pack("<I", s)
        out += arr.tobytes()
    out += hashlib.sha256(bytes(out)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def _take(buf, offset, n, what):
    if offset + n > len(buf):
        raise DataError(f"truncated checkpoint while reading {what}")
    return buf[offset:offset + n], offset + n


def load_checkpoint(path):
    """Returns (model, config, metadata)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 32 + 12:
        raise DataError("checkpoint too short")
    body, digest = buf[:-32], buf[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise DataError("checkpoint checksum mismatch (corrupt file)")

    off = 0
    magic, off = _take(body, off, 4, "magic")
    if magic != MAGIC:
        raise DataError("not a checkpoint file (bad magic)")
    raw, off = _take(body, off, 4, "version")
    (version,) = struct.unpack("<I", raw)
    if version != VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    raw, off = _take(body, off, 4, "blob length")
    (blob_len,) = struct.unpack("<I", raw)
    blob, off = _take(body, off, blob_len, "config blob")
    parsed = json.loads(blob.decode("utf-8"))
    config, metadata = parsed["config"], parsed["metadata"]

    raw, off = _take(body, off, 4, "tensor count")
    (count,) = struct.unpack("<I", raw)
    tensors = {}
    for _ in range(count):
        raw, off = _take(body, off, 2, "tensor name length")
        (nmlen,) = struct.unpack("<H", raw)
        raw, off = _take(body, off, nmlen, "tensor name")
        name = raw.decode("utf-8")
        raw, off = _take(body, off, 1, "tensor rank")
        ndim = raw[0]
        shape = []
        for _ in range(ndim):
            raw, off = _take(body, off, 4, "tensor shape")
            shape.append(struct.unpack("<I", raw)[0])
        size = int(np.prod(shape)) if shape else 1
        raw, off = _take(body, off, size * 8, f"tensor {name!r}")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    if off != len(body):
        raise DataError("trailing bytes inside checkpoint body")

    return _model_from_tensors(tensors, config), config, metadata


def _model_from_tensors(tensors, config):
    def get(name):
        try:
            return tensors[name]
        except KeyError:
            raise DataError(f"checkpoint missing tensor {name!r}") from None

    attention = AttentionParams(
        gamma=get("attention.gamma"), w_hidden=get("attention.w_hidden"),
        w_low=get("attention.w_low"), w_high=get("attention.w_high"),
        bias=get("attention.bias"), tau_logit=get("attention.tau_logit"),
        proj_low=get("attention.proj_low"), proj_high=get("attention.proj_high"))
    cell = CellParams(w_update=get("cell.w_update"),
                      w_reset=get("cell.w_reset"), w_cand=get("cell.w_cand"))

    depth = 0
    while f"balance.w{depth}" in tensors:
        depth += 1
    if depth == 0:
        raise DataError("checkpoint has no balanced-net layers")
    balance = BalancedNet(
        weights=[get(f"balance.w{l}") for l in range(depth)],
        biases=[get(f"balance.b{l}") for l in range(depth)],
        decoder_biases=[get(f"balance.db{l}") for l in range(depth)])

    return AnnotationModel(
        attention=attention, cell=cell, out_weight=get("out_weight"),
        out_bias=get("out_bias"), emb_proj=get("emb_proj"),
        start_token=get("start_token"), balance=balance,
        tau_mode=config.get("tau_mode", "normalized"))
