"""High-level descriptors: ingestion of exporter files plus a built-in
fallback so the pipeline runs without any CNN exporter."""

from dataclasses import dataclass

import numpy as np

from . import featfile
from .errors import DataError
from .texture import grayscale

FALLBACK_DIM = 112  # 3 x 16 histogram bins + 8 x 8 intensity grid
KNOWN_SOURCES = ("vgg16", "resnet50", "fallback")


@dataclass
class HighLevelDescriptor:
    source: str
    vector: np.ndarray


def ingest_features(path):
    """Load a feature file into an id -> HighLevelDescriptor map."""
    source, dim, vectors = featfile.read_features(path)
    out = {}
    for image_id, vec in vectors.items():
        if not np.all(np.isfinite(vec)):
            raise DataError(f"{path}: non-finite values for {image_id!r}")
        out[image_id] = HighLevelDescriptor(source=source, vector=vec)
    if not out:
        raise DataError(f"{path}: no records")
    assert all(len(d.vector) == dim for d in out.values())
    return out


def fallback_descriptor(record):
    """Deterministic stand-in descriptor: per-channel 16-bin colour
    histogram fractions plus an 8x8 mean-intensity grid, L2-normalised
    to unit length."""
    if record.pixels is None:
        raise DataError(f"record {record.id!r} has no pixels")
    pixels = np.asarray(record.pixels, dtype=float)
    h, w = pixels.shape[:2]

    hists = []
    for c in range(3):
        bins = np.clip((pixels[:, :, c] / 16.0).astype(int), 0, 15)
        hist = np.bincount(bins.ravel(), minlength=16).astype(float)
        hists.append(hist / (h * w))

    gray = grayscale(pixels) / 255.0
    row_edges = np.linspace(0, h, 9).astype(int)
    col_edges = np.linspace(0, w, 9).astype(int)
    grid = np.empty((8, 8))
    for i in range(8):
        for j in range(8):
            cell = gray[row_edges[i]:row_edges[i + 1],
                        col_edges[j]:col_edges[j + 1]]
            grid[i, j] = cell.mean()

    vec = np.concatenate(hists + [grid.ravel()])
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec = vec / norm
    return HighLevelDescriptor(source="fallback", vector=vec)
