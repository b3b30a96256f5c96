"""Batch export of CNN features for a manifest of images."""

import os
from dataclasses import dataclass

from PIL import Image, UnidentifiedImageError

from .featwriter import write_features
from .models import (MODEL_DIMS, PREPROCESS_NOTE, build_extractor,
                     extract_batch, preprocess)


@dataclass
class ExportJob:
    manifest: str
    model: str                 # vgg16 | resnet50
    output: str
    batch_size: int = 8
    weights: str = "pretrained"
    seed: int = 0


def read_manifest_ids(path):
    """Image ids and paths from `<path> <TAB> <tags>` lines; records
    marked feature-only (leading @) are skipped."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"manifest not found: {path}")
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            image_id = line.split("\t", 1)[0].strip()
            if not image_id or image_id.startswith("@"):
                continue
            entries.append((image_id, os.path.join(base, image_id)))
    if not entries:
        raise ValueError("manifest lists no image-backed records")
    return entries


def run_export(job):
    """Export features for every loadable image; returns (output path,
    list of (id, reason) skips)."""
    if job.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    entries = read_manifest_ids(job.manifest)
    extractor = build_extractor(job.model, weights=job.weights, seed=job.seed)

    skipped = []
    loaded = []
    for image_id, path in entries:
        try:
            with Image.open(path) as img:
                loaded.append((image_id, preprocess(img)))
        except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
            skipped.append((image_id, str(exc)))

    if not loaded:
        raise ValueError("no image could be loaded")

    vectors = {}
    for start in range(0, len(loaded), job.batch_size):
        chunk = loaded[start:start + job.batch_size]
        feats = extract_batch(extractor, [t for _, t in chunk])
        for (image_id, _), vec in zip(chunk, feats):
            vectors[image_id] = vec

    dim = MODEL_DIMS[job.model]
    assert all(len(v) == dim for v in vectors.values())
    write_features(job.output, vectors, job.model)

    with open(job.output + ".provenance.txt", "w", encoding="utf-8") as fh:
        fh.write(f"model={job.model}\nweights={job.weights}\n"
                 f"dim={dim}\npreprocess={PREPROCESS_NOTE}\n")
    return job.output, skipped
