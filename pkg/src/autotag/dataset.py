"""Manifest loading, keyword dictionary and annotation matrix handling.

A manifest is a plain text file with one image per line:

    <image-path> <TAB> <comma-separated tags>

Paths are resolved relative to the manifest's directory. A path token
starting with ``@`` declares a feature-only record: ``@some-id`` keeps
the id but carries no pixels (features for it must come from a feature
file). The keyword dictionary is the lexicographically sorted union of
all tags, so matrix layouts are reproducible.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError

MIN_IMAGE_SIDE = 32


class Vocabulary:
    """Ordered, unique keyword list with bijective index lookup."""

    def __init__(self, keywords):
        self.keywords = tuple(keywords)
        if not self.keywords:
            raise DataError("vocabulary must contain at least one keyword")
        self._index = {kw: i for i, kw in enumerate(self.keywords)}
        if len(self._index) != len(self.keywords):
            raise DataError("vocabulary keywords must be unique")

    def __len__(self):
        return len(self.keywords)

    def __contains__(self, keyword):
        return keyword in self._index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.keywords == other.keywords

    def index(self, keyword):
        try:
            return self._index[keyword]
        except KeyError:
            raise DataError(f"unknown keyword: {keyword!r}") from None

    def word(self, idx):
        return self.keywords[idx]


@dataclass
class ImageRecord:
    """One manifest entry: pixels are None for feature-only records."""

    id: str
    tag_indices: frozenset
    pixels: np.ndarray | None = None


@dataclass
class AnnotatedDataset:
    vocabulary: Vocabulary
    records: list
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    @property
    def annotation_matrix(self):
        """N x M binary matrix; row i is the indicator of image i's tags."""
        if self._matrix is None:
            m = np.zeros((len(self.records), len(self.vocabulary)), dtype=np.int8)
            for i, rec in enumerate(self.records):
                for j in rec.tag_indices:
                    m[i, j] = 1
            self._matrix = m
        return self._matrix

    def record_by_id(self, image_id):
        for rec in self.records:
            if rec.id == image_id:
                return rec
        raise DataError(f"unknown image id: {image_id!r}")


def _parse_tags(raw, lineno):
    tags = [t.strip() for t in raw.split(",")]
    tags = [t for t in tags if t]
    if not tags:
        raise DataError(f"line {lineno}: empty tag list")
    return tags


def _load_pixels(path, lineno):
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise DataError(f"line {lineno}: missing image file {path}") from None
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"line {lineno}: unreadable image {path}: {exc}") from None
    h, w = arr.shape[:2]
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise DataError(
            f"line {lineno}: image {path} is {h}x{w}, below the "
            f"{MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} minimum")
    return arr


def load_manifest(path):
    """Read a manifest file into an :class:`AnnotatedDataset`."""
    dataset, errors = _load_manifest(path, lenient=False)
    assert not errors
    return dataset


def load_manifest_lenient(path):
    """Like :func:`load_manifest`, but image loading failures do not
    abort: the affected records become pixel-less and a list of
    (id, message) pairs is returned alongside the dataset."""
    return _load_manifest(path, lenient=True)


def _load_manifest(path, lenient):
    if not os.path.isfile(path):
        raise DataError(f"manifest not found: {path}")
    base = os.path.dirname(os.path.abspath(path))

    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise DataError(f"line {lineno}: expected '<path> <TAB> <tags>'")
            path_part, tag_part = line.split("\t", 1)
            path_part = path_part.strip()
            if not path_part:
                raise DataError(f"line {lineno}: empty image path")
            entries.append((lineno, path_part, _parse_tags(tag_part, lineno)))

    if not entries:
        raise DataError("empty manifest")

    vocab = Vocabulary(sorted({t for _, _, tags in entries for t in tags}))

    records = []
    errors = []
    seen = set()
    for lineno, path_part, tags in entries:
        if path_part in seen:
            raise DataError(f"line {lineno}: duplicate image id {path_part!r}")
        seen.add(path_part)
        if path_part.startswith("@"):
            pixels = None
        else:
            try:
                pixels = _load_pixels(os.path.join(base, path_part), lineno)
            except DataError as exc:
                if not lenient:
                    raise
                errors.append((path_part, str(exc)))
                pixels = None
        idxs = frozenset(vocab.index(t) for t in tags)
        records.append(ImageRecord(id=path_part, tag_indices=idxs, pixels=pixels))

    return AnnotatedDataset(vocabulary=vocab, records=records), errors


def save_manifest(dataset, path):
    """Write a dataset back to manifest form (pixels are not re-saved;
    record ids are assumed to still resolve as paths)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            tags = ",".join(dataset.vocabulary.word(j)
                            for j in sorted(rec.tag_indices))
            fh.write(f"{rec.id}\t{tags}\n")


def split(dataset, train_n, val_n, test_n, seed):
    """Deterministic disjoint partition into train/val/test views."""
    n = len(dataset)
    if train_n + val_n + test_n != n:
        raise DataError(
            f"split counts {train_n}+{val_n}+{test_n} do not sum to {n}")
    order = np.random.default_rng(seed).permutation(n)
    bounds = (train_n, train_n + val_n)
    parts = (order[:bounds[0]], order[bounds[0]:bounds[1]], order[bounds[1]:])
    return tuple(
        AnnotatedDataset(vocabulary=dataset.vocabulary,
                         records=[dataset.records[i] for i in sorted(part)])
        for part in parts)


def tag_frequency(dataset):
    """Occurrence count T_j of every keyword over the dataset."""
    return dataset.annotation_matrix.sum(axis=0).astype(np.int64)


def write_split_descriptor(path, named_splits):
    """Persist split membership as `<id> <TAB> <split-name>` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for name, ds in named_splits.items():
            for rec in ds.records:
                fh.write(f"{rec.id}\t{name}\n")


def read_split_descriptor(path):
    assignment = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                image_id, name = line.split("\t")
            except ValueError:
                raise DataError(
                    f"line {lineno}: expected '<id> <TAB> <split-name>'") from None
            assignment[image_id] = name
    return assignment


def apply_split_descriptor(dataset, assignment):
    """Group a dataset's records by a split descriptor's names."""
    groups = {}
    for rec in dataset.records:
        name = assignment.get(rec.id)
        if name is None:
            raise DataError(f"split descriptor missing id {rec.id!r}")
        groups.setdefault(name, []).append(rec)
    return {name: AnnotatedDataset(vocabulary=dataset.vocabulary, records=recs)
            for name, recs in groups.items()}
