"""Pretrained word vectors, cosine queries and the tag candidate
generator that proposes keywords semantically close to already-chosen
tags, nudged toward under-represented keywords."""

import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class EmbeddingStore:
    dim: int
    vectors: dict          # keyword -> vector (vocabulary keywords only)
    coverage: float
    uncovered: tuple       # vocabulary keywords without a vector

    def __contains__(self, keyword):
        return keyword in self.vectors


def load_vectors(path, vocab):
    """Load `word v1 .. vn` lines, keeping only vectors useful for the
    vocabulary. Multi-word keywords get the mean of their token
    vectors (any token found counts as partial coverage)."""
    if not os.path.isfile(path):
        raise DataError(f"vector file not found: {path}")
    raw = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise DataError(f"line {lineno}: no vector components")
            elif len(values) != dim:
                raise DataError(
                    f"line {lineno}: dimension {len(values)} != {dim}")
            raw[word] = np.array([float(v) for v in values])

    if dim is None:
        raise DataError(f"empty vector file: {path}")

    vectors = {}
    uncovered = []
    for kw in vocab.keywords:
        if kw in raw:
            vectors[kw] = raw[kw]
            continue
        token_vecs = [raw[t] for t in kw.split() if t in raw]
        if token_vecs:
            vectors[kw] = np.mean(token_vecs, axis=0)
        else:
            uncovered.append(kw)

    if not vectors:
        raise DataError("no vocabulary keyword covered by the vector file")
    return EmbeddingStore(dim=dim, vectors=vectors,
                          coverage=len(vectors) / len(vocab),
                          uncovered=tuple(uncovered))


def save_vectors(path, mapping):
    """Write vectors in the same text format (8 decimal places)."""
    with open(path, "w", encoding="utf-8") as fh:
        for word, vec in mapping.items():
            comps = " ".join(f"{v:.8f}" for v in vec)
            fh.write(f"{word} {comps}\n")


def write_uncovered_report(path, store):
    with open(path, "w", encoding="utf-8") as fh:
        for kw in store.uncovered:
            fh.write(kw + "\n")


def cosine(store, a, b):
    """Cosine similarity between two covered keywords."""
    for word in (a, b):
        if word not in store.vectors:
            raise DataError(f"keyword {word!r} has no embedding")
    va, vb = store.vectors[a], store.vectors[b]
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise DataError("zero-norm embedding vector")
    return float(va @ vb / (na * nb))


@dataclass
class CandidateSet:
    entries: list   # (keyword index, score), scores non-increasing
    seeds: tuple

    def indices(self):
        return [idx for idx, _ in self.entries]


def generate_candidates(seeds, store, vocab, keyword_weights, size,
                        frequencies=None):
    """Top-`size` keywords by mean cosine to the seed tags, scaled by
    (1 + per-keyword equilibrium weight). Seeds are excluded; keywords
    without embeddings only appear (by descending frequency) when the
    covered ones cannot fill the set."""
    if size < 1:
        raise DataError("candidate set size must be >= 1")
    seed_words = [vocab.word(s) for s in seeds]
    covered_seeds = [w for w in seed_words if w in store.vectors]
    if not covered_seeds:
        raise DataError("no seed keyword has an embedding")

    seed_set = set(seeds)
    covered, missing = [], []
    for j, kw in enumerate(vocab.keywords):
        if j in seed_set:
            continue
        if kw in store.vectors:
            sim = np.mean([cosine(store, s, kw) for s in covered_seeds])
            covered.append((j, float(sim * (1.0 + keyword_weights[j]))))
        else:
            missing.append(j)

    covered.sort(key=lambda e: (-e[1], e[0]))
    entries = covered[:size]
    if len(entries) < size and missing:
        if frequencies is not None:
            missing.sort(key=lambda j: (-frequencies[j], j))
        entries.extend((j, float("-inf")) for j in missing[:size - len(entries)])
    return CandidateSet(entries=entries, seeds=tuple(seeds))
