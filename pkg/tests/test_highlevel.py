import numpy as np
import pytest

from autotag.dataset import ImageRecord
from autotag.errors import DataError
from autotag.featfile import write_features
from autotag.highlevel import (FALLBACK_DIM, fallback_descriptor,
                               ingest_features)

from conftest import random_image, solid_image


def naive_fallback(pixels):
    """Per-pixel recount of the histogram + grid descriptor."""
    pixels = np.asarray(pixels, dtype=float)
    h, w = pixels.shape[:2]
    out = []
    for c in range(3):
        hist = [0.0] * 16
        for y in range(h):
            for x in range(w):
                b = min(15, int(pixels[y, x, c] // 16))
                hist[b] += 1
        out.extend(v / (h * w) for v in hist)
    gray = (pixels[:, :, 0] * 0.299 + pixels[:, :, 1] * 0.587
            + pixels[:, :, 2] * 0.114) / 255.0
    row_edges = np.linspace(0, h, 9).astype(int)
    col_edges = np.linspace(0, w, 9).astype(int)
    for i in range(8):
        for j in range(8):
            cell = gray[row_edges[i]:row_edges[i + 1],
                        col_edges[j]:col_edges[j + 1]]
            out.append(float(cell.mean()))
    vec = np.array(out)
    return vec / np.linalg.norm(vec)


class TestFallbackDescriptor:
    def test_mid_gray(self):
        rec = ImageRecord("g", frozenset(), solid_image((128, 128, 128)))
        desc = fallback_descriptor(rec)
        assert desc.source == "fallback"
        assert len(desc.vector) == FALLBACK_DIM
        for c in range(3):
            hist = desc.vector[16 * c:16 * (c + 1)]
            assert np.count_nonzero(hist) == 1
        grid = desc.vector[48:]
        assert np.allclose(grid, grid[0])
        assert abs(np.linalg.norm(desc.vector) - 1.0) < 1e-12

    def test_unit_norm(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            rec = ImageRecord("r", frozenset(), random_image(rng, (33, 47)))
            assert abs(np.linalg.norm(fallback_descriptor(rec).vector) - 1.0) < 1e-12

    def test_matches_naive_recount(self):
        rng = np.random.default_rng(31)
        rec = ImageRecord("r", frozenset(), random_image(rng, (32, 40)))
        np.testing.assert_allclose(fallback_descriptor(rec).vector,
                                   naive_fallback(rec.pixels), atol=1e-12)

    def test_pure_function(self):
        rng = np.random.default_rng(4)
        rec = ImageRecord("p", frozenset(), random_image(rng))
        a = fallback_descriptor(rec).vector
        b = fallback_descriptor(rec).vector
        assert np.array_equal(a, b)

    def test_requires_pixels(self):
        with pytest.raises(DataError):
            fallback_descriptor(ImageRecord("n", frozenset(), None))


class TestIngestFeatures:
    def test_basic(self, tmp_path):
        rng = np.random.default_rng(0)
        path = tmp_path / "hl.feat"
        write_features(path, {"a": rng.standard_normal(8),
                              "b": rng.standard_normal(8)}, "vgg16")
        out = ingest_features(path)
        assert set(out) == {"a", "b"}
        assert all(d.source == "vgg16" for d in out.values())
        assert all(len(d.vector) == 8 for d in out.values())

    def test_roundtrip_preserves_values(self, tmp_path):
        rng = np.random.default_rng(1)
        vectors = {"x": rng.standard_normal(5)}
        path = tmp_path / "hl.feat"
        write_features(path, vectors, "resnet50")
        out = ingest_features(path)
        assert np.array_equal(out["x"].vector, vectors["x"])

    def test_rejects_non_finite(self, tmp_path):
        path = tmp_path / "hl.feat"
        write_features(path, {"a": np.array([1.0, np.inf])}, "vgg16")
        with pytest.raises(DataError, match="non-finite"):
            ingest_features(path)
