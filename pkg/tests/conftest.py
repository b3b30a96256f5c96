import numpy as np
import pytest
from PIL import Image

from autotag.dataset import load_manifest


def solid_image(color, size=(40, 40)):
    arr = np.zeros((size[0], size[1], 3), dtype=np.uint8)
    arr[:, :] = color
    return arr


def random_image(rng, size=(40, 40)):
    return rng.integers(0, 256, size=(size[0], size[1], 3), dtype=np.uint8)


def write_dataset(tmp_path, entries):
    """Create PNG files plus a manifest; entries are
    (filename, pixel array, [tags]) triples. Returns the manifest path."""
    lines = []
    for filename, pixels, tags in entries:
        if pixels is not None:
            Image.fromarray(pixels).save(tmp_path / filename)
        lines.append(f"{filename}\t{','.join(tags)}")
    manifest = tmp_path / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


@pytest.fixture
def toy_manifest(tmp_path):
    """Three images with the nested tag pattern k1 in 1, k2 in 2, k3 in
    all 3 (the worked low-frequency example)."""
    rng = np.random.default_rng(0)
    entries = [
        ("img1.png", random_image(rng), ["k1", "k2", "k3"]),
        ("img2.png", random_image(rng), ["k2", "k3"]),
        ("img3.png", random_image(rng), ["k3"]),
    ]
    return write_dataset(tmp_path, entries)


@pytest.fixture
def toy_dataset(toy_manifest):
    return load_manifest(toy_manifest)


def fd_gradient(loss_fn, arr, eps=1e-5):
    """Central finite differences over every element of `arr`."""
    flat = np.atleast_1d(arr).ravel()
    out = np.zeros(flat.size)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        lp = loss_fn()
        flat[i] = old - eps
        lm = loss_fn()
        flat[i] = old
        out[i] = (lp - lm) / (2.0 * eps)
    return out


def rel_error(fd, analytic):
    fd = np.asarray(fd).ravel()
    analytic = np.atleast_1d(analytic).ravel()
    denom = max(np.linalg.norm(fd), np.linalg.norm(analytic), 1e-12)
    return np.linalg.norm(fd - analytic) / denom
