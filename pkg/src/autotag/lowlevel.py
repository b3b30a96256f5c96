"""Fused low-level descriptor: ton co-occurrence statistics plus
region-wise wavelet singular-value vectors.

For the texture path the image is resized to a fixed square (default
128) so the dyadic decomposition depth and descriptor length are
constant across a dataset. The five regions are the four quadrants plus
a centred rectangle of half width and half height; each region is
decomposed separately and the singular values of its sixteen final
real subband matrices are concatenated.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DataError
from .texture import build_dcton, glcm_stats, grayscale, DEFAULT_OFFSETS
from .wavelet import dtcwt_forward

SINGULAR_VALUE_FLOOR = 1e-10


@dataclass
class LowLevelConfig:
    resize: int = 128
    wavelet_levels: int = 4
    glcm_levels: int = 16
    color_tolerance: float = 8.0
    glcm_offsets: tuple = DEFAULT_OFFSETS


@dataclass
class LowLevelDescriptor:
    dcton: np.ndarray     # the 4 co-occurrence statistics
    texture: np.ndarray   # concatenated per-region singular values
    fused: np.ndarray     # concat(dcton, texture)


def region_slices(h, w):
    """Row/column slices of the five regions: four quadrants then the
    centred half-size rectangle."""
    h2, w2 = h // 2, w // 2
    return [
        (slice(0, h2), slice(0, w2)),
        (slice(0, h2), slice(w2, w)),
        (slice(h2, h), slice(0, w2)),
        (slice(h2, h), slice(w2, w)),
        (slice(h // 4, h // 4 + h2), slice(w // 4, w // 4 + w2)),
    ]


def segment_regions(h, w):
    """Boolean masks A1..A5 for the five-region layout."""
    if h < 32 or w < 32:
        raise DataError(f"dims {h}x{w} below the 32x32 minimum")
    masks = []
    for rs, cs in region_slices(h, w):
        m = np.zeros((h, w), dtype=bool)
        m[rs, cs] = True
        masks.append(m)
    return masks


def svd_values(m):
    """Non-increasing singular values of a real matrix, with values
    below the numerical floor clamped to exact zero."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise DataError("matrix has non-finite entries")
    sigmas = np.linalg.svd(m, compute_uv=False)
    sigmas[sigmas < SINGULAR_VALUE_FLOOR] = 0.0
    return sigmas


def _resized_gray(pixels, size):
    gray = grayscale(pixels)
    img = Image.fromarray(gray.astype(np.float32), mode="F")
    resized = img.resize((size, size), Image.BILINEAR)
    return np.asarray(resized, dtype=float)


def _region_sigmas(region, levels):
    subbands = dtcwt_forward(region, levels)
    return np.concatenate([svd_values(m) for m in subbands.final_matrices()])


def descriptor_length(config=LowLevelConfig()):
    """Fused descriptor length implied by a config (4 ton statistics
    plus, per region, min(rows, cols) values for each of 16 matrices)."""
    side = config.resize // 2 // (2 ** config.wavelet_levels)
    return 4 + 5 * 16 * side


def extract_lowlevel(record, config=LowLevelConfig()):
    """Full fused low-level descriptor of one image record."""
    if record.pixels is None:
        raise DataError(f"record {record.id!r} has no pixels")
    size = config.resize
    if size % (2 ** config.wavelet_levels) != 0:
        raise DataError(
            f"resize {size} not divisible by 2^{config.wavelet_levels}")

    dcton = build_dcton(record.pixels, color_tolerance=config.color_tolerance,
                        levels=config.glcm_levels)
    stats = glcm_stats(dcton, offsets=config.glcm_offsets).as_vector()

    gray = _resized_gray(record.pixels, size)
    texture = np.concatenate([
        _region_sigmas(gray[rs, cs], config.wavelet_levels)
        for rs, cs in region_slices(size, size)])

    return LowLevelDescriptor(dcton=stats, texture=texture,
                              fused=np.concatenate([stats, texture]))
