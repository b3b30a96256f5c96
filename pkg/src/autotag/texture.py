"""Color-ton preprocessing and co-occurrence statistics.

The ton pass scans non-overlapping 2x2 blocks of the RGB image with
four pair patterns, one per block edge (top, bottom, left, right).
When a pattern's two pixels agree within ``color_tolerance`` on every
channel, both pixels join the block's ton component and are replaced by
the component's mean grey value; all other pixels keep their own grey
value. A checkerboard therefore produces no components at zero
tolerance. Co-occurrence statistics are then taken over a quantisation
of that intermediate image.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

# Rec.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])

DEFAULT_OFFSETS = ((1, 0), (0, 1))


def grayscale(rgb):
    """Luma of an H x W x 3 uint8/float image, as float in [0, 255]."""
    return np.asarray(rgb, dtype=float) @ _LUMA


@dataclass
class DctonImage:
    values: np.ndarray      # H x W averaged intensities in [0, 255]
    quantized: np.ndarray   # H x W integers in [0, levels)
    levels: int


def build_dcton(rgb, color_tolerance=8.0, levels=16):
    rgb = np.asarray(rgb, dtype=float)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DataError("expected an H x W x 3 RGB image")
    h, w = rgb.shape[:2]
    if h < 2 or w < 2:
        raise DataError("image too small for 2x2 ton scanning")
    if levels < 2:
        raise DataError("need at least 2 quantization levels")
    if color_tolerance < 0:
        raise DataError("color_tolerance must be >= 0")

    gray = grayscale(rgb)
    values = gray.copy()

    # Non-overlapping 2x2 blocks; a trailing odd row/column stays
    # untouched (those pixels keep their grey value).
    he, we = h - h % 2, w - w % 2
    tl = rgb[0:he:2, 0:we:2]
    tr = rgb[0:he:2, 1:we:2]
    bl = rgb[1:he:2, 0:we:2]
    br = rgb[1:he:2, 1:we:2]

    def close(p, q):
        return np.all(np.abs(p - q) <= color_tolerance, axis=2)

    m_top = close(tl, tr)
    m_bottom = close(bl, br)
    m_left = close(tl, bl)
    m_right = close(tr, br)

    part_tl = m_top | m_left
    part_tr = m_top | m_right
    part_bl = m_bottom | m_left
    part_br = m_bottom | m_right

    g_tl = gray[0:he:2, 0:we:2]
    g_tr = gray[0:he:2, 1:we:2]
    g_bl = gray[1:he:2, 0:we:2]
    g_br = gray[1:he:2, 1:we:2]

    total = (np.where(part_tl, g_tl, 0.0) + np.where(part_tr, g_tr, 0.0)
             + np.where(part_bl, g_bl, 0.0) + np.where(part_br, g_br, 0.0))
    count = (part_tl.astype(int) + part_tr.astype(int)
             + part_bl.astype(int) + part_br.astype(int))
    with np.errstate(invalid="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), 0.0)

    out_tl = values[0:he:2, 0:we:2]
    out_tr = values[0:he:2, 1:we:2]
    out_bl = values[1:he:2, 0:we:2]
    out_br = values[1:he:2, 1:we:2]
    out_tl[part_tl] = mean[part_tl]
    out_tr[part_tr] = mean[part_tr]
    out_bl[part_bl] = mean[part_bl]
    out_br[part_br] = mean[part_br]

    quantized = np.clip((values * levels / 256.0).astype(int), 0, levels - 1)
    return DctonImage(values=values, quantized=quantized, levels=levels)


@dataclass
class GlcmStats:
    contrast: float
    correlation: float
    energy: float
    homogeneity: float

    def as_vector(self):
        return np.array([self.contrast, self.correlation,
                         self.energy, self.homogeneity])


def _cooccurrence(quantized, levels, dx, dy):
    """Symmetric, normalised co-occurrence matrix for one offset; the
    offset is (dx, dy) = (column step, row step)."""
    h, w = quantized.shape
    if h <= abs(dy) or w <= abs(dx):
        raise DataError(f"image smaller than offset ({dx}, {dy})")
    a = quantized[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    b = quantized[max(0, dy):h + min(0, dy), max(0, dx):w + min(0, dx)]
    counts = np.zeros((levels, levels))
    np.add.at(counts, (a.ravel(), b.ravel()), 1.0)
    counts = counts + counts.T
    return counts / counts.sum()


def glcm_stats(dcton, offsets=DEFAULT_OFFSETS):
    """Contrast, correlation, energy and homogeneity of the averaged
    co-occurrence matrix. Correlation of a zero-variance image is 0 by
    convention."""
    levels = dcton.levels
    p = np.zeros((levels, levels))
    for dx, dy in offsets:
        p += _cooccurrence(dcton.quantized, levels, dx, dy)
    p /= len(offsets)

    idx = np.arange(levels, dtype=float)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")

    contrast = float(np.sum((ii - jj) ** 2 * p))
    energy = float(np.sum(p ** 2))
    homogeneity = float(np.sum(p / (1.0 + (ii - jj) ** 2)))

    mu_i = float(np.sum(ii * p))
    mu_j = float(np.sum(jj * p))
    var_i = float(np.sum((ii - mu_i) ** 2 * p))
    var_j = float(np.sum((jj - mu_j) ** 2 * p))
    if var_i <= 0.0 or var_j <= 0.0:
        correlation = 0.0
    else:
        cov = float(np.sum((ii - mu_i) * (jj - mu_j) * p))
        correlation = cov / np.sqrt(var_i * var_j)

    return GlcmStats(contrast=contrast, correlation=correlation,
                     energy=energy, homogeneity=homogeneity)
