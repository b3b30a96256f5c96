"""Dual-tree complex wavelet transform (2-D, forward and inverse).

Two parallel real wavelet trees per image axis give four tree
combinations per level. Directional highpass subbands are formed by
quadrature mixing of the four combinations into six complex
orientations per level; the final-level lowpass residual is kept as two
complex matrices (one per tree pairing).

Level 1 uses an odd-length biorthogonal analysis pair (Antonini 9/7),
levels two and up use the quarter-shift 14-tap pair, with the two trees
realised as even/odd polyphase branches at level 1 and as
sample-reversed filters afterwards. Cross-tree symmetric extension
keeps reconstruction near machine precision.
"""

from dataclasses import dataclass

import numpy as np

# Antonini/Barlaud/Mathieu/Daubechies biorthogonal 9,7-tap pair used at
# level 1 (odd length, near linear phase).
BIORT_HI = np.array([
    0.0456358815571251, -0.0287717631142493, -0.2956358815571280,
    0.5575435262285023, -0.2956358815571233, -0.0287717631142531,
    0.0456358815571261])

BIORT_LO = np.array([
    0.0267487574108101, -0.0168641184428747, -0.0782232665289905,
    0.2668641184428729, 0.6029490182363593, 0.2668641184428769,
    -0.0782232665289884, -0.0168641184428753, 0.0267487574108096])

# Synthesis filters follow from the analysis pair with alternate
# coefficients negated.
INV_BIORT_HI = BIORT_LO.copy()
INV_BIORT_HI[1::2] *= -1

INV_BIORT_LO = BIORT_HI.copy()
INV_BIORT_LO[0::2] *= -1

# Kingsbury quarter-shift prototype, 14 taps, used at levels >= 2. Tree
# b lowpass is the prototype itself; tree a is its sample reverse. The
# highpass filters negate alternate samples (counted from the t=0
# sample at index n/2).
QSHIFT_14 = np.array([
    0.0032531427636532, -0.0038832119991585, 0.0346603468448535,
    -0.0388728012688278, -0.1172038876991153, 0.2752953846688820,
    0.7561456438925225, 0.5688104207121227, 0.0118660920337970,
    -0.1067118046866654, 0.0238253847949203, 0.0170252238815540,
    -0.0054394759372741, -0.0045568956284755])

H00B = QSHIFT_14.copy()
H00A = H00B[::-1].copy()

_odd_start = (len(QSHIFT_14) // 2 + 1) % 2
H01A = QSHIFT_14.copy()
H01A[_odd_start::2] = -H01A[_odd_start::2]
H01B = H01A[::-1].copy()
del _odd_start

_QSHIFT_PRE = (len(QSHIFT_14) - 1) // 2
_QSHIFT_POST = len(QSHIFT_14) // 2


@dataclass
class SubbandSet:
    """Output of the forward transform.

    highpass[k] is the level-(k+1) complex array of shape
    (H/2^(k+1), W/2^(k+1), 6). lowpass holds the two final-level
    complex residual matrices, each (H/2^n, W/2^n).
    """

    levels: int
    input_shape: tuple
    highpass: list
    lowpass: tuple

    def final_matrices(self):
        """The sixteen real final-level matrices: real/imaginary parts
        of the two lowpass residuals followed by those of the six
        deepest highpass orientations."""
        mats = []
        for lp in self.lowpass:
            mats.append(lp.real)
            mats.append(lp.imag)
        deepest = self.highpass[-1]
        for k in range(6):
            mats.append(deepest[:, :, k].real)
            mats.append(deepest[:, :, k].imag)
        return mats


def _extend_rows(a, pre, ext, post):
    """Extend a 2-D array along axis 0 by `pre` rows before and `post`
    rows after, drawing rows from `ext` (already reversed by the
    caller). When the extension source is too short the source and the
    array itself are tiled alternately, mirroring symmetric extension
    across tree boundaries."""
    if pre == 0:
        head = a[:0]
    elif pre > ext.shape[0]:
        reps = -(-pre // (ext.shape[0] + a.shape[0]))
        pairs = np.concatenate((a, ext) * reps, axis=0)
        head = pairs[-pre:]
    else:
        head = ext[-pre:]

    if post == 0:
        tail = a[:0]
    elif post > ext.shape[0]:
        reps = -(-post // (ext.shape[0] + a.shape[0]))
        pairs = np.concatenate((ext, a) * reps, axis=0)
        tail = pairs[:post]
    else:
        tail = ext[:post]

    return np.concatenate((head, a, tail), axis=0)


def _conv_cols_valid(x, kernel):
    """Valid-mode convolution of every column of `x` with `kernel`."""
    out_len = x.shape[0] - kernel.size + 1
    out = np.zeros((out_len, x.shape[1]))
    flipped = kernel[::-1]
    for i in range(kernel.size):
        out += flipped[i] * x[i:i + out_len]
    return out


def _filter_cols(a, kernel, ext=None, pre=None, post=None):
    """Filter columns after symmetric extension. Defaults reproduce a
    same-size output for odd kernels; `ext` supplies the opposite-tree
    rows for levels >= 2."""
    if pre is None:
        pre = (kernel.size - 1) // 2
    if post is None:
        post = kernel.size - pre - 1
    if ext is None:
        ext = a[::-1]
    return _conv_cols_valid(_extend_rows(a, pre, ext, post), kernel)


def _upfilter_cols(a, kernel, ext, pre, post):
    """Inverse-transform column step: symmetric extension, two-times
    upsampling (zero interlacing, first output sample zero), then valid
    convolution. Output has twice the rows of `a`."""
    extended = _extend_rows(a, (pre + 1) // 2, ext, post // 2)
    expanded = np.zeros((a.shape[0] * 2 + pre + post, a.shape[1]))
    expanded[(pre + 1) % 2::2] = extended
    return _conv_cols_valid(expanded, kernel)


def _mix(s_aa, s_ab, s_ba, s_bb):
    """Combine the four tree images of one subband type into the two
    quadrature orientations."""
    root_half = np.sqrt(0.5)
    z1 = ((s_aa - s_bb) + 1j * (s_ab + s_ba)) * root_half
    z2 = ((s_aa + s_bb) + 1j * (s_ba - s_ab)) * root_half
    return z1, z2


def _unmix(z1, z2):
    root_half = np.sqrt(0.5)
    s_aa = (z1.real + z2.real) * root_half
    s_bb = (z2.real - z1.real) * root_half
    s_ab = (z1.imag - z2.imag) * root_half
    s_ba = (z1.imag + z2.imag) * root_half
    return s_aa, s_ab, s_ba, s_bb


def dtcwt_forward(gray, levels):
    """Decompose a real H x W matrix into `levels` levels of complex
    directional subbands.

    Requires H and W divisible by 2**levels; callers pad or crop first.
    """
    gray = np.asarray(gray, dtype=float)
    if gray.ndim != 2:
        raise ValueError("input must be a 2-D matrix")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    h, w = gray.shape
    if h % (2 ** levels) or w % (2 ** levels):
        raise ValueError(
            f"dimensions {h}x{w} not divisible by 2^{levels}; pad or crop first")

    # Level 1: one shared image, trees split off as polyphase branches.
    # Column pass then row pass; lowpass trees take (even, odd) phases
    # while highpass trees take the swapped assignment, which realises
    # the half-sample delay between trees.
    lo_c = _filter_cols(gray, BIORT_LO)
    hi_c = _filter_cols(gray, BIORT_HI)
    col = {
        ("lo", "a"): lo_c[0::2], ("lo", "b"): lo_c[1::2],
        ("hi", "b"): hi_c[0::2], ("hi", "a"): hi_c[1::2],
    }

    trees = {}      # (row_tree, col_tree) -> lowpass image
    band = {}       # (type, row_tree, col_tree) -> highpass image
    for (cband, ct), img in col.items():
        lo_r = _filter_cols(img.T, BIORT_LO).T
        hi_r = _filter_cols(img.T, BIORT_HI).T
        row = {
            ("lo", "a"): lo_r[:, 0::2], ("lo", "b"): lo_r[:, 1::2],
            ("hi", "b"): hi_r[:, 0::2], ("hi", "a"): hi_r[:, 1::2],
        }
        for (rband, rt), sub in row.items():
            if cband == "lo" and rband == "lo":
                trees[(rt, ct)] = sub
            elif not (cband == "lo" and rband == "lo"):
                band[(cband + rband, rt, ct)] = sub

    highpass = [_stack_orientations(band)]

    for _ in range(1, levels):
        col = {}
        for ct, lofilt, hifilt in (("a", H00A, H01A), ("b", H00B, H01B)):
            for rt in ("a", "b"):
                ext = trees[(rt, _other(ct))][::-1]
                src = trees[(rt, ct)]
                col[("lo", rt, ct)] = _filter_cols(
                    src, lofilt, ext, _QSHIFT_PRE, _QSHIFT_POST)[0::2]
                col[("hi", rt, ct)] = _filter_cols(
                    src, hifilt, ext, _QSHIFT_PRE, _QSHIFT_POST)[0::2]

        band = {}
        new_trees = {}
        for cband in ("lo", "hi"):
            for ct in ("a", "b"):
                for rt, lofilt, hifilt in (("a", H00A, H01A), ("b", H00B, H01B)):
                    ext = col[(cband, _other(rt), ct)].T[::-1]
                    src = col[(cband, rt, ct)].T
                    lo = _filter_cols(src, lofilt, ext,
                                      _QSHIFT_PRE, _QSHIFT_POST)[0::2].T
                    hi = _filter_cols(src, hifilt, ext,
                                      _QSHIFT_PRE, _QSHIFT_POST)[0::2].T
                    if cband == "lo":
                        new_trees[(rt, ct)] = lo
                        band[("lohi", rt, ct)] = hi
                    else:
                        band[("hilo", rt, ct)] = lo
                        band[("hihi", rt, ct)] = hi
        trees = new_trees
        highpass.append(_stack_orientations(band))

    low1, low2 = _mix_lowpass(trees)
    return SubbandSet(levels=levels, input_shape=(h, w),
                      highpass=highpass, lowpass=(low1, low2))


def _other(t):
    return "b" if t == "a" else "a"


def _stack_orientations(band):
    shape = band[("lohi", "a", "a")].shape
    out = np.zeros((shape[0], shape[1], 6), dtype=complex)
    for idx, btype in enumerate(("lohi", "hilo", "hihi")):
        z1, z2 = _mix(band[(btype, "a", "a")], band[(btype, "a", "b")],
                      band[(btype, "b", "a")], band[(btype, "b", "b")])
        out[:, :, 2 * idx] = z1
        out[:, :, 2 * idx + 1] = z2
    return out


def _unstack_orientations(stacked):
    band = {}
    for idx, btype in enumerate(("lohi", "hilo", "hihi")):
        s_aa, s_ab, s_ba, s_bb = _unmix(stacked[:, :, 2 * idx],
                                        stacked[:, :, 2 * idx + 1])
        band[(btype, "a", "a")] = s_aa
        band[(btype, "a", "b")] = s_ab
        band[(btype, "b", "a")] = s_ba
        band[(btype, "b", "b")] = s_bb
    return band


def _mix_lowpass(trees):
    low1 = trees[("a", "a")] + 1j * trees[("b", "b")]
    low2 = trees[("a", "b")] + 1j * trees[("b", "a")]
    return low1, low2


def _unmix_lowpass(low1, low2):
    return {
        ("a", "a"): low1.real, ("b", "b"): low1.imag,
        ("a", "b"): low2.real, ("b", "a"): low2.imag,
    }


def dtcwt_inverse(subbands):
    """Reconstruct the image from a :class:`SubbandSet`."""
    trees = _unmix_lowpass(*subbands.lowpass)

    for level in range(subbands.levels - 1, 0, -1):
        band = _unstack_orientations(subbands.highpass[level])
        expect = band[("lohi", "a", "a")].shape
        for img in trees.values():
            if img.shape != expect:
                raise ValueError("inconsistent subband dimensions")

        # Row inverse: rebuild the column-pass outputs for both bands.
        col = {}
        for cband in ("lo", "hi"):
            for ct in ("a", "b"):
                if cband == "lo":
                    lo_of = lambda rt: trees[(rt, ct)]
                    hi_of = lambda rt: band[("lohi", rt, ct)]
                else:
                    lo_of = lambda rt: band[("hilo", rt, ct)]
                    hi_of = lambda rt: band[("hihi", rt, ct)]
                for rt, lofilt, hifilt in (("a", H00B, H01B), ("b", H00A, H01A)):
                    ot = _other(rt)
                    part = (
                        _upfilter_cols(lo_of(rt).T, lofilt, lo_of(ot).T[::-1],
                                       _QSHIFT_PRE, _QSHIFT_POST)
                        + _upfilter_cols(hi_of(rt).T, hifilt, hi_of(ot).T[::-1],
                                         _QSHIFT_PRE, _QSHIFT_POST))
                    col[(cband, rt, ct)] = part.T

        # Column inverse: rebuild the parent lowpass trees.
        new_trees = {}
        for rt in ("a", "b"):
            for ct, lofilt, hifilt in (("a", H00B, H01B), ("b", H00A, H01A)):
                ot = _other(ct)
                new_trees[(rt, ct)] = (
                    _upfilter_cols(col[("lo", rt, ct)], lofilt,
                                   col[("lo", rt, ot)][::-1],
                                   _QSHIFT_PRE, _QSHIFT_POST)
                    + _upfilter_cols(col[("hi", rt, ct)], hifilt,
                                     col[("hi", rt, ot)][::-1],
                                     _QSHIFT_PRE, _QSHIFT_POST))
        trees = new_trees

    # Level 1 inverse: interleave tree phases, filter with the
    # synthesis pair and sum.
    band = _unstack_orientations(subbands.highpass[0])
    col = {}
    for cband in ("lo", "hi"):
        for ct in ("a", "b"):
            if cband == "lo":
                lo_of = lambda rt: trees[(rt, ct)]
                hi_of = lambda rt: band[("lohi", rt, ct)]
            else:
                lo_of = lambda rt: band[("hilo", rt, ct)]
                hi_of = lambda rt: band[("hihi", rt, ct)]
            lo_r = _interleave_cols(lo_of("a"), lo_of("b"))
            hi_r = _interleave_cols(hi_of("b"), hi_of("a"))
            col[(cband, ct)] = (_filter_cols(lo_r.T, INV_BIORT_LO).T
                                + _filter_cols(hi_r.T, INV_BIORT_HI).T)

    lo_c = _interleave_rows(col[("lo", "a")], col[("lo", "b")])
    hi_c = _interleave_rows(col[("hi", "b")], col[("hi", "a")])
    return _filter_cols(lo_c, INV_BIORT_LO) + _filter_cols(hi_c, INV_BIORT_HI)


def _interleave_rows(even, odd):
    out = np.empty((even.shape[0] * 2, even.shape[1]))
    out[0::2] = even
    out[1::2] = odd
    return out


def _interleave_cols(even, odd):
    out = np.empty((even.shape[0], even.shape[1] * 2))
    out[:, 0::2] = even
    out[:, 1::2] = odd
    return out
