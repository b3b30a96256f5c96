import numpy as np
import pytest

from autotag.wavelet import SubbandSet, dtcwt_forward, dtcwt_inverse


def disk_image(h, w, cy, cx, radius):
    yy, xx = np.mgrid[0:h, 0:w]
    return ((yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2).astype(float)


class TestForward:
    def test_dimension_rule_64(self):
        sb = dtcwt_forward(np.zeros((64, 64)), 4)
        assert sb.highpass[-1].shape == (4, 4, 6)
        assert sb.lowpass[0].shape == (4, 4)
        assert sb.lowpass[1].shape == (4, 4)

    def test_dimension_rule_per_level(self):
        sb = dtcwt_forward(np.zeros((128, 64)), 3)
        for n, hp in enumerate(sb.highpass, start=1):
            assert hp.shape == (128 // 2 ** n, 64 // 2 ** n, 6)

    def test_zero_image_zero_coefficients(self):
        sb = dtcwt_forward(np.zeros((32, 32)), 4)
        for hp in sb.highpass:
            assert np.all(hp == 0)
        assert np.all(sb.lowpass[0] == 0) and np.all(sb.lowpass[1] == 0)

    def test_sixteen_final_matrices(self):
        sb = dtcwt_forward(np.random.default_rng(0).standard_normal((64, 64)), 4)
        mats = sb.final_matrices()
        assert len(mats) == 16
        for m in mats:
            assert m.shape == (4, 4)
            assert not np.iscomplexobj(m)

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError, match="not divisible"):
            dtcwt_forward(np.zeros((40, 40)), 4)   # 40 % 16 != 0

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            dtcwt_forward(np.zeros(64), 2)


class TestRoundTrip:
    def test_reconstruction_error(self):
        rng = np.random.default_rng(42)
        for shape in ((32, 32), (64, 64), (64, 32)):
            x = rng.standard_normal(shape)
            y = dtcwt_inverse(dtcwt_forward(x, 4))
            assert np.max(np.abs(x - y)) < 1e-6

    def test_zero_subbands_zero_image(self):
        sb = dtcwt_forward(np.zeros((32, 32)), 2)
        assert np.max(np.abs(dtcwt_inverse(sb))) < 1e-12

    def test_energy_preserved(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((64, 64))
        y = dtcwt_inverse(dtcwt_forward(x, 4))
        e_in = np.sum(x ** 2)
        e_out = np.sum(y ** 2)
        assert abs(e_in - e_out) / e_in < 1e-9

    def test_inconsistent_subbands_rejected(self):
        sb = dtcwt_forward(np.zeros((64, 64)), 3)
        bad = SubbandSet(levels=3, input_shape=(64, 64),
                         highpass=sb.highpass,
                         lowpass=(sb.lowpass[0][:2, :2], sb.lowpass[1][:2, :2]))
        with pytest.raises(ValueError, match="inconsistent"):
            dtcwt_inverse(bad)


class TestShiftInvariance:
    def test_highpass_energy_stable_under_single_pixel_shift(self):
        base = disk_image(64, 64, 30, 30, 6)
        down = disk_image(64, 64, 31, 30, 6)
        right = disk_image(64, 64, 30, 31, 6)
        sb0 = dtcwt_forward(base, 4)
        for shifted in (down, right):
            sb1 = dtcwt_forward(shifted, 4)
            for lvl in range(4):
                e0 = np.sum(np.abs(sb0.highpass[lvl]) ** 2)
                e1 = np.sum(np.abs(sb1.highpass[lvl]) ** 2)
                assert abs(e0 - e1) / e0 < 0.10


class TestLinearity:
    def test_transform_is_linear(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((32, 32))
        b = rng.standard_normal((32, 32))
        sa = dtcwt_forward(a, 3)
        sb = dtcwt_forward(b, 3)
        sab = dtcwt_forward(2.0 * a - 0.5 * b, 3)
        for lvl in range(3):
            np.testing.assert_allclose(
                sab.highpass[lvl],
                2.0 * sa.highpass[lvl] - 0.5 * sb.highpass[lvl], atol=1e-10)
