"""Weighted-fusion reference implementations."""

import math

import numpy as np
import pytest

from hdrcal import (
    WeightingScheme,
    default_sensor,
    fuse_ladder,
    extract_linear_range,
    merge_weighted,
    proposed_with_n_images,
    weight,
)
from hdrcal.baselines import LOG_EPS, VARIANTS
from hdrcal.errors import ConfigError, PlanMismatch

from test_fusion import decade_lr, decade_table, raw


class TestSchemeValidation:
    def test_variants_frozen(self):
        assert VARIANTS == ("hat", "gaussian_time", "slope_weight", "snr")

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            WeightingScheme("triangle")

    def test_nonpositive_w(self):
        with pytest.raises(ConfigError):
            WeightingScheme("gaussian_time", w_param=0.0)

    def test_range_properties(self):
        s = WeightingScheme("hat")
        assert (s.z_min, s.z_mid, s.z_max) == (0, 32768, 65535)

    def test_crf_required_for_table_schemes(self):
        for variant in ("slope_weight", "snr"):
            with pytest.raises(ConfigError):
                weight(WeightingScheme(variant), 1000.0)


class TestHatWeight:
    def test_matches_min_form(self):
        # triangular: w(z) = min(z - z_min, z_max - z)
        scheme = WeightingScheme("hat")
        z = np.linspace(0, 65535, 1000)
        assert np.array_equal(
            weight(scheme, z), np.minimum(z, 65535.0 - z)
        )

    def test_pinned_points(self):
        scheme = WeightingScheme("hat")
        assert weight(scheme, 1000.0) == 1000.0
        assert weight(scheme, 40000.0) == 25535.0
        assert weight(scheme, 0.0) == 0.0
        assert weight(scheme, 65535.0) == 0.0
        assert weight(scheme, 32767.0) == 32767.0

    def test_scalar_in_float_out(self):
        assert isinstance(weight(WeightingScheme("hat"), 100), float)


class TestGaussianWeight:
    def test_anchor_points(self):
        scheme = WeightingScheme("gaussian_time")
        assert weight(scheme, 0.0) == 0.0
        assert weight(scheme, 65535.0) == pytest.approx(0.0, abs=1e-15)
        assert weight(scheme, 32768.0) == 1.0

    def test_quarter_scale_value(self):
        # u = -1/2 at z = 16384: w = (e^-1 - e^-4) / (1 - e^-4)
        expect = (math.exp(-1.0) - math.exp(-4.0)) / (1.0 - math.exp(-4.0))
        got = weight(WeightingScheme("gaussian_time"), 16384.0)
        assert got == pytest.approx(expect, abs=1e-15)
        assert got == pytest.approx(0.3560857401120277, abs=1e-12)

    def test_bounded_and_symmetric_in_u(self):
        scheme = WeightingScheme("gaussian_time")
        z = np.linspace(0, 65535, 4001)
        w = weight(scheme, z)
        assert np.all(w >= 0.0) and np.all(w <= 1.0)
        # same |u| on both sides gives the same weight
        lo = weight(scheme, 32768.0 - 0.25 * 32768)
        hi = weight(scheme, 32768.0 + 0.25 * 32767)
        assert lo == pytest.approx(hi, rel=1e-12)

    def test_w_param_sharpens(self):
        soft = weight(WeightingScheme("gaussian_time", w_param=1.0), 16384.0)
        sharp = weight(WeightingScheme("gaussian_time", w_param=16.0), 16384.0)
        assert sharp < soft


class TestSlopeWeight:
    def test_decade_table_exact(self):
        crf = decade_table()
        scheme = WeightingScheme("slope_weight")
        # segment slopes are 9, 90, 900, 9000 counts/decade
        assert weight(scheme, 5.0, crf) == pytest.approx(9.0 / 9000.0, rel=1e-12)
        assert weight(scheme, 2000.0, crf) == 1.0
        assert weight(scheme, 10000.0, crf) == 1.0  # top node stays in-domain

    def test_zero_outside_table(self):
        crf = decade_table()
        scheme = WeightingScheme("slope_weight")
        assert weight(scheme, 0.5, crf) == 0.0
        assert weight(scheme, 10001.0, crf) == 0.0

    def test_bounded_on_measured_table(self, shipped_crf):
        z = np.linspace(0, 65535, 4001)
        w = weight(WeightingScheme("slope_weight"), z, shipped_crf)
        assert np.all(w >= 0.0) and np.all(w <= 1.0)
        assert w.max() == 1.0


class TestSnrWeight:
    def test_decade_table_exact(self):
        # irr == v makes every segment's irradiance-per-count slope 1, so
        # the weight is just invert(z) / top_irradiance
        crf = decade_table()
        scheme = WeightingScheme("snr")
        assert weight(scheme, 10000.0, crf) == pytest.approx(1.0, rel=1e-12)
        assert weight(scheme, 10.0, crf) == pytest.approx(1e-3, rel=1e-12)
        assert weight(scheme, 0.5, crf) == 0.0
        assert weight(scheme, 20000.0, crf) == 0.0

    def test_supremum_reached_on_measured_table(self, shipped_crf):
        z = np.linspace(0, 65535, 30001)
        w = weight(WeightingScheme("snr"), z, shipped_crf)
        assert np.all(w >= 0.0) and np.all(w <= 1.0)
        assert w.max() == pytest.approx(1.0, rel=1e-4)


class TestMergeWeighted:
    def test_linear_domain_oracle(self):
        # gaussian_time: rad = sum(w * t^2 * est) / sum(w * t^2)
        crf = decade_table()
        scheme = WeightingScheme("gaussian_time")
        img0 = raw([[100]], 1.0)
        img1 = raw([[1000]], 10.0)
        out = merge_weighted([img0, img1], crf, scheme)
        w0 = weight(scheme, 100.0) * 1.0**2
        w1 = weight(scheme, 1000.0) * 10.0**2
        est0, est1 = 100.0 * 10.0, 1000.0 * 1.0
        expect = (w0 * est0 + w1 * est1) / (w0 + w1)
        assert out.radiance.values[0, 0] == pytest.approx(expect, rel=1e-12)
        assert out.reference_exposure == 10.0

    def test_log_domain_oracle(self):
        # hat combines ln(est); distinct estimates expose the domain choice
        crf = decade_table()
        scheme = WeightingScheme("hat")
        img0 = raw([[100]], 1.0)
        img1 = raw([[2000]], 10.0)
        out = merge_weighted([img0, img1], crf, scheme)
        est0 = 100.0 * 10.0
        est1 = 10.0 ** (3.0 + (2000.0 - 1000.0) / 9000.0)
        w0, w1 = 100.0, 2000.0
        expect = math.exp((w0 * math.log(est0) + w1 * math.log(est1)) / (w0 + w1))
        assert out.radiance.values[0, 0] == pytest.approx(expect, rel=1e-9)
        linear = (w0 * est0 + w1 * est1) / (w0 + w1)
        assert abs(out.radiance.values[0, 0] - linear) > 1.0

    def test_zero_weight_fallback_linear(self):
        # both samples sit where the gaussian weight is exactly zero
        crf = decade_table()
        out = merge_weighted(
            [raw([[0]], 1.0), raw([[65535]], 10.0)],
            crf, WeightingScheme("gaussian_time"),
        )
        expect = (0.0 + 10000.0) / 2.0  # plain mean of the estimates
        assert out.radiance.values[0, 0] == pytest.approx(expect, rel=1e-12)
        assert out.validity_count[0, 0] == 0

    def test_zero_weight_fallback_log(self):
        crf = decade_table()
        out = merge_weighted(
            [raw([[0]], 1.0), raw([[0]], 10.0)], crf, WeightingScheme("hat")
        )
        # both estimates are 0, floored to eps before ln
        assert out.radiance.values[0, 0] == pytest.approx(LOG_EPS, rel=1e-12)

    def test_time_squared_tilts_toward_long_exposure(self):
        crf = decade_table()
        imgs = [raw([[1000]], 1.0), raw([[1000]], 2.0)]
        out = merge_weighted(imgs, crf, WeightingScheme("gaussian_time"))
        est0, est1 = 1000.0 * 2.0, 1000.0 * 1.0
        expect = (1.0 * est0 + 4.0 * est1) / 5.0
        assert out.radiance.values[0, 0] == pytest.approx(expect, rel=1e-12)

    def test_no_validity_filtering(self, shipped_crf):
        # saturated and dark counts still contribute whenever w > 0
        out = merge_weighted(
            [raw([[200]], 1.0), raw([[60000]], 10.0)],
            shipped_crf, WeightingScheme("hat"),
        )
        assert out.validity_count[0, 0] == 2
        assert np.all(out.sentinel_mask == 0)

    def test_needs_two_images(self):
        with pytest.raises(PlanMismatch):
            merge_weighted([raw([[1]], 1.0)], decade_table(),
                           WeightingScheme("hat"))

    def test_rejects_mixed_shapes(self):
        with pytest.raises(PlanMismatch):
            merge_weighted(
                [raw([[1]], 1.0), raw([[1, 2]], 2.0)],
                decade_table(), WeightingScheme("hat"),
            )


class TestProposedWithNImages:
    def test_matches_fuse_ladder(self):
        crf, lr = decade_table(), decade_lr()
        imgs = [raw([[100, 50]], 1.0), raw([[900, 500]], 5.0)]
        a = proposed_with_n_images(imgs, crf, lr)
        b = fuse_ladder(imgs, crf, lr)
        assert np.array_equal(a.radiance.values, b.radiance.values)
        assert np.array_equal(a.validity_count, b.validity_count)

    def test_plan_enforced_when_given(self):
        from hdrcal import plan_exposures

        crf, lr = decade_table(), decade_lr()
        plan = plan_exposures(80.0, 40.0, 1.0, (1e-6, 1e3))
        with pytest.raises(PlanMismatch):
            proposed_with_n_images([raw([[1]], 1.0)], crf, lr, plan)
