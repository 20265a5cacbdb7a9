"""Property-based invariants (hypothesis)."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from hdrcal import (
    IrradianceMap,
    WeightingScheme,
    capture,
    default_sensor,
    invert_crf,
    mean_response,
    noiseless,
    plan_exposures,
    scale_illumination,
    weight,
)
from hdrcal.formats import fmt_num, hdrf_bytes, pgm16_bytes, read_hdrf, read_pgm

settings.register_profile("suite", derandomize=True, deadline=None)
settings.load_profile("suite")

CFG = default_sensor()
QUIET = noiseless(CFG)

finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300
)


class TestResponseInvariants:
    @given(
        irr=st.floats(min_value=1e-3, max_value=1e9),
        t=st.floats(min_value=1e-3, max_value=0.1),
        k=st.floats(min_value=0.1, max_value=10.0),
    )
    def test_reciprocity(self, irr, t, k):
        # only the product irradiance * time matters
        a = mean_response(CFG, irr, t)
        b = mean_response(CFG, irr * k, t / k)
        assert b == pytest.approx(a, rel=1e-9)

    @given(
        lo=st.floats(min_value=0.0, max_value=1e8),
        hi=st.floats(min_value=0.0, max_value=1e8),
        t=st.floats(min_value=1e-4, max_value=1.0),
    )
    def test_forward_monotone(self, lo, hi, t):
        if lo > hi:
            lo, hi = hi, lo
        assert mean_response(CFG, lo, t) <= mean_response(CFG, hi, t)

    @given(
        v1=st.floats(min_value=0.0, max_value=66000.0),
        v2=st.floats(min_value=0.0, max_value=66000.0),
    )
    def test_invert_monotone(self, shipped_crf, v1, v2):
        if v1 > v2:
            v1, v2 = v2, v1
        assert invert_crf(shipped_crf, v1) <= invert_crf(shipped_crf, v2)

    @given(irr=st.floats(min_value=31.63, max_value=9.99e5))
    def test_forward_invert_round_trip(self, shipped_crf, irr):
        v = mean_response(CFG, irr, CFG.reference_exposure)
        assert invert_crf(shipped_crf, float(v)) == pytest.approx(irr, rel=1e-9)


class TestPlanInvariants:
    @given(
        hdr=st.floats(min_value=1.0, max_value=200.0),
        ldr=st.floats(min_value=1.0, max_value=80.0),
    )
    def test_cover_and_minimality(self, hdr, ldr):
        plan = plan_exposures(hdr, ldr, 1e-4, (1e-12, 1e12))
        assert plan.n_images * ldr >= hdr - 1e-9
        if plan.n_images > 1:
            assert (plan.n_images - 1) * ldr < hdr + 1e-9
        times = plan.exposure_times
        assert all(b > a for a, b in zip(times, times[1:]))
        for p in plan.factors:
            assert 20.0 * math.log10(p) <= ldr + 1e-9
        if plan.n_images > 1:
            total = 20.0 * sum(math.log10(p) for p in plan.factors)
            assert ldr + total == pytest.approx(hdr, abs=1e-9)


class TestSceneInvariants:
    @given(
        data=hnp.arrays(
            np.float64,
            hnp.array_shapes(min_dims=2, max_dims=2, max_side=8),
            elements=st.floats(min_value=0.0, max_value=1e12),
        ),
        k=st.floats(min_value=1e-6, max_value=1e6),
    )
    def test_scale_is_pointwise_multiply(self, data, k):
        scene = IrradianceMap(values=data)
        scaled = scale_illumination(scene, k)
        assert np.array_equal(scaled.values, data * k)


class TestCaptureContract:
    @settings(max_examples=25)
    @given(
        level=st.floats(min_value=0.0, max_value=1e7),
        t=st.floats(min_value=1e-4, max_value=1.0),
    )
    def test_noiseless_is_rounded_response(self, level, t):
        scene = IrradianceMap(values=np.full((4, 4), level))
        img = capture(QUIET, scene, t, seed=0)
        m = mean_response(QUIET, level, t)
        expect = int(np.clip(np.floor(m + 0.5), 0, 65535))
        assert np.all(img.samples == expect)


class TestWeightBounds:
    @given(z=st.floats(min_value=0.0, max_value=65535.0))
    def test_normalized_schemes_unit_interval(self, shipped_crf, z):
        for variant in ("gaussian_time", "slope_weight", "snr"):
            w = weight(WeightingScheme(variant), z, shipped_crf)
            assert 0.0 <= w <= 1.0 + 1e-12

    @given(z=st.floats(min_value=0.0, max_value=65535.0))
    def test_hat_triangle(self, z):
        w = weight(WeightingScheme("hat"), z)
        assert 0.0 <= w <= 32767.5
        assert w == min(z, 65535.0 - z)


class TestFormatRoundTrips:
    @given(x=finite_floats)
    def test_fmt_num_floats(self, x):
        assert float(fmt_num(x)) == x

    @given(x=st.integers(min_value=-(2**62), max_value=2**62))
    def test_fmt_num_integers(self, x):
        assert int(fmt_num(x)) == x

    @given(
        arr=hnp.arrays(
            np.uint16,
            hnp.array_shapes(min_dims=2, max_dims=2, max_side=16),
            elements=st.integers(min_value=0, max_value=65535),
        )
    )
    def test_pgm16_round_trip(self, arr):
        back = read_pgm_bytes(pgm16_bytes(arr))
        assert np.array_equal(back, arr)

    @given(
        arr=hnp.arrays(
            np.float32,
            hnp.array_shapes(min_dims=2, max_dims=2, max_side=16),
            elements=st.floats(
                min_value=0.0, max_value=float(np.float32(1e20)),
                allow_nan=False, width=32
            ),
        )
    )
    def test_hdrf_round_trip(self, arr):
        back = _read_via_tempfile(hdrf_bytes(arr), read_hdrf)
        assert np.array_equal(back, arr)


def read_pgm_bytes(data: bytes):
    return _read_via_tempfile(data, read_pgm)


def _read_via_tempfile(data: bytes, reader):
    import tempfile
    import os

    fd, path = tempfile.mkstemp()
    try:
        os.write(fd, data)
        os.close(fd)
        return reader(path)
    finally:
        os.unlink(path)
