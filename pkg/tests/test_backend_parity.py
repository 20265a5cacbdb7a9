"""Compiled kernels must agree with the pure-numpy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from hdrcal import _kernels_py as py

cy = pytest.importorskip(
    "hdrcal._kernels", reason="compiled extension not built"
)


@pytest.fixture(scope="module")
def table(shipped_crf):
    nodes_v, nodes_logi, nodes_irr = shipped_crf.nodes()
    return nodes_v, nodes_logi, nodes_irr, shipped_crf.black_level


def test_backend_labels():
    assert py.BACKEND == "python"
    assert cy.BACKEND == "cython"


def test_forward_parity(table):
    nodes_v, nodes_logi, nodes_irr, dark = table
    nodes_logh = nodes_logi  # reference exposure: H == I
    logh = np.linspace(nodes_logh[0] - 2.0, nodes_logh[-1] + 2.0, 100001)
    a = cy.forward_kernel(logh, nodes_logh, nodes_v, dark)
    b = py.forward_kernel(logh, nodes_logh, nodes_v, dark)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0.0)


def test_capture_bit_exact(table):
    nodes_v, _, _, dark = table
    rng = np.random.default_rng(123)
    n = 65536
    mean_v = rng.uniform(0.0, 66000.0, n)
    u = rng.random(n)
    g = rng.standard_normal(n)
    args = (mean_v, np.full(n, 0.012), 2.0, 0.3, dark, 65535, u, g)
    a = cy.capture_kernel(*args)
    b = py.capture_kernel(*args)
    assert a.dtype == b.dtype == np.uint16
    assert np.array_equal(a, b)


def test_invert_parity(table):
    nodes_v, nodes_logi, nodes_irr, dark = table
    v = np.linspace(0.0, 66000.0, 100001)
    a = cy.invert_kernel(v, nodes_v, nodes_logi, nodes_irr, dark)
    b = py.invert_kernel(v, nodes_v, nodes_logi, nodes_irr, dark)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0.0)


def test_fuse_parity(table):
    nodes_v, nodes_logi, nodes_irr, dark = table
    rng = np.random.default_rng(7)
    stack = rng.uniform(0.0, 66000.0, (4, 20000))
    scales = np.array([64.0, 16.0, 4.0, 1.0])
    args = (stack, scales, 389.6, 37486.7, nodes_v, nodes_logi, nodes_irr, dark)
    rad_a, cnt_a, fl_a = cy.fuse_kernel(*args)
    rad_b, cnt_b, fl_b = py.fuse_kernel(*args)
    np.testing.assert_allclose(rad_a, rad_b, rtol=1e-12, atol=0.0)
    assert np.array_equal(cnt_a, cnt_b)
    assert np.array_equal(fl_a, fl_b)


def test_weighted_merge_parity():
    rng = np.random.default_rng(11)
    est = rng.uniform(0.0, 1e6, (3, 10000))
    wts = rng.uniform(0.0, 1.0, (3, 10000))
    wts[:, :100] = 0.0  # exercise the zero-weight fallback
    eps = float(np.finfo(np.float32).tiny)
    for log_domain in (False, True):
        a = cy.weighted_merge_kernel(est, wts, log_domain, eps)
        b = py.weighted_merge_kernel(est, wts, log_domain, eps)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=0.0)


def test_capture_through_public_api_bit_exact(small_scene):
    # the whole capture path must not depend on the backend
    from hdrcal import capture, default_sensor

    cfg = default_sensor()
    img = capture(cfg, small_scene, 1e-3, seed=42)
    code = (
        "from hdrcal import capture, default_sensor, IrradianceMap\n"
        "import numpy as np, sys\n"
        "import hdrcal\n"
        "assert hdrcal.BACKEND == 'python', hdrcal.BACKEND\n"
        "vals = np.zeros((32, 32)); vals[:16] = 40000.0; vals[16:] = 100.0\n"
        "img = capture(default_sensor(), IrradianceMap(values=vals), 1e-3, seed=42)\n"
        "sys.stdout.buffer.write(img.samples.tobytes())\n"
    )
    env = dict(os.environ, HDRCAL_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, check=True
    )
    assert out.stdout == img.samples.tobytes()


def test_env_var_forces_python_backend():
    code = "import hdrcal; print(hdrcal.BACKEND)"
    env = dict(os.environ, HDRCAL_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"
