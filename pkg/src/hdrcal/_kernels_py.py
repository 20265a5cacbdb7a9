"""Pure-numpy kernels: response evaluation, capture noise, fusion loops.

This module is the reference implementation; `_kernels.pyx` mirrors it
element-for-element. Two rules keep the backends bit-compatible on the
integer sample path:

- transcendentals feeding quantization (log10 of H, the anomaly logistic)
  are evaluated by the caller in numpy and passed in as arrays, so both
  backends see identical operands;
- accumulations run in explicit image order (never numpy's pairwise
  reduction), matching the C loops' rounding.

Float radiance outputs use pow/exp internally and may differ between
backends in the last couple of ulps; callers treat them as reals.

Sentinel codes emitted by `fuse_kernel`: 0 = ok, 1 = clamped_bright,
2 = clamped_dark.
"""

import numpy as np

BACKEND = "python"


def forward_kernel(logh, nodes_logh, nodes_v, dark):
    """Piecewise-linear response in (log10 H, v) space.

    `logh` may contain -inf (zero irradiance); anything below the first
    node floors at the dark level, anything above the last node clamps
    to the last node's output.
    """
    logh = np.asarray(logh, dtype=np.float64)
    out = np.empty_like(logh)
    below = logh < nodes_logh[0]
    above = logh >= nodes_logh[-1]
    mid = ~(below | above)
    out[below] = dark
    out[above] = nodes_v[-1]
    if np.any(mid):
        x = logh[mid]
        k = np.searchsorted(nodes_logh, x, side="right") - 1
        slope = (nodes_v[k + 1] - nodes_v[k]) / (nodes_logh[k + 1] - nodes_logh[k])
        out[mid] = nodes_v[k] + (x - nodes_logh[k]) * slope
    return out


def capture_kernel(mean_v, p_anom, read_sigma, shot_coeff, dark, full_scale,
                   u, g):
    """Quantized noisy samples from mean responses plus pre-drawn variates.

    `p_anom` is the per-pixel saturated-trigger probability (precomputed),
    `u` (uniform [0,1)) decides the trigger, `g` (standard normal) drives
    read+shot noise; all must match `mean_v`'s shape.
    """
    m = np.asarray(mean_v, dtype=np.float64)
    sigma = read_sigma + shot_coeff * np.sqrt(np.maximum(m - dark, 0.0))
    v = m + sigma * g
    q = np.floor(v + 0.5)
    q = np.clip(q, 0.0, float(full_scale))
    q = np.where(u < p_anom, float(full_scale), q)
    return q.astype(np.uint16)


def invert_kernel(v, nodes_v, nodes_logi, nodes_irr, dark):
    """Inverse response: counts -> scaled irradiance H.

    Clamps: v at/above the table top maps to the brightest table
    irradiance, v at/below the dark level maps to 0; between the dark
    level and the lowest node the map is linear in irradiance.
    """
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    top = v >= nodes_v[-1]
    black = v <= dark
    low = (~black) & (v < nodes_v[0])
    mid = ~(top | black | low)
    out[top] = nodes_irr[-1]
    out[black] = 0.0
    if np.any(low):
        out[low] = nodes_irr[0] * ((v[low] - dark) / (nodes_v[0] - dark))
    if np.any(mid):
        x = v[mid]
        k = np.searchsorted(nodes_v, x, side="right") - 1
        slope = (nodes_logi[k + 1] - nodes_logi[k]) / (nodes_v[k + 1] - nodes_v[k])
        out[mid] = 10.0 ** (nodes_logi[k] + (x - nodes_v[k]) * slope)
    return out


def fuse_kernel(v_stack, scales, v_min, v_max, nodes_v, nodes_logi, nodes_irr,
                dark):
    """Mean-of-valid-candidates fusion over an exposure stack.

    `v_stack` is (n_images, n_pixels) float64 raw counts ordered from the
    shortest to the longest exposure; `scales[n]` rescales image n's
    inverted irradiance to the longest-exposure reference.
    Returns (radiance, validity_count, sentinel_flags).
    """
    n_images, n_pixels = v_stack.shape
    acc = np.zeros(n_pixels, dtype=np.float64)
    cnt = np.zeros(n_pixels, dtype=np.int32)
    for n in range(n_images):  # explicit order: match the C accumulation
        v = v_stack[n]
        valid = (v >= v_min) & (v <= v_max)
        est = invert_kernel(v, nodes_v, nodes_logi, nodes_irr, dark) * scales[n]
        acc += np.where(valid, est, 0.0)
        cnt += valid.astype(np.int32)
    flags = np.zeros(n_pixels, dtype=np.uint8)
    rad = np.zeros(n_pixels, dtype=np.float64)
    has = cnt > 0
    rad[has] = acc[has] / cnt[has]
    none = ~has
    bright = none & (v_stack[0] > v_max)
    dark_px = none & ~bright
    rad[bright] = nodes_irr[-1] * scales[0]
    flags[bright] = 1
    flags[dark_px] = 2
    return rad, cnt, flags


def weighted_merge_kernel(est, weights, log_domain, eps):
    """Normalized weighted combine of per-exposure irradiance estimates.

    `est` and `weights` are (n_images, n_pixels). In log-domain mode the
    combine runs on ln(max(est, eps)) and exponentiates the result.
    Pixels whose weights sum to zero fall back to the unweighted mean
    (in the combine domain).
    """
    n_images, n_pixels = est.shape
    if log_domain:
        x = np.log(np.maximum(est, eps))
    else:
        x = np.asarray(est, dtype=np.float64)
    num = np.zeros(n_pixels, dtype=np.float64)
    den = np.zeros(n_pixels, dtype=np.float64)
    plain = np.zeros(n_pixels, dtype=np.float64)
    for n in range(n_images):  # explicit order: match the C accumulation
        num += weights[n] * x[n]
        den += weights[n]
        plain += x[n]
    out = np.empty(n_pixels, dtype=np.float64)
    zero = den == 0.0
    out[~zero] = num[~zero] / den[~zero]
    out[zero] = plain[zero] / n_images
    if log_domain:
        out = np.exp(out)
    return out
