"""Minimal multi-exposure linear HDR recovery without weighting.

Exposure planning covers a designed dynamic range with the fewest
images: every exposure step spans the sensor's linear window, and the
last step takes the remainder. Fusion keeps only samples inside
[v_min, v_max], inverts them through the measured table, rescales by
exposure ratio onto the longest-exposure reference, and averages the
surviving candidates per pixel — no weights anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import fuse_kernel
from .calibration import CrfTable, LinearRange
from .errors import ConfigError, PlanInfeasible, PlanMismatch, Unreachable
from .sensor import IrradianceMap, RawImage, SensorConfig, mean_response

SENTINEL_OK = 0
SENTINEL_CLAMPED_BRIGHT = 1
SENTINEL_CLAMPED_DARK = 2

DEFAULT_ZONE_FRACTION = 0.001  # quantile tail that defines a scene "zone"


@dataclass(frozen=True)
class ExposurePlan:
    """Minimal ladder covering hdr_d with steps of at most ldr_e."""

    hdr_d: float
    ldr_e: float
    n_images: int
    exposure_times: tuple  # seconds, ascending
    factors: tuple  # P_2..P_N, exposure_times[n] / exposure_times[n-1]


@dataclass(frozen=True)
class FusionOutput:
    """Composite radiance plus per-pixel bookkeeping.

    `radiance` is scaled irradiance referenced to the longest exposure;
    `validity_count` says how many exposures contributed per pixel;
    `sentinel_mask` holds SENTINEL_* codes for pixels with no valid
    sample in any exposure.
    """

    radiance: IrradianceMap
    validity_count: np.ndarray
    sentinel_mask: np.ndarray
    reference_exposure: float


def plan_exposures(hdr_d: float, ldr_e: float, t1: float, limits) -> ExposurePlan:
    """N = ceil(hdr_d / ldr_e) exposures from t1, factor 10^(ldr_e/20) apart.

    The final factor carries the remainder hdr_d - (N-1)*ldr_e so the
    ladder spans exactly hdr_d decibels of scene range.
    """
    if hdr_d <= 0 or ldr_e <= 0:
        raise ConfigError("hdr_d and ldr_e must be positive")
    t_min, t_max = limits
    if not t_min <= t1 <= t_max:
        raise PlanInfeasible(
            f"t1 = {t1:g} s outside exposure limits [{t_min:g}, {t_max:g}] s"
        )
    n = max(1, math.ceil(hdr_d / ldr_e - 1e-12))
    factors = []
    if n > 1:
        factors = [10.0 ** (ldr_e / 20.0)] * (n - 2)
        factors.append(10.0 ** ((hdr_d - (n - 1) * ldr_e) / 20.0))
    times = [t1]
    for p in factors:
        times.append(times[-1] * p)
    if times[-1] > t_max:
        raise PlanInfeasible(
            f"longest exposure {times[-1]:g} s exceeds the {t_max:g} s limit"
        )
    return ExposurePlan(
        hdr_d=hdr_d,
        ldr_e=ldr_e,
        n_images=n,
        exposure_times=tuple(times),
        factors=tuple(factors),
    )


# ---------------------------------------------------------------------------
# exposure anchoring

def _zone_noise_margin(cfg: SensorConfig, v: float) -> float:
    # 1 count of quantization headroom + 6 sigma of pixel noise at v:
    # keeps individual pixels of a zone pinned at the window edge from
    # straddling it and losing every valid sample.
    sigma = cfg.read_noise_sigma + cfg.shot_noise_coeff * math.sqrt(
        max(v - cfg.dark_level, 0.0)
    )
    return 1.0 + 6.0 * sigma


def choose_t1(
    cfg: SensorConfig,
    scene: IrradianceMap,
    lr: LinearRange,
    zone_fraction: float = DEFAULT_ZONE_FRACTION,
    rel_tol: float = 1e-4,
    margin: float = None,
) -> float:
    """Largest exposure keeping the brightest zone mean at/below v_max.

    The brightest zone is the top `zone_fraction` quantile of the scene.
    Maximizing t1 maximizes SNR while preserving linear operation.
    """
    values = scene.values.ravel()
    thresh = np.quantile(values, 1.0 - zone_fraction)
    zone = values[values >= thresh]
    if margin is None:
        margin = _zone_noise_margin(cfg, lr.v_max)
    bound = lr.v_max - margin
    if bound <= cfg.dark_level:
        raise Unreachable("noise margin leaves no usable headroom below v_max")
    t_min, t_max = cfg.exposure_limits

    def zone_mean(t):
        return float(np.mean(mean_response(cfg, zone, t)))

    if zone_mean(t_min) > bound:
        raise Unreachable(
            f"brightest zone violates v_B <= v_max - margin ({bound:.1f} counts) "
            f"even at the minimum exposure {t_min:g} s"
        )
    if zone_mean(t_max) <= bound:
        return t_max
    lo, hi = t_min, t_max
    while hi > lo * (1.0 + rel_tol):
        mid = math.sqrt(lo * hi)
        if zone_mean(mid) <= bound:
            lo = mid
        else:
            hi = mid
    return lo


def choose_t2_dark(
    cfg: SensorConfig,
    scene: IrradianceMap,
    lr: LinearRange,
    zone_fraction: float = DEFAULT_ZONE_FRACTION,
    rel_tol: float = 1e-4,
    margin: float = None,
) -> float:
    """Smallest exposure lifting the darkest lit zone mean to/above v_min.

    Dark-anchored alternative for scenes whose dim content matters most:
    pick the longest exposure first, then derive shorter ones from the
    plan factors. The darkest zone is the bottom `zone_fraction` quantile
    of the scene's positive irradiances.
    """
    values = scene.values.ravel()
    positive = values[values > 0]
    if positive.size == 0:
        raise Unreachable("scene has no lit pixels to anchor the long exposure")
    thresh = np.quantile(positive, zone_fraction)
    zone = positive[positive <= thresh]
    if margin is None:
        margin = _zone_noise_margin(cfg, lr.v_min)
    bound = lr.v_min + margin
    t_min, t_max = cfg.exposure_limits

    def zone_mean(t):
        return float(np.mean(mean_response(cfg, zone, t)))

    if zone_mean(t_max) < bound:
        raise Unreachable(
            f"darkest lit zone cannot reach v_min + margin ({bound:.1f} counts) "
            f"even at the maximum exposure {t_max:g} s"
        )
    if zone_mean(t_min) >= bound:
        return t_min
    lo, hi = t_min, t_max
    while hi > lo * (1.0 + rel_tol):
        mid = math.sqrt(lo * hi)
        if zone_mean(mid) >= bound:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# fusion

def _stack_checked(images) -> np.ndarray:
    if len(images) < 1:
        raise PlanMismatch("fusion needs at least one image")
    shape = images[0].samples.shape
    depth = images[0].bit_depth
    times = [im.exposure_time for im in images]
    if any(im.samples.shape != shape or im.bit_depth != depth for im in images):
        raise PlanMismatch("images differ in shape or bit depth")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise PlanMismatch("images must be sorted by strictly ascending exposure")
    return np.stack([im.samples.ravel().astype(np.float64) for im in images])


def fuse_ladder(images, crf: CrfTable, lr: LinearRange) -> FusionOutput:
    """Weighting-free merge of any ascending exposure ladder."""
    stack = _stack_checked(images)
    times = np.array([im.exposure_time for im in images])
    t_ref = float(times[-1])
    scales = t_ref / times
    nodes_v, nodes_logi, nodes_irr = crf.nodes()
    rad, cnt, flags = fuse_kernel(
        stack, scales, lr.v_min, lr.v_max, nodes_v, nodes_logi, nodes_irr,
        crf.black_level,
    )
    shape = images[0].samples.shape
    return FusionOutput(
        radiance=IrradianceMap(values=rad.reshape(shape)),
        validity_count=cnt.reshape(shape),
        sentinel_mask=flags.reshape(shape),
        reference_exposure=t_ref,
    )


def fuse(images, crf: CrfTable, lr: LinearRange, plan: ExposurePlan) -> FusionOutput:
    """Merge a capture stack against its plan (count and times must match)."""
    if len(images) != plan.n_images:
        raise PlanMismatch(
            f"plan wants {plan.n_images} images, got {len(images)}"
        )
    for im, t_plan in zip(images, plan.exposure_times):
        if abs(im.exposure_time / t_plan - 1.0) > 0.01:
            raise PlanMismatch(
                f"exposure {im.exposure_time:g} s deviates from planned {t_plan:g} s"
            )
    return fuse_ladder(images, crf, lr)


# ---------------------------------------------------------------------------
# evaluation

def measure_patch_db(out: FusionOutput, layout) -> list:
    """Recovered attenuation per patch: 20*log10(ref mean / patch mean).

    The 0 dB patch is the reference and reports exactly 0. A patch whose
    composite mean is zero (fully clamped dark) reports +inf.
    """
    radiance = out.radiance.values
    ref_index = layout.index_of_db(0.0)
    ref_mean = float(radiance[layout.patch_mask(ref_index)].mean())
    rows = []
    for i, patch in enumerate(layout.patches):
        if i == ref_index:
            rows.append((patch.design_db, 0.0))
            continue
        mean = float(radiance[layout.patch_mask(i)].mean())
        if mean <= 0.0:
            rows.append((patch.design_db, math.inf))
        elif ref_mean <= 0.0:
            rows.append((patch.design_db, -math.inf))
        else:
            rows.append((patch.design_db, 20.0 * math.log10(ref_mean / mean)))
    return rows
