"""Prior-art weighted multi-exposure merges, for comparison.

Four classic weighting schemes over the same measured response table,
all using the sensor's full output range (no validity filtering — that
is exactly what the weighting-free method restricts):

- hat: triangular weight on raw counts, combined in the log domain;
- gaussian_time: scaled/shifted Gaussian on counts, weighted together
  with the squared exposure time;
- slope_weight: response-table slope dv/dlog10(I) at the sample's level;
- snr: estimated irradiance over the local irradiance-per-count slope,
  i.e. proportional to the sample's SNR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import invert_kernel, weighted_merge_kernel
from .calibration import CrfTable, LinearRange
from .errors import ConfigError, PlanMismatch
from .fusion import ExposurePlan, FusionOutput, fuse, fuse_ladder
from .sensor import IrradianceMap

VARIANTS = ("hat", "gaussian_time", "slope_weight", "snr")

# log-domain floor: smallest positive float32 step, so ln() stays finite
# on pixels whose inverted irradiance is exactly zero
LOG_EPS = float(np.finfo(np.float32).tiny)


@dataclass(frozen=True)
class WeightingScheme:
    variant: str
    w_param: float = 4.0  # Gaussian confidence W
    bit_depth: int = 16

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown weighting variant {self.variant!r}")
        if self.w_param <= 0:
            raise ConfigError("W must be positive")

    @property
    def z_min(self) -> int:
        return 0

    @property
    def z_max(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def z_mid(self) -> int:
        return 1 << (self.bit_depth - 1)


def weight(scheme: WeightingScheme, z, crf: CrfTable = None):
    """Per-sample weight in [0, 1]-ish scale; vectorized over z.

    slope_weight and snr need the response table; hat and gaussian_time
    are pure functions of the counts.
    """
    arr = np.asarray(z, dtype=np.float64)
    if scheme.variant == "hat":
        out = _hat(scheme, arr)
    elif scheme.variant == "gaussian_time":
        out = _gaussian(scheme, arr)
    elif scheme.variant == "slope_weight":
        out = _slope(arr, _require_crf(crf))
    else:
        out = _snr(arr, _require_crf(crf))
    if np.isscalar(z) or arr.ndim == 0:
        return float(out)
    return out


def _require_crf(crf):
    if crf is None:
        raise ConfigError("this weighting variant needs a response table")
    return crf


def _hat(scheme, z):
    mid = 0.5 * (scheme.z_min + scheme.z_max)
    return np.where(z <= mid, z - scheme.z_min, scheme.z_max - z).astype(np.float64)


def _gaussian(scheme, z):
    # per-side normalization makes the shifted curve hit 0 exactly at both
    # range ends and 1 at z_mid
    lo_span = scheme.z_mid - scheme.z_min
    hi_span = scheme.z_max - scheme.z_mid
    u = np.where(z <= scheme.z_mid, (z - scheme.z_mid) / lo_span,
                 (z - scheme.z_mid) / hi_span)
    g = np.exp(-scheme.w_param * u * u)
    g0 = np.exp(-scheme.w_param)
    return (g - g0) / (1.0 - g0)


def _segment_index(nodes_v, z):
    k = np.searchsorted(nodes_v, z, side="right") - 1
    return np.clip(k, 0, len(nodes_v) - 2)


def _slope(z, crf):
    nodes_v, nodes_logi, _ = crf.nodes()
    seg_slope = (nodes_v[1:] - nodes_v[:-1]) / (nodes_logi[1:] - nodes_logi[:-1])
    w = seg_slope[_segment_index(nodes_v, z)] / seg_slope.max()
    inside = (z >= nodes_v[0]) & (z <= nodes_v[-1])
    return np.where(inside, w, 0.0)


def _snr(z, crf):
    nodes_v, nodes_logi, nodes_irr = crf.nodes()
    # irradiance per count on each segment (linear-domain secant)
    didv = (nodes_irr[1:] - nodes_irr[:-1]) / (nodes_v[1:] - nodes_v[:-1])
    irr = invert_kernel(np.asarray(z, dtype=np.float64), nodes_v, nodes_logi,
                        nodes_irr, crf.black_level)
    w = irr / didv[_segment_index(nodes_v, z)]
    w /= (nodes_irr[1:] / didv).max()  # normalize: max over the table is 1
    inside = (z >= nodes_v[0]) & (z <= nodes_v[-1])
    return np.where(inside, w, 0.0)


# ---------------------------------------------------------------------------
# merges

def merge_weighted(images, crf: CrfTable, scheme: WeightingScheme) -> FusionOutput:
    """Weighted combine of an exposure stack over the full output range.

    Estimates are rescaled to the longest exposure before combining.
    hat combines in the log domain; gaussian_time folds the squared
    exposure time into its weights; pixels with all-zero weights fall
    back to the unweighted mean.
    """
    if len(images) < 2:
        raise PlanMismatch("weighted merge needs at least 2 images")
    shape = images[0].samples.shape
    depth = images[0].bit_depth
    if any(im.samples.shape != shape or im.bit_depth != depth for im in images):
        raise PlanMismatch("images differ in shape or bit depth")
    times = np.array([im.exposure_time for im in images], dtype=np.float64)
    t_ref = float(times.max())

    nodes_v, nodes_logi, nodes_irr = crf.nodes()
    n = len(images)
    n_px = images[0].samples.size
    est = np.empty((n, n_px), dtype=np.float64)
    wts = np.empty((n, n_px), dtype=np.float64)
    for i, im in enumerate(images):
        z = im.samples.ravel().astype(np.float64)
        est[i] = invert_kernel(z, nodes_v, nodes_logi, nodes_irr,
                               crf.black_level) * (t_ref / times[i])
        wts[i] = weight(scheme, z, crf)
    if scheme.variant == "gaussian_time":
        wts *= (times**2)[:, None]

    rad = weighted_merge_kernel(est, wts, scheme.variant == "hat", LOG_EPS)
    contributed = (wts > 0).sum(axis=0).astype(np.int32)
    return FusionOutput(
        radiance=IrradianceMap(values=rad.reshape(shape)),
        validity_count=contributed.reshape(shape),
        sentinel_mask=np.zeros(shape, dtype=np.uint8),
        reference_exposure=t_ref,
    )


def proposed_with_n_images(
    images, crf: CrfTable, lr: LinearRange, plan: ExposurePlan = None
) -> FusionOutput:
    """The weighting-free merge applied to an arbitrary ascending ladder.

    With a plan this is exactly `fusion.fuse`; without one any strictly
    ascending ladder is accepted (the non-optimal many-image case).
    """
    if plan is not None:
        return fuse(images, crf, lr, plan)
    return fuse_ladder(images, crf, lr)
