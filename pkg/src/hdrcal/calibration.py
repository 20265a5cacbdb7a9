"""Camera response calibration from a known multi-patch target.

Pipeline: find a calibration exposure that tops out the brightest zone,
capture, spatially average each patch zone into a response table entry,
detect saturated-pixel triggering per zone, then extract the linear
operating range [v_min, v_max] by slope analysis of the table.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import invert_kernel
from .errors import (
    ConfigError,
    NoLinearRegion,
    NonMonotoneCrfWarning,
    Unreachable,
    ZoneOutOfBounds,
)
from .formats import read_csv, write_csv
from .sensor import RawImage, SensorConfig, mean_response
from .targets import PatchLayout

DEFAULT_SLOPE_TOLERANCE = 0.70  # fractional deviation from the run mean
DEFAULT_HISTOGRAM_BIN = 1000


@dataclass(frozen=True)
class ZoneStats:
    """Spatial statistics of one uniform zone in a raw image."""

    pixel_count: int
    mean: float
    histogram: tuple
    bin_width: int
    saturated_count: int
    homogeneity: float  # fraction of samples within +-5% of the zone mean


@dataclass(frozen=True)
class CrfEntry:
    design_db: float
    irradiance: float
    v_avg: float
    saturated: bool


@dataclass(frozen=True)
class CrfTable:
    """Measured response table: one entry per patch, brightest first."""

    entries: tuple
    black_level: float
    calibration_exposure: float
    bit_depth: int

    def __post_init__(self):
        irr = [e.irradiance for e in self.entries]
        if any(b >= a for a, b in zip(irr, irr[1:])):
            raise ConfigError("CRF entries must be sorted by descending irradiance")
        full = (1 << self.bit_depth) - 1
        if any(not 0 <= e.v_avg <= full for e in self.entries):
            raise ConfigError("CRF v_avg outside the sensor's output range")

    def nodes(self):
        """Ascending-v node arrays (v, log10 I, I) for interpolation."""
        ordered = list(reversed(self.entries))  # dimmest first
        nodes_v = np.array([e.v_avg for e in ordered], dtype=np.float64)
        nodes_irr = np.array([e.irradiance for e in ordered], dtype=np.float64)
        return nodes_v, np.log10(nodes_irr), nodes_irr

    @property
    def top_v(self) -> float:
        return self.entries[0].v_avg

    @property
    def top_irradiance(self) -> float:
        return self.entries[0].irradiance


@dataclass(frozen=True)
class LinearRange:
    """Linear operating window extracted from a CrfTable."""

    v_max: float
    v_min: float
    ldr_e: float  # 20*log10(v_max/v_min), dB
    first_unsaturated_db: float
    slope_log: tuple  # per-segment slopes in (log10 I, log10 v), bright->dim
    mean_slope: float  # mean slope over the selected run
    window_db: tuple  # (brightest design_db, dimmest design_db) of the run


# ---------------------------------------------------------------------------
# zone measurement

def zone_stats(
    img: RawImage, layout: PatchLayout, patch_index: int, bin_width: int = DEFAULT_HISTOGRAM_BIN
) -> ZoneStats:
    """Spatial average + histogram + saturation count over one patch disc."""
    patch = layout.patches[patch_index]
    cx, cy = patch.center
    r = patch.radius
    if cx - r < 0 or cy - r < 0 or cx + r > img.width or cy + r > img.height:
        raise ZoneOutOfBounds(
            f"patch {patch_index} ({patch.design_db} dB) not inside the image"
        )
    samples = img.samples[layout.patch_mask(patch_index)]
    return _stats_of(samples, img.bit_depth, bin_width)


def _stats_of(samples: np.ndarray, bit_depth: int, bin_width: int) -> ZoneStats:
    full = (1 << bit_depth) - 1
    n_bins = (full + bin_width) // bin_width
    hist = np.bincount(samples // bin_width, minlength=n_bins)
    mean = float(samples.mean())
    tol = 0.05 * mean
    homogeneity = float(np.mean(np.abs(samples.astype(np.float64) - mean) <= tol))
    return ZoneStats(
        pixel_count=int(samples.size),
        mean=mean,
        histogram=tuple(int(c) for c in hist),
        bin_width=bin_width,
        saturated_count=int(np.count_nonzero(samples == full)),
        homogeneity=homogeneity,
    )


# ---------------------------------------------------------------------------
# calibration exposure search

def find_calibration_exposure(
    cfg: SensorConfig, scene, layout: PatchLayout, rel_tol: float = 1e-6
) -> float:
    """Smallest exposure that drives the 0 dB zone mean onto its plateau.

    Monotone bisection in log-exposure over the sensor's limits. The
    plateau is the largest mean the zone can reach within the limits;
    pushing past the returned time gains nothing (the knee of the curve),
    so this maximizes recorded range for a single calibration shot.
    """
    zone = layout.index_of_db(0.0)
    vals = scene.values[layout.patch_mask(zone)]
    t_min, t_max = cfg.exposure_limits

    def zone_mean(t):
        return float(np.mean(mean_response(cfg, vals, t)))

    top = zone_mean(t_max)
    if top <= cfg.dark_level + 1.0:
        raise Unreachable(
            "brightest zone stays at the dark floor even at the longest exposure"
        )
    eps = max(1e-9 * (top - cfg.dark_level), 1e-12)
    if zone_mean(t_min) >= top - eps:
        raise Unreachable(
            "brightest zone mean is already saturated at the minimum exposure"
        )
    lo, hi = t_min, t_max
    while hi > lo * (1.0 + rel_tol):
        mid = math.sqrt(lo * hi)
        if zone_mean(mid) >= top - eps:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# CRF construction

def build_crf(images, layout: PatchLayout, peak_irradiance: float) -> CrfTable:
    """Response table from calibration capture(s) of a known target.

    `images` is one RawImage or a sequence of repeated shots at the same
    exposure; repeated shots are averaged pixelwise for v_avg while
    saturation detection takes the worst count across shots (an anomalous
    trigger in any shot marks the zone).
    """
    if isinstance(images, RawImage):
        images = [images]
    if not images:
        raise ConfigError("build_crf needs at least one image")
    t_c = images[0].exposure_time
    bit_depth = images[0].bit_depth
    if any(im.exposure_time != t_c or im.bit_depth != bit_depth for im in images):
        raise ConfigError("calibration shots must share exposure and bit depth")

    mean_img = images[0].samples.astype(np.float64)
    for im in images[1:]:
        mean_img += im.samples
    mean_img /= len(images)

    entries = []
    for i, patch in enumerate(layout.patches):
        mask = layout.patch_mask(i)
        v_avg = float(mean_img[mask].mean())
        sat = max(
            zone_stats(im, layout, i).saturated_count for im in images
        )
        entries.append(
            CrfEntry(
                design_db=float(patch.design_db),
                irradiance=peak_irradiance * 10.0 ** (-patch.design_db / 20.0),
                v_avg=v_avg,
                saturated=sat > 0,
            )
        )
    entries.sort(key=lambda e: -e.irradiance)
    black_level = float(mean_img[layout.background_mask()].mean())

    v_seq = [e.v_avg for e in entries]
    if any(b >= a for a, b in zip(v_seq, v_seq[1:])):
        warnings.warn(
            "measured v_avg ordering violates irradiance ordering",
            NonMonotoneCrfWarning,
            stacklevel=2,
        )
    return CrfTable(
        entries=tuple(entries),
        black_level=black_level,
        calibration_exposure=t_c,
        bit_depth=bit_depth,
    )


def first_unsaturated_db(crf: CrfTable) -> float:
    """Design dB of the brightest entry with no saturation triggering."""
    for e in crf.entries:
        if not e.saturated:
            return e.design_db
    raise NoLinearRegion("every table entry shows saturated pixels")


# ---------------------------------------------------------------------------
# linear-range extraction

def extract_linear_range(
    crf: CrfTable, slope_tolerance: float = DEFAULT_SLOPE_TOLERANCE
) -> LinearRange:
    """Longest near-constant-slope run of the response table.

    Slopes are taken between consecutive usable entries in
    (log10 I, log10 v) space. Usable entries are unsaturated; when any
    entry is saturated, the first unsaturated entry is excluded as well —
    it borders the triggering region and its mean is still biased.
    The run maximizes segment count among runs whose slopes all stay
    within `slope_tolerance` fractional deviation of the run mean;
    ties prefer the smallest worst deviation, then the brighter window.
    """
    fu_db = first_unsaturated_db(crf)
    any_saturated = any(e.saturated for e in crf.entries)
    if any_saturated:
        usable = [e for e in crf.entries if not e.saturated and e.design_db > fu_db]
    else:
        usable = list(crf.entries)
    if len(usable) < 3:
        raise NoLinearRegion("need at least 3 unsaturated entries")

    log_i = np.log10([e.irradiance for e in usable])
    log_v = np.log10([e.v_avg for e in usable])
    slopes = (log_v[:-1] - log_v[1:]) / (log_i[:-1] - log_i[1:])

    best = None  # (-length, worst_dev, start) minimized
    n = len(slopes)
    for lo in range(n):
        for hi in range(lo + 1, n):  # at least 2 segments
            run = slopes[lo : hi + 1]
            mean = float(run.mean())
            if mean <= 0:
                continue
            worst = float(np.max(np.abs(run / mean - 1.0)))
            if worst <= slope_tolerance:
                key = (-(hi - lo + 1), worst, lo)
                if best is None or key < best[0]:
                    best = (key, lo, hi, mean)
    if best is None:
        raise NoLinearRegion(
            f"no slope run of >=2 segments within {slope_tolerance:.2f} tolerance"
        )
    _, lo, hi, mean = best
    bright = usable[lo]
    dim = usable[hi + 1]
    return LinearRange(
        v_max=bright.v_avg,
        v_min=dim.v_avg,
        ldr_e=20.0 * math.log10(bright.v_avg / dim.v_avg),
        first_unsaturated_db=fu_db,
        slope_log=tuple(float(s) for s in slopes),
        mean_slope=mean,
        window_db=(bright.design_db, dim.design_db),
    )


def noise_floor_snr(lr: LinearRange, crf: CrfTable) -> float:
    """SNR at the bottom of the linear window: v_min over the dark floor."""
    return lr.v_min / crf.black_level


# ---------------------------------------------------------------------------
# inversion

def invert_crf(crf: CrfTable, v):
    """Counts -> scaled irradiance via the measured table.

    Total and nondecreasing: values above the table top clamp to the
    brightest calibration irradiance, values at or below the dark floor
    map to zero, and the stretch between the dark floor and the dimmest
    entry is linear in irradiance.
    """
    nodes_v, nodes_logi, nodes_irr = crf.nodes()
    arr = np.asarray(v, dtype=np.float64)
    out = invert_kernel(arr, nodes_v, nodes_logi, nodes_irr, crf.black_level)
    if np.isscalar(v) or arr.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# CSV serialization

CRF_CSV_HEADER = ["design_db", "irradiance", "v_avg", "saturated"]


def save_crf_csv(crf: CrfTable, path):
    rows = [
        [e.design_db, e.irradiance, e.v_avg, "true" if e.saturated else "false"]
        for e in crf.entries
    ]
    rows.append(["", 0.0, crf.black_level, "false"])
    write_csv(
        path,
        CRF_CSV_HEADER,
        rows,
        comments=[
            "measured camera response table",
            f"calibration_exposure = {crf.calibration_exposure!r}",
            f"bit_depth = {crf.bit_depth}",
        ],
    )


def load_crf_csv(path) -> CrfTable:
    comments, header, rows = read_csv(path)
    if header != CRF_CSV_HEADER:
        raise ConfigError(f"unexpected CRF CSV header in {path}: {header}")
    calibration_exposure = 3.703e-3
    bit_depth = 16
    for c in comments:
        if "=" in c:
            key, _, value = c.partition("=")
            key = key.strip()
            if key == "calibration_exposure":
                calibration_exposure = float(value)
            elif key == "bit_depth":
                bit_depth = int(value)
    entries = []
    black_level = None
    for row in rows:
        if len(row) != 4:
            raise ConfigError(f"malformed CRF CSV row: {row}")
        design, irr, v_avg, sat = row
        if design.strip() == "" or float(irr) == 0.0:
            black_level = float(v_avg)
            continue
        entries.append(
            CrfEntry(
                design_db=float(design),
                irradiance=float(irr),
                v_avg=float(v_avg),
                saturated=sat.strip().lower() == "true",
            )
        )
    if black_level is None:
        raise ConfigError(f"CRF CSV {path} has no black (zero-irradiance) row")
    entries.sort(key=lambda e: -e.irradiance)
    return CrfTable(
        entries=tuple(entries),
        black_level=black_level,
        calibration_exposure=calibration_exposure,
        bit_depth=bit_depth,
    )


def linear_range_kv(lr: LinearRange) -> dict:
    return {
        "v_max": lr.v_max,
        "v_min": lr.v_min,
        "ldr_e": lr.ldr_e,
        "first_unsaturated_db": lr.first_unsaturated_db,
        "mean_slope": lr.mean_slope,
        "window_db_bright": lr.window_db[0],
        "window_db_dim": lr.window_db[1],
        "slope_log": lr.slope_log,
    }
