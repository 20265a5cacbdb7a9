"""End-to-end experiment drivers: calibrate, recover, compare, sweep.

These compose the sensor, target, calibration, and fusion layers into
the reproducible experiments the CLI exposes. Every capture seed is
derived from the experiment seed through a fixed spawn-key scheme, so a
whole experiment is a deterministic function of (config, seed).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import baselines
from .calibration import (
    CrfTable,
    LinearRange,
    build_crf,
    extract_linear_range,
    find_calibration_exposure,
    zone_stats,
    DEFAULT_SLOPE_TOLERANCE,
)
from .errors import ConfigError, PlanInfeasible, Unreachable
from .formats import kv_get_bool, kv_get_float, kv_get_floats, load_kv
from .fusion import (
    ExposurePlan,
    FusionOutput,
    choose_t1,
    choose_t2_dark,
    fuse,
    fuse_ladder,
    measure_patch_db,
    plan_exposures,
)
from .sensor import (
    SensorConfig,
    capture,
    default_sensor,
    noiseless,
    sensor_from_kv,
    without_anomaly,
)
from .targets import (
    BUILTIN_TARGETS,
    TargetSpec,
    calibration_target_90db,
    render_target,
    scale_illumination,
    target_from_kv,
    test_target_78db,
)

# the standard many-image comparison ladder: 16 exposures, factor ~2 apart
FACTOR2_LADDER_S = tuple(
    ms * 1e-3
    for ms in (
        0.029, 0.059, 0.118, 0.237, 0.474, 0.948, 1.896, 3.792,
        7.585, 15.17, 30.340, 60.681, 121.362, 242.725, 485.451, 970.903,
    )
)

ALGORITHMS = ("proposed",) + baselines.VARIANTS

# capture seed spawn tags (first spawn_key element)
_TAG_CALIBRATION = 0
_TAG_RECOVERY = 1
_TAG_LADDER = 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a driver needs, resolvable from a key=value file."""

    sensor: SensorConfig
    target: TargetSpec
    calibration_target: TargetSpec
    illumination_factor: float = 1.0
    hdr_d: float = None  # None -> the target's maximum design dB
    ladder: tuple = None  # explicit exposure times (s); excludes hdr_d planning
    algorithm: str = "proposed"
    seed: int = 0
    noiseless: bool = False
    no_anomaly: bool = False
    calibration_shots: int = 1
    anchor: str = "bright"
    slope_tolerance: float = DEFAULT_SLOPE_TOLERANCE

    def __post_init__(self):
        if self.ladder is not None and self.hdr_d is not None:
            raise ConfigError("give either hdr_d or an explicit ladder, not both")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.algorithm!r}; pick one of {ALGORITHMS}"
            )
        if self.anchor not in ("bright", "dark"):
            raise ConfigError("anchor must be 'bright' or 'dark'")
        if self.calibration_shots < 1:
            raise ConfigError("calibration_shots must be >= 1")


def default_experiment(**overrides) -> ExperimentConfig:
    base = dict(
        sensor=default_sensor(),
        target=test_target_78db(),
        calibration_target=calibration_target_90db(),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def load_experiment_config(path=None, **overrides) -> ExperimentConfig:
    """Build an ExperimentConfig from a key=value file plus overrides."""
    if path is None:
        return default_experiment(**overrides)
    kv = load_kv(path)
    fields = {}
    if "sensor_config" in kv:
        fields["sensor"] = sensor_from_kv(load_kv(kv["sensor_config"]))
    for key, which in (("target", "target"), ("calibration_target", "calibration_target")):
        if key in kv:
            name = kv[key]
            if name in BUILTIN_TARGETS:
                fields[which] = BUILTIN_TARGETS[name]()
            else:
                fields[which] = target_from_kv(load_kv(name))
    if "illumination_factor" in kv:
        fields["illumination_factor"] = kv_get_float(kv, "illumination_factor")
    if "hdr_d" in kv:
        fields["hdr_d"] = kv_get_float(kv, "hdr_d")
    if "ladder" in kv:
        fields["ladder"] = kv_get_floats(kv, "ladder")
    if "algorithm" in kv:
        fields["algorithm"] = kv["algorithm"]
    if "seed" in kv:
        fields["seed"] = int(kv_get_float(kv, "seed"))
    fields["noiseless"] = kv_get_bool(kv, "noiseless", False)
    fields["no_anomaly"] = kv_get_bool(kv, "no_anomaly", False)
    if "calibration_shots" in kv:
        fields["calibration_shots"] = int(kv_get_float(kv, "calibration_shots"))
    if "anchor" in kv:
        fields["anchor"] = kv["anchor"]
    if "slope_tolerance" in kv:
        fields["slope_tolerance"] = kv_get_float(kv, "slope_tolerance")
    fields.update(overrides)
    return default_experiment(**fields)


def effective_sensor(exp: ExperimentConfig) -> SensorConfig:
    cfg = exp.sensor
    if exp.noiseless:
        return noiseless(cfg)
    if exp.no_anomaly:
        return without_anomaly(cfg)
    return cfg


def _capture_seed(seed: int, tag: int, index: int):
    return np.random.SeedSequence(entropy=seed, spawn_key=(tag, index))


# ---------------------------------------------------------------------------
# calibration driver

@dataclass(frozen=True)
class CalibrationResult:
    crf: CrfTable
    lr: LinearRange
    t_c: float
    layout: object
    image: object  # first calibration shot
    patch_stats: tuple  # ZoneStats per patch, first shot


def run_calibration(exp: ExperimentConfig) -> CalibrationResult:
    """Calibration experiment: exposure search, capture, table, window."""
    cfg = effective_sensor(exp)
    scene, layout = render_target(exp.calibration_target)
    if exp.illumination_factor != 1.0:
        scene = scale_illumination(scene, exp.illumination_factor)
    t_c = find_calibration_exposure(cfg, scene, layout)
    shots = [
        capture(cfg, scene, t_c, seed=_capture_seed(exp.seed, _TAG_CALIBRATION, i))
        for i in range(exp.calibration_shots)
    ]
    peak = exp.calibration_target.peak_irradiance * exp.illumination_factor
    crf = build_crf(shots, layout, peak)
    lr = extract_linear_range(crf, exp.slope_tolerance)
    stats = tuple(zone_stats(shots[0], layout, i) for i in range(len(layout.patches)))
    return CalibrationResult(
        crf=crf, lr=lr, t_c=t_c, layout=layout, image=shots[0], patch_stats=stats
    )


# ---------------------------------------------------------------------------
# recovery driver

@dataclass(frozen=True)
class RecoveryResult:
    plan: ExposurePlan  # None when run from an explicit ladder
    exposure_times: tuple
    output: FusionOutput
    rows: tuple  # (design_db, measured_db) pairs
    layout: object
    images: tuple


def _planned_times(exp: ExperimentConfig, cfg, scene, lr) -> ExposurePlan:
    hdr_d = exp.hdr_d if exp.hdr_d is not None else max(exp.target.db_values)
    if exp.anchor == "bright":
        t1 = choose_t1(cfg, scene, lr)
        return plan_exposures(hdr_d, lr.ldr_e, t1, cfg.exposure_limits)
    # dark anchor: pick the longest exposure from the dim end, then walk
    # back down through the plan's total factor
    t_long = choose_t2_dark(cfg, scene, lr)
    total = 10.0 ** ((hdr_d - lr.ldr_e) / 20.0)
    t1 = t_long / total
    if t1 < cfg.exposure_limits[0]:
        raise PlanInfeasible(
            f"dark-anchored t1 = {t1:g} s falls below the minimum exposure"
        )
    return plan_exposures(hdr_d, lr.ldr_e, t1, cfg.exposure_limits)


def run_recovery(exp: ExperimentConfig, calib: CalibrationResult) -> RecoveryResult:
    """Minimal-exposure recovery of the test target."""
    cfg = effective_sensor(exp)
    scene, layout = render_target(exp.target)
    if exp.illumination_factor != 1.0:
        scene = scale_illumination(scene, exp.illumination_factor)
    if exp.ladder is not None:
        times = tuple(sorted(exp.ladder))
        plan = None
    else:
        plan = _planned_times(exp, cfg, scene, calib.lr)
        times = plan.exposure_times
    images = tuple(
        capture(cfg, scene, t, seed=_capture_seed(exp.seed, _TAG_RECOVERY, n))
        for n, t in enumerate(times)
    )
    if plan is not None:
        out = fuse(images, calib.crf, calib.lr, plan)
    else:
        out = fuse_ladder(images, calib.crf, calib.lr)
    rows = tuple(measure_patch_db(out, layout))
    return RecoveryResult(
        plan=plan,
        exposure_times=times,
        output=out,
        rows=rows,
        layout=layout,
        images=images,
    )


def max_abs_error_db(rows) -> float:
    """Worst |measured - design| over patch rows (inf if any sentinel)."""
    worst = 0.0
    for design, measured in rows:
        if not math.isfinite(measured):
            return math.inf
        worst = max(worst, abs(measured - design))
    return worst


# ---------------------------------------------------------------------------
# comparison driver

@dataclass(frozen=True)
class ComparisonResult:
    design_db: tuple
    columns: dict  # algorithm name -> tuple of measured dB
    ladder: tuple
    recovery: RecoveryResult  # the 2-image proposed run


def run_comparison(exp: ExperimentConfig, calib: CalibrationResult) -> ComparisonResult:
    """All merge algorithms on one many-image ladder, plus the minimal plan."""
    cfg = effective_sensor(exp)
    scene, layout = render_target(exp.target)
    if exp.illumination_factor != 1.0:
        scene = scale_illumination(scene, exp.illumination_factor)
    ladder = tuple(sorted(exp.ladder)) if exp.ladder is not None else FACTOR2_LADDER_S
    images = tuple(
        capture(cfg, scene, t, seed=_capture_seed(exp.seed, _TAG_LADDER, n))
        for n, t in enumerate(ladder)
    )
    design = tuple(p.design_db for p in layout.patches)
    columns = {}
    out16 = baselines.proposed_with_n_images(images, calib.crf, calib.lr)
    columns["proposed_16"] = _column(out16, layout, design)
    for variant in baselines.VARIANTS:
        scheme = baselines.WeightingScheme(variant=variant, bit_depth=cfg.bit_depth)
        out = baselines.merge_weighted(images, calib.crf, scheme)
        columns[variant] = _column(out, layout, design)
    two = run_recovery(dataclasses.replace(exp, ladder=None), calib)
    columns["proposed_2"] = tuple(measured for _, measured in two.rows)
    return ComparisonResult(
        design_db=design, columns=columns, ladder=ladder, recovery=two
    )


def _column(out: FusionOutput, layout, design) -> tuple:
    by_db = dict(measure_patch_db(out, layout))
    return tuple(by_db[d] for d in design)


# ---------------------------------------------------------------------------
# illumination sweep driver

@dataclass(frozen=True)
class SweepRow:
    factor: float
    status: str  # "ok", "unreachable", "infeasible"
    detail: str
    rows: tuple  # empty when not ok
    max_abs_error_db: float  # inf when not ok


def run_sweep(exp: ExperimentConfig, calib: CalibrationResult, factors) -> tuple:
    """Recovery at each illumination factor; failures become status rows."""
    results = []
    for factor in factors:
        sub = dataclasses.replace(exp, illumination_factor=factor)
        try:
            rec = run_recovery(sub, calib)
        except Unreachable as exc:
            results.append(SweepRow(factor, "unreachable", str(exc), (), math.inf))
            continue
        except PlanInfeasible as exc:
            results.append(SweepRow(factor, "infeasible", str(exc), (), math.inf))
            continue
        results.append(
            SweepRow(factor, "ok", "", rec.rows, max_abs_error_db(rec.rows))
        )
    return tuple(results)
