"""hdrcal: calibration-driven dynamic-range extension for CMOS sensors.

The package builds a camera response table from a single multi-patch
calibration capture, extracts the usable linear window, plans the
minimal exposure ladder that spans a requested dynamic range, and merges
the captures without per-pixel weighting. Classic weighted-fusion merges
are included for comparison, together with a synthetic sensor model to
validate the whole chain end to end.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    ConfigError,
    ExposureOutOfRange,
    HdrcalError,
    LayoutOverflow,
    NoLinearRegion,
    NonMonotoneCrfWarning,
    PlanInfeasible,
    PlanMismatch,
    Unreachable,
    ZoneOutOfBounds,
)
from .sensor import (
    IrradianceMap,
    RawImage,
    SensorConfig,
    anomaly_probability,
    capture,
    default_sensor,
    mean_response,
    noiseless,
    without_anomaly,
)
from .targets import (
    Patch,
    PatchLayout,
    TargetSpec,
    calibration_target_90db,
    render_target,
    scale_illumination,
    test_target_78db,
)
from .calibration import (
    CrfEntry,
    CrfTable,
    LinearRange,
    ZoneStats,
    build_crf,
    extract_linear_range,
    find_calibration_exposure,
    first_unsaturated_db,
    invert_crf,
    load_crf_csv,
    noise_floor_snr,
    save_crf_csv,
    zone_stats,
)
from .fusion import (
    ExposurePlan,
    FusionOutput,
    SENTINEL_CLAMPED_BRIGHT,
    SENTINEL_CLAMPED_DARK,
    SENTINEL_OK,
    choose_t1,
    choose_t2_dark,
    fuse,
    fuse_ladder,
    measure_patch_db,
    plan_exposures,
)
from .baselines import WeightingScheme, merge_weighted, proposed_with_n_images, weight
from .experiments import (
    CalibrationResult,
    ComparisonResult,
    ExperimentConfig,
    FACTOR2_LADDER_S,
    RecoveryResult,
    SweepRow,
    default_experiment,
    load_experiment_config,
    run_calibration,
    run_comparison,
    run_recovery,
    run_sweep,
)

__all__ = [
    "BACKEND",
    "__version__",
    # errors
    "HdrcalError", "ExposureOutOfRange", "ZoneOutOfBounds", "LayoutOverflow",
    "Unreachable", "PlanInfeasible", "PlanMismatch", "NoLinearRegion",
    "ConfigError", "NonMonotoneCrfWarning",
    # sensor
    "SensorConfig", "IrradianceMap", "RawImage", "capture", "mean_response",
    "anomaly_probability", "default_sensor", "noiseless", "without_anomaly",
    # targets
    "Patch", "PatchLayout", "TargetSpec", "render_target", "scale_illumination",
    "calibration_target_90db", "test_target_78db",
    # calibration
    "ZoneStats", "CrfEntry", "CrfTable", "LinearRange", "zone_stats",
    "find_calibration_exposure", "build_crf", "first_unsaturated_db",
    "extract_linear_range", "noise_floor_snr", "invert_crf",
    "save_crf_csv", "load_crf_csv",
    # fusion
    "ExposurePlan", "FusionOutput", "SENTINEL_OK", "SENTINEL_CLAMPED_BRIGHT",
    "SENTINEL_CLAMPED_DARK", "plan_exposures", "choose_t1", "choose_t2_dark",
    "fuse", "fuse_ladder", "measure_patch_db",
    # baselines
    "WeightingScheme", "weight", "merge_weighted", "proposed_with_n_images",
    # experiments
    "ExperimentConfig", "CalibrationResult", "RecoveryResult",
    "ComparisonResult", "SweepRow", "FACTOR2_LADDER_S", "default_experiment",
    "load_experiment_config", "run_calibration", "run_recovery",
    "run_comparison", "run_sweep",
]
