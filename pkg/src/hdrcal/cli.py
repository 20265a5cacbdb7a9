"""Command-line entry point.

Subcommands mirror the experiment drivers:

    hdrcal calibrate        exposure search + response table + linear window
    hdrcal recover          minimal-exposure dynamic-range recovery
    hdrcal compare          all merge algorithms on one exposure ladder
    hdrcal sweep            recovery across illumination factors
    hdrcal simulate-capture single raw capture of a target

Exit codes: 0 success, 1 physics/planning failure (unreachable level,
infeasible plan, no usable linear window), 2 bad configuration or I/O.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from . import baselines
from .calibration import linear_range_kv, save_crf_csv
from .errors import ConfigError, HdrcalError
from .experiments import (
    ALGORITHMS,
    CalibrationResult,
    ComparisonResult,
    RecoveryResult,
    SweepRow,
    default_experiment,
    effective_sensor,
    load_experiment_config,
    max_abs_error_db,
    run_calibration,
    run_comparison,
    run_recovery,
    run_sweep,
    _capture_seed,
    _TAG_RECOVERY,
)
from .formats import fmt_num, read_csv, save_kv, write_csv, write_pgm8, write_pgm16
from .fusion import SENTINEL_CLAMPED_BRIGHT, SENTINEL_CLAMPED_DARK
from .sensor import capture

# illumination factors for the default sweep, relative to the nominal
# light-box level; the largest one is expected to fail the shortest
# exposure bound and report as a status row
DEFAULT_SWEEP_FACTORS = (
    3.3333, 1.1333, 1.0, 0.5, 0.3405, 0.11333, 0.056667, 0.0228, 0.011383,
)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 0
    try:
        return _dispatch(args)
    except (ConfigError, OSError) as exc:
        print(f"hdrcal: error: {exc}", file=sys.stderr)
        return 2
    except HdrcalError as exc:
        print(f"hdrcal: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdrcal",
        description="calibration-driven dynamic-range extension toolkit",
    )
    parser.add_argument("--version", action="version", version=f"hdrcal {__version__}")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="key=value experiment config file")
        p.add_argument("--seed", type=int, default=None,
                       help="experiment seed (default: $HDRCAL_SEED or 0)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--illum-factor", type=float, default=None,
                       help="scale scene irradiance by this factor")
        p.add_argument("--noiseless", action="store_true",
                       help="disable sensor noise and the anomaly")
        p.add_argument("--no-anomaly", action="store_true",
                       help="disable the premature-saturation anomaly only")

    p = sub.add_parser("calibrate", help="build the response table")
    common(p)
    p.add_argument("--shots", type=int, default=None,
                   help="calibration captures to average")

    p = sub.add_parser("recover", help="minimal-exposure recovery")
    common(p)
    p.add_argument("--algo", choices=ALGORITHMS, default=None,
                   help="merge algorithm (default proposed)")
    p.add_argument("--hdr-d", type=float, default=None,
                   help="dynamic range to span, dB")
    p.add_argument("--anchor", choices=("bright", "dark"), default=None,
                   help="plan from the bright or the dark end")
    p.add_argument("--ladder", default=None,
                   help="explicit exposure times in seconds, space separated")

    p = sub.add_parser("compare", help="all algorithms on one ladder")
    common(p)
    p.add_argument("--ladder", default=None,
                   help="explicit exposure times in seconds, space separated")

    p = sub.add_parser("sweep", help="recovery across illumination factors")
    common(p)
    p.add_argument("--factors", default=None,
                   help="illumination factors, space separated")

    p = sub.add_parser("simulate-capture", help="one raw capture")
    common(p)
    p.add_argument("--exposure", type=float, default=None,
                   help="exposure time in seconds (default: reference exposure)")
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HDRCAL_SEED", "")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"HDRCAL_SEED is not an integer: {env!r}")
    return 0


def _load_experiment(args, **extra):
    overrides = dict(extra)
    overrides["seed"] = _resolve_seed(args)
    if args.illum_factor is not None:
        if args.illum_factor <= 0:
            raise ConfigError("--illum-factor must be positive")
        overrides["illumination_factor"] = args.illum_factor
    if args.noiseless:
        overrides["noiseless"] = True
    if args.no_anomaly:
        overrides["no_anomaly"] = True
    if getattr(args, "algo", None) is not None:
        overrides["algorithm"] = args.algo
    if getattr(args, "hdr_d", None) is not None:
        overrides["hdr_d"] = args.hdr_d
    if getattr(args, "anchor", None) is not None:
        overrides["anchor"] = args.anchor
    if getattr(args, "shots", None) is not None:
        overrides["calibration_shots"] = args.shots
    if getattr(args, "ladder", None) is not None:
        overrides["ladder"] = _parse_float_list(args.ladder, "--ladder")
    return load_experiment_config(args.config, **overrides)


def _parse_float_list(text, flag):
    try:
        values = tuple(float(tok) for tok in text.split())
    except ValueError:
        raise ConfigError(f"{flag} expects space-separated numbers, got {text!r}")
    if not values:
        raise ConfigError(f"{flag} is empty")
    return values


def _out_dir(args, default_name) -> str:
    out = args.out if args.out is not None else default_name
    os.makedirs(out, exist_ok=True)
    return out


def _dispatch(args) -> int:
    if args.command == "calibrate":
        return _cmd_calibrate(args)
    if args.command == "recover":
        return _cmd_recover(args)
    if args.command == "compare":
        return _cmd_compare(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "simulate-capture":
        return _cmd_simulate_capture(args)
    raise ConfigError(f"unknown command {args.command!r}")


# ---------------------------------------------------------------------------
# calibrate

def _cmd_calibrate(args) -> int:
    exp = _load_experiment(args)
    out = _out_dir(args, "hdrcal_calibrate")
    res = run_calibration(exp)
    _write_calibration(out, exp, res)
    lr = res.lr
    print(f"calibration exposure: {res.t_c:.6g} s")
    print(f"first unsaturated patch: {lr.first_unsaturated_db:g} dB")
    print(f"linear window: {lr.window_db[0]:g}..{lr.window_db[1]:g} dB "
          f"(v_max={lr.v_max:g}, v_min={lr.v_min:g})")
    print(f"single-exposure usable range: {lr.ldr_e:.4f} dB")
    print(f"wrote {out}/crf.csv")
    return 0


def _write_calibration(out, exp, res: CalibrationResult) -> None:
    save_crf_csv(res.crf, os.path.join(out, "crf.csv"))
    save_kv(os.path.join(out, "linear_range.txt"), linear_range_kv(res.lr))
    save_kv(os.path.join(out, "calibration.txt"), {
        "calibration_exposure": res.t_c,
        "seed": exp.seed,
        "calibration_shots": exp.calibration_shots,
        "illumination_factor": exp.illumination_factor,
    })
    write_pgm16(os.path.join(out, "capture.pgm"), res.image.samples)
    patches = res.layout.patches
    rows = [
        (p.design_db, s.pixel_count, s.mean, s.saturated_count, s.homogeneity)
        for p, s in zip(patches, res.patch_stats)
    ]
    write_csv(
        os.path.join(out, "zone_stats.csv"),
        ("design_db", "pixel_count", "mean_v", "saturated_count", "homogeneity"),
        rows,
        comments=(f"calibration capture zone statistics, seed {exp.seed}",),
    )
    hist_dir = os.path.join(out, "histograms")
    os.makedirs(hist_dir, exist_ok=True)
    for p, s in zip(patches, res.patch_stats):
        bins = [(i * s.bin_width, c) for i, c in enumerate(s.histogram)]
        write_csv(
            os.path.join(hist_dir, f"patch_{_db_tag(p.design_db)}db.csv"),
            ("v_lo", "count"),
            bins,
            comments=(f"value histogram of the {p.design_db:g} dB patch, "
                      f"bin width {s.bin_width}",),
        )


def _db_tag(db: float) -> str:
    return f"{db:g}".replace(".", "p").replace("-", "m")


# ---------------------------------------------------------------------------
# recover

def _cmd_recover(args) -> int:
    exp = _load_experiment(args)
    out = _out_dir(args, "hdrcal_recover")
    calib = run_calibration(exp)
    if exp.algorithm == "proposed":
        rec = run_recovery(exp, calib)
    else:
        rec = _recover_weighted(exp, calib)
    _write_recovery(out, exp, rec)
    n = len(rec.exposure_times)
    times = " ".join(f"{t:.6g}" for t in rec.exposure_times)
    print(f"algorithm: {exp.algorithm}")
    print(f"exposures ({n}): {times} s")
    err = max_abs_error_db(rec.rows)
    print(f"max abs patch error: {err:.3f} dB" if math.isfinite(err)
          else "max abs patch error: unbounded (clamped patch)")
    print(f"wrote {out}/report.csv")
    return 0


def _recover_weighted(exp, calib) -> RecoveryResult:
    """Recovery with one of the weighted baselines on the planned exposures."""
    from .experiments import _planned_times
    from .fusion import measure_patch_db
    from .sensor import capture as _capture
    from .targets import render_target, scale_illumination

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
        _capture(cfg, scene, t, seed=_capture_seed(exp.seed, _TAG_RECOVERY, n))
        for n, t in enumerate(times)
    )
    scheme = baselines.WeightingScheme(variant=exp.algorithm, bit_depth=cfg.bit_depth)
    fused = baselines.merge_weighted(images, calib.crf, scheme)
    rows = tuple(measure_patch_db(fused, layout))
    return RecoveryResult(plan=plan, exposure_times=times, output=fused,
                          rows=rows, layout=layout, images=images)


def _write_recovery(out, exp, rec: RecoveryResult) -> None:
    from .formats import write_hdrf

    fused = rec.output
    write_hdrf(os.path.join(out, "composite.hdrf"), fused.radiance.values)
    write_pgm8(os.path.join(out, "preview.pgm"), _log_preview(fused.radiance.values))
    write_pgm8(os.path.join(out, "validity.pgm"),
               np.minimum(fused.validity_count, 255).astype(np.uint8))
    write_pgm8(os.path.join(out, "sentinel.pgm"), fused.sentinel_mask)
    for n, img in enumerate(rec.images):
        write_pgm16(os.path.join(out, f"exposure_{n:02d}.pgm"), img.samples)
    meta = {
        "algorithm": exp.algorithm,
        "seed": exp.seed,
        "illumination_factor": exp.illumination_factor,
        "n_images": len(rec.exposure_times),
        "exposure_times": " ".join(fmt_num(t) for t in rec.exposure_times),
        "reference_exposure": fused.reference_exposure,
        "clamped_bright_px": int((fused.sentinel_mask == SENTINEL_CLAMPED_BRIGHT).sum()),
        "clamped_dark_px": int((fused.sentinel_mask == SENTINEL_CLAMPED_DARK).sum()),
    }
    if rec.plan is not None:
        meta["hdr_d"] = rec.plan.hdr_d
        meta["ldr_e"] = rec.plan.ldr_e
    save_kv(os.path.join(out, "recovery.txt"), meta)
    rows = [
        (design, measured, abs(measured - design))
        for design, measured in rec.rows
    ]
    write_csv(
        os.path.join(out, "report.csv"),
        ("design_db", "measured_db", "abs_error_db"),
        rows,
        comments=(f"attenuation recovered from {len(rec.exposure_times)} exposures, "
                  f"algorithm {exp.algorithm}",),
    )


def _log_preview(radiance: np.ndarray) -> np.ndarray:
    """Tone-map radiance to 8 bits: 255 * log10(1+I) / log10(1+I_max)."""
    top = float(radiance.max())
    if top <= 0.0:
        return np.zeros(radiance.shape, dtype=np.uint8)
    scaled = 255.0 * np.log1p(radiance) / np.log1p(top)
    return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# compare

def _cmd_compare(args) -> int:
    exp = _load_experiment(args)
    out = _out_dir(args, "hdrcal_compare")
    calib = run_calibration(exp)
    cmp_res = run_comparison(exp, calib)
    _write_comparison(out, exp, cmp_res)
    order = ("proposed_2", "proposed_16") + baselines.VARIANTS
    print(f"{'algorithm':<16} max abs error (dB)")
    for name in order:
        err = _column_err(cmp_res.design_db, cmp_res.columns[name])
        print(f"{name:<16} {err:.3f}" if math.isfinite(err)
              else f"{name:<16} unbounded")
    print(f"wrote {out}/comparison.csv")
    return 0


def _column_err(design, column) -> float:
    worst = 0.0
    for d, m in zip(design, column):
        if not math.isfinite(m):
            return math.inf
        worst = max(worst, abs(m - d))
    return worst


def _write_comparison(out, exp, res: ComparisonResult) -> None:
    header = ["design_db", "proposed_2", "proposed_16"] + list(baselines.VARIANTS)
    columns = [res.columns[name] for name in header[1:]]
    ref = _reference_columns(res.design_db)
    header += [name for name, _ in ref]
    columns += [col for _, col in ref]
    rows = list(zip(res.design_db, *columns))
    write_csv(
        os.path.join(out, "comparison.csv"),
        header,
        rows,
        comments=(
            f"merge-algorithm comparison on a {len(res.ladder)}-image ladder",
            "ref_* columns are physical-camera values shipped for display only",
        ),
    )


def _reference_columns(design_db):
    """Physical-camera reference columns, when the target matches them."""
    try:
        from importlib.resources import files
        path = files("hdrcal.data") / "reference_recovery_16exp.csv"
        _, header, rows = read_csv(str(path))
    except OSError:
        return []
    ref_design = tuple(float(r[0]) for r in rows)
    if ref_design != tuple(float(d) for d in design_db):
        return []
    out = []
    for j, name in enumerate(header):
        if j == 0:
            continue
        out.append((f"ref_{name}", tuple(float(r[j]) for r in rows)))
    return out


# ---------------------------------------------------------------------------
# sweep

def _cmd_sweep(args) -> int:
    exp = _load_experiment(args)
    out = _out_dir(args, "hdrcal_sweep")
    factors = (list(DEFAULT_SWEEP_FACTORS) if args.factors is None
               else list(_parse_float_list(args.factors, "--factors")))
    calib = run_calibration(exp)
    results = run_sweep(exp, calib, factors)
    _write_sweep(out, exp, results)
    for row in results:
        if row.status == "ok":
            print(f"factor {row.factor:<10g} ok      "
                  f"max abs error {row.max_abs_error_db:.3f} dB")
        else:
            print(f"factor {row.factor:<10g} {row.status}")
    print(f"wrote {out}/sweep.csv")
    return 0


def _write_sweep(out, exp, results) -> None:
    rows = []
    for r in results:
        if r.status != "ok":
            rows.append((r.factor, r.status, "", "", ""))
            continue
        for design, measured in r.rows:
            rows.append((r.factor, r.status, design, measured,
                         abs(measured - design)))
    write_csv(
        os.path.join(out, "sweep.csv"),
        ("factor", "status", "design_db", "measured_db", "abs_error_db"),
        rows,
        comments=("recovery across illumination factors; non-ok rows "
                  "carry the failure status and no measurements",),
    )


# ---------------------------------------------------------------------------
# simulate-capture

def _cmd_simulate_capture(args) -> int:
    exp = _load_experiment(args)
    out = _out_dir(args, "hdrcal_capture")
    cfg = effective_sensor(exp)
    t = args.exposure if args.exposure is not None else cfg.reference_exposure
    if not (t > 0):
        raise ConfigError("--exposure must be positive")
    from .targets import render_target, scale_illumination

    scene, layout = render_target(exp.target)
    if exp.illumination_factor != 1.0:
        scene = scale_illumination(scene, exp.illumination_factor)
    img = capture(cfg, scene, t, seed=_capture_seed(exp.seed, _TAG_RECOVERY, 0))
    write_pgm16(os.path.join(out, "capture.pgm"), img.samples)
    save_kv(os.path.join(out, "capture.txt"), {
        "exposure_time": t,
        "seed": exp.seed,
        "illumination_factor": exp.illumination_factor,
        "saturated_px": int((img.samples == cfg.full_scale).sum()),
    })
    print(f"captured {img.samples.shape[1]}x{img.samples.shape[0]} at {t:.6g} s")
    print(f"wrote {out}/capture.pgm")
    return 0


if __name__ == "__main__":
    sys.exit(main())
