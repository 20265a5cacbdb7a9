"""Synthetic CMOS camera: table-driven response, noise, saturation anomaly.

The sensor model is deliberately simple and fully measurable:

- mean response is a piecewise-linear interpolation of a measured
  (exposure product H, output counts v) table in (log10 H, v) space,
  with H = I_s * t / T_ref (reciprocity);
- additive Gaussian noise with sigma = read + shot * sqrt(max(v - v_N, 0));
- a logistic saturated-pixel trigger: with probability
  p(m) = p_max / (1 + exp(-(m - theta) / s)) a pixel reads full scale
  regardless of its mean response m;
- quantization floor(v + 0.5) clamped to [0, 2^A - 1].
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ._backend import capture_kernel, forward_kernel
from .errors import ConfigError, ExposureOutOfRange
from .formats import fmt_num, kv_get_float, kv_get_floats


@dataclass(frozen=True)
class SensorConfig:
    """Immutable description of one synthetic camera.

    `response_curve` holds (H, v) pairs sorted by H; the first pair must
    be (0, dark_level) — the no-light floor — and the last v may sit
    below full scale (real sensors plateau before the ADC limit).
    """

    bit_depth: int
    response_curve: tuple
    reference_exposure: float
    dark_level: float
    read_noise_sigma: float
    shot_noise_coeff: float
    anomaly_p_max: float
    anomaly_threshold: float
    anomaly_steepness: float
    exposure_limits: tuple
    rng_seed: int = 0

    def __post_init__(self):
        curve = tuple((float(h), float(v)) for h, v in self.response_curve)
        object.__setattr__(self, "response_curve", curve)
        if len(curve) < 2:
            raise ConfigError("response_curve needs at least 2 points")
        hs = [h for h, _ in curve]
        vs = [v for _, v in curve]
        if hs[0] != 0.0 or vs[0] != self.dark_level:
            raise ConfigError("response_curve must start at (0, dark_level)")
        if any(b <= a for a, b in zip(hs, hs[1:])) or any(
            b <= a for a, b in zip(vs, vs[1:])
        ):
            raise ConfigError("response_curve must be strictly increasing")
        if vs[-1] > self.full_scale:
            raise ConfigError("response_curve exceeds full scale")
        if not 0.0 <= self.anomaly_p_max <= 1.0:
            raise ConfigError("anomaly_p_max must be a probability")
        t_min, t_max = self.exposure_limits
        if not 0.0 < t_min < t_max:
            raise ConfigError("exposure_limits must satisfy 0 < T_min < T_max")
        if not 0.0 <= self.dark_level < self.full_scale:
            raise ConfigError("dark_level must sit below full scale")

    @property
    def full_scale(self) -> int:
        return (1 << self.bit_depth) - 1

    def curve_nodes(self):
        """(log10 H, v) arrays for the positive-H table nodes."""
        h = np.array([p[0] for p in self.response_curve[1:]], dtype=np.float64)
        v = np.array([p[1] for p in self.response_curve[1:]], dtype=np.float64)
        return np.log10(h), v


@dataclass(frozen=True)
class IrradianceMap:
    """Scene ground truth: nonnegative scaled irradiance per pixel."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ConfigError("irradiance map must be 2-D")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ConfigError("irradiance must be finite and nonnegative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RawImage:
    """One exposure: quantized sensor samples plus the time that made them."""

    samples: np.ndarray
    exposure_time: float
    bit_depth: int

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise ConfigError("raw image must be 2-D")
        if arr.dtype != np.uint16:
            arr = arr.astype(np.uint16)
        full = (1 << self.bit_depth) - 1
        if arr.size and int(arr.max()) > full:
            raise ConfigError("sample exceeds full scale for bit depth")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


def _check_exposure(cfg: SensorConfig, t: float):
    t_min, t_max = cfg.exposure_limits
    if not t_min <= t <= t_max:
        raise ExposureOutOfRange(
            f"exposure {t:g} s outside supported range [{t_min:g}, {t_max:g}] s"
        )


def mean_response(cfg: SensorConfig, irradiance, t: float):
    """Noiseless expected output counts for irradiance(s) at exposure t.

    Accepts a scalar or an array; scalars come back as floats. Inputs
    below the first table node floor at the dark level; inputs above the
    last node clamp to the table top (the sensor's plateau).
    """
    _check_exposure(cfg, t)
    irr = np.asarray(irradiance, dtype=np.float64)
    if np.any(irr < 0):
        raise ConfigError("irradiance must be nonnegative")
    nodes_logh, nodes_v = cfg.curve_nodes()
    with np.errstate(divide="ignore"):  # log10(0) -> -inf is the H=0 case
        logh = np.log10(irr * (t / cfg.reference_exposure))
    out = forward_kernel(logh, nodes_logh, nodes_v, cfg.dark_level)
    if np.isscalar(irradiance) or irr.ndim == 0:
        return float(out)
    return out


def anomaly_probability(cfg: SensorConfig, mean_v):
    """Saturated-pixel trigger probability for mean response(s)."""
    m = np.asarray(mean_v, dtype=np.float64)
    if cfg.anomaly_p_max == 0.0:
        return np.zeros_like(m)
    with np.errstate(over="ignore"):  # exp overflow -> p == 0, intended
        return cfg.anomaly_p_max / (
            1.0 + np.exp(-(m - cfg.anomaly_threshold) / cfg.anomaly_steepness)
        )


def capture(cfg: SensorConfig, scene: IrradianceMap, t: float, seed=None) -> RawImage:
    """Simulate one exposure of `scene` for `t` seconds.

    Deterministic for a fixed (cfg, seed); `seed` defaults to
    cfg.rng_seed and also accepts a numpy SeedSequence. The RNG stream
    contract is fixed: one uniform draw per pixel (anomaly), then one
    normal draw per pixel (noise), row-major.
    """
    _check_exposure(cfg, t)
    m = mean_response(cfg, scene.values, t)
    p = anomaly_probability(cfg, m)
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
    u = rng.random(m.shape)
    g = rng.standard_normal(m.shape)
    samples = capture_kernel(
        m,
        p,
        cfg.read_noise_sigma,
        cfg.shot_noise_coeff,
        cfg.dark_level,
        float(cfg.full_scale),
        u,
        g,
    )
    return RawImage(samples=samples, exposure_time=t, bit_depth=cfg.bit_depth)


def noiseless(cfg: SensorConfig) -> SensorConfig:
    """Copy of `cfg` with noise and the saturation anomaly disabled."""
    return dataclasses.replace(
        cfg, read_noise_sigma=0.0, shot_noise_coeff=0.0, anomaly_p_max=0.0
    )


def without_anomaly(cfg: SensorConfig) -> SensorConfig:
    """Copy of `cfg` with only the saturation anomaly disabled."""
    return dataclasses.replace(cfg, anomaly_p_max=0.0)


# ---------------------------------------------------------------------------
# shipped default camera

_DEFAULT_REFERENCE_EXPOSURE = 3.703e-3  # seconds; exposure of the shipped table
_DEFAULT_EXPOSURE_LIMITS = (2.9e-5, 10.0)  # seconds


def default_sensor() -> SensorConfig:
    """The shipped 16-bit camera with the packaged measured response table.

    Noise and anomaly defaults are tuned so a calibration capture of the
    90 dB target reproduces the reference behavior: the four brightest
    patches show triggered saturated pixels, the 28 dB patch and dimmer
    ones are clean, and a uniform zone driven to a mean response of
    ~45857 counts (the 0 dB patch at 0.296 ms) saturates ~0.93% of its
    pixels.
    """
    from .calibration import load_crf_csv  # local import: avoid module cycle

    crf = load_crf_csv(_default_crf_path())
    curve = [(0.0, crf.black_level)]
    curve.extend((e.irradiance, e.v_avg) for e in reversed(crf.entries))
    return SensorConfig(
        bit_depth=16,
        response_curve=tuple(curve),
        reference_exposure=_DEFAULT_REFERENCE_EXPOSURE,
        dark_level=crf.black_level,
        read_noise_sigma=2.0,
        shot_noise_coeff=0.3,
        anomaly_p_max=0.012,
        anomaly_threshold=45486.0,
        anomaly_steepness=300.0,
        exposure_limits=_DEFAULT_EXPOSURE_LIMITS,
        rng_seed=0,
    )


def _default_crf_path():
    from importlib import resources

    return resources.files("hdrcal.data") / "default_crf.csv"


# ---------------------------------------------------------------------------
# key=value serialization

def sensor_to_kv(cfg: SensorConfig) -> dict:
    return {
        "bit_depth": cfg.bit_depth,
        "reference_exposure": cfg.reference_exposure,
        "dark_level": cfg.dark_level,
        "read_noise_sigma": cfg.read_noise_sigma,
        "shot_noise_coeff": cfg.shot_noise_coeff,
        "anomaly_p_max": cfg.anomaly_p_max,
        "anomaly_threshold": cfg.anomaly_threshold,
        "anomaly_steepness": cfg.anomaly_steepness,
        "exposure_min": cfg.exposure_limits[0],
        "exposure_max": cfg.exposure_limits[1],
        "rng_seed": cfg.rng_seed,
        "curve_h": " ".join(fmt_num(h) for h, _ in cfg.response_curve),
        "curve_v": " ".join(fmt_num(v) for _, v in cfg.response_curve),
    }


def sensor_from_kv(kv: dict) -> SensorConfig:
    base = default_sensor()
    if "curve_h" in kv or "curve_v" in kv:
        hs = kv_get_floats(kv, "curve_h")
        vs = kv_get_floats(kv, "curve_v")
        if len(hs) != len(vs):
            raise ConfigError("curve_h and curve_v must have equal length")
        curve = tuple(zip(hs, vs))
    else:
        curve = base.response_curve
    dark = kv_get_float(kv, "dark_level", curve[0][1])
    return SensorConfig(
        bit_depth=int(kv_get_float(kv, "bit_depth", base.bit_depth)),
        response_curve=curve,
        reference_exposure=kv_get_float(
            kv, "reference_exposure", base.reference_exposure
        ),
        dark_level=dark,
        read_noise_sigma=kv_get_float(kv, "read_noise_sigma", base.read_noise_sigma),
        shot_noise_coeff=kv_get_float(kv, "shot_noise_coeff", base.shot_noise_coeff),
        anomaly_p_max=kv_get_float(kv, "anomaly_p_max", base.anomaly_p_max),
        anomaly_threshold=kv_get_float(
            kv, "anomaly_threshold", base.anomaly_threshold
        ),
        anomaly_steepness=kv_get_float(
            kv, "anomaly_steepness", base.anomaly_steepness
        ),
        exposure_limits=(
            kv_get_float(kv, "exposure_min", base.exposure_limits[0]),
            kv_get_float(kv, "exposure_max", base.exposure_limits[1]),
        ),
        rng_seed=int(kv_get_float(kv, "rng_seed", base.rng_seed)),
    )
