"""Calibrated multi-patch test targets rendered as irradiance maps.

A target is a grid of uniform circular patches on a zero-irradiance
background; each patch attenuates the peak by a known design value in
dB, so the rendered scene carries exact analytic ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LayoutOverflow
from .formats import kv_get_float, kv_get_floats
from .sensor import IrradianceMap


@dataclass(frozen=True)
class Patch:
    center: tuple  # (x, y) pixels
    radius: float  # pixels
    design_db: float


@dataclass(frozen=True)
class PatchLayout:
    """Geometry + ground-truth metadata for a rendered target."""

    grid_rows: int
    grid_cols: int
    patches: tuple
    background_irradiance: float
    image_width: int
    image_height: int

    def patch_mask(self, index: int) -> np.ndarray:
        """Boolean pixel mask of one patch disc (row-major image order)."""
        patch = self.patches[index]
        cx, cy = patch.center
        yy, xx = np.ogrid[: self.image_height, : self.image_width]
        return (xx - cx) ** 2 + (yy - cy) ** 2 <= patch.radius**2

    def background_mask(self) -> np.ndarray:
        """Pixels belonging to no patch (the black inter-patch region)."""
        mask = np.ones((self.image_height, self.image_width), dtype=bool)
        for i in range(len(self.patches)):
            mask &= ~self.patch_mask(i)
        return mask

    def index_of_db(self, design_db: float) -> int:
        for i, patch in enumerate(self.patches):
            if patch.design_db == design_db:
                return i
        raise ConfigError(f"no patch with design value {design_db} dB")


@dataclass(frozen=True)
class TargetSpec:
    """Parametric description of a patch-grid target."""

    db_values: tuple
    peak_irradiance: float
    grid_rows: int = 4
    grid_cols: int = 4
    image_width: int = 512
    image_height: int = 512
    patch_radius: float = 40.0
    background_irradiance: float = 0.0
    min_patch_fraction: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, "db_values", tuple(float(d) for d in self.db_values))
        if len(self.db_values) != self.grid_rows * self.grid_cols:
            raise ConfigError("db_values count must fill the patch grid")
        if any(d < 0 for d in self.db_values):
            raise ConfigError("design dB values must be nonnegative")
        if sum(1 for d in self.db_values if d == 0.0) != 1:
            raise ConfigError("exactly one patch must be the 0 dB reference")
        hdr = max(self.db_values)
        if hdr > 0 and len(self.db_values) < hdr / 6.0:
            # low-contrast stepping: enough zones for ~6 dB steps
            raise ConfigError("too few patches for the target's dynamic range")
        if self.peak_irradiance <= 0:
            raise ConfigError("peak_irradiance must be positive")


def render_target(spec: TargetSpec):
    """Rasterize a target spec into (IrradianceMap, PatchLayout).

    Patches are assigned to grid cells row-major in db_values order and
    filled with peak * 10^(-dB/20); the background gets
    background_irradiance (default 0 = no light).
    """
    pitch_x = spec.image_width / spec.grid_cols
    pitch_y = spec.image_height / spec.grid_rows
    patches = []
    for i, db in enumerate(spec.db_values):
        row, col = divmod(i, spec.grid_cols)
        cx = (col + 0.5) * pitch_x
        cy = (row + 0.5) * pitch_y
        patches.append(Patch(center=(cx, cy), radius=spec.patch_radius, design_db=db))
    layout = PatchLayout(
        grid_rows=spec.grid_rows,
        grid_cols=spec.grid_cols,
        patches=tuple(patches),
        background_irradiance=spec.background_irradiance,
        image_width=spec.image_width,
        image_height=spec.image_height,
    )
    _check_layout(layout, spec.min_patch_fraction)
    values = np.full(
        (spec.image_height, spec.image_width),
        spec.background_irradiance,
        dtype=np.float64,
    )
    for i, patch in enumerate(layout.patches):
        values[layout.patch_mask(i)] = spec.peak_irradiance * 10.0 ** (
            -patch.design_db / 20.0
        )
    return IrradianceMap(values=values), layout


def _check_layout(layout: PatchLayout, min_patch_fraction: float):
    total = layout.image_width * layout.image_height
    for i, patch in enumerate(layout.patches):
        cx, cy = patch.center
        r = patch.radius
        if cx - r < 0 or cy - r < 0 or cx + r > layout.image_width or (
            cy + r > layout.image_height
        ):
            raise LayoutOverflow(f"patch {i} ({patch.design_db} dB) leaves the frame")
        count = int(layout.patch_mask(i).sum())
        if count < min_patch_fraction * total:
            raise LayoutOverflow(
                f"patch {i} covers {count} px, below the "
                f"{min_patch_fraction:.2%} floor"
            )
    for i in range(len(layout.patches)):
        for j in range(i + 1, len(layout.patches)):
            xi, yi = layout.patches[i].center
            xj, yj = layout.patches[j].center
            min_dist = layout.patches[i].radius + layout.patches[j].radius
            if (xi - xj) ** 2 + (yi - yj) ** 2 <= min_dist**2:
                raise LayoutOverflow(f"patches {i} and {j} overlap")


def scale_illumination(scene: IrradianceMap, factor: float) -> IrradianceMap:
    """Global illumination change: pointwise multiply by factor > 0."""
    if not factor > 0:
        raise ConfigError("illumination factor must be positive")
    return IrradianceMap(values=scene.values * factor)


# ---------------------------------------------------------------------------
# shipped targets

CALIBRATION_DB_90 = (0, 8, 14, 18, 28, 32, 36, 40, 44, 52, 58, 64, 70, 78, 84, 90)
TEST_DB_78 = (0, 8, 14, 20, 26, 32, 36, 40, 44, 50, 56, 60, 64, 68, 74, 78)
DEFAULT_PEAK_IRRADIANCE = 1.0e6


def calibration_target_90db() -> TargetSpec:
    """16-patch 90 dB calibration target (4x4 grid, low-contrast steps)."""
    return TargetSpec(db_values=CALIBRATION_DB_90, peak_irradiance=DEFAULT_PEAK_IRRADIANCE)


def test_target_78db() -> TargetSpec:
    """16-patch 78 dB recovery test target (4x4 grid)."""
    return TargetSpec(db_values=TEST_DB_78, peak_irradiance=DEFAULT_PEAK_IRRADIANCE)


BUILTIN_TARGETS = {
    "calibration_90db": calibration_target_90db,
    "test_78db": test_target_78db,
}


# ---------------------------------------------------------------------------
# key=value serialization

def target_to_kv(spec: TargetSpec) -> dict:
    return {
        "db_values": spec.db_values,
        "peak_irradiance": spec.peak_irradiance,
        "grid_rows": spec.grid_rows,
        "grid_cols": spec.grid_cols,
        "image_width": spec.image_width,
        "image_height": spec.image_height,
        "patch_radius": spec.patch_radius,
        "background_irradiance": spec.background_irradiance,
    }


def target_from_kv(kv: dict) -> TargetSpec:
    return TargetSpec(
        db_values=kv_get_floats(kv, "db_values"),
        peak_irradiance=kv_get_float(kv, "peak_irradiance", DEFAULT_PEAK_IRRADIANCE),
        grid_rows=int(kv_get_float(kv, "grid_rows", 4)),
        grid_cols=int(kv_get_float(kv, "grid_cols", 4)),
        image_width=int(kv_get_float(kv, "image_width", 512)),
        image_height=int(kv_get_float(kv, "image_height", 512)),
        patch_radius=kv_get_float(kv, "patch_radius", 40.0),
        background_irradiance=kv_get_float(kv, "background_irradiance", 0.0),
    )
