"""Cylindrical / hyperboloid metalens phase design and pillar quantization.

The lens phase is quantized against a measured (or synthetic) pillar
library mapping scatterer diameter to transmitted phase and amplitude at
the design wavelength.  Selection minimizes the *wrapped* phase distance:
a raw L2 difference across the 0/2pi seam would pick the wrong pillar.
Amplitude never enters the selection but is stored for reporting.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from radonlens.errors import FormatError, ParseError, ValidationError
from radonlens.image import ImageGrid
from radonlens.pgm import save_image

TWO_PI = 2.0 * math.pi

# manufacturable square-pillar diameter bounds, meters
DIAMETER_MIN = 70e-9
DIAMETER_MAX = 200e-9

PROFILES = ("cylindrical", "hyperboloid")


@dataclass(frozen=True)
class LensSpec:
    focal_length: float
    aperture_w: float
    aperture_h: float
    wavelength: float = 780e-9
    period: float = 330e-9
    profile: str = "cylindrical"

    def __post_init__(self):
        for name in ("focal_length", "aperture_w", "aperture_h", "wavelength", "period"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")
        if self.profile not in PROFILES:
            raise ValidationError(f"profile must be one of {PROFILES}")
        if self.grid_shape()[0] < 1 or self.grid_shape()[1] < 1:
            raise ValidationError("aperture smaller than one pillar period")

    def grid_shape(self) -> tuple[int, int]:
        """(ny, nx) pillar counts: aperture divided by period, rounded down."""
        return (int(self.aperture_h / self.period), int(self.aperture_w / self.period))


def phase_profile(spec: LensSpec, x, y):
    """Lens phase (radians, unwrapped) at metalens coordinates in meters.

    cylindrical:  (2 pi / wavelength) * (F - sqrt(F^2 + x^2)),  y-independent
    hyperboloid:  (2 pi / wavelength) * (F - sqrt(F^2 + x^2 + y^2))

    Zero on the optical axis, even in x, and radially symmetric for the
    hyperboloid variant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    f = spec.focal_length
    if spec.profile == "cylindrical":
        r2 = x * x + np.zeros_like(y)
    else:
        r2 = x * x + y * y
    return (TWO_PI / spec.wavelength) * (f - np.sqrt(f * f + r2))


def wrap_phase(phi):
    """Reduce a phase to [0, 2 pi)."""
    return np.mod(phi, TWO_PI)


@dataclass(frozen=True)
class PillarLibrary:
    """Diameter -> (phase, amplitude) table, sorted by increasing diameter."""

    diameters: np.ndarray  # meters
    phases: np.ndarray  # radians (unwrapped, as simulated)
    amplitudes: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.diameters, dtype=np.float64)
        p = np.asarray(self.phases, dtype=np.float64)
        a = np.asarray(self.amplitudes, dtype=np.float64)
        if not (d.size and d.size == p.size == a.size):
            raise ValidationError("library columns must be non-empty and equal length")
        if np.any(d < DIAMETER_MIN - 1e-12) or np.any(d > DIAMETER_MAX + 1e-12):
            raise ValidationError(
                "pillar diameters outside the manufacturable range "
                f"[{DIAMETER_MIN * 1e9:.0f}, {DIAMETER_MAX * 1e9:.0f}] nm"
            )
        if np.any(np.diff(d) <= 0):
            raise ValidationError("diameters must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValidationError("library phases must be finite")
        if np.any(a < 0) or np.any(a > 1):
            raise ValidationError("amplitudes must lie in [0, 1]")
        for arr in (d, p, a):
            arr.setflags(write=False)
        object.__setattr__(self, "diameters", d)
        object.__setattr__(self, "phases", p)
        object.__setattr__(self, "amplitudes", a)

    def __len__(self):
        return int(self.diameters.size)

    def phase_span(self) -> float:
        return float(self.phases.max() - self.phases.min())


def load_library(path) -> PillarLibrary:
    """Read a pillar library CSV with header diameter_nm, phase_rad, amplitude."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty library file", offset=0) from None
        if [h.strip() for h in header] != ["diameter_nm", "phase_rad", "amplitude"]:
            raise FormatError(
                f"library header must be 'diameter_nm,phase_rad,amplitude', got {header}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"line {lineno}: expected 3 columns, got {len(row)}")
            try:
                rows.append(tuple(float(v) for v in row))
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric value in {row}") from None
    if not rows:
        raise ValidationError("library has no entries")
    arr = np.array(rows)
    order = np.argsort(arr[:, 0], kind="stable")
    if not np.array_equal(order, np.arange(len(rows))):
        warnings.warn("library rows were not sorted by diameter; sorting", stacklevel=2)
        arr = arr[order]
    return PillarLibrary(arr[:, 0] * 1e-9, arr[:, 1], arr[:, 2])


def save_library(lib: PillarLibrary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["diameter_nm", "phase_rad", "amplitude"])
        for d, p, a in zip(lib.diameters, lib.phases, lib.amplitudes):
            writer.writerow([f"{d * 1e9:.9f}", f"{p:.12f}", f"{a:.9f}"])


def synthetic_pillar_library(n: int = 64) -> PillarLibrary:
    """Synthetic stand-in library (no electromagnetic solver behind it).

    Smooth monotone phase model spanning 2.6 rotations-in-radians over the
    manufacturable diameter range, with a mild amplitude dip mid-range.
    Clearly synthetic; real libraries load from the same CSV schema.
    """
    d = np.linspace(DIAMETER_MIN, DIAMETER_MAX, n)
    t = (d - DIAMETER_MIN) / (DIAMETER_MAX - DIAMETER_MIN)
    phases = 2.6 * math.pi * t**1.35
    amplitudes = 0.9 - 0.08 * np.exp(-(((d - 140e-9) / 35e-9) ** 2))
    return PillarLibrary(d, phases, amplitudes, metadata={"synthetic": True})


@dataclass(frozen=True)
class LensDesign:
    spec: LensSpec
    diameters: np.ndarray  # (ny, nx) meters, every entry from the library
    residuals: np.ndarray  # (ny, nx) signed wrapped phase error, radians

    @property
    def grid_shape(self):
        return self.diameters.shape


def _wrapped_distance(a, b):
    d = np.abs(wrap_phase(a) - wrap_phase(b))
    return np.minimum(d, TWO_PI - d)


def site_coordinates(spec: LensSpec) -> tuple[np.ndarray, np.ndarray]:
    """Centered pillar-site coordinates (x for columns, y for rows), meters."""
    ny, nx = spec.grid_shape()
    x = (np.arange(nx) + 0.5 - nx / 2.0) * spec.period
    y = (np.arange(ny) + 0.5 - ny / 2.0) * spec.period
    return x, y


def quantize_lens(spec: LensSpec, lib: PillarLibrary) -> LensDesign:
    """Pick, per site, the pillar whose phase is closest (wrapped) to the target.

    Ties break toward the smaller diameter.  Selection ignores amplitude.
    """
    if len(lib) == 0:
        raise ValidationError("empty pillar library")
    if lib.phase_span() < TWO_PI:
        warnings.warn(
            f"library phase span {lib.phase_span():.3f} rad < 2 pi; "
            "some target phases are unreachable",
            stacklevel=2,
        )
    ny, nx = spec.grid_shape()
    x, y = site_coordinates(spec)
    lib_wrapped = wrap_phase(lib.phases)

    diam = np.empty((ny, nx))
    resid = np.empty((ny, nx))
    if spec.profile == "cylindrical":
        target = wrap_phase(phase_profile(spec, x, 0.0))
        dist = _wrapped_distance(lib_wrapped[None, :], target[:, None])
        pick = np.argmin(dist, axis=1)  # first minimum = smallest diameter on ties
        row_resid = _signed_residual(lib_wrapped[pick], target)
        diam[:, :] = lib.diameters[pick][None, :]
        resid[:, :] = row_resid[None, :]
    else:
        for j in range(ny):
            target = wrap_phase(phase_profile(spec, x, y[j]))
            dist = _wrapped_distance(lib_wrapped[None, :], target[:, None])
            pick = np.argmin(dist, axis=1)
            diam[j] = lib.diameters[pick]
            resid[j] = _signed_residual(lib_wrapped[pick], target)
    return LensDesign(spec, diam, resid)


def _signed_residual(phi_actual, phi_target):
    """Minimal signed difference actual - target, in (-pi, pi]."""
    d = np.mod(phi_actual - phi_target + math.pi, TWO_PI) - math.pi
    return np.where(d == -math.pi, math.pi, d)


def export_layout(design: LensDesign, path, residual_pgm=None) -> None:
    """Write the pillar layout CSV (x_um, y_um, diameter_nm), row-major.

    Optionally also writes a |residual|/pi error map as a 16-bit PGM.
    """
    period_um = design.spec.period * 1e6
    ny, nx = design.grid_shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_um", "y_um", "diameter_nm"])
        for j in range(ny):
            for i in range(nx):
                writer.writerow(
                    [f"{i * period_um:.6f}", f"{j * period_um:.6f}",
                     f"{design.diameters[j, i] * 1e9:.6f}"]
                )
    if residual_pgm is not None:
        err = np.clip(np.abs(design.residuals) / math.pi, 0.0, 1.0)
        save_image(ImageGrid(err), residual_pgm, depth=16)


def read_layout(path, spec: LensSpec) -> np.ndarray:
    """Read back an exported layout CSV into a (ny, nx) diameter grid (meters)."""
    ny, nx = spec.grid_shape()
    grid = np.full((ny, nx), np.nan)
    period_um = spec.period * 1e6
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x_um", "y_um", "diameter_nm"]:
            raise FormatError(f"layout header mismatch: {header}")
        for row in reader:
            if not row:
                continue
            x_um, y_um, d_nm = (float(v) for v in row)
            i = round(x_um / period_um)
            j = round(y_um / period_um)
            grid[j, i] = d_nm * 1e-9
    if np.any(np.isnan(grid)):
        raise ParseError("layout file does not cover the full pillar grid")
    return grid
