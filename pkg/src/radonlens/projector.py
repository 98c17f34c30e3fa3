"""Forward Radon projection and matrix-free forward/adjoint operators.

Three mutually validating projection methods:

* ``radon_rotate_sum``   -- rotate the scene by -theta onto a detector-sized
  canvas (bilinear) and sum columns;
* ``radon_fft_dc``       -- same rotation, then the zero-frequency magnitude
  of a 1-D DFT along each column (identical to the column sum for
  nonnegative scenes; emulates a cylindrical lens focusing onto a line);
* ``radon_ray_driven``   -- half-pixel-stepped line integration with a
  mass-preserving tent footprint; this is the operator pair (A, A^T) used
  by iterative reconstruction.

Per-angle computations are independent; forward projections may fan out
over a thread pool with disjoint output rows, and results are identical
for any thread count.
"""

from __future__ import annotations

import csv
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from radonlens import backend
from radonlens.errors import DataError, DimensionError, FormatError, ParseError, ValidationError
from radonlens.image import ImageGrid


def make_uniform_angles(n: int, lo_deg: float = 0.0, hi_deg: float = 180.0) -> np.ndarray:
    """n evenly spaced angles in [lo, hi), endpoint excluded."""
    if n < 1:
        raise ValidationError("angle count must be >= 1")
    if not lo_deg < hi_deg:
        raise ValidationError("need lo_deg < hi_deg")
    return lo_deg + (hi_deg - lo_deg) * np.arange(n) / n


def auto_detector_count(image_w: int, image_h: int) -> int:
    """Detector bins covering the image diagonal.

    ceil(diagonal) + 1, bumped by one if needed so that the offset between
    detector and pixel-column grids is an integer -- axis-aligned
    projections are then interpolation-free.
    """
    n = math.ceil(math.hypot(image_w, image_h)) + 1
    if (n - image_w) % 2:
        n += 1
    return n


@dataclass(frozen=True)
class ProjectionGeometry:
    """Parallel-beam geometry: projection angles and a centered detector line."""

    angles_deg: np.ndarray
    n_detectors: int
    image_w: int
    image_h: int
    detector_pitch: float = 1.0

    def __post_init__(self):
        angles = np.asarray(self.angles_deg, dtype=np.float64)
        if angles.ndim != 1 or angles.size < 1:
            raise ValidationError("need at least one projection angle")
        if np.any(angles < 0.0) or np.any(angles >= 180.0):
            raise ValidationError("angles must lie in [0, 180)")
        if angles.size > 1 and np.any(np.diff(angles) <= 0):
            raise ValidationError("angles must be strictly increasing")
        if self.n_detectors < 1:
            raise ValidationError("n_detectors must be >= 1")
        if self.detector_pitch <= 0:
            raise ValidationError("detector_pitch must be > 0")
        if self.image_w < 1 or self.image_h < 1:
            raise ValidationError("image dimensions must be >= 1")
        angles.setflags(write=False)
        object.__setattr__(self, "angles_deg", angles)

    @classmethod
    def for_image(cls, image_w, image_h, angles_deg, n_detectors=None, detector_pitch=1.0):
        if n_detectors is None:
            n_detectors = auto_detector_count(image_w, image_h)
        return cls(np.asarray(angles_deg, dtype=np.float64), n_detectors,
                   image_w, image_h, detector_pitch)

    @property
    def n_angles(self) -> int:
        return int(self.angles_deg.size)

    @property
    def angles_rad(self) -> np.ndarray:
        return np.deg2rad(self.angles_deg)

    def detector_positions(self) -> np.ndarray:
        n = self.n_detectors
        return (np.arange(n) + 0.5 - n / 2.0) * self.detector_pitch


@dataclass(frozen=True)
class Sinogram:
    """Radon-domain data indexed ``data[angle, detector]``."""

    geometry: ProjectionGeometry
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        expect = (self.geometry.n_angles, self.geometry.n_detectors)
        if arr.shape != expect:
            raise DimensionError(f"sinogram shape {arr.shape} != geometry {expect}")
        if not np.all(np.isfinite(arr)):
            raise DataError("sinogram values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)


def _check_dims(img: ImageGrid, geom: ProjectionGeometry):
    if (img.width, img.height) != (geom.image_w, geom.image_h):
        raise DimensionError(
            f"image {img.width}x{img.height} does not match geometry "
            f"{geom.image_w}x{geom.image_h}"
        )


def _rotation_canvas(img: ImageGrid, theta_rad: float, n: int, pitch: float) -> np.ndarray:
    """Rotate the scene by -theta onto an n x n canvas of cell masses.

    Each source pixel scatters its mass to its rotated position.  At
    axis-aligned angles the scatter is bilinear, which is exact (no
    interpolation) whenever the detector and pixel grids align.  At
    oblique angles a cubic B-spline footprint is used instead: its
    weights are a partition of unity at any offset, so total mass is
    preserved exactly at every angle, and it suppresses the
    lattice-resonance ripple that point scattering produces.  A gather
    rotation is ruled out: it aliases a point source's mass by tens of
    percent at 45 degrees.
    """
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    w, h = img.width, img.height
    cx, cy = w / 2.0, h / 2.0
    ex = 0.5 - cx
    ey = 0.5 - cy
    m00 = c / pitch
    m01 = s / pitch
    m02 = (c * ex + s * ey) / pitch + n / 2.0 - 0.5
    m10 = -s / pitch
    m11 = c / pitch
    m12 = (-s * ex + c * ey) / pitch + n / 2.0 - 0.5
    out = np.zeros((n, n), dtype=np.float64)
    axis_aligned = min(abs(c), abs(s)) < 1e-12
    splat = backend.splat_bilinear if axis_aligned else backend.splat_bspline3
    splat(img.data, m00, m01, m02, m10, m11, m12, out, 1.0)
    return out


def _run_per_angle(n_angles: int, worker, threads: int = 1):
    if threads <= 1 or n_angles <= 1:
        for a in range(n_angles):
            worker(a)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(worker, range(n_angles)))


def radon_rotate_sum(img: ImageGrid, geom: ProjectionGeometry, threads: int = 1) -> Sinogram:
    """Rotate by -theta and sum columns; line integrals scaled by pixel pitch."""
    _check_dims(img, geom)
    angles = geom.angles_rad
    out = np.zeros((geom.n_angles, geom.n_detectors))
    scale = img.pitch / geom.detector_pitch

    def worker(a):
        canvas = _rotation_canvas(img, angles[a], geom.n_detectors, geom.detector_pitch)
        out[a] = canvas.sum(axis=0) * scale

    _run_per_angle(geom.n_angles, worker, threads)
    return Sinogram(geom, out)


def radon_fft_dc(img: ImageGrid, geom: ProjectionGeometry, threads: int = 1) -> Sinogram:
    """Rotate by -theta, 1-D DFT along each column, keep the DC magnitude.

    For nonnegative scenes this equals :func:`radon_rotate_sum` exactly
    (the DC coefficient of a DFT is the sample sum).
    """
    _check_dims(img, geom)
    angles = geom.angles_rad
    out = np.zeros((geom.n_angles, geom.n_detectors))
    scale = img.pitch / geom.detector_pitch

    def worker(a):
        canvas = _rotation_canvas(img, angles[a], geom.n_detectors, geom.detector_pitch)
        dc = np.fft.rfft(canvas, axis=0)[0]
        out[a] = np.abs(dc) * scale

    _run_per_angle(geom.n_angles, worker, threads)
    return Sinogram(geom, out)


def radon_ray_driven(img: ImageGrid, geom: ProjectionGeometry, threads: int = 1) -> Sinogram:
    """Line-integral projector stepping half a pixel along the major axis.

    Rays spread over neighbouring pixels with a tent footprint as wide as
    the local ray spacing, which conserves the total image mass per angle
    to machine precision and reduces to exact column/row sums at 0 and 90
    degrees.
    """
    _check_dims(img, geom)
    angles = geom.angles_rad
    cos_t, sin_t = np.cos(angles), np.sin(angles)
    out = np.zeros((geom.n_angles, geom.n_detectors))

    def worker(a):
        backend.joseph_forward(
            img.data, cos_t[a], sin_t[a], geom.n_detectors, geom.detector_pitch, out[a]
        )

    _run_per_angle(geom.n_angles, worker, threads)
    if img.pitch != 1.0:
        out *= img.pitch
    return Sinogram(geom, out)


def forward_apply(img: ImageGrid, geom: ProjectionGeometry, threads: int = 1) -> Sinogram:
    """The linear operator A used by iterative reconstruction (ray-driven)."""
    return radon_ray_driven(img, geom, threads)


def adjoint_apply(sino: Sinogram, threads: int = 1) -> ImageGrid:
    """Exact transpose A^T of :func:`forward_apply`.

    Accumulation happens in strict angle order so the result is identical
    for any thread count.
    """
    geom = sino.geometry
    angles = geom.angles_rad
    cos_t, sin_t = np.cos(angles), np.sin(angles)
    img = np.zeros((geom.image_h, geom.image_w))
    for a in range(geom.n_angles):
        backend.joseph_adjoint(
            sino.data[a], cos_t[a], sin_t[a], geom.image_h, geom.image_w,
            geom.detector_pitch, img,
        )
    return ImageGrid(img)


# ---------------------------------------------------------------------------
# Sinogram file formats: RSG1 binary and a CSV export for inspection.

_RSG_MAGIC = b"RSG1"


def save_sinogram(sino: Sinogram, path) -> None:
    """RSG1: magic, u32 n_angles, u32 n_detectors (LE), f64 angles_deg, f32 data."""
    geom = sino.geometry
    with open(path, "wb") as fh:
        fh.write(_RSG_MAGIC)
        fh.write(struct.pack("<II", geom.n_angles, geom.n_detectors))
        fh.write(np.asarray(geom.angles_deg, dtype="<f8").tobytes())
        fh.write(sino.data.astype("<f4").tobytes())


def load_sinogram(path, image_w: int | None = None, image_h: int | None = None,
                  detector_pitch: float = 1.0) -> Sinogram:
    """Read an RSG1 file; image dims default to the detector count."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != _RSG_MAGIC:
        raise FormatError(f"not an RSG1 file (magic {buf[:4]!r})")
    if len(buf) < 12:
        raise ParseError("RSG1 header truncated", offset=len(buf))
    n_angles, n_det = struct.unpack_from("<II", buf, 4)
    need = 12 + 8 * n_angles + 4 * n_angles * n_det
    if len(buf) < need:
        raise ParseError(f"RSG1 payload truncated: need {need} bytes", offset=len(buf))
    angles = np.frombuffer(buf, dtype="<f8", count=n_angles, offset=12)
    data = np.frombuffer(buf, dtype="<f4", count=n_angles * n_det, offset=12 + 8 * n_angles)
    if image_w is None:
        image_w = n_det
    if image_h is None:
        image_h = image_w
    geom = ProjectionGeometry(angles.copy(), n_det, image_w, image_h, detector_pitch)
    return Sinogram(geom, data.reshape(n_angles, n_det).astype(np.float64))


def sinogram_to_csv(sino: Sinogram, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "bin", "value"])
        for a, ang in enumerate(sino.geometry.angles_deg):
            for k in range(sino.geometry.n_detectors):
                writer.writerow([f"{ang:.10g}", k, f"{sino.data[a, k]:.10g}"])
