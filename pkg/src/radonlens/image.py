"""Grayscale image grid, affine transforms, padding/resizing, noise.

Grid convention used everywhere in the package: pixel (row j, col i) has
its center at physical coordinates (i + 0.5, j + 0.5); rotations are about
the image center (w/2, h/2).  All operations are pure functions on
immutable values; the backing arrays are marked read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from radonlens import backend
from radonlens.errors import DataError, DimensionError, ValidationError


@dataclass(frozen=True)
class ImageGrid:
    """2-D grayscale image: ``data[row, col]`` with optional physical pitch."""

    data: np.ndarray
    pitch: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"image must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("image intensities must be finite")
        if self.pitch <= 0:
            raise ValidationError("pixel pitch must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def total(self) -> float:
        return float(self.data.sum())


@dataclass(frozen=True)
class AffineSpec:
    """Rotation (degrees, +x axis toward +y), translation as width/height
    fractions, isotropic scale.  Scale and rotation act about the image
    center; translation is applied last."""

    rotation_deg: float = 0.0
    translate_frac: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValidationError("affine scale must be > 0")
        tx, ty = self.translate_frac
        if abs(tx) >= 1.0 or abs(ty) >= 1.0:
            raise ValidationError("affine translation fractions must satisfy |t| < 1")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise: sigma as a fraction of the [0, 1] range."""

    sigma_frac: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma_frac < 0:
            raise ValidationError("noise sigma_frac must be >= 0")


def _warp(src: np.ndarray, m: np.ndarray, out_h: int, out_w: int, edge_clamp: bool) -> np.ndarray:
    out = np.zeros((out_h, out_w), dtype=np.float64)
    backend.warp_bilinear(
        src, m[0, 0], m[0, 1], m[0, 2], m[1, 0], m[1, 1], m[1, 2], out, edge_clamp
    )
    return out


def affine_transform(img: ImageGrid, spec: AffineSpec) -> ImageGrid:
    """Bilinear affine warp with zero fill outside the source support.

    Output pixel (i, j) reads the source at
    ``R(-rot) . (p - center - t) / scale + center`` so that the *content*
    is rotated by ``rotation_deg``, scaled, and then shifted by
    ``translate_frac * (w, h)`` pixels.
    """
    h, w = img.height, img.width
    th = math.radians(spec.rotation_deg)
    c, s = math.cos(th), math.sin(th)
    cx, cy = w / 2.0 - 0.5, h / 2.0 - 0.5  # image center in array-index units
    tx = spec.translate_frac[0] * w
    ty = spec.translate_frac[1] * h
    inv = 1.0 / spec.scale
    m = np.array(
        [
            [c * inv, s * inv, cx - inv * (c * (cx + tx) + s * (cy + ty))],
            [-s * inv, c * inv, cy - inv * (-s * (cx + tx) + c * (cy + ty))],
        ]
    )
    return ImageGrid(_warp(img.data, m, h, w, edge_clamp=False), img.pitch)


def pad_image(img: ImageGrid, pad: int, fill: float = 0.0) -> ImageGrid:
    """Grow the image by ``pad`` pixels on every side, filled with ``fill``."""
    if pad < 0:
        raise ValidationError("pad must be >= 0")
    if pad == 0:
        return img
    out = np.full((img.height + 2 * pad, img.width + 2 * pad), fill, dtype=np.float64)
    out[pad:-pad, pad:-pad] = img.data
    return ImageGrid(out, img.pitch)


def center_crop(img: ImageGrid, new_w: int, new_h: int) -> ImageGrid:
    """Crop the centered new_w x new_h window (inverse of pad_image)."""
    if new_w > img.width or new_h > img.height or new_w < 1 or new_h < 1:
        raise DimensionError("crop window must fit inside the image")
    x0 = (img.width - new_w) // 2
    y0 = (img.height - new_h) // 2
    return ImageGrid(img.data[y0 : y0 + new_h, x0 : x0 + new_w].copy(), img.pitch)


def resize(img: ImageGrid, new_w: int, new_h: int) -> ImageGrid:
    """Bilinear resample onto a new_w x new_h grid.

    Output pixel centers map to source coordinate ``(i + 0.5) * w/new_w``
    (area-aligned grids); samples are edge-clamped so constant images stay
    exactly constant.
    """
    if new_w < 1 or new_h < 1:
        raise ValidationError("resize dimensions must be >= 1")
    if new_w == img.width and new_h == img.height:
        return img
    sx = img.width / new_w
    sy = img.height / new_h
    m = np.array([[sx, 0.0, 0.5 * sx - 0.5], [0.0, sy, 0.5 * sy - 0.5]])
    return ImageGrid(_warp(img.data, m, new_h, new_w, edge_clamp=True), img.pitch)


def add_gaussian_noise(img: ImageGrid, spec: NoiseSpec) -> ImageGrid:
    """Add N(0, (sigma_frac * range)^2) per pixel and clamp to [0, 1].

    The reference range is the normalized dynamic range, i.e. sigma =
    sigma_frac * 1.0.  Deterministic under the configured seed;
    sigma_frac == 0 returns the input unchanged.
    """
    if spec.sigma_frac == 0:
        return img
    rng = np.random.default_rng(spec.seed)
    noisy = img.data + rng.normal(0.0, spec.sigma_frac, size=img.data.shape)
    return ImageGrid(np.clip(noisy, 0.0, 1.0), img.pitch)


def disk_phantom(size: int, radius_frac: float = 0.35, value: float = 1.0) -> ImageGrid:
    """Centered anti-aliased disk on a black background (test scene)."""
    c = size / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    r = np.hypot(xx + 0.5 - c, yy + 0.5 - c)
    radius = radius_frac * size
    data = value * np.clip(radius + 0.5 - r, 0.0, 1.0)
    return ImageGrid(data)


def smooth_phantom(size: int, seed: int = 7) -> ImageGrid:
    """Smooth nonnegative random scene built from a few 2-D Gaussian blobs."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    data = np.zeros((size, size))
    for _ in range(6):
        cx, cy = rng.uniform(0.25 * size, 0.75 * size, 2)
        sig = rng.uniform(0.06, 0.18) * size
        amp = rng.uniform(0.3, 1.0)
        data += amp * np.exp(-((xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2) / (2 * sig**2))
    data /= data.max()
    return ImageGrid(data)
