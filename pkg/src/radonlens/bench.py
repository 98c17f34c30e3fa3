"""Projection-capture vs average-pooling compression study.

Generates a dense scene of tiny random digits, captures it two ways at
matched compression ratios -- a sinogram (FFT-DC projection capture at N
angles, reconstructed with FBP or SART) and plain k x k average pooling
(reconstructed by nearest-neighbour upsampling) -- and reports PSNR/SSIM
against the original scene.  The compression ratio is defined as captured
pixel count divided by reconstructed pixel count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from radonlens.errors import ValidationError
from radonlens.image import ImageGrid
from radonlens.projector import ProjectionGeometry, Sinogram, make_uniform_angles, radon_fft_dc
from radonlens.reconstruction import SartConfig, fbp, psnr, sart, ssim

# 4x7 digit glyphs, one string row per pixel row
_GLYPH_ROWS = {
    0: ("0110", "1001", "1001", "1001", "1001", "1001", "0110"),
    1: ("0010", "0110", "0010", "0010", "0010", "0010", "0111"),
    2: ("0110", "1001", "0001", "0010", "0100", "1000", "1111"),
    3: ("1110", "0001", "0001", "0110", "0001", "0001", "1110"),
    4: ("0001", "0011", "0101", "1001", "1111", "0001", "0001"),
    5: ("1111", "1000", "1110", "0001", "0001", "1001", "0110"),
    6: ("0110", "1000", "1000", "1110", "1001", "1001", "0110"),
    7: ("1111", "0001", "0010", "0010", "0100", "0100", "0100"),
    8: ("0110", "1001", "1001", "0110", "1001", "1001", "0110"),
    9: ("0110", "1001", "1001", "0111", "0001", "0001", "0110"),
}

DIGIT_FONT = {
    d: np.array([[int(ch) for ch in row] for row in rows], dtype=np.float64)
    for d, rows in _GLYPH_ROWS.items()
}


def glyph(digit: int, glyph_h: int = 7, glyph_w: int = 4) -> np.ndarray:
    """The digit bitmap, resampled if a non-native size is requested."""
    g = DIGIT_FONT[digit]
    if (glyph_h, glyph_w) == g.shape:
        return g
    from radonlens.image import resize

    return resize(ImageGrid(g), glyph_w, glyph_h).data


def generate_digit_scene(w: int, h: int, glyph_h: int = 7, glyph_w: int = 4,
                         seed: int = 0) -> ImageGrid:
    """Tile the grid with random digits in square cells of side max(gh, gw)+1."""
    cell = max(glyph_h, glyph_w) + 1
    if glyph_w > w or glyph_h > h:
        raise ValidationError("glyph does not fit the scene")
    rng = np.random.default_rng(seed)
    scene = np.zeros((h, w))
    ny, nx = h // cell, w // cell
    digits = rng.integers(0, 10, size=(ny, nx))
    off_y = (cell - glyph_h) // 2
    off_x = (cell - glyph_w) // 2
    for j in range(ny):
        for i in range(nx):
            g = glyph(int(digits[j, i]), glyph_h, glyph_w)
            y0 = j * cell + off_y
            x0 = i * cell + off_x
            scene[y0 : y0 + glyph_h, x0 : x0 + glyph_w] = g
    return ImageGrid(scene)


def average_pool(img: ImageGrid, k: int) -> ImageGrid:
    """Non-overlapping k x k mean pooling; trailing remainder rows/cols drop."""
    if k < 1:
        raise ValidationError("pool window must be >= 1")
    if k > min(img.width, img.height):
        raise ValidationError("pool window larger than the image")
    h = (img.height // k) * k
    w = (img.width // k) * k
    d = img.data[:h, :w].reshape(h // k, k, w // k, k)
    return ImageGrid(d.mean(axis=(1, 3)), img.pitch)


def upsample_nearest(img: ImageGrid, new_w: int, new_h: int) -> ImageGrid:
    """Nearest-neighbour upsampling (the naive inverse of detector binning)."""
    cols = np.minimum(((np.arange(new_w) + 0.5) * img.width / new_w).astype(np.int64),
                      img.width - 1)
    rows = np.minimum(((np.arange(new_h) + 0.5) * img.height / new_h).astype(np.int64),
                      img.height - 1)
    return ImageGrid(img.data[np.ix_(rows, cols)], img.pitch)


@dataclass(frozen=True)
class CompressionResult:
    method: str  # "radon" | "avgpool"
    captured_pixels: int
    reconstructed_pixels: int
    psnr: float
    ssim: float

    @property
    def ratio(self) -> float:
        return self.captured_pixels / self.reconstructed_pixels


def run_compression_study(
    scene: ImageGrid,
    n_angles: int = 91,
    pool_k: int = 3,
    use_sart: bool = False,
    sart_iterations: int = 100,
    threads: int = 1,
):
    """Compare projection capture against average pooling on one scene.

    The projection branch captures ``n_angles`` FFT-DC projections on a
    detector as wide as the scene (so captured pixels = n_angles * width),
    then reconstructs with FBP (or SART when ``use_sart``).  The pooling
    branch averages k x k blocks and upsamples back.  Reconstructions are
    clipped to [0, 1] before scoring.

    Returns (radon_result, pool_result, images) where images maps names to
    the intermediate ImageGrids.
    """
    w, h = scene.width, scene.height
    total = w * h

    geom = ProjectionGeometry.for_image(w, h, make_uniform_angles(n_angles), n_detectors=w)
    sino = radon_fft_dc(scene, geom, threads=threads)
    if use_sart:
        recon, _ = sart(sino, SartConfig(n_iterations=sart_iterations))
    else:
        recon = fbp(sino, "ram-lak")
    radon_img = ImageGrid(np.clip(recon.data, 0.0, 1.0))
    radon_res = CompressionResult(
        "radon", n_angles * geom.n_detectors, total,
        psnr(radon_img, scene), ssim(radon_img, scene),
    )

    pooled = average_pool(scene, pool_k)
    pool_img = upsample_nearest(pooled, w, h)
    pool_res = CompressionResult(
        "avgpool", pooled.width * pooled.height, total,
        psnr(pool_img, scene), ssim(pool_img, scene),
    )

    images = {
        "scene": scene,
        "sinogram": sino,
        "radon_recon": radon_img,
        "pooled": pooled,
        "pool_recon": pool_img,
    }
    return radon_res, pool_res, images
