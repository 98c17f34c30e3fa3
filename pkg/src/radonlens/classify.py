"""Sinogram-domain digit classification pipeline.

Builds augmented digit datasets (pad, resize, random affine, noise, then a
23-angle projection), trains a from-scratch linear softmax classifier with
feature standardization, and evaluates with a confusion matrix.  Dataset
construction and training are deterministic under explicit seeds.

Digit images are ingested from IDX files (the standard big-endian layout
with magics 0x00000803 / 0x00000801, plain or gzipped).  For offline use,
:func:`write_synthetic_digit_idx` renders a clearly-synthetic 10-class
stand-in dataset in the same format from the built-in glyph font.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from radonlens.errors import (
    DimensionError,
    FormatError,
    ParseError,
    ValidationError,
)
from radonlens.image import AffineSpec, ImageGrid, NoiseSpec, add_gaussian_noise, affine_transform, pad_image, resize
from radonlens.projector import ProjectionGeometry, make_uniform_angles, radon_ray_driven

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


# ---------------------------------------------------------------------------
# IDX ingestion

def _read_bytes(path: Path) -> bytes:
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    with open(path, "rb") as fh:
        return fh.read()


def _find_idx(directory: Path, stem: str) -> Path:
    for cand in (directory / stem, directory / (stem + ".gz")):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"{stem}[.gz] not found in {directory}")


def load_idx_images(path) -> np.ndarray:
    """(n, rows, cols) uint8 array from an IDX3 image file."""
    buf = _read_bytes(Path(path))
    if len(buf) < 16:
        raise ParseError("IDX image header truncated", offset=len(buf))
    magic, n, rows, cols = struct.unpack_from(">IIII", buf, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"bad IDX image magic 0x{magic:08x}")
    need = 16 + n * rows * cols
    if len(buf) < need:
        raise ParseError(f"IDX image payload truncated: need {need} bytes", offset=len(buf))
    return np.frombuffer(buf, dtype=np.uint8, count=n * rows * cols, offset=16).reshape(
        n, rows, cols
    )


def load_idx_labels(path) -> np.ndarray:
    """(n,) uint8 label array from an IDX1 label file."""
    buf = _read_bytes(Path(path))
    if len(buf) < 8:
        raise ParseError("IDX label header truncated", offset=len(buf))
    magic, n = struct.unpack_from(">II", buf, 0)
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"bad IDX label magic 0x{magic:08x}")
    if len(buf) < 8 + n:
        raise ParseError("IDX label payload truncated", offset=len(buf))
    return np.frombuffer(buf, dtype=np.uint8, count=n, offset=8)


def save_idx_images(images: np.ndarray, path) -> None:
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        fh.write(np.ascontiguousarray(images, dtype=np.uint8).tobytes())


def save_idx_labels(labels: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def load_digit_dir(directory) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(train_images, train_labels, test_images, test_labels) from a dataset dir."""
    d = Path(directory)
    xtr = load_idx_images(_find_idx(d, TRAIN_IMAGES))
    ytr = load_idx_labels(_find_idx(d, TRAIN_LABELS))
    xte = load_idx_images(_find_idx(d, TEST_IMAGES))
    yte = load_idx_labels(_find_idx(d, TEST_LABELS))
    if xtr.shape[0] != ytr.shape[0] or xte.shape[0] != yte.shape[0]:
        raise ValidationError("image/label counts disagree")
    return xtr, ytr, xte, yte


def write_synthetic_digit_idx(directory, n_train: int = 6000, n_test: int = 1000,
                              seed: int = 0) -> None:
    """Render a synthetic 28x28 digit dataset (IDX files) from the glyph font.

    A stand-in for real handwritten digits when none are available offline:
    each sample is the 4x7 glyph upsampled to ~21 px with a random mild
    affine jitter and pixel noise.  Not handwriting; documented as such.
    """
    from radonlens.bench import DIGIT_FONT

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    def render(count):
        images = np.zeros((count, 28, 28), dtype=np.uint8)
        labels = rng.integers(0, 10, size=count).astype(np.uint8)
        for idx in range(count):
            g = ImageGrid(DIGIT_FONT[int(labels[idx])])
            big = resize(g, 12, 21)
            canvas = np.zeros((28, 28))
            canvas[3:24, 8:20] = big.data
            spec = AffineSpec(
                rotation_deg=float(rng.uniform(-12, 12)),
                translate_frac=(float(rng.uniform(-0.07, 0.07)),
                                float(rng.uniform(-0.07, 0.07))),
                scale=float(rng.uniform(0.88, 1.12)),
            )
            img = affine_transform(ImageGrid(canvas), spec)
            img = add_gaussian_noise(img, NoiseSpec(0.03, seed=int(rng.integers(2**31))))
            images[idx] = np.floor(img.data * 255 + 0.5).astype(np.uint8)
        return images, labels

    xtr, ytr = render(n_train)
    xte, yte = render(n_test)
    save_idx_images(xtr, d / TRAIN_IMAGES)
    save_idx_labels(ytr, d / TRAIN_LABELS)
    save_idx_images(xte, d / TEST_IMAGES)
    save_idx_labels(yte, d / TEST_LABELS)


# ---------------------------------------------------------------------------
# Dataset construction

@dataclass(frozen=True)
class DatasetSpec:
    """Augmentation and projection parameters for dataset construction."""

    n_samples: int
    pad: int = 14
    target_dim: int = 64
    n_angles: int = 23
    rot_deg: float = 50.0
    translate_lo: float = 0.10
    translate_hi: float = 0.30
    scale_lo: float = 0.80
    scale_hi: float = 1.20
    noise_frac: float = 0.05
    augment: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        if self.n_angles < 1:
            raise ValidationError("n_angles must be >= 1")
        if self.pad < 0 or self.target_dim < 1:
            raise ValidationError("pad must be >= 0 and target_dim >= 1")
        if not (0 <= self.translate_lo <= self.translate_hi < 1):
            raise ValidationError("translation range must satisfy 0 <= lo <= hi < 1")
        if not (0 < self.scale_lo <= self.scale_hi):
            raise ValidationError("scale range must be positive and ordered")


def feature_geometry(spec: DatasetSpec) -> ProjectionGeometry:
    return ProjectionGeometry.for_image(
        spec.target_dim, spec.target_dim, make_uniform_angles(spec.n_angles)
    )


def _draw_affine(rng: np.random.Generator, spec: DatasetSpec) -> AffineSpec:
    rot = float(rng.uniform(-spec.rot_deg, spec.rot_deg))
    tx = float(rng.uniform(spec.translate_lo, spec.translate_hi)) * (
        1.0 if rng.integers(2) else -1.0
    )
    ty = float(rng.uniform(spec.translate_lo, spec.translate_hi)) * (
        1.0 if rng.integers(2) else -1.0
    )
    scale = float(rng.uniform(spec.scale_lo, spec.scale_hi))
    return AffineSpec(rotation_deg=rot, translate_frac=(tx, ty), scale=scale)


def prepare_image(raw: np.ndarray, spec: DatasetSpec,
                  rng: np.random.Generator | None = None) -> ImageGrid:
    """pad -> resize -> (random affine) -> (noise); raw is a uint8/float image."""
    img = ImageGrid(np.asarray(raw, dtype=np.float64) / 255.0
                    if raw.dtype == np.uint8 else np.asarray(raw, dtype=np.float64))
    img = pad_image(img, spec.pad)
    img = resize(img, spec.target_dim, spec.target_dim)
    if spec.augment and rng is not None:
        img = affine_transform(img, _draw_affine(rng, spec))
        if spec.noise_frac > 0:
            img = add_gaussian_noise(img, NoiseSpec(spec.noise_frac,
                                                    seed=int(rng.integers(2**31))))
    return img


def build_radon_dataset(images: np.ndarray, labels: np.ndarray,
                        spec: DatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Featurize ``spec.n_samples`` images into flattened sinograms.

    Returns (features (n, n_angles * n_detectors) float64, labels (n,) uint8).
    """
    n = min(spec.n_samples, images.shape[0])
    geom = feature_geometry(spec)
    rng = np.random.default_rng(spec.seed)
    feats = np.empty((n, spec.n_angles * geom.n_detectors))
    for idx in range(n):
        img = prepare_image(images[idx], spec, rng)
        sino = radon_ray_driven(img, geom)
        feats[idx] = sino.data.ravel()
    return feats, np.asarray(labels[:n], dtype=np.uint8)


def build_pixel_dataset(images: np.ndarray, labels: np.ndarray,
                        spec: DatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Same preparation pipeline but flattened pixels instead of projections."""
    n = min(spec.n_samples, images.shape[0])
    rng = np.random.default_rng(spec.seed)
    feats = np.empty((n, spec.target_dim * spec.target_dim))
    for idx in range(n):
        feats[idx] = prepare_image(images[idx], spec, rng).data.ravel()
    return feats, np.asarray(labels[:n], dtype=np.uint8)


# ---------------------------------------------------------------------------
# Linear softmax classifier

@dataclass
class ClassifierModel:
    weights: np.ndarray  # (n_classes, n_features + 1), bias last
    feat_mean: np.ndarray
    feat_std: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1

    def logits(self, features: np.ndarray) -> np.ndarray:
        if features.shape[1] != self.n_features:
            raise DimensionError(
                f"feature dim {features.shape[1]} != model {self.n_features}"
            )
        z = (features - self.feat_mean) / self.feat_std
        return z @ self.weights[:, :-1].T + self.weights[:, -1]

    def predict(self, features: np.ndarray) -> np.ndarray:
        # np.argmax takes the lowest index on ties, so an all-zero model
        # predicts class 0 everywhere.
        return np.argmax(self.logits(features), axis=1)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(weights: np.ndarray, features_std: np.ndarray, labels: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + (l2/2)*||W||^2 (bias excluded) and its gradient.

    ``features_std`` must already be standardized; the bias column is
    appended here.
    """
    n = features_std.shape[0]
    xb = np.concatenate([features_std, np.ones((n, 1))], axis=1)
    probs = _softmax(xb @ weights.T)
    eps = 1e-300
    ce = -np.mean(np.log(probs[np.arange(n), labels] + eps))
    wreg = weights.copy()
    wreg[:, -1] = 0.0
    loss = ce + 0.5 * l2 * float((wreg * wreg).sum())
    delta = probs
    delta[np.arange(n), labels] -= 1.0
    grad = (delta.T @ xb) / n + l2 * wreg
    return float(loss), grad


def train_softmax(features: np.ndarray, labels: np.ndarray, epochs: int = 60,
                  lr: float = 0.02, l2: float = 1e-3, seed: int = 0,
                  batch_size: int = 256, lr_decay: float = 0.95,
                  n_classes: int = 10) -> tuple[ClassifierModel, list[float]]:
    """Minibatch gradient descent on cross-entropy with an L2 penalty.

    The step size shrinks by ``lr_decay`` each epoch, which keeps the
    full-dataset loss trace non-increasing (to within minibatch jitter)
    once past the first epoch.  Returns the model and the loss after each
    epoch.  Deterministic under the seed.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if np.unique(labels).size < 2:
        raise ValidationError("training set must contain at least 2 classes")
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    z = (features - mean) / std

    n, d = z.shape
    weights = np.zeros((n_classes, d + 1))
    rng = np.random.default_rng(seed)
    losses: list[float] = []
    step = lr
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            sel = order[start : start + batch_size]
            _, grad = loss_and_grad(weights, z[sel], labels[sel], l2)
            weights -= step * grad
        step *= lr_decay
        losses.append(loss_and_grad(weights, z, labels, l2)[0])
    return ClassifierModel(weights, mean, std), losses


def evaluate(model: ClassifierModel, features: np.ndarray,
             labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Accuracy and the (true x predicted) confusion matrix."""
    labels = np.asarray(labels, dtype=np.int64)
    pred = model.predict(features)
    k = model.n_classes
    conf = np.zeros((k, k), dtype=np.int64)
    np.add.at(conf, (labels, pred), 1)
    acc = float(np.trace(conf)) / labels.shape[0]
    return acc, conf


# ---------------------------------------------------------------------------
# Model and confusion-matrix serialization

_RCM_MAGIC = b"RCM1"


def save_model(model: ClassifierModel, path) -> None:
    """RCM1: magic, u32 n_classes, u32 n_features (LE), f64 weights|mean|std."""
    with open(path, "wb") as fh:
        fh.write(_RCM_MAGIC)
        fh.write(struct.pack("<II", model.n_classes, model.n_features))
        fh.write(model.weights.astype("<f8").tobytes())
        fh.write(model.feat_mean.astype("<f8").tobytes())
        fh.write(model.feat_std.astype("<f8").tobytes())


def load_model(path) -> ClassifierModel:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != _RCM_MAGIC:
        raise FormatError(f"not an RCM1 model file (magic {buf[:4]!r})")
    k, d = struct.unpack_from("<II", buf, 4)
    need = 12 + 8 * (k * (d + 1) + 2 * d)
    if len(buf) < need:
        raise ParseError(f"model file truncated: need {need} bytes", offset=len(buf))
    off = 12
    weights = np.frombuffer(buf, dtype="<f8", count=k * (d + 1), offset=off).reshape(k, d + 1)
    off += 8 * k * (d + 1)
    mean = np.frombuffer(buf, dtype="<f8", count=d, offset=off)
    off += 8 * d
    std = np.frombuffer(buf, dtype="<f8", count=d, offset=off)
    return ClassifierModel(weights.copy(), mean.copy(), std.copy())


def confusion_to_csv(conf: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("true\\pred," + ",".join(str(c) for c in range(conf.shape[1])) + "\n")
        for r in range(conf.shape[0]):
            fh.write(str(r) + "," + ",".join(str(v) for v in conf[r]) + "\n")


def confusion_to_pgm(conf: np.ndarray, path) -> None:
    from radonlens.pgm import save_image

    peak = conf.max() if conf.max() > 0 else 1
    save_image(ImageGrid(conf.astype(np.float64) / peak), path, depth=8)
