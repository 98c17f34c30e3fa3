"""Single executable exposing every pipeline stage as a subcommand.

Exit codes: 0 success, 2 validation error, 3 I/O error.  Every run writes
a JSON manifest next to its primary output recording the arguments, seed,
tool version, SHA-256 digests of inputs and outputs, and wall time.  All
randomized stages take an explicit --seed; --strict-seed makes a missing
seed an error.  Flag values override --config file entries, which override
built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

import radonlens
from radonlens import classify as clf
from radonlens import metaoptic
from radonlens.bench import generate_digit_scene, run_compression_study
from radonlens.errors import ValidationError
from radonlens.image import ImageGrid
from radonlens.pgm import load_image, save_image
from radonlens.projector import (
    ProjectionGeometry,
    Sinogram,
    load_sinogram,
    make_uniform_angles,
    radon_fft_dc,
    radon_ray_driven,
    radon_rotate_sum,
    save_sinogram,
    sinogram_to_csv,
)
from radonlens.reconstruction import SartConfig, fbp, sart

_METHODS = {"rotate": radon_rotate_sum, "ray": radon_ray_driven, "fftdc": radon_fft_dc}


# ---------------------------------------------------------------------------
# Run manifest

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Collects input/output digests during a run; written on success.

    Contains the wall time, so the manifest itself is excluded from the
    byte-identical-outputs guarantee (everything else is covered).
    """

    def __init__(self, subcommand: str, argv: list[str], seed):
        self.data = {
            "subcommand": subcommand,
            "argv": argv,
            "seed": seed,
            "version": radonlens.__version__,
            "inputs": {},
            "outputs": {},
        }
        self._t0 = time.perf_counter()

    def add_input(self, path):
        self.data["inputs"][str(path)] = _sha256(Path(path))

    def add_output(self, path):
        self.data["outputs"][str(path)] = _sha256(Path(path))

    def write(self, path):
        self.data["wall_time_s"] = round(time.perf_counter() - self._t0, 6)
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _require_seed(args) -> int:
    if args.seed is None:
        if getattr(args, "strict_seed", False):
            raise ValidationError("--strict-seed is set: this stage requires an explicit --seed")
        return 0
    return int(args.seed)


# ---------------------------------------------------------------------------
# Subcommand implementations

def cmd_radon(args) -> int:
    img = load_image(args.in_path)
    angles = make_uniform_angles(args.angles, args.lo, args.hi)
    geom = ProjectionGeometry.for_image(img.width, img.height, angles,
                                        n_detectors=args.detectors)
    mani = Manifest("radon", sys.argv[1:], None)
    mani.add_input(args.in_path)
    sino = _METHODS[args.method](img, geom, threads=args.threads)
    save_sinogram(sino, args.out)
    mani.add_output(args.out)
    if args.csv:
        sinogram_to_csv(sino, args.csv)
        mani.add_output(args.csv)
    mani.write(str(args.out) + ".manifest.json")
    return 0


def cmd_reconstruct(args) -> int:
    mani = Manifest("reconstruct", sys.argv[1:], args.seed)
    mani.add_input(args.in_path)
    sino = load_sinogram(args.in_path, image_w=args.width, image_h=args.height)
    outputs = [args.out]
    if args.algo == "sart":
        snaps = tuple(int(v) for v in args.snapshots.split(",")) if args.snapshots else \
            SartConfig.__dataclass_fields__["snapshot_iters"].default
        cfg = SartConfig(
            n_iterations=args.iters,
            relaxation=args.relax,
            ordering=args.ordering,
            seed=_require_seed(args) if args.ordering == "shuffled" else 0,
            nonnegativity=not args.no_nonneg,
            snapshot_iters=snaps,
        )
        img, report = sart(sino, cfg)
        stem = Path(args.out).with_suffix("")
        for it, snap in sorted(report.snapshots.items()):
            snap_path = f"{stem}_iter{it:03d}.pgm"
            save_image(snap, snap_path, clamp=args.clamp)
            outputs.append(snap_path)
        if args.report:
            with open(args.report, "w") as fh:
                fh.write("iteration,residual\n")
                for i, r in enumerate(report.residuals, start=1):
                    fh.write(f"{i},{r:.12g}\n")
            outputs.append(args.report)
    else:
        img = fbp(sino, args.filter)
    save_image(img, args.out, clamp=args.clamp)
    for p in outputs:
        mani.add_output(p)
    mani.write(str(args.out) + ".manifest.json")
    return 0


def _parse_aperture(text: str) -> tuple[float, float]:
    try:
        w, h = text.lower().split("x")
        return float(w), float(h)
    except Exception:
        raise ValidationError(f"aperture must look like '200e-6x200e-6', got {text!r}") from None


def cmd_design_lens(args) -> int:
    mani = Manifest("design-lens", sys.argv[1:], None)
    aw, ah = _parse_aperture(args.aperture)
    spec = metaoptic.LensSpec(
        focal_length=args.focal,
        aperture_w=aw,
        aperture_h=ah,
        wavelength=args.wavelength,
        period=args.period,
        profile={"cyl": "cylindrical", "hyp": "hyperboloid"}[args.profile],
    )
    if args.library:
        mani.add_input(args.library)
        lib = metaoptic.load_library(args.library)
    else:
        lib = metaoptic.synthetic_pillar_library()
    design = metaoptic.quantize_lens(spec, lib)
    metaoptic.export_layout(design, args.out, residual_pgm=args.residuals)
    mani.add_output(args.out)
    if args.residuals:
        mani.add_output(args.residuals)
    mani.write(str(args.out) + ".manifest.json")
    return 0


def cmd_bench(args) -> int:
    seed = _require_seed(args)
    mani = Manifest("bench", sys.argv[1:], seed)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    gw, gh = (int(v) for v in args.glyph.lower().split("x"))
    scene = generate_digit_scene(args.scene_size, args.scene_size, glyph_h=gh,
                                 glyph_w=gw, seed=seed)
    radon_res, pool_res, images = run_compression_study(
        scene, n_angles=args.angles, pool_k=args.pool,
        use_sart=args.sart, sart_iterations=args.iters, threads=args.threads,
    )
    results = outdir / "results.csv"
    with open(results, "w") as fh:
        fh.write("method,captured_pixels,reconstructed_pixels,ratio,psnr,ssim\n")
        for r in (radon_res, pool_res):
            fh.write(f"{r.method},{r.captured_pixels},{r.reconstructed_pixels},"
                     f"{r.ratio:.6f},{r.psnr:.4f},{r.ssim:.6f}\n")
    save_image(images["scene"], outdir / "scene.pgm")
    save_image(images["radon_recon"], outdir / "radon_recon.pgm", clamp=True)
    save_image(images["pool_recon"], outdir / "pool_recon.pgm", clamp=True)
    save_sinogram(images["sinogram"], outdir / "sinogram.rsg")
    for p in ("results.csv", "scene.pgm", "radon_recon.pgm", "pool_recon.pgm", "sinogram.rsg"):
        mani.add_output(outdir / p)
    mani.write(outdir / "manifest.json")
    print(f"radon ratio {radon_res.ratio:.6f} psnr {radon_res.psnr:.2f} dB | "
          f"pool ratio {pool_res.ratio:.6f} psnr {pool_res.psnr:.2f} dB")
    return 0


def _dataset_spec(args, n: int, seed: int) -> clf.DatasetSpec:
    return clf.DatasetSpec(
        n_samples=n,
        pad=args.pad,
        target_dim=args.dim,
        n_angles=args.angles,
        rot_deg=args.rot,
        translate_lo=args.translate[0],
        translate_hi=args.translate[1],
        scale_lo=args.scale[0],
        scale_hi=args.scale[1],
        noise_frac=args.noise,
        augment=not args.no_augment,
        seed=seed,
    )


def cmd_classify(args) -> int:
    if args.mode == "synth-data":
        if not args.outdir:
            raise ValidationError("classify synth-data requires --outdir")
        seed = _require_seed(args)
        mani = Manifest("classify synth-data", sys.argv[1:], seed)
        clf.write_synthetic_digit_idx(args.outdir, n_train=args.n_train,
                                      n_test=args.n_test, seed=seed)
        for stem in (clf.TRAIN_IMAGES, clf.TRAIN_LABELS, clf.TEST_IMAGES, clf.TEST_LABELS):
            mani.add_output(Path(args.outdir) / stem)
        mani.write(Path(args.outdir) / "manifest.json")
        return 0

    if not args.data or not args.model:
        raise ValidationError(f"classify {args.mode} requires --data and --model")
    seed = _require_seed(args)
    mani = Manifest(f"classify {args.mode}", sys.argv[1:], seed)
    xtr, ytr, xte, yte = clf.load_digit_dir(args.data)

    if args.mode == "train":
        spec = _dataset_spec(args, args.n_train, seed)
        feats, labels = clf.build_radon_dataset(xtr, ytr, spec)
        n_val = max(1, feats.shape[0] // 10)  # 90/10 train/validation split
        rng = np.random.default_rng(seed)
        perm = rng.permutation(feats.shape[0])
        val_idx, tr_idx = perm[:n_val], perm[n_val:]
        model, _ = clf.train_softmax(
            feats[tr_idx], labels[tr_idx], epochs=args.epochs, lr=args.lr,
            l2=args.l2, seed=seed, batch_size=args.batch,
        )
        acc, conf = clf.evaluate(model, feats[val_idx], labels[val_idx])
        clf.save_model(model, args.model)
        mani.add_output(args.model)
        if args.confusion:
            clf.confusion_to_csv(conf, args.confusion)
            mani.add_output(args.confusion)
        mani.write(str(args.model) + ".manifest.json")
        print(f"validation accuracy {acc:.4f} ({n_val} samples)")
        return 0

    # eval
    mani.add_input(args.model)
    model = clf.load_model(args.model)
    spec = _dataset_spec(args, args.n_test, seed)
    feats, labels = clf.build_radon_dataset(xte, yte, spec)
    acc, conf = clf.evaluate(model, feats, labels)
    outputs = []
    if args.confusion:
        clf.confusion_to_csv(conf, args.confusion)
        outputs.append(args.confusion)
    if args.heatmap:
        clf.confusion_to_pgm(conf, args.heatmap)
        outputs.append(args.heatmap)
    for p in outputs:
        mani.add_output(p)
    mani.write((str(outputs[0]) if outputs else "classify_eval") + ".manifest.json")
    print(f"test accuracy {acc:.4f} ({labels.shape[0]} samples)")
    return 0


# ---------------------------------------------------------------------------
# Parser

def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="RNG seed for randomized stages")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results independent of N)")
    p.add_argument("--config", type=str, default=None, help="key=value defaults file")
    p.add_argument("--strict-seed", action="store_true",
                   help="error if a randomized stage runs without an explicit --seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radonlens",
        description="Line-projection imaging pipeline: capture, reconstruct, "
                    "design optics, benchmark compression, classify digits.",
    )
    parser.add_argument(
        "--version", action="version",
        version=f"radonlens {radonlens.__version__} "
                f"(formats: PGM {radonlens.FORMAT_VERSIONS['PGM']}, "
                f"{radonlens.FORMAT_VERSIONS['RSG']}, {radonlens.FORMAT_VERSIONS['RCM']})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("radon", help="forward-project a PGM image into a sinogram")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--angles", type=int, required=True)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=180.0)
    p.add_argument("--method", choices=sorted(_METHODS), default="ray")
    p.add_argument("--detectors", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_radon)

    p = sub.add_parser("reconstruct", help="reconstruct an image from an RSG1 sinogram")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--algo", choices=("sart", "fbp"), default="sart")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--relax", type=float, default=1.0)
    p.add_argument("--ordering", choices=("sequential", "shuffled"), default="sequential")
    p.add_argument("--no-nonneg", action="store_true")
    p.add_argument("--filter", choices=("ram-lak", "shepp-logan", "none"), default="ram-lak")
    p.add_argument("--snapshots", default=None, help="comma-separated iteration list")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--clamp", action="store_true", help="clip intensities into [0,1] when saving")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("design-lens", help="quantize a lens phase profile against a pillar library")
    p.add_argument("--wavelength", type=float, default=780e-9)
    p.add_argument("--focal", type=float, required=True)
    p.add_argument("--aperture", required=True, help="WxH in meters, e.g. 200e-6x200e-6")
    p.add_argument("--period", type=float, default=330e-9)
    p.add_argument("--profile", choices=("cyl", "hyp"), default="cyl")
    p.add_argument("--library", default=None, help="pillar CSV (default: bundled synthetic)")
    p.add_argument("--out", required=True)
    p.add_argument("--residuals", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_design_lens)

    p = sub.add_parser("bench", help="projection vs pooling compression study")
    p.add_argument("--scene-size", type=int, default=968)
    p.add_argument("--glyph", default="4x7", help="glyph WxH in pixels")
    p.add_argument("--angles", type=int, default=91)
    p.add_argument("--pool", type=int, default=3)
    p.add_argument("--sart", action="store_true", help="reconstruct with SART instead of FBP")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--outdir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("classify", help="sinogram-domain digit classification")
    p.add_argument("mode", choices=("train", "eval", "synth-data"))
    p.add_argument("--data", default=None, help="directory with IDX digit files")
    p.add_argument("--model", default=None)
    p.add_argument("--outdir", default=None, help="synth-data output directory")
    p.add_argument("--n-train", type=int, default=5000)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--pad", type=int, default=14)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--angles", type=int, default=23)
    p.add_argument("--rot", type=float, default=50.0)
    p.add_argument("--translate", type=float, nargs=2, default=(0.10, 0.30),
                   metavar=("LO", "HI"))
    p.add_argument("--scale", type=float, nargs=2, default=(0.80, 1.20),
                   metavar=("LO", "HI"))
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--confusion", default=None)
    p.add_argument("--heatmap", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    return parser


def _apply_config(parser, argv):
    """Insert config-file entries as flags before user flags (user wins)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    cfg_path = argv[idx + 1]
    entries = []
    with open(cfg_path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries.extend([f"--{key.strip()}", value.strip()])
    # place config flags right after the subcommand word(s)
    n_positional = 2 if argv and argv[0] == "classify" else 1
    return argv[:n_positional] + entries + argv[n_positional:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and not argv[0].startswith("-"):
            argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
