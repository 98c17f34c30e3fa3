"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s``.

Two criteria are known-red and kept red on purpose rather than weakened;
the measured numbers are printed and the analysis lives in README.md
("Known limitations"):

* criterion 7 asserts the filtered-back-projection reconstruction beats
  average pooling on PSNR at a 9.4% capture ratio; a reference-grade FBP
  (cross-checked against an independent implementation) loses by ~1.8 dB
  on this dense scene, while SART wins comfortably (asserted separately
  in the bench tests).
* criterion 9 asserts 75% test accuracy for a linear softmax under the
  full augmentation recipe; sinogram features are not invariant under the
  10-30% translations plus +-50 degree rotations, so the optimally
  regularized linear model (L-BFGS over the full l2 path) peaks near 32%
  test accuracy - no training regime reaches the bar for this model class.
"""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from radonlens import classify as clf
from radonlens import metaoptic
from radonlens.bench import generate_digit_scene, run_compression_study
from radonlens.cli import main as cli_main
from radonlens.errors import ValidationError
from radonlens.image import ImageGrid, disk_phantom, smooth_phantom
from radonlens.pgm import save_image
from radonlens.projector import (
    ProjectionGeometry,
    Sinogram,
    adjoint_apply,
    forward_apply,
    make_uniform_angles,
    radon_fft_dc,
    radon_ray_driven,
    radon_rotate_sum,
)
from radonlens.reconstruction import SartConfig, fbp, psnr, sart


def _report(num: int, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def _rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_criterion_01_projector_cross_validation():
    phantom = smooth_phantom(64)
    geom = ProjectionGeometry.for_image(64, 64, make_uniform_angles(45))
    t0 = time.perf_counter()
    rot = radon_rotate_sum(phantom, geom)
    ray = radon_ray_driven(phantom, geom)
    fft = radon_fft_dc(phantom, geom)
    elapsed = time.perf_counter() - t0
    pairwise = max(_rel_l2(rot.data, ray.data), _rel_l2(fft.data, ray.data),
                   _rel_l2(rot.data, fft.data))
    dc_vs_sum = np.abs(fft.data - rot.data).max() / np.abs(rot.data).max()
    ok = pairwise < 0.05 and dc_vs_sum < 1e-9 and elapsed < 5.0
    assert _report(1, ok, f"cross-method {pairwise:.4f} (<5%), DC-vs-sum "
                          f"{dc_vs_sum:.2e} (<1e-9), {elapsed:.2f}s (<5s)")


def test_criterion_02_mass_conservation():
    rng = np.random.default_rng(20250808)
    geom = ProjectionGeometry.for_image(32, 32, make_uniform_angles(25))
    worst_rotate = worst_ray = 0.0
    for _ in range(20):
        img = ImageGrid(rng.uniform(0.0, 1.0, (32, 32)))
        total = img.total()
        for sino, kind in ((radon_rotate_sum(img, geom), "rotate"),
                           (radon_fft_dc(img, geom), "rotate"),
                           (radon_ray_driven(img, geom), "ray")):
            err = float(np.abs(sino.data.sum(axis=1) - total).max() / total)
            if kind == "ray":
                worst_ray = max(worst_ray, err)
            else:
                worst_rotate = max(worst_rotate, err)
    ok = worst_rotate < 0.005 and worst_ray < 1e-4
    assert _report(2, ok, f"mass error rotate/fftdc {worst_rotate:.2e} (<0.5%), "
                          f"ray {worst_ray:.2e} (<1e-4)")


def test_criterion_03_adjointness():
    rng = np.random.default_rng(3)
    geom = ProjectionGeometry.for_image(16, 16, make_uniform_angles(10))
    worst = 0.0
    for _ in range(10):
        x = ImageGrid(rng.uniform(0, 1, (16, 16)))
        y = Sinogram(geom, rng.uniform(0, 1, (10, geom.n_detectors)))
        ax = forward_apply(x, geom)
        aty = adjoint_apply(y)
        gap = abs(float(ax.data.ravel() @ y.data.ravel())
                  - float(x.data.ravel() @ aty.data.ravel()))
        worst = max(worst, gap / (np.linalg.norm(ax.data) * np.linalg.norm(y.data)))
    ok = worst < 1e-6
    assert _report(3, ok, f"adjointness gap {worst:.2e} (<1e-6), 10 random pairs")


def test_criterion_04_sart_convergence_plateau():
    phantom = disk_phantom(32, radius_frac=0.4)
    geom = ProjectionGeometry.for_image(32, 32, make_uniform_angles(60))
    t0 = time.perf_counter()
    # run on operator-consistent projections: residual must never rise
    _, rep_exact = sart(forward_apply(phantom, geom), SartConfig(n_iterations=150))
    r = rep_exact.residuals
    monotone = all(r[i + 1] <= r[i] * (1 + 1e-9) for i in range(len(r) - 1))
    # run on the capture-then-reconstruct pipeline: residual plateaus by 100
    _, rep_cap = sart(radon_fft_dc(phantom, geom), SartConfig(n_iterations=150))
    rc = rep_cap.residuals
    plateau = abs(rc[149] - rc[99]) / rc[99]
    elapsed = time.perf_counter() - t0
    ok = monotone and plateau < 0.01 and elapsed < 30.0
    assert _report(4, ok, f"monotone={monotone}, plateau {plateau:.3%} (<1%), "
                          f"{elapsed:.1f}s (<30s)")


def test_criterion_05_reconstruction_quality():
    phantom = disk_phantom(128, radius_frac=0.4)
    geom = ProjectionGeometry.for_image(128, 128, make_uniform_angles(180))
    captured = radon_fft_dc(phantom, geom)
    img_sart, _ = sart(captured, SartConfig(n_iterations=100))
    p_sart = psnr(img_sart, phantom)
    p_fbp = psnr(fbp(captured, "ram-lak"), phantom)
    ok = p_sart >= 25.0 and p_fbp >= 25.0
    assert _report(5, ok, f"SART {p_sart:.1f} dB, FBP {p_fbp:.1f} dB (both >=25)")


@pytest.fixture(scope="module")
def full_scale_study():
    scene = generate_digit_scene(968, 968, 7, 4, seed=42)
    t0 = time.perf_counter()
    radon_res, pool_res, _ = run_compression_study(scene, n_angles=91, pool_k=3)
    return radon_res, pool_res, time.perf_counter() - t0


def test_criterion_06_compression_arithmetic(full_scale_study):
    radon_res, pool_res, _ = full_scale_study
    want_radon = 91 * 968 / 968**2
    want_pool = 322**2 / 968**2
    ok = (abs(radon_res.ratio - want_radon) < 1e-6
          and abs(pool_res.ratio - want_pool) < 1e-6)
    assert _report(6, ok, f"radon ratio {radon_res.ratio:.6f} (0.094008), "
                          f"pool ratio {pool_res.ratio:.6f} (0.110652); the "
                          "headline 0.6% figure is documented as inconsistent, "
                          "not asserted")


def test_criterion_07_compression_quality_ordering(full_scale_study):
    radon_res, pool_res, elapsed = full_scale_study
    ok = radon_res.psnr > pool_res.psnr and elapsed < 120.0
    _report(7, ok, f"FBP {radon_res.psnr:.2f} dB vs pool {pool_res.psnr:.2f} dB, "
                   f"{elapsed:.1f}s (<2min)")
    assert ok, (
        "known-red: a reference-grade FBP cannot beat 3x3 pooling on PSNR at "
        "9.4% angular sampling of this dense scene (verified against an "
        "independent FBP implementation, delta < 0.1 dB); SART at the same "
        "ratio wins by ~2 dB - see README known limitations and "
        "tests/test_bench.py::TestCompressionStudy::"
        "test_sart_branch_beats_pooling_at_matched_ratio"
    )


def test_criterion_08_metalens():
    spec = metaoptic.LensSpec(focal_length=1e-3, aperture_w=30e-6, aperture_h=10e-6)
    lib = metaoptic.synthetic_pillar_library(64)
    design = metaoptic.quantize_lens(spec, lib)
    column_constant = bool(np.all(design.diameters == design.diameters[0:1, :]))
    phi0 = float(metaoptic.phase_profile(spec, 0.0, 0.0))

    xs = np.linspace(1e-6, spec.focal_length / 10.0, 64)
    exact = metaoptic.phase_profile(spec, xs, 0.0)
    parax = -math.pi * xs**2 / (spec.wavelength * spec.focal_length)
    parax_dev = float(np.max(np.abs(exact - parax) / np.abs(exact)))

    x, _ = metaoptic.site_coordinates(spec)
    targets = sorted(set(np.round(metaoptic.wrap_phase(
        metaoptic.phase_profile(spec, x, 0.0)), 12)))
    exact_lib = metaoptic.PillarLibrary(
        np.linspace(80e-9, 180e-9, len(targets)), np.array(targets),
        np.full(len(targets), 0.9))
    exact_residual = float(np.abs(metaoptic.quantize_lens(spec, exact_lib).residuals).max())

    try:
        metaoptic.PillarLibrary(np.array([250e-9]), np.array([0.0]), np.array([1.0]))
        bounds_enforced = False
    except ValidationError:
        bounds_enforced = True

    ok = (column_constant and phi0 == 0.0 and parax_dev < 0.01
          and exact_residual < 1e-9 and bounds_enforced)
    assert _report(8, ok, f"column-constant={column_constant}, phi(0)={phi0}, "
                          f"paraxial dev {parax_dev:.4%} (<1%), exact-match "
                          f"residual {exact_residual:.1e}, bounds enforced="
                          f"{bounds_enforced}")


@pytest.fixture(scope="module")
def digit_data(tmp_path_factory):
    override = os.environ.get("RADONLENS_MNIST_DIR")
    if override and Path(override).is_dir():
        return Path(override), "real handwritten digits"
    local = Path(__file__).parent / "data" / "mnist"
    if local.is_dir():
        return local, "real handwritten digits"
    d = tmp_path_factory.mktemp("digits")
    clf.write_synthetic_digit_idx(d, n_train=5000, n_test=1000, seed=20250808)
    return d, "synthetic stand-in (no digit corpus available offline)"


def test_criterion_09_classification(digit_data):
    data_dir, source = digit_data
    t0 = time.perf_counter()
    xtr, ytr, xte, yte = clf.load_digit_dir(data_dir)

    # gradient check first: analytic vs central differences
    rng = np.random.default_rng(9)
    feats = rng.standard_normal((16, 9))
    labels = rng.integers(0, 4, 16)
    w = rng.standard_normal((4, 10)) * 0.1
    _, grad = clf.loss_and_grad(w, feats, labels, l2=1e-3)
    h = 1e-6
    worst_grad = 0.0
    for idx in rng.choice(w.size, size=5, replace=False):
        wp, wm = w.copy().ravel(), w.copy().ravel()
        wp[idx] += h
        wm[idx] -= h
        lp, _ = clf.loss_and_grad(wp.reshape(w.shape), feats, labels, 1e-3)
        lm, _ = clf.loss_and_grad(wm.reshape(w.shape), feats, labels, 1e-3)
        fd = (lp - lm) / (2 * h)
        worst_grad = max(worst_grad, abs(grad.ravel()[idx] - fd) / max(abs(fd), 1e-12))
    grad_ok = worst_grad < 1e-4

    # parity: augmentation and noise off, projection vs pixel features
    clean_tr = clf.DatasetSpec(n_samples=5000, rot_deg=0, translate_lo=0,
                               translate_hi=0, scale_lo=1, scale_hi=1,
                               noise_frac=0, augment=False, seed=1)
    clean_te = clf.DatasetSpec(n_samples=1000, rot_deg=0, translate_lo=0,
                               translate_hi=0, scale_lo=1, scale_hi=1,
                               noise_frac=0, augment=False, seed=2)
    fr, lr = clf.build_radon_dataset(xtr, ytr, clean_tr)
    frt, lrt = clf.build_radon_dataset(xte, yte, clean_te)
    fp, lp = clf.build_pixel_dataset(xtr, ytr, clean_tr)
    fpt, lpt = clf.build_pixel_dataset(xte, yte, clean_te)
    acc_radon_clean, _ = clf.evaluate(clf.train_softmax(fr, lr, epochs=30, seed=0)[0],
                                      frt, lrt)
    acc_pixel_clean, _ = clf.evaluate(clf.train_softmax(fp, lp, epochs=30, seed=0)[0],
                                      fpt, lpt)
    gap = abs(acc_radon_clean - acc_pixel_clean)
    parity_ok = gap <= 0.05

    # full augmentation recipe at the stated scale
    aug_tr = clf.DatasetSpec(n_samples=5000, seed=11)
    aug_te = clf.DatasetSpec(n_samples=1000, seed=12)
    fa, la = clf.build_radon_dataset(xtr, ytr, aug_tr)
    fat, lat = clf.build_radon_dataset(xte, yte, aug_te)
    model, _ = clf.train_softmax(fa, la, epochs=60, seed=0)
    acc_aug, _ = clf.evaluate(model, fat, lat)
    elapsed = time.perf_counter() - t0
    acc_ok = acc_aug >= 0.75 and elapsed < 600.0

    ok = grad_ok and parity_ok and acc_ok
    _report(9, ok, f"[{source}] augmented accuracy {acc_aug:.3f} (>=0.75), "
                   f"clean radon {acc_radon_clean:.3f} vs pixel "
                   f"{acc_pixel_clean:.3f} gap {gap * 100:.1f} pts (<=5), "
                   f"gradcheck {worst_grad:.2e} (<1e-4), {elapsed:.0f}s (<10min)")
    assert grad_ok and parity_ok, "gradient check and clean-feature parity must hold"
    assert acc_ok, (
        "known-red: sinogram features are not invariant under the always-on "
        "10-30% translations plus +-50 deg rotations; the optimally "
        "regularized linear model (L-BFGS over the full l2 path) peaks near "
        "32% test accuracy, so the 75% bar is unreachable for this model "
        "class; see README known limitations for the ablation"
    )


def test_criterion_10_cli_determinism(tmp_path):
    scene = tmp_path / "scene.pgm"
    save_image(smooth_phantom(40), scene)

    def digest_dir(d):
        return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())
                if p.is_file() and "manifest" not in p.name}

    outputs = []
    for tag, threads in (("a", 1), ("b", 4)):
        d = tmp_path / tag
        d.mkdir()
        assert cli_main(["radon", "--in", str(scene), "--angles", "20",
                         "--method", "ray", "--threads", str(threads),
                         "--out", str(d / "s.rsg")]) == 0
        assert cli_main(["reconstruct", "--in", str(d / "s.rsg"), "--algo", "sart",
                         "--iters", "8", "--width", "40", "--height", "40",
                         "--snapshots", "1,5", "--out", str(d / "r.pgm"),
                         "--report", str(d / "rep.csv"), "--clamp"]) == 0
        assert cli_main(["design-lens", "--focal", "1e-3", "--aperture",
                         "10e-6x5e-6", "--out", str(d / "lens.csv"),
                         "--residuals", str(d / "res.pgm")]) == 0
        assert cli_main(["bench", "--scene-size", "96", "--angles", "8",
                         "--pool", "3", "--seed", "7", "--threads", str(threads),
                         "--outdir", str(d / "bench")]) == 0
        assert cli_main(["classify", "synth-data", "--outdir", str(d / "digits"),
                         "--n-train", "80", "--n-test", "20", "--seed", "5"]) == 0
        assert cli_main(["classify", "train", "--data", str(d / "digits"),
                         "--model", str(d / "m.rcm"), "--n-train", "80",
                         "--epochs", "3", "--seed", "6",
                         "--confusion", str(d / "vc.csv")]) == 0
        outputs.append((digest_dir(d), digest_dir(d / "bench"), digest_dir(d / "digits")))
    ok = outputs[0] == outputs[1]
    assert _report(10, ok, "byte-identical outputs across reruns and thread counts "
                           "(radon, reconstruct, design-lens, bench, classify)")
