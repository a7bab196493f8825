"""Acceptance criteria, one test each; verdicts are summarized at the end of the run."""
import shutil
import time

import numpy as np
import pytest

from accessory_tryon import cli, gmm, imaging, keypoints, locate, metrics, pipeline, synthetic, tps

import gradcheck
from test_tps import gic_brute_force

criterion = pytest.mark.criterion


@criterion(1, "identity warp is bit-identical on 256x192 in < 1 s")
def test_identity_warp(verdict):
    img = np.random.default_rng(0).integers(0, 256, (192, 256, 3), dtype=np.uint8)
    t0 = time.perf_counter()
    out = tps.warp_image(img, tps.tps_grid(tps.TpsParams.zeros(), 256, 192))
    dt = time.perf_counter() - t0
    same = out.dtype == img.dtype and np.array_equal(out, img)
    verdict(same and dt < 1.0, f"identical={same}, {dt:.3f} s")


@criterion(2, "grid equals lattice + displacement at control points (1e-9 rel)")
def test_control_point_interpolation(verdict):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(3, 8))
        p = tps.TpsParams(k, rng.normal(0, 0.3, (k, k)), rng.normal(0, 0.3, (k, k)))
        ctrl = tps.lattice(k)
        got = tps.tps_eval(p, ctrl)
        want = ctrl + np.stack([p.dx.ravel(), p.dy.ravel()], axis=1)
        rel = np.abs(got - want) / np.maximum(np.abs(want), 1e-300)
        worst = max(worst, float(np.where(want == 0, np.abs(got), rel).max()))
    verdict(worst < 1e-9, f"max relative error {worst:.2e}")


@criterion(3, "analytic gradient vs central differences, eps=1e-4, rel err < 1e-3 on 20 draws in < 30 s")
def test_gradient_check(verdict):
    t0 = time.perf_counter()
    errors, rejected = gradcheck.gradient_errors(20, seed=2024, eps=1e-4)
    dt = time.perf_counter() - t0
    ok = len(errors) == 20 and max(errors) < 1e-3 and dt < 30
    verdict(ok, f"{len(errors)} draws, max rel err {max(errors):.2e}, "
                f"{rejected} draws rejected as kinked, {dt:.1f} s")


@criterion(4, "recovers a (5,-3) px translation within 0.5 px, L1 < 0.01, <= 5000 steps, < 60 s")
def test_translation_recovery(verdict):
    acc = np.zeros((48, 64))
    acc[14:30, 20:44] = 1.0
    tgt = np.zeros_like(acc)
    tgt[11:27, 25:49] = 1.0
    cfg = gmm.GmmConfig(max_steps=5000, fill=0)
    t0 = time.perf_counter()
    params, history = gmm.fit_tps(acc, tgt, cfg)
    dt = time.perf_counter() - t0
    grid = tps.tps_grid(params, 64, 48)
    ys, xs = np.mgrid[0:48, 0:64]
    fg = tgt > 0
    # the grid pulls from the source, so content moves by minus the offset
    shift = (-(grid.gx - xs)[fg].mean(), -(grid.gy - ys)[fg].mean())
    l1 = tps.l1_loss(tps.warp_image(acc, grid, 0.0), tgt)
    err = max(abs(shift[0] - 5), abs(shift[1] + 3))
    ok = err <= 0.5 and l1 < 0.01 and len(history) - 1 <= 5000 and dt < 60
    verdict(ok, f"shift ({shift[0]:.3f}, {shift[1]:.3f}), L1 {l1:.4f}, {dt:.1f} s")


@criterion(5, "GIC is 0 on uniform grids and matches brute force within 1e-9 on 50 perturbed grids")
def test_gic(verdict):
    rng = np.random.default_rng(5)
    uniform_max = 0.0
    for _ in range(50):
        h, w = rng.integers(3, 30, 2)
        sx, sy = rng.uniform(1e-3, 50, 2)
        ox, oy = rng.uniform(-1e3, 1e3, 2)
        gx, gy = np.meshgrid(ox + sx * np.arange(w), oy + sy * np.arange(h))
        uniform_max = max(uniform_max, tps.gic_loss(tps.WarpGrid(gx, gy)))
    worst = 0.0
    for _ in range(50):
        h, w = rng.integers(3, 20, 2)
        gx, gy = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
        gx = gx + rng.normal(0, 0.3, gx.shape)
        gy = gy + rng.normal(0, 0.3, gy.shape)
        got = tps.gic_loss(tps.WarpGrid(gx, gy))
        want = gic_brute_force(gx, gy)
        worst = max(worst, abs(got - want) / max(abs(want), 1.0))
    ok = uniform_max == 0.0 and worst < 1e-9
    verdict(ok, f"uniform max {uniform_max}, perturbed max rel err {worst:.2e}")


HAND_SETS = [
    # (landmark 0, landmark 9, landmark 13) -> center, radius worked out by hand
    ((10.0, 10.0), (12.0, 20.0), (8.0, 20.0), (10.0, 0.0), 10.0),
    ((50.0, 40.0), (62.0, 36.0), (62.0, 44.0), (38.0, 40.0), 12.0),
    ((0.0, 0.0), (3.0, 5.0), (5.0, 3.0), (-4.0, -4.0), 32.0 ** 0.5),
    ((100.5, 200.25), (100.5, 190.25), (100.5, 190.25), (100.5, 210.25), 10.0),
    ((7.0, -3.0), (10.0, 1.0), (10.0, 1.0), (4.0, -7.0), 5.0),
]


def hand_from(k0, k9, k13):
    pts = [(0.0, 0.0)] * keypoints.N_HAND
    pts[keypoints.HAND_WRIST] = k0
    pts[keypoints.MIDDLE_MCP] = k9
    pts[keypoints.RING_MCP] = k13
    return keypoints.HandLandmarks(tuple(pts), "right")


@criterion(6, "watch center/radius exact on 5 landmark sets, translation-equivariant on 100 draws")
def test_localization_algebra(verdict):
    exact = 0
    for k0, k9, k13, center, radius in HAND_SETS:
        site = locate.watch_from_hand(hand_from(k0, k9, k13))
        exact += site.center == center and site.radius == radius
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        pts = [tuple(p) for p in rng.uniform(0, 500, (3, 2))]
        t = rng.uniform(-300, 300, 2)
        a = locate.watch_from_hand(hand_from(*pts))
        b = locate.watch_from_hand(hand_from(*[(x + t[0], y + t[1]) for x, y in pts]))
        worst = max(worst, abs(b.center[0] - a.center[0] - t[0]),
                    abs(b.center[1] - a.center[1] - t[1]), abs(b.radius - a.radius) / a.radius)
    ok = exact == 5 and worst < 1e-9
    verdict(ok, f"{exact}/5 exact, equivariance max deviation {worst:.1e}")


@criterion(7, "two-rectangle arm fallback lands within 2 px of the gap center")
def test_arm_fallback(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        h, w = 120, 160
        parse = np.zeros((h, w), dtype=np.uint8)
        y0 = int(rng.integers(10, 90))
        thick = int(rng.integers(6, 20))
        x0 = int(rng.integers(5, 40))
        length = int(rng.integers(15, 40))
        gap = int(rng.integers(3, 15))
        label = int(rng.choice([imaging.LEFT_ARM, imaging.RIGHT_ARM]))
        parse[y0:y0 + thick, x0:x0 + length] = label
        parse[y0:y0 + thick, x0 + length + gap:x0 + 2 * length + gap] = label
        # gap spans columns x0+length .. x0+length+gap-1
        gap_center = (x0 + length + (gap - 1) / 2, y0 + (thick - 1) / 2)
        est = locate.wrist_fallback(parse)
        worst = max(worst, float(np.hypot(est[0] - gap_center[0], est[1] - gap_center[1])))
    verdict(worst <= 2.0, f"max distance {worst:.3f} px over 20 layouts")


@criterion(8, "SSIM identity 1, constant closed form, monotone under increasing noise")
def test_ssim(verdict):
    rng = np.random.default_rng(8)
    ys, xs = np.mgrid[0:64, 0:80]
    base = (128 + 90 * np.sin(xs / 6) * np.cos(ys / 9)).astype(np.uint8)
    ident = metrics.ssim(base, base)
    c1 = (0.01 * 255) ** 2
    const = metrics.ssim(np.zeros((32, 32)), np.full((32, 32), 255.0))
    expected = (2 * 0 * 255 + c1) / (255 ** 2 + c1)
    scores = [metrics.ssim(base, np.clip(base + rng.normal(0, s, base.shape), 0, 255))
              for s in (5, 20, 60)]
    ok = (abs(ident - 1) <= 1e-9 and abs(const - expected) <= 1e-9
          and scores[0] > scores[1] > scores[2])
    verdict(ok, f"identity {ident:.12f}, constant {const:.6e} vs {expected:.6e}, "
                f"noise {', '.join(f'{s:.4f}' for s in scores)}")


OUTPUT_DIRS = {
    pipeline.AGNOSTIC_MASK_DIR: ".png", pipeline.AGNOSTIC_DIR: ".png",
    pipeline.TARGET_DIR: ".png", pipeline.SITE_DIR: ".json", pipeline.WARP_DIR: ".png",
    pipeline.WARP_MASK_DIR: ".png", pipeline.PARAMS_DIR: ".json", pipeline.LOSS_DIR: ".csv",
}


def _tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@criterion(9, "3-image fixture: all runs exit 0, outputs in place, deterministic reruns identical, < 2 min")
def test_end_to_end(verdict, tmp_path, capsys):
    src = tmp_path / "fixture"
    ids = synthetic.make_dataset(src, n=3)
    conf = tmp_path / "tryon.conf"
    conf.write_text("max_steps = 200\nfit_max_side = 96\nresolutions = 96x128, 48x64\n")
    t0 = time.perf_counter()
    codes, trees = [], []
    for run in ("a", "b"):
        root = tmp_path / run
        shutil.copytree(src, root)
        codes.append(cli.main(["all", "--root", str(root), "--config", str(conf), "--deterministic"]))
        trees.append(_tree(root))
    dt = time.perf_counter() - t0
    capsys.readouterr()
    root = tmp_path / "a"
    missing = [f"{d}/{i}{ext}" for d, ext in OUTPUT_DIRS.items() for i in ids
               if not (root / d / f"{i}{ext}").is_file()]
    missing += [f"eval/{n}" for n in ("ssim.csv", "ssim.txt") if not (root / "eval" / n).is_file()]
    identical = trees[0] == trees[1]
    ok = codes == [0, 0] and not missing and identical and dt < 120
    verdict(ok, f"exit codes {codes}, missing {missing or 'none'}, identical={identical}, {dt:.1f} s")


@criterion(10, "48 pairs at 3 resolutions give exactly 144 score rows")
def test_eval_count(verdict, tmp_path):
    gen, truth = tmp_path / "gen", tmp_path / "truth"
    gen.mkdir()
    truth.mkdir()
    rng = np.random.default_rng(10)
    for i in range(48):
        img = rng.integers(0, 256, (64, 48, 3), dtype=np.uint8)
        imaging.write_image(truth / f"{i:05d}_00.png", img)
        noisy = np.clip(img + rng.normal(0, 10, img.shape), 0, 255).astype(np.uint8)
        imaging.write_image(gen / f"{i:05d}_00.png", noisy)
    report = metrics.evaluate_pairs(gen, truth, metrics.DEFAULT_RESOLUTIONS)
    report.write(tmp_path / "eval")
    csv_rows = len((tmp_path / "eval" / "ssim.csv").read_text().splitlines()) - 1
    counts = {tag: n for tag, (_, _, _, n) in report.aggregates().items()}
    ok = len(report.rows) == 144 and csv_rows == 144 and not report.errors
    verdict(ok, f"{len(report.rows)} rows, per resolution {counts}")
