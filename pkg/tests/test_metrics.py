import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from accessory_tryon import imaging, metrics
from accessory_tryon.errors import DimensionError, EmptyEvalError, WindowError


def noisy_series():
    rng = np.random.default_rng(7)
    ys, xs = np.mgrid[0:48, 0:64]
    base = (128 + 80 * np.sin(xs / 7) * np.cos(ys / 5)).astype(np.uint8)
    out = []
    for sigma in (5, 20, 60):
        noisy = np.clip(base + rng.normal(0, sigma, base.shape), 0, 255).astype(np.uint8)
        out.append(noisy)
    return base, out


# frozen from skimage.metrics.structural_similarity(gaussian_weights=True,
# sigma=1.5, use_sample_covariance=False, data_range=255)
FROZEN = (0.9416635482622224, 0.5381649541824598, 0.13278100343790097)


def test_identity_is_one():
    base, _ = noisy_series()
    assert metrics.ssim(base, base) == pytest.approx(1.0, abs=1e-9)


def test_constant_closed_form():
    a = np.zeros((32, 32), dtype=np.uint8)
    b = np.full((32, 32), 255, dtype=np.uint8)
    c1 = (0.01 * 255) ** 2
    assert metrics.ssim(a, b) == pytest.approx((2 * 0 * 255 + c1) / (255 ** 2 + c1), abs=1e-9)


def test_monotone_under_noise_and_frozen_values():
    base, noisy = noisy_series()
    scores = [metrics.ssim(base, n) for n in noisy]
    assert scores[0] > scores[1] > scores[2]
    np.testing.assert_allclose(scores, FROZEN, rtol=1e-12)


def test_matches_skimage_live():
    sk = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(2)
    for _ in range(3):
        a = rng.integers(0, 256, (30, 41), dtype=np.uint8)
        b = np.clip(a + rng.normal(0, 25, a.shape), 0, 255).astype(np.uint8)
        ref = sk.structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
                                       use_sample_covariance=False, data_range=255)
        assert metrics.ssim(a, b) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (16, 18), dtype=np.uint8)
    b = rng.integers(0, 256, (16, 18), dtype=np.uint8)
    s = metrics.ssim(a, b)
    assert s == pytest.approx(metrics.ssim(b, a), abs=1e-12)
    assert -1 - 1e-12 <= s <= 1 + 1e-12


def test_color_uses_luma():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    b = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    assert metrics.ssim(a, b) == metrics.ssim(imaging.to_gray(a), imaging.to_gray(b))


def test_shape_errors():
    with pytest.raises(DimensionError):
        metrics.ssim(np.zeros((20, 20)), np.zeros((20, 21)))
    with pytest.raises(WindowError):
        metrics.ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_gaussian_window():
    w = metrics.gaussian_window()
    assert w.shape == (11,) and w.sum() == pytest.approx(1.0)
    assert w[5] == w.max() and np.allclose(w, w[::-1])


def write_pairs(tmp_path, n, size=(40, 30), seed=0):
    gen, truth = tmp_path / "gen", tmp_path / "truth"
    gen.mkdir()
    truth.mkdir()
    rng = np.random.default_rng(seed)
    for i in range(n):
        img = rng.integers(0, 256, (size[1], size[0], 3), dtype=np.uint8)
        imaging.write_image(truth / f"{i:05d}_00.png", img)
        imaging.write_image(gen / f"{i:05d}_00.png", img)
    return gen, truth


def test_evaluate_self_pairs(tmp_path):
    gen, truth = write_pairs(tmp_path, 4)
    report = metrics.evaluate_pairs(gen, truth, ((40, 30), (20, 15)))
    assert len(report.rows) == 8 and not report.errors
    assert all(s == pytest.approx(1.0, abs=1e-9) for _, _, s in report.rows)
    assert {t for _, t, _ in report.rows} == {"40x30", "20x15"}


def test_evaluate_isolates_bad_files(tmp_path):
    gen, truth = write_pairs(tmp_path, 3)
    (gen / "00001_00.png").write_bytes(b"not a png")
    imaging.write_image(gen / "extra.png", np.zeros((30, 40, 3), dtype=np.uint8))
    report = metrics.evaluate_pairs(gen, truth, ((40, 30),))
    assert [r[0] for r in report.rows] == ["00000_00", "00002_00"]
    assert sorted(e[0] for e in report.errors) == ["00001_00", "extra"]
    csv_lines = report.to_csv().splitlines()
    assert csv_lines[0] == "image_id,resolution,ssim,lpips,error"
    assert len(csv_lines) == 1 + 2 + 2


def test_evaluate_empty_raises(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    with pytest.raises(EmptyEvalError):
        metrics.evaluate_pairs(tmp_path / "a", tmp_path / "b")


def test_aggregates_and_outputs(tmp_path):
    report = metrics.SsimReport(rows=[("a", "small", 0.5), ("b", "small", 0.7),
                                      ("a", "large", 0.9)])
    agg = report.aggregates()
    assert list(agg) == ["small", "large"]
    assert agg["small"] == (0.5, 0.7, pytest.approx(0.6), 2)
    assert agg["large"] == (0.9, 0.9, 0.9, 1)
    report.write(tmp_path)
    assert (tmp_path / "ssim.csv").is_file() and (tmp_path / "ssim.txt").is_file()
    bars = (tmp_path / "ssim_bars_small.csv").read_text().splitlines()
    assert bars == ["image_id,ssim", "a,0.5", "b,0.7"]


def test_resolution_tags():
    assert metrics.resolution_tag((768, 1024)) == "large"
    assert metrics.resolution_tag((192, 256)) == "small"
    assert metrics.resolution_tag((10, 20)) == "10x20"
