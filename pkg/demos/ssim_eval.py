"""SSIM by hand on noisy images, then a directory-level evaluation."""
import tempfile
from pathlib import Path

import numpy as np

from accessory_tryon import imaging, metrics

rng = np.random.default_rng(0)
ys, xs = np.mgrid[0:96, 0:128]
clean = (128 + 90 * np.sin(xs / 8) * np.cos(ys / 11)).astype(np.uint8)
for sigma in (2, 10, 40):
    noisy = np.clip(clean + rng.normal(0, sigma, clean.shape), 0, 255).astype(np.uint8)
    print(f"noise {sigma:>2}: ssim {metrics.ssim(clean, noisy):.4f}")

with tempfile.TemporaryDirectory() as tmp:
    gen, truth = Path(tmp, "gen"), Path(tmp, "truth")
    gen.mkdir()
    truth.mkdir()
    for i in range(4):
        img = rng.integers(0, 256, (64, 48, 3), dtype=np.uint8)
        imaging.write_image(truth / f"{i:05d}_00.png", img)
        imaging.write_image(gen / f"{i:05d}_00.png",
                            np.clip(img + rng.normal(0, 8 * i, img.shape), 0, 255).astype(np.uint8))
    report = metrics.evaluate_pairs(gen, truth, ((48, 64), (24, 32)))
    print(report.to_table(), end="")
