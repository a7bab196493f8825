"""Paired-setting SSIM evaluation with per-resolution aggregation."""
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d

from . import imaging
from .errors import DimensionError, EmptyEvalError, WindowError

WINDOW = 11
SIGMA = 1.5
DATA_RANGE = 255.0
K1, K2 = 0.01, 0.03

# (width, height); 768x1024 is the training size
DEFAULT_RESOLUTIONS = ((768, 1024), (384, 512), (192, 256))
RESOLUTION_TAGS = {(768, 1024): "large", (384, 512): "medium", (192, 256): "small"}

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def gaussian_window(size=WINDOW, sigma=SIGMA):
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img, win):
    out = correlate1d(img, win, axis=0, mode="constant")
    out = correlate1d(out, win, axis=1, mode="constant")
    p = (len(win) - 1) // 2
    return out[p:img.shape[0] - p, p:img.shape[1] - p]


def ssim_map(a, b, data_range=DATA_RANGE):
    a = imaging.to_gray(a)
    b = imaging.to_gray(b)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape) < WINDOW:
        raise WindowError(f"images {a.shape} smaller than the {WINDOW}x{WINDOW} window")
    win = gaussian_window()
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_a = _filter_valid(a, win)
    mu_b = _filter_valid(b, win)
    var_a = _filter_valid(a * a, win) - mu_a * mu_a
    var_b = _filter_valid(b * b, win) - mu_b * mu_b
    cov = _filter_valid(a * b, win) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, data_range=DATA_RANGE):
    """Mean SSIM over all window positions fully inside the image.

    11x11 Gaussian window (sigma 1.5), C1 = (0.01 L)^2, C2 = (0.03 L)^2.
    Color inputs are converted to luma first.
    """
    return float(ssim_map(a, b, data_range).mean())


def resolution_tag(res):
    return RESOLUTION_TAGS.get(tuple(res), f"{res[0]}x{res[1]}")


@dataclass
class SsimReport:
    rows: list = field(default_factory=list)    # (image_id, resolution tag, score)
    errors: list = field(default_factory=list)  # (image_id, message)

    def aggregates(self):
        """{tag: (min, max, mean, count)} in first-seen resolution order."""
        by_tag = {}
        for _, tag, score in self.rows:
            by_tag.setdefault(tag, []).append(score)
        return {t: (min(s), max(s), math.fsum(s) / len(s), len(s)) for t, s in by_tag.items()}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["image_id", "resolution", "ssim", "lpips", "error"])
        for image_id, tag, score in self.rows:
            w.writerow([image_id, tag, repr(score), "", ""])
        for image_id, msg in self.errors:
            w.writerow([image_id, "", "", "", msg])
        return buf.getvalue()

    def to_table(self):
        lines = [f"{'resolution':<12}{'n':>5}{'min':>10}{'max':>10}{'mean':>10}"]
        for tag, (lo, hi, mean, n) in self.aggregates().items():
            lines.append(f"{tag:<12}{n:>5}{lo:>10.4f}{hi:>10.4f}{mean:>10.4f}")
        if self.errors:
            lines.append(f"{len(self.errors)} image(s) failed:")
            lines.extend(f"  {i}: {m}" for i, m in self.errors)
        return "\n".join(lines) + "\n"

    def bar_chart_data(self, tag):
        """CSV of (image id, score) for one resolution, for bar plots."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["image_id", "ssim"])
        for image_id, t, score in self.rows:
            if t == tag:
                w.writerow([image_id, repr(score)])
        return buf.getvalue()

    def write(self, out_dir, stem="ssim"):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.csv").write_text(self.to_csv())
        (out_dir / f"{stem}.txt").write_text(self.to_table())
        for tag in self.aggregates():
            (out_dir / f"{stem}_bars_{tag}.csv").write_text(self.bar_chart_data(tag))


def _index(directory):
    out = {}
    for p in sorted(Path(directory).iterdir()):
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
            out.setdefault(p.stem, p)
    return out


def evaluate_pairs(dir_generated, dir_truth, resolutions=DEFAULT_RESOLUTIONS):
    """Score every image id found in both directories at each resolution.

    Ids present in only one directory and unreadable files become error
    rows; nothing in common at all raises EmptyEvalError.
    """
    gen = _index(dir_generated)
    truth = _index(dir_truth)
    common = sorted(gen.keys() & truth.keys())
    if not common:
        raise EmptyEvalError(f"no common image ids between {dir_generated} and {dir_truth}")
    report = SsimReport()
    for image_id in sorted(gen.keys() ^ truth.keys()):
        where = "generated" if image_id in gen else "truth"
        report.errors.append((image_id, f"only present in {where} directory"))
    for image_id in common:
        try:
            a = imaging.read_image(gen[image_id])
            b = imaging.read_image(truth[image_id])
            scores = []
            for w, h in resolutions:
                scores.append((resolution_tag((w, h)),
                               ssim(imaging.resize(a, w, h), imaging.resize(b, w, h))))
        except Exception as e:  # one bad file must not sink the batch
            report.errors.append((image_id, f"{type(e).__name__}: {e}"))
            continue
        report.rows.extend((image_id, tag, s) for tag, s in scores)
    return report
