from collections import deque

import numpy as np
import pytest

from accessory_tryon import synthetic


def bfs_components(mask):
    """Brute-force 8-connected components: list of (area, bbox, centroid)."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    seen = np.zeros_like(mask)
    out = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            seen[y, x] = True
            queue = deque([(y, x)])
            pix = []
            while queue:
                cy, cx = queue.popleft()
                pix.append((cx, cy))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((ny, nx))
            xs = [p[0] for p in pix]
            ys = [p[1] for p in pix]
            out.append((len(pix), (min(xs), min(ys), max(xs), max(ys)),
                        (sum(xs) / len(pix), sum(ys) / len(pix))))
    out.sort(key=lambda c: (-c[0], c[1][1], c[1][0]))
    return out


@pytest.fixture
def dataset(tmp_path):
    root = tmp_path / "data"
    ids = synthetic.make_dataset(root, n=3)
    return root, ids


ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    """Record one acceptance criterion's pass/fail line, then assert it."""
    marker = request.node.get_closest_marker("criterion")
    number, title = marker.args
    ACCEPTANCE[number] = (title, False, "did not reach a verdict")

    def record(ok, detail):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, detail

    return record


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
