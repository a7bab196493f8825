"""Thin-plate-spline grids, bilinear warping and the warp losses.

Control points sit on a uniform k x k lattice over [-1, 1]^2 (x along
columns, y along rows, row-major order). Each control point carries a
displacement (dx, dy) in the same normalized units; the TPS interpolant of
``lattice + displacement`` gives, for every output pixel, the source position
it samples from (inverse mapping). Normalized -1 and 1 are the centers of the
first and last pixel, so ``x_px = (u + 1) * (W - 1) / 2``.

Because the lattice is fixed, the interpolant is linear in the displacements:
``G(p) = p + basis(p) @ d``. :func:`tps_basis` exposes that matrix, which is
what makes analytic gradients cheap in :mod:`accessory_tryon.gmm`.
"""
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionError, NumericalError

DEFAULT_GRID_K = 5
MAX_DISPLACEMENT = 2.0


@dataclass
class TpsParams:
    grid_k: int = DEFAULT_GRID_K
    dx: np.ndarray = None
    dy: np.ndarray = None
    max_disp: float = field(default=MAX_DISPLACEMENT, compare=False)

    def __post_init__(self):
        k = self.grid_k
        if k < 2:
            raise ValueError(f"grid_k must be at least 2, got {k}")
        self.dx = np.zeros((k, k)) if self.dx is None else np.array(self.dx, dtype=np.float64).reshape(k, k)
        self.dy = np.zeros((k, k)) if self.dy is None else np.array(self.dy, dtype=np.float64).reshape(k, k)
        for name, d in (("dx", self.dx), ("dy", self.dy)):
            if not np.all(np.isfinite(d)):
                raise NumericalError(f"{name} has non-finite values")
            if np.abs(d).max() > self.max_disp:
                raise ValueError(f"|{name}| exceeds {self.max_disp}")

    @classmethod
    def zeros(cls, grid_k=DEFAULT_GRID_K):
        return cls(grid_k)

    @classmethod
    def from_vector(cls, vec, grid_k=DEFAULT_GRID_K, max_disp=MAX_DISPLACEMENT):
        n = grid_k * grid_k
        vec = np.asarray(vec, dtype=np.float64)
        return cls(grid_k, vec[:n], vec[n:2 * n], max_disp)

    def vector(self):
        return np.concatenate([self.dx.ravel(), self.dy.ravel()])

    def __eq__(self, other):
        if not isinstance(other, TpsParams):
            return NotImplemented
        return (self.grid_k == other.grid_k and np.array_equal(self.dx, other.dx)
                and np.array_equal(self.dy, other.dy))


@dataclass
class WarpGrid:
    """Per-output-pixel source coordinates, in pixels."""
    gx: np.ndarray
    gy: np.ndarray

    @property
    def shape(self):
        return self.gx.shape

    @classmethod
    def identity(cls, width, height):
        ys, xs = np.mgrid[0:height, 0:width]
        return cls(xs.astype(np.float64), ys.astype(np.float64))


def lattice(k):
    """Control points as an (k*k, 2) array of normalized (x, y)."""
    u = np.linspace(-1.0, 1.0, k)
    xs, ys = np.meshgrid(u, u)
    return np.column_stack([xs.ravel(), ys.ravel()])


def _kernel(r2):
    # U(r) = r^2 log r^2, with U(0) = 0
    out = np.zeros_like(r2)
    nz = r2 > 0
    out[nz] = r2[nz] * np.log(r2[nz])
    return out


@lru_cache(maxsize=16)
def _solver(k):
    """Columns of the inverse TPS system that map control values to coefficients."""
    ctrl = lattice(k)
    n = len(ctrl)
    d2 = ((ctrl[:, None, :] - ctrl[None, :, :]) ** 2).sum(-1)
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = _kernel(d2)
    L[:n, n] = 1.0
    L[:n, n + 1:] = ctrl
    L[n:, :n] = L[:n, n:].T
    try:
        inv = np.linalg.inv(L)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"singular TPS system for k={k}") from e
    if not np.all(np.isfinite(inv)) or np.linalg.cond(L) > 1e12:
        raise NumericalError(f"ill-conditioned TPS system for k={k}")
    inv = inv[:, :n]
    inv.setflags(write=False)
    return inv


def tps_basis(points, k=DEFAULT_GRID_K):
    """(m, k*k) matrix B with ``interp(points) = B @ control_values``."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    ctrl = lattice(k)
    d2 = ((points[:, None, :] - ctrl[None, :, :]) ** 2).sum(-1)
    feats = np.concatenate([_kernel(d2), np.ones((len(points), 1)), points], axis=1)
    return feats @ _solver(k)


def tps_eval(params, points):
    """Displaced normalized positions of ``points`` ((m, 2) normalized x, y)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    B = tps_basis(points, params.grid_k)
    return points + np.column_stack([B @ params.dx.ravel(), B @ params.dy.ravel()])


def pixel_scale(width, height):
    """Pixels per normalized unit along x and y."""
    return (width - 1) / 2.0, (height - 1) / 2.0


def normalized_pixel_centers(width, height):
    """(H*W, 2) normalized coordinates of every pixel center, row-major."""
    sx, sy = pixel_scale(width, height)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    u = xs / sx - 1.0 if sx > 0 else np.zeros_like(xs)
    v = ys / sy - 1.0 if sy > 0 else np.zeros_like(ys)
    return np.column_stack([u.ravel(), v.ravel()])


def tps_grid(params, width, height, chunk=65536):
    """Dense sampling grid for a ``width`` x ``height`` output."""
    sx, sy = pixel_scale(width, height)
    pts = normalized_pixel_centers(width, height)
    disp = np.empty_like(pts)
    dvec = np.column_stack([params.dx.ravel(), params.dy.ravel()])
    for s in range(0, len(pts), chunk):
        disp[s:s + chunk] = tps_basis(pts[s:s + chunk], params.grid_k) @ dvec
    base = WarpGrid.identity(width, height)
    gx = base.gx + sx * disp[:, 0].reshape(height, width)
    gy = base.gy + sy * disp[:, 1].reshape(height, width)
    if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
        raise NumericalError("TPS grid has non-finite values")
    return WarpGrid(gx, gy)


# -- bilinear sampling -------------------------------------------------------

_PAD = 2


def bilinear_sample(img, gx, gy, fill=0.0, grad=False):
    """Sample ``img`` (H, W) or (H, W, C) at float positions ``(gx, gy)``.

    Pixels outside the source take the value ``fill``, so samples straddling
    the border blend toward it. Returns float64 samples with a channel axis;
    with ``grad=True`` also the derivatives with respect to gx and gy. At
    integer sample positions the derivative is the mean of the two one-sided
    slopes.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    h, w, _ = img.shape
    padded = np.pad(img, ((_PAD, _PAD), (_PAD, _PAD), (0, 0)), constant_values=fill)
    hp, wp = padded.shape[:2]
    gx = np.clip(np.asarray(gx, dtype=np.float64), -_PAD - 1, w + _PAD)
    gy = np.clip(np.asarray(gy, dtype=np.float64), -_PAD - 1, h + _PAD)
    x0f = np.floor(gx)
    y0f = np.floor(gy)
    fx = (gx - x0f)[..., None]
    fy = (gy - y0f)[..., None]
    xi = x0f.astype(np.intp) + _PAD
    yi = y0f.astype(np.intp) + _PAD

    def at(dx, dy):
        return padded[np.clip(yi + dy, 0, hp - 1), np.clip(xi + dx, 0, wp - 1)]

    i00, i10, i01, i11 = at(0, 0), at(1, 0), at(0, 1), at(1, 1)
    top = i00 + fx * (i10 - i00)
    bottom = i01 + fx * (i11 - i01)
    out = top + fy * (bottom - top)
    if not grad:
        return out

    dvdx = (1 - fy) * (i10 - i00) + fy * (i11 - i01)
    dvdy = bottom - top
    on_x = fx[..., 0] == 0
    if on_x.any():
        im0, im1 = at(-1, 0), at(-1, 1)
        left = (1 - fy) * (i00 - im0) + fy * (i01 - im1)
        dvdx = np.where(on_x[..., None], 0.5 * (dvdx + left), dvdx)
    on_y = fy[..., 0] == 0
    if on_y.any():
        i0m, i1m = at(0, -1), at(1, -1)
        upper = (i00 + fx * (i10 - i00)) - (i0m + fx * (i1m - i0m))
        dvdy = np.where(on_y[..., None], 0.5 * (dvdy + upper), dvdy)
    return out, dvdx, dvdy


def warp_image(img, grid, fill=0):
    """Inverse-warp ``img`` through ``grid``; output has the grid's shape.

    8-bit input is rounded back to 8 bits, float input stays float.
    """
    arr = np.asarray(img)
    out = bilinear_sample(arr, grid.gx, grid.gy, fill)
    if arr.ndim == 2:
        out = out[..., 0]
    if arr.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out


# -- losses ------------------------------------------------------------------

def as_unit(img):
    """Float view of an image with samples in [0, 1]."""
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)


def l1_loss(a, b):
    a, b = as_unit(a), as_unit(b)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).mean())


def _as_stride(stride):
    if isinstance(stride, (tuple, list)):
        return int(stride[0]), int(stride[1])
    return int(stride), int(stride)


def gic_terms(gx, gy, form="distance", grad=False):
    """Grid-consistency penalty over a lattice of grid points.

    ``form="distance"`` sums, for every interior point, the absolute change
    in distance to the left vs right neighbour plus up vs down neighbour;
    it vanishes for any affine grid. ``form="x-offset"`` sums absolute first
    differences of gx alone toward all four neighbours.
    With ``grad=True`` returns ``(value, d/dgx, d/dgy)``.
    """
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    if gx.shape != gy.shape:
        raise DimensionError("gx and gy shapes differ")
    if gx.ndim != 2 or gx.shape[0] < 3 or gx.shape[1] < 3:
        raise DimensionError(f"grid lattice must be at least 3x3, got {gx.shape}")
    if form == "distance":
        return _gic_distance(gx, gy, grad)
    if form == "x-offset":
        return _gic_x_offset(gx, grad)
    raise ValueError(f"unknown GIC form {form!r}")


_ULPS = 16 * np.finfo(np.float64).eps


def _snap(a, b, scale):
    # equal spacings computed from rounded coordinates differ by a few ulps of the coordinates
    d = a - b
    d[np.abs(d) <= _ULPS * scale] = 0.0
    return d


def _gic_distance(gx, gy, grad):
    hx, hy = gx[:, 1:] - gx[:, :-1], gy[:, 1:] - gy[:, :-1]
    vx, vy = gx[1:, :] - gx[:-1, :], gy[1:, :] - gy[:-1, :]
    dh = np.hypot(hx, hy)  # (r, c-1): distance from (i, j) to (i, j+1)
    dv = np.hypot(vx, vy)  # (r-1, c): distance from (i, j) to (i+1, j)
    scale = max(np.abs(gx).max(), np.abs(gy).max(), 1.0)
    th = _snap(dh[1:-1, 1:], dh[1:-1, :-1], scale)
    tv = _snap(dv[1:, 1:-1], dv[:-1, 1:-1], scale)
    value = float(np.abs(th).sum() + np.abs(tv).sum())
    if not grad:
        return value

    g_dh = np.zeros_like(dh)
    sh = np.sign(th)
    g_dh[1:-1, 1:] += sh
    g_dh[1:-1, :-1] -= sh
    g_dv = np.zeros_like(dv)
    sv = np.sign(tv)
    g_dv[1:, 1:-1] += sv
    g_dv[:-1, 1:-1] -= sv

    ggx = np.zeros_like(gx)
    ggy = np.zeros_like(gy)
    with np.errstate(invalid="ignore", divide="ignore"):
        ch = np.where(dh > 0, g_dh / dh, 0.0)
        cv = np.where(dv > 0, g_dv / dv, 0.0)
    ggx[:, 1:] += ch * hx
    ggx[:, :-1] -= ch * hx
    ggy[:, 1:] += ch * hy
    ggy[:, :-1] -= ch * hy
    ggx[1:, :] += cv * vx
    ggx[:-1, :] -= cv * vx
    ggy[1:, :] += cv * vy
    ggy[:-1, :] -= cv * vy
    return value, ggx, ggy


def _gic_x_offset(gx, grad):
    c = gx[1:-1, 1:-1]
    diffs = (gx[1:-1, 2:] - c, gx[1:-1, :-2] - c, gx[2:, 1:-1] - c, gx[:-2, 1:-1] - c)
    value = float(sum(np.abs(d).sum() for d in diffs))
    if not grad:
        return value
    ggx = np.zeros_like(gx)
    for d, (rs, cs) in zip(diffs, ((slice(1, -1), slice(2, None)),
                                   (slice(1, -1), slice(None, -2)),
                                   (slice(2, None), slice(1, -1)),
                                   (slice(None, -2), slice(1, -1)))):
        s = np.sign(d)
        ggx[rs, cs] += s
        ggx[1:-1, 1:-1] -= s
    return value, ggx, np.zeros_like(gx)


def gic_loss(grid, stride=1, form="distance"):
    """Grid-consistency loss of ``grid`` subsampled every ``stride`` pixels.

    ``stride`` is an int or an ``(x_stride, y_stride)`` pair.
    """
    sx, sy = _as_stride(stride)
    if sx < 1 or sy < 1:
        raise ValueError("stride must be positive")
    return gic_terms(grid.gx[::sy, ::sx], grid.gy[::sy, ::sx], form)


# -- feature correlation -----------------------------------------------------

def l2_normalize(feats, axis=-1):
    feats = np.asarray(feats, dtype=np.float64)
    norm = np.linalg.norm(feats, axis=axis, keepdims=True)
    return np.divide(feats, norm, out=np.zeros_like(feats), where=norm > 0)


def correlate_features(a, b):
    """All-pairs correlation of two (h, w, d) feature grids.

    Feature vectors are L2-normalized first (zero vectors stay zero).
    ``out[i, j, m]`` is the dot product of ``a[i, j]`` with ``b`` at flat
    position ``m`` (row-major).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 3 or a.shape != b.shape or a.shape[2] < 1:
        raise DimensionError(f"feature grids must match and be (h, w, d): {a.shape} vs {b.shape}")
    h, w, d = a.shape
    an = l2_normalize(a).reshape(h * w, d)
    bn = l2_normalize(b).reshape(h * w, d)
    return (an @ bn.T).reshape(h, w, h * w)


# -- persistence -------------------------------------------------------------

def params_to_json(params):
    """Plain-text form ``{"grid_k": k, "dx": [...], "dy": [...]}`` (row-major, exact floats)."""
    return json.dumps({"grid_k": params.grid_k,
                       "dx": [float(v) for v in params.dx.ravel()],
                       "dy": [float(v) for v in params.dy.ravel()]}) + "\n"


def params_from_json(text):
    doc = json.loads(text)
    k = int(doc["grid_k"])
    dx, dy = doc["dx"], doc["dy"]
    if len(dx) != k * k or len(dy) != k * k:
        raise DimensionError(f"expected {k * k} displacements per axis")
    return TpsParams(k, dx, dy)
