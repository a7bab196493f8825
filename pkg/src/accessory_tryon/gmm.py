"""Fitting TPS warps by direct minimization of the geometric-matching loss.

The objective for a displacement vector ``d`` is::

    lambda_l1 * mean|warp(accessory, G(d)) - target| + lambda_reg * gic(G_lattice(d))

where ``G`` is the dense TPS grid in pixels and ``G_lattice`` the same warp
evaluated on a ``reg_points`` x ``reg_points`` lattice spanning the image, in
normalized [-1, 1] units so the regularizer weight does not depend on image
size. Gradients are exact up to the subgradient conventions: sign(0) = 0
for the absolute values and averaged one-sided slopes where a sample lands
exactly on a pixel center.
"""
import logging
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import tps
from .errors import DimensionError, DivergenceError

log = logging.getLogger(__name__)


@dataclass
class GmmConfig:
    lambda_l1: float = 1.0
    lambda_reg: float = 0.5
    lr: float = 0.01
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    decay_every: int = 10_000
    decay_factor: float = 0.5
    max_steps: int = 2000
    grid_k: int = tps.DEFAULT_GRID_K
    reg_points: int = 9
    reg_form: str = "distance"
    max_disp: float = tps.MAX_DISPLACEMENT
    fill: float = 255.0  # 8-bit sample value for out-of-bounds source pixels
    deterministic: bool = False  # fixed-order reductions instead of BLAS products

    def __post_init__(self):
        if self.lambda_l1 < 0 or self.lambda_reg < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.decay_every < 1 or self.max_steps < 0:
            raise ValueError("decay_every must be >= 1 and max_steps >= 0")
        if self.reg_points < 3:
            raise ValueError("reg_points must be at least 3")
        if self.reg_form not in ("distance", "x-offset"):
            raise ValueError(f"unknown reg_form {self.reg_form!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


class GmmProblem:
    """Precomputed TPS bases for one (accessory, target) pair."""

    def __init__(self, accessory, target, cfg):
        acc = tps.as_unit(accessory)
        tgt = tps.as_unit(target)
        if acc.shape != tgt.shape:
            raise DimensionError(f"accessory {acc.shape} and target {tgt.shape} differ")
        if acc.ndim == 2:
            acc, tgt = acc[..., None], tgt[..., None]
        self.cfg = cfg
        self.acc = acc
        self.tgt = tgt
        self.height, self.width = acc.shape[:2]
        self.sx, self.sy = tps.pixel_scale(self.width, self.height)
        k = cfg.grid_k
        self.n = k * k
        self.basis = tps.tps_basis(tps.normalized_pixel_centers(self.width, self.height), k)
        ident = tps.WarpGrid.identity(self.width, self.height)
        self.base_x = ident.gx.ravel()
        self.base_y = ident.gy.ravel()

        r = cfg.reg_points
        u = np.linspace(-1.0, 1.0, r)
        lu, lv = np.meshgrid(u, u)
        self.reg_basis = tps.tps_basis(np.column_stack([lu.ravel(), lv.ravel()]), k)
        self.reg_base_x = lu.ravel()
        self.reg_base_y = lv.ravel()
        self.reg_shape = (r, r)
        self.fill = cfg.fill / 255.0

    def _tmul(self, basis, g):
        if self.cfg.deterministic:
            # BLAS may split the reduction across threads; numpy's pairwise sum does not
            return (basis * g[:, None]).sum(axis=0)
        return basis.T @ g

    def grid(self, vec):
        dx, dy = vec[:self.n], vec[self.n:]
        gx = self.base_x + self.sx * (self.basis @ dx)
        gy = self.base_y + self.sy * (self.basis @ dy)
        return gx.reshape(self.height, self.width), gy.reshape(self.height, self.width)

    def reg_grid(self, vec):
        dx, dy = vec[:self.n], vec[self.n:]
        gx = self.reg_base_x + self.reg_basis @ dx
        gy = self.reg_base_y + self.reg_basis @ dy
        return gx.reshape(self.reg_shape), gy.reshape(self.reg_shape)

    def terms(self, vec):
        """(weighted L1 term, weighted regularization term)."""
        gx, gy = self.grid(vec)
        warped = tps.bilinear_sample(self.acc, gx, gy, self.fill)
        l1 = float(np.abs(warped - self.tgt).mean())
        reg = tps.gic_terms(*self.reg_grid(vec), form=self.cfg.reg_form)
        return self.cfg.lambda_l1 * l1, self.cfg.lambda_reg * reg

    def value(self, vec):
        a, b = self.terms(vec)
        return a + b

    def value_and_grad(self, vec):
        cfg = self.cfg
        gx, gy = self.grid(vec)
        warped, dvdx, dvdy = tps.bilinear_sample(self.acc, gx, gy, self.fill, grad=True)
        resid = warped - self.tgt
        l1 = float(np.abs(resid).mean())
        w = np.sign(resid) * (cfg.lambda_l1 / resid.size)
        dgx = (w * dvdx).sum(-1).ravel()
        dgy = (w * dvdy).sum(-1).ravel()
        grad = np.concatenate([self.sx * self._tmul(self.basis, dgx),
                               self.sy * self._tmul(self.basis, dgy)])

        reg, rgx, rgy = tps.gic_terms(*self.reg_grid(vec), form=cfg.reg_form, grad=True)
        if cfg.lambda_reg:
            grad[:self.n] += cfg.lambda_reg * self._tmul(self.reg_basis, rgx.ravel())
            grad[self.n:] += cfg.lambda_reg * self._tmul(self.reg_basis, rgy.ravel())
        return cfg.lambda_l1 * l1 + cfg.lambda_reg * reg, grad


def gmm_objective(params, accessory, target, cfg):
    cfg = _with_k(cfg, params.grid_k)
    return GmmProblem(accessory, target, cfg).value(params.vector())


def gmm_gradient(params, accessory, target, cfg):
    """Analytic gradient of :func:`gmm_objective` as a TpsParams-shaped pair (gdx, gdy)."""
    cfg = _with_k(cfg, params.grid_k)
    _, g = GmmProblem(accessory, target, cfg).value_and_grad(params.vector())
    n = params.grid_k ** 2
    k = params.grid_k
    return g[:n].reshape(k, k), g[n:].reshape(k, k)


def _with_k(cfg, k):
    if cfg.grid_k == k:
        return cfg
    d = cfg.to_dict()
    d["grid_k"] = k
    return GmmConfig(**d)


def fit_tps(accessory, target, cfg, init=None):
    """Adam on the GMM objective; returns ``(best params, loss history)``.

    ``history[t]`` is the loss after ``t`` updates, so it has
    ``cfg.max_steps + 1`` entries. The learning rate is multiplied by
    ``cfg.decay_factor`` every ``cfg.decay_every`` steps and displacements
    are clipped to ``cfg.max_disp`` after each update.
    """
    if init is None:
        init = tps.TpsParams.zeros(cfg.grid_k)
    cfg = _with_k(cfg, init.grid_k)
    problem = GmmProblem(accessory, target, cfg)
    x = init.vector().copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    history = []
    best, best_x = math.inf, x.copy()
    for t in range(cfg.max_steps + 1):
        loss, g = problem.value_and_grad(x)
        if not (math.isfinite(loss) and np.all(np.isfinite(g))):
            raise DivergenceError(t, loss)
        history.append(loss)
        if loss < best:
            best, best_x = loss, x.copy()
        if t == cfg.max_steps:
            break
        lr = cfg.lr * cfg.decay_factor ** (t // cfg.decay_every)
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        mhat = m / (1 - cfg.beta1 ** (t + 1))
        vhat = v / (1 - cfg.beta2 ** (t + 1))
        x = np.clip(x - lr * mhat / (np.sqrt(vhat) + cfg.eps), -cfg.max_disp, cfg.max_disp)
    log.debug("fit_tps: %d steps, loss %.6g -> best %.6g", cfg.max_steps, history[0], best)
    return tps.TpsParams.from_vector(best_x, cfg.grid_k, cfg.max_disp), history


def history_to_csv(history):
    lines = ["step,loss"]
    lines.extend(f"{i},{loss!r}" for i, loss in enumerate(history))
    return "\n".join(lines) + "\n"
