"""Batch orchestration over a dataset laid out like VITON-HD.

Inputs under the dataset root (``<id>`` is the shared filename stem)::

    image/<id>.jpg|png                  person photo            (required)
    image-parse-v3/<id>.png             LIP parse map           (required)
    openpose_json/<id>_keypoints.json   body pose               (required)
    hand-landmarks/<id>.json            hand landmarks          (optional)
    cloth/<id>.jpg|png                  accessory product photo (required)
    cloth-mask/<id>.png|jpg             accessory mask          (required)

Outputs::

    agnostic-mask/<id>.png   region mask (0/255)
    agnostic/<id>.png        person image with the region grayed out
    target-crop/<id>.png     person pixels inside the region, white elsewhere
    watch-site/<id>.json     {"center": [x, y], "radius": r, "source": ...}
    warp-cloth/<id>.png      fitted TPS warp of the placed accessory
    warp-mask/<id>.png       same warp applied to the accessory mask
    warp-params/<id>.json    TPS parameters
    warp-loss/<id>.csv       step,loss
    eval/ssim.csv, eval/ssim.txt, eval/ssim_bars_<res>.csv
    debug/<id>.png           landmarks, watch center and region outline
"""
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from . import agnostic, gmm, imaging, keypoints, locate, metrics, tps
from .errors import EmptyEvalError, LabelError, LayoutError, TryOnError
from .gmm import GmmConfig

log = logging.getLogger(__name__)

IMAGE_DIR = "image"
PARSE_DIR = "image-parse-v3"
POSE_DIR = "openpose_json"
HAND_DIR = "hand-landmarks"
ACCESSORY_DIR = "cloth"
ACCESSORY_MASK_DIR = "cloth-mask"
REQUIRED_DIRS = (IMAGE_DIR, PARSE_DIR, POSE_DIR, ACCESSORY_DIR, ACCESSORY_MASK_DIR)

AGNOSTIC_MASK_DIR = "agnostic-mask"
AGNOSTIC_DIR = "agnostic"
TARGET_DIR = "target-crop"
SITE_DIR = "watch-site"
WARP_DIR = "warp-cloth"
WARP_MASK_DIR = "warp-mask"
PARAMS_DIR = "warp-params"
LOSS_DIR = "warp-loss"
EVAL_DIR = "eval"
DEBUG_DIR = "debug"

POSE_SUFFIX = "_keypoints.json"
IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")

OK, WARNING, ERROR = "ok", "warning", "error"
ENV_PREFIX = "TRYON_"


@dataclass
class PipelineConfig:
    dataset_root: Path = Path(".")
    label_scheme: str = "LIP"
    n_labels: int = len(imaging.LIP_LABELS)
    region_labels: tuple = (imaging.BACKGROUND,)
    gray_value: int = agnostic.DEFAULT_GRAY
    target_fill: int = agnostic.DEFAULT_FILL
    default_radius_frac: float = locate.DEFAULT_RADIUS_FRAC
    fit_max_side: int = 256
    resolutions: tuple = metrics.DEFAULT_RESOLUTIONS
    jobs: int = 1
    deterministic: bool = False
    gmm: GmmConfig = field(default_factory=GmmConfig)

    def __post_init__(self):
        self.dataset_root = Path(self.dataset_root)
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.label_scheme == "LIP":
            self.n_labels = len(imaging.LIP_LABELS)
        elif self.label_scheme != "custom":
            raise ValueError(f"label_scheme must be LIP or custom, not {self.label_scheme!r}")


@dataclass
class ImageRecord:
    id: str
    person_image: Path = None
    parse: Path = None
    pose: Path = None
    hands: Path = None
    accessory: Path = None
    accessory_mask: Path = None
    status: str = OK
    message: str = ""
    notes: list = field(default_factory=list)


@dataclass
class StageResult:
    id: str
    status: str
    message: str = ""
    extra: dict = field(default_factory=dict)


def exit_code(results):
    statuses = {r.status for r in results}
    if ERROR in statuses:
        return 2
    if WARNING in statuses:
        return 1
    return 0


# -- configuration -----------------------------------------------------------

def _parse_bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_resolutions(s):
    out = []
    for part in str(s).split(","):
        w, h = part.strip().lower().split("x")
        out.append((int(w), int(h)))
    return tuple(out)


def _parse_labels(s):
    out = []
    for part in str(s).split(","):
        part = part.strip()
        out.append(int(part) if part.isdigit() else imaging.LIP[part])
    return tuple(out)


_CONVERTERS = {
    "dataset_root": Path, "label_scheme": str, "n_labels": int,
    "region_labels": _parse_labels, "gray_value": int, "target_fill": int,
    "default_radius_frac": float, "fit_max_side": int,
    "resolutions": _parse_resolutions, "jobs": int, "deterministic": _parse_bool,
}
_GMM_FIELDS = {f.name: f.type for f in fields(GmmConfig)}
_GMM_CONVERT = {"float": float, "int": int, "str": str, "bool": _parse_bool}


def config_keys():
    return sorted(set(_CONVERTERS) | set(_GMM_FIELDS))


def parse_config_text(text):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def env_overrides(environ=None):
    environ = os.environ if environ is None else environ
    keys = config_keys()
    return {k: environ[ENV_PREFIX + k.upper()] for k in keys if ENV_PREFIX + k.upper() in environ}


def build_config(values, base=None):
    """Apply string (or typed) ``values`` onto ``base`` (defaults when None)."""
    base = base or PipelineConfig()
    top, sub = {}, {}
    for key, raw in values.items():
        if key in _CONVERTERS:
            top[key] = _CONVERTERS[key](raw) if isinstance(raw, str) else raw
        elif key in _GMM_FIELDS:
            conv = _GMM_CONVERT[_GMM_FIELDS[key] if isinstance(_GMM_FIELDS[key], str)
                                else _GMM_FIELDS[key].__name__]
            sub[key] = conv(raw) if isinstance(raw, str) else raw
        else:
            raise ValueError(f"unknown config key {key!r}")
    g = replace(base.gmm, **sub) if sub else base.gmm
    return replace(base, gmm=g, **top)


def load_config(path=None, overrides=None, environ=None):
    """Defaults, then the config file, then ``TRYON_*`` env vars, then ``overrides``."""
    cfg = PipelineConfig()
    if path is not None:
        cfg = build_config(parse_config_text(Path(path).read_text()), cfg)
    cfg = build_config(env_overrides(environ), cfg)
    if overrides:
        cfg = build_config(overrides, cfg)
    return cfg


# -- discovery ---------------------------------------------------------------

def _stems(directory, suffixes=IMAGE_SUFFIXES):
    out = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix.lower() in suffixes:
            out.setdefault(p.stem, p)
    return out


def discover(root):
    """One record per person image, with paths resolved by shared stem."""
    root = Path(root)
    if not root.is_dir():
        raise LayoutError(f"{root} is not a directory")
    missing = [d for d in REQUIRED_DIRS if not (root / d).is_dir()]
    if missing:
        raise LayoutError(f"{root}: missing subdirectories {missing}")
    images = _stems(root / IMAGE_DIR)
    parses = _stems(root / PARSE_DIR, (".png",))
    accessories = _stems(root / ACCESSORY_DIR)
    masks = _stems(root / ACCESSORY_MASK_DIR)
    hand_dir = root / HAND_DIR
    records = []
    for image_id, img in images.items():
        rec = ImageRecord(image_id, person_image=img)
        rec.parse = parses.get(image_id)
        pose = root / POSE_DIR / f"{image_id}{POSE_SUFFIX}"
        rec.pose = pose if pose.is_file() else None
        rec.accessory = accessories.get(image_id)
        rec.accessory_mask = masks.get(image_id)
        hand = hand_dir / f"{image_id}.json"
        if hand.is_file():
            rec.hands = hand
        else:
            rec.notes.append("optional hand-landmarks file missing")
        absent = [name for name, p in (("parse", rec.parse), ("pose", rec.pose),
                                       ("accessory", rec.accessory),
                                       ("accessory mask", rec.accessory_mask)) if p is None]
        if absent:
            rec.status = ERROR
            rec.message = "missing " + ", ".join(absent)
        records.append(rec)
    return records


# -- per-record stages -------------------------------------------------------

def _load_inputs(rec, cfg):
    person = imaging.read_image(rec.person_image)
    parse = imaging.read_parse(rec.parse)
    if parse.shape != person.shape[:2]:
        raise TryOnError(f"parse map {parse.shape} does not match image {person.shape[:2]}")
    if parse.min() < 0 or parse.max() >= cfg.n_labels:
        raise LabelError(f"parse labels outside 0..{cfg.n_labels - 1}")
    pose = keypoints.parse_body_pose(Path(rec.pose).read_text())
    hands = None
    if rec.hands is not None:
        h, w = parse.shape
        hands = keypoints.parse_hand_file(Path(rec.hands).read_text(), w, h)
    return person, parse, pose, hands


def _site_to_json(site):
    return json.dumps({"center": [float(site.center[0]), float(site.center[1])],
                       "radius": float(site.radius), "source": site.source}) + "\n"


def _site_from_json(text):
    d = json.loads(text)
    return locate.WatchSite(tuple(d["center"]), d["radius"], d["source"])


def prepare_one(rec, cfg):
    if rec.status == ERROR:
        return StageResult(rec.id, ERROR, rec.message)
    root = cfg.dataset_root
    try:
        person, parse, pose, hands = _load_inputs(rec, cfg)
        site = locate.resolve_site(hands, pose, parse, cfg.default_radius_frac)
        bundle = agnostic.build_bundle(person, site, parse, cfg.region_labels,
                                       cfg.gray_value, cfg.target_fill)
    except (TryOnError, OSError, ValueError, KeyError) as e:
        return StageResult(rec.id, ERROR, f"{type(e).__name__}: {e}")
    imaging.write_mask(root / AGNOSTIC_MASK_DIR / f"{rec.id}.png", bundle.region_mask)
    imaging.write_image(root / AGNOSTIC_DIR / f"{rec.id}.png", bundle.agnostic_image)
    imaging.write_image(root / TARGET_DIR / f"{rec.id}.png", bundle.target_crop)
    site_path = root / SITE_DIR / f"{rec.id}.json"
    site_path.parent.mkdir(parents=True, exist_ok=True)
    site_path.write_text(_site_to_json(site))
    extra = {"source": site.source, "center": site.center, "radius": site.radius}
    if bundle.warning is not None:
        return StageResult(rec.id, WARNING, str(bundle.warning), extra)
    return StageResult(rec.id, OK, "", extra)


def _bbox(mask):
    ys, xs = np.nonzero(mask)
    return xs.min(), ys.min(), xs.max(), ys.max()


def place_accessory(accessory, accessory_mask, region, site, fill=255):
    """Unwarped placement of the accessory into the person frame.

    The masked accessory is cropped to its bounding box, scaled uniformly to
    fit the region's bounding box (or the site's disk when the region is
    empty) and centered there on a ``fill`` canvas. Returns (image, mask).
    """
    h, w = region.shape
    if region.any():
        x0, y0, x1, y1 = _bbox(region)
    else:
        cx, cy = site.center
        r = site.radius
        x0, y0 = max(0, int(np.floor(cx - r))), max(0, int(np.floor(cy - r)))
        x1, y1 = min(w - 1, int(np.ceil(cx + r))), min(h - 1, int(np.ceil(cy + r)))
        if x1 < x0 or y1 < y0:
            x0, y0, x1, y1 = 0, 0, w - 1, h - 1
    canvas = np.full((h, w, 3), fill, dtype=np.uint8)
    placed_mask = np.zeros((h, w), dtype=bool)
    if not accessory_mask.any():
        return canvas, placed_mask
    ax0, ay0, ax1, ay1 = _bbox(accessory_mask)
    crop = accessory[ay0:ay1 + 1, ax0:ax1 + 1].copy()
    crop_mask = accessory_mask[ay0:ay1 + 1, ax0:ax1 + 1]
    crop[~crop_mask] = fill
    bw, bh = x1 - x0 + 1, y1 - y0 + 1
    ch, cw = crop_mask.shape
    scale = min(bw / cw, bh / ch)
    nw, nh = max(1, int(round(cw * scale))), max(1, int(round(ch * scale)))
    crop = imaging.resize(crop, nw, nh)
    crop_mask = np.asarray(Image.fromarray(crop_mask.astype(np.uint8) * 255)
                           .resize((nw, nh), Image.BILINEAR)) > 127
    ox = x0 + (bw - nw) // 2
    oy = y0 + (bh - nh) // 2
    canvas[oy:oy + nh, ox:ox + nw] = crop
    placed_mask[oy:oy + nh, ox:ox + nw] = crop_mask
    return canvas, placed_mask


def _working_size(width, height, max_side):
    s = min(1.0, max_side / max(width, height))
    return max(2, int(round(width * s))), max(2, int(round(height * s)))


def warp_one(rec, cfg):
    if rec.status == ERROR:
        return StageResult(rec.id, ERROR, rec.message)
    root = cfg.dataset_root
    try:
        target = imaging.read_image(root / TARGET_DIR / f"{rec.id}.png")
        region = imaging.read_mask(root / AGNOSTIC_MASK_DIR / f"{rec.id}.png")
        site = _site_from_json((root / SITE_DIR / f"{rec.id}.json").read_text())
        accessory = imaging.read_image(rec.accessory)
        acc_mask = imaging.read_mask(rec.accessory_mask)
        if acc_mask.shape != accessory.shape[:2]:
            raise TryOnError(f"accessory mask {acc_mask.shape} does not match {accessory.shape[:2]}")
        fill = cfg.target_fill
        placed, placed_mask = place_accessory(accessory, acc_mask, region, site, fill)
        h, w = target.shape[:2]
        fw, fh = _working_size(w, h, cfg.fit_max_side)
        gcfg = replace(cfg.gmm, fill=float(fill), deterministic=cfg.deterministic)
        params, history = gmm.fit_tps(imaging.resize(placed, fw, fh),
                                      imaging.resize(target, fw, fh), gcfg)
        grid = tps.tps_grid(params, w, h)
        warped = tps.warp_image(placed, grid, fill)
        warped_mask = tps.warp_image(placed_mask.astype(np.uint8) * 255, grid, 0) > 127
    except FileNotFoundError as e:
        return StageResult(rec.id, ERROR, f"prepare outputs missing: {e.filename}")
    except (TryOnError, OSError, ValueError) as e:
        return StageResult(rec.id, ERROR, f"{type(e).__name__}: {e}")
    imaging.write_image(root / WARP_DIR / f"{rec.id}.png", warped)
    imaging.write_mask(root / WARP_MASK_DIR / f"{rec.id}.png", warped_mask)
    params_path = root / PARAMS_DIR / f"{rec.id}.json"
    params_path.parent.mkdir(parents=True, exist_ok=True)
    params_path.write_text(tps.params_to_json(params))
    loss_path = root / LOSS_DIR / f"{rec.id}.csv"
    loss_path.parent.mkdir(parents=True, exist_ok=True)
    loss_path.write_text(gmm.history_to_csv(history))
    return StageResult(rec.id, OK, "", {"final_loss": min(history), "steps": len(history) - 1,
                                        "params": str(params_path)})


def visualize_one(rec, cfg):
    if rec.person_image is None or rec.parse is None or rec.pose is None:
        return StageResult(rec.id, WARNING, "skipped: missing inputs")
    root = cfg.dataset_root
    try:
        person, parse, pose, hands = _load_inputs(rec, cfg)
        site = locate.resolve_site(hands, pose, parse, cfg.default_radius_frac)
    except (TryOnError, OSError, ValueError, KeyError) as e:
        return StageResult(rec.id, WARNING, f"skipped: {type(e).__name__}: {e}")
    mask_path = root / AGNOSTIC_MASK_DIR / f"{rec.id}.png"
    if mask_path.is_file():
        region = imaging.read_mask(mask_path)
    else:
        region, _ = agnostic.build_region_mask(site, parse, cfg.region_labels)
    out = person.copy()
    out[imaging.mask_outline(region)] = (255, 255, 0)
    canvas = Image.fromarray(out)
    draw = ImageDraw.Draw(canvas)
    r = max(1, min(person.shape[:2]) // 100)
    hand = locate.select_hand(hands or [], pose)
    if hand is not None:
        for x, y in hand.points:
            draw.ellipse([x - r, y - r, x + r, y + r], fill=(0, 255, 0))
    cx, cy = site.center
    draw.ellipse([cx - 2 * r, cy - 2 * r, cx + 2 * r, cy + 2 * r], fill=(255, 0, 0))
    path = root / DEBUG_DIR / f"{rec.id}.png"
    imaging.write_image(path, np.asarray(canvas))
    return StageResult(rec.id, OK, "", {"source": site.source, "path": str(path)})


# -- batch runners -----------------------------------------------------------

def _run(func, cfg, records):
    records = sorted(records, key=lambda r: r.id)
    if cfg.jobs == 1 or len(records) <= 1:
        return [func(r, cfg) for r in records]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(func, records, [cfg] * len(records)))


def run_prepare(cfg, records):
    return _run(prepare_one, cfg, records)


def run_warp(cfg, records):
    return _run(warp_one, cfg, records)


def run_visualize(cfg, records):
    return _run(visualize_one, cfg, records)


def run_eval(cfg, generated_dir=None, truth_dir=None, out_dir=None):
    """SSIM of generated vs truth images, written under ``out_dir``.

    Defaults compare warp-cloth/ against target-crop/ and write to eval/.
    """
    root = cfg.dataset_root
    generated_dir = Path(generated_dir or root / WARP_DIR)
    truth_dir = Path(truth_dir or root / TARGET_DIR)
    out_dir = Path(out_dir or root / EVAL_DIR)
    report = metrics.evaluate_pairs(generated_dir, truth_dir, cfg.resolutions)
    report.write(out_dir)
    return report


def eval_exit_code(report):
    return 1 if report.errors else 0


def run_all(cfg, records=None):
    """prepare, warp and eval in sequence; returns (exit code, per-stage results)."""
    records = discover(cfg.dataset_root) if records is None else records
    prep = run_prepare(cfg, records)
    warp = run_warp(cfg, records)
    code = max(exit_code(prep), exit_code(warp))
    try:
        report = run_eval(cfg)
        code = max(code, eval_exit_code(report))
    except EmptyEvalError as e:
        log.error("%s", e)
        report = None
        code = 2
    return code, {"prepare": prep, "warp": warp, "eval": report}
