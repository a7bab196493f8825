"""Image and mask primitives.

Images are numpy arrays of shape ``(H, W)`` or ``(H, W, 3)`` with 8-bit
samples, masks are ``(H, W)`` boolean arrays and parse maps are ``(H, W)``
integer arrays of label ids. Coordinates put the origin at the top-left
pixel center, x to the right and y down.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ChannelError, DimensionError, GeometryError, LabelError

LIP_LABELS = (
    "Background", "Hat", "Hair", "Glove", "Sunglasses", "Upper-clothes",
    "Dress", "Coat", "Socks", "Pants", "Jumpsuits", "Scarf", "Skirt", "Face",
    "Left-arm", "Right-arm", "Left-leg", "Right-leg", "Left-shoe", "Right-shoe",
)
LIP = {name: i for i, name in enumerate(LIP_LABELS)}
BACKGROUND = LIP["Background"]
LEFT_ARM = LIP["Left-arm"]
RIGHT_ARM = LIP["Right-arm"]


@dataclass(frozen=True)
class ComponentStats:
    area: int
    bbox: tuple  # (min_x, min_y, max_x, max_y), inclusive
    centroid: tuple  # (x, y)


def _check_image(img):
    img = np.asarray(img)
    if img.ndim not in (2, 3) or img.shape[0] < 1 or img.shape[1] < 1:
        raise DimensionError(f"not an image array: shape {img.shape}")
    if img.ndim == 3 and img.shape[2] not in (1, 3):
        raise ChannelError(f"expected 1 or 3 channels, got {img.shape[2]}")
    return img


def _same_hw(a, b, what="mask"):
    if a.shape[:2] != b.shape[:2]:
        raise DimensionError(f"{what} is {b.shape[:2]}, image is {a.shape[:2]}")


def binarize(img, threshold=127):
    """Threshold a single-channel image; a bit is set where sample > threshold."""
    img = _check_image(img)
    if img.ndim == 3:
        if img.shape[2] != 1:
            raise ChannelError("binarize needs a single-channel image")
        img = img[..., 0]
    return img > threshold


def mask_intersect(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a & b


def label_mask(parse, labels, n_labels=len(LIP_LABELS)):
    """Pixels of ``parse`` whose label is one of ``labels``."""
    labels = sorted(set(int(l) for l in labels))
    if not labels:
        raise LabelError("label set is empty")
    bad = [l for l in labels if not 0 <= l < n_labels]
    if bad:
        raise LabelError(f"label ids {bad} outside scheme 0..{n_labels - 1}")
    return np.isin(np.asarray(parse), labels)


_EIGHT = np.ones((3, 3), dtype=bool)


def connected_components(mask):
    """8-connected components, largest first.

    Ties on area are broken by the (min_y, min_x) corner of the bounding box.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs]
    area = np.bincount(ids, minlength=n + 1)[1:]
    sx = np.bincount(ids, weights=xs, minlength=n + 1)[1:]
    sy = np.bincount(ids, weights=ys, minlength=n + 1)[1:]
    stats = []
    for i, sl in enumerate(ndimage.find_objects(labels)):
        bbox = (sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1)
        centroid = (sx[i] / area[i], sy[i] / area[i])
        stats.append(ComponentStats(int(area[i]), bbox, centroid))
    stats.sort(key=lambda s: (-s.area, s.bbox[1], s.bbox[0]))
    return stats


def rasterize_disk(center, radius, width, height):
    """Pixels whose center lies within ``radius`` of ``center``."""
    if radius < 0:
        raise GeometryError(f"negative radius {radius}")
    cx, cy = center
    ys, xs = np.mgrid[0:height, 0:width]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius


def overlay_gray(img, mask, gray=128):
    img = _check_image(img)
    mask = np.asarray(mask, dtype=bool)
    _same_hw(img, mask)
    out = img.copy()
    out[mask] = gray
    return out


def to_gray(img):
    """Luma (ITU-R 601 weights) as float64; single-channel input passes through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        if img.shape[2] == 1:
            return img[..., 0]
        return img @ np.array([0.299, 0.587, 0.114])
    return img


def resize(img, width, height):
    """Bilinear resize of an 8-bit image."""
    img = _check_image(img)
    if img.shape[1] == width and img.shape[0] == height:
        return img.copy()
    return np.asarray(Image.fromarray(img).resize((width, height), Image.BILINEAR))


def mask_outline(mask):
    """Mask pixels with at least one 4-neighbour outside the mask."""
    mask = np.asarray(mask, dtype=bool)
    return mask & ~ndimage.binary_erosion(mask, border_value=0)


# -- persistence -------------------------------------------------------------

def read_image(path, gray=False):
    with Image.open(path) as im:
        im = im.convert("L" if gray else "RGB")
        return np.asarray(im).copy()


def read_mask(path, threshold=127):
    return binarize(read_image(path, gray=True), threshold)


def read_parse(path):
    """Parse maps are palette or grayscale PNGs whose sample value is the label id."""
    with Image.open(path) as im:
        if im.mode not in ("P", "L", "I", "I;16"):
            raise LabelError(f"{path}: parse map must be palette or grayscale, got {im.mode}")
        return np.asarray(im).astype(np.int64)


def write_image(path, img):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    Image.fromarray(img.astype(np.uint8)).save(path, format="PNG")


def write_mask(path, mask):
    write_image(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def write_parse(path, parse):
    write_image(path, np.asarray(parse).astype(np.uint8))
