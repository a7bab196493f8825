"""Accessory region mask, human-agnostic image and target accessory crop."""
from dataclasses import dataclass

import numpy as np

from . import imaging
from .errors import DimensionError, EmptyRegionWarning, GeometryError

# the parser has no watch class, so watches come out labeled as background
DEFAULT_REGION_LABELS = frozenset({imaging.BACKGROUND})
DEFAULT_GRAY = 128
DEFAULT_FILL = 255


@dataclass
class AgnosticBundle:
    region_mask: np.ndarray
    agnostic_image: np.ndarray
    target_crop: np.ndarray
    warning: EmptyRegionWarning = None


def build_region_mask(site, parse, labels=DEFAULT_REGION_LABELS):
    """Disk around the watch site intersected with the given parse labels.

    Returns ``(mask, warning)``; ``warning`` is an :class:`EmptyRegionWarning`
    when the intersection is empty, else None.
    """
    if not site.radius > 0:
        raise GeometryError(f"site radius must be positive, got {site.radius}")
    h, w = parse.shape
    disk = imaging.rasterize_disk(site.center, site.radius, w, h)
    mask = imaging.mask_intersect(disk, imaging.label_mask(parse, labels))
    warning = None
    if not mask.any():
        warning = EmptyRegionWarning(
            f"empty region at center {site.center} radius {site.radius:.2f} ({site.source})")
    return mask, warning


def build_agnostic(img, region, gray=DEFAULT_GRAY):
    return imaging.overlay_gray(img, region, gray)


def build_target_crop(img, region, fill=DEFAULT_FILL):
    img = np.asarray(img)
    region = np.asarray(region, dtype=bool)
    if img.shape[:2] != region.shape:
        raise DimensionError(f"region is {region.shape}, image is {img.shape[:2]}")
    out = np.full_like(img, fill)
    out[region] = img[region]
    return out


def build_bundle(img, site, parse, labels=DEFAULT_REGION_LABELS,
                 gray=DEFAULT_GRAY, fill=DEFAULT_FILL):
    if np.asarray(img).shape[:2] != parse.shape:
        raise DimensionError(f"parse map is {parse.shape}, image is {np.asarray(img).shape[:2]}")
    region, warning = build_region_mask(site, parse, labels)
    return AgnosticBundle(region, build_agnostic(img, region, gray),
                          build_target_crop(img, region, fill), warning)
