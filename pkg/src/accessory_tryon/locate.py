"""Watch location and mask radius.

Three strategies, tried in order by :func:`resolve_site`:

1. hand landmarks: the wrist landmark (0) is taken as the midpoint between
   the watch and the middle of landmarks 9 and 13, so the watch center is the
   reflection of that middle point through landmark 0; the radius is the
   reflection distance.
2. a present wrist keypoint from the body pose, with a radius proportional
   to image height.
3. the arm-contour fallback: the two largest arm components of the parse
   map are assumed to be the forearm split by the watch; the watch sits
   halfway between their centroids.
"""
import math
from dataclasses import dataclass

from . import imaging
from .errors import (DegenerateGeometryError, InsufficientContoursError,
                     LocalizationError, NoArmError, TryOnError)
from .keypoints import HAND_WRIST, MIDDLE_MCP, RING_MCP, wrist

HAND = "hand-landmarks"
WRIST = "wrist-keypoint"
ARM = "arm-fallback"

DEFAULT_RADIUS_FRAC = 0.06


@dataclass(frozen=True)
class WatchSite:
    center: tuple
    radius: float
    source: str

    def __post_init__(self):
        if not self.radius > 0:
            raise DegenerateGeometryError(f"watch radius must be positive, got {self.radius}")


def watch_from_hand(hand):
    k0 = hand.points[HAND_WRIST]
    k9 = hand.points[MIDDLE_MCP]
    k13 = hand.points[RING_MCP]
    mx = (k9[0] + k13[0]) / 2
    my = (k9[1] + k13[1]) / 2
    cx, cy = 2 * k0[0] - mx, 2 * k0[1] - my
    radius = math.hypot(cx - k0[0], cy - k0[1])
    if radius == 0:
        raise DegenerateGeometryError("landmark 0 coincides with the 9/13 midpoint")
    return WatchSite((cx, cy), radius, HAND)


def wrist_fallback(parse):
    """Midpoint of the centroids of the two largest arm components."""
    arms = imaging.label_mask(parse, {imaging.LEFT_ARM, imaging.RIGHT_ARM})
    comps = imaging.connected_components(arms)
    if not comps:
        raise NoArmError("parse map has no arm pixels")
    if len(comps) < 2:
        raise InsufficientContoursError(f"need two arm components, found {len(comps)}")
    (ax, ay), (bx, by) = comps[0].centroid, comps[1].centroid
    return (float(ax + bx) / 2, float(ay + by) / 2)


def select_hand(hands, pose=None):
    """Pick the hand wearing the watch when several were detected.

    With a body pose, the hand whose landmark 0 is closest to any present
    wrist keypoint wins; otherwise the right hand (or the first one).
    """
    hands = list(hands)
    if not hands:
        return None
    if len(hands) == 1:
        return hands[0]
    wrists = []
    if pose is not None:
        wrists = [w for w in (wrist(pose, "right"), wrist(pose, "left")) if w is not None]
    if wrists:
        def dist(h):
            x, y = h.points[HAND_WRIST]
            return min(math.hypot(x - wx, y - wy) for wx, wy in wrists)
        return min(hands, key=dist)
    for h in hands:
        if h.handedness == "right":
            return h
    return hands[0]


def resolve_site(hands, pose, parse, default_radius_frac=DEFAULT_RADIUS_FRAC):
    """Locate the watch, recording which strategy succeeded in ``source``.

    ``hands`` may be None, a single :class:`HandLandmarks` or a list of them.
    Raises LocalizationError listing every failure when nothing works.
    """
    height = parse.shape[0]
    radius = default_radius_frac * height
    failures = []

    if hands is not None and not isinstance(hands, (list, tuple)):
        hands = [hands]
    hand = select_hand(hands or [], pose)
    if hand is not None:
        try:
            return watch_from_hand(hand)
        except TryOnError as e:
            failures.append(f"hand landmarks: {e}")
    else:
        failures.append("hand landmarks: none")

    if pose is not None:
        for side in ("right", "left"):
            w = wrist(pose, side)
            if w is not None:
                return WatchSite(w, radius, WRIST)
        failures.append("wrist keypoints: both missing")
    else:
        failures.append("wrist keypoints: no pose")

    try:
        return WatchSite(wrist_fallback(parse), radius, ARM)
    except TryOnError as e:
        failures.append(f"arm fallback: {e}")
    raise LocalizationError("; ".join(failures))
