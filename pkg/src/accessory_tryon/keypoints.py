"""Body-pose and hand-landmark ingestion.

Body pose files use the usual pose-detector layout::

    {"people": [{"pose_keypoints_2d": [x0, y0, c0, x1, y1, c1, ...]}]}

with 19 keypoints (57 numbers). Hand landmark files are defined here::

    {"handedness": "left" | "right", "landmarks": [[x, y], ...21 pairs]}

with coordinates normalized to [0, 1]. A file may also hold several hands as
``{"hands": [<hand>, ...]}``.
"""
import json
import math
from dataclasses import dataclass

from .errors import NoPersonError, RangeError, SchemaError

BODY_KEYPOINTS = (
    "Nose", "Neck", "RShoulder", "RElbow", "RWrist", "LShoulder", "LElbow",
    "LWrist", "RHip", "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle", "REye",
    "LEye", "REar", "LEar", "Background",
)
N_BODY = len(BODY_KEYPOINTS)
N_HAND = 21
R_WRIST = 4
L_WRIST = 7

# hand landmark indices used for watch localization
HAND_WRIST = 0
MIDDLE_MCP = 9
RING_MCP = 13


def is_missing(x, y, confidence):
    return (x == 0 and y == 0) or confidence <= 0


@dataclass(frozen=True)
class BodyPose:
    points: tuple  # 19 (x, y, confidence) triples

    def __post_init__(self):
        if len(self.points) != N_BODY:
            raise SchemaError(f"body pose needs {N_BODY} points, got {len(self.points)}")

    def get(self, index):
        """(x, y) of keypoint ``index`` or None when it is missing."""
        x, y, c = self.points[index]
        return None if is_missing(x, y, c) else (x, y)

    def missing(self, index):
        return is_missing(*self.points[index])


@dataclass(frozen=True)
class HandLandmarks:
    points: tuple  # 21 (x, y) pairs in pixels
    handedness: str = "right"

    def __post_init__(self):
        if len(self.points) != N_HAND:
            raise SchemaError(f"hand needs {N_HAND} landmarks, got {len(self.points)}")
        if self.handedness not in ("left", "right"):
            raise SchemaError(f"handedness must be left or right, not {self.handedness!r}")

    def translated(self, tx, ty):
        return HandLandmarks(tuple((x + tx, y + ty) for x, y in self.points), self.handedness)

    def scaled(self, s):
        return HandLandmarks(tuple((x * s, y * s) for x, y in self.points), self.handedness)


def _load(document):
    if isinstance(document, (str, bytes, bytearray)):
        return json.loads(document)
    return document


def parse_body_pose(document):
    doc = _load(document)
    people = doc.get("people") or []
    if not people:
        raise NoPersonError("pose document has no people")
    flat = people[0].get("pose_keypoints_2d")
    if flat is None or len(flat) != 3 * N_BODY:
        n = None if flat is None else len(flat)
        raise SchemaError(f"pose_keypoints_2d must have {3 * N_BODY} numbers, got {n}")
    vals = [float(v) for v in flat]
    return BodyPose(tuple(tuple(vals[i:i + 3]) for i in range(0, len(vals), 3)))


def body_pose_to_document(pose):
    flat = [v for triple in pose.points for v in triple]
    return {"version": 1.3, "people": [{"pose_keypoints_2d": flat}]}


def parse_hand_landmarks(document, image_width, image_height):
    doc = _load(document)
    marks = doc.get("landmarks")
    if marks is None or len(marks) != N_HAND:
        n = None if marks is None else len(marks)
        raise SchemaError(f"expected {N_HAND} landmarks, got {n}")
    pts = []
    for i, m in enumerate(marks):
        if len(m) < 2:
            raise SchemaError(f"landmark {i} has no (x, y)")
        x, y = float(m[0]), float(m[1])
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0) or math.isnan(x) or math.isnan(y):
            raise RangeError(f"landmark {i} = ({x}, {y}) outside [0, 1]")
        pts.append((x * image_width, y * image_height))
    return HandLandmarks(tuple(pts), str(doc.get("handedness", "right")).lower())


def parse_hand_file(document, image_width, image_height):
    """All hands in a landmark file (single-hand or ``{"hands": [...]}`` form)."""
    doc = _load(document)
    hands = doc["hands"] if "hands" in doc else [doc]
    return [parse_hand_landmarks(h, image_width, image_height) for h in hands]


def hand_to_document(hand, image_width, image_height):
    return {
        "handedness": hand.handedness,
        "landmarks": [[x / image_width, y / image_height] for x, y in hand.points],
    }


def wrist(pose, side):
    """Wrist keypoint for ``side`` ("left" or "right"), None when missing."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be left or right, not {side!r}")
    return pose.get(L_WRIST if side == "left" else R_WRIST)
