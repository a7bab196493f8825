"""Small synthetic datasets in the pipeline layout, for demos and tests.

Each person image shows a torso and one horizontal forearm; a dark watch band
splits the forearm, and the band pixels are labeled background in the parse
map (as a parser without a watch class would label them). Hand landmarks are
placed so the landmark-based estimate lands on the band.
"""
import json
from pathlib import Path

import numpy as np

from . import imaging, keypoints, pipeline

SKIN = (224, 172, 140)
SHIRT = (60, 90, 160)
BAND = (40, 40, 40)


def make_scene(width=96, height=128, band_x=60, arm_y=80, arm_half=6, band_half=4,
               hand_len=10):
    """Person image, parse map, watch center and hand landmarks (pixels)."""
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    parse = np.zeros((height, width), dtype=np.uint8)
    # torso
    tx0, tx1 = width // 8, width // 3
    img[height // 4:, tx0:tx1] = SHIRT
    parse[height // 4:, tx0:tx1] = imaging.LIP["Upper-clothes"]
    # forearm from torso edge to hand
    ax0, ax1 = tx1, min(width - 4, band_x + band_half + 2 * hand_len)
    ay0, ay1 = arm_y - arm_half, arm_y + arm_half
    img[ay0:ay1 + 1, ax0:ax1 + 1] = SKIN
    parse[ay0:ay1 + 1, ax0:ax1 + 1] = imaging.LEFT_ARM
    # watch band: background label, taller than the arm
    bx0, bx1 = band_x - band_half, band_x + band_half
    img[ay0 - 2:ay1 + 3, bx0:bx1 + 1] = BAND
    parse[ay0 - 2:ay1 + 3, bx0:bx1 + 1] = imaging.BACKGROUND

    center = (float(band_x), float(arm_y))
    k0 = (band_x + hand_len / 2, float(arm_y))
    mid = (band_x + hand_len, float(arm_y))
    pts = []
    for i in range(keypoints.N_HAND):
        # fan the remaining landmarks out beyond the palm
        finger, joint = divmod(max(i - 1, 0), 4)
        pts.append((mid[0] + 2 + 2 * joint, mid[1] - 6 + 3 * finger))
    pts[keypoints.HAND_WRIST] = k0
    pts[keypoints.MIDDLE_MCP] = (mid[0], mid[1] - 2)
    pts[keypoints.RING_MCP] = (mid[0], mid[1] + 2)
    hand = keypoints.HandLandmarks(tuple(pts), "left")
    return img, parse, center, hand


def make_accessory(size=48):
    """Product-style watch image on white plus its mask."""
    img = np.full((size, size, 3), 255, dtype=np.uint8)
    mask = np.zeros((size, size), dtype=bool)
    c = size // 2
    mask[4:size - 4, c - size // 6:c + size // 6] = True
    ys, xs = np.mgrid[0:size, 0:size]
    mask |= (xs - c) ** 2 + (ys - c) ** 2 <= (size // 4) ** 2
    img[mask] = BAND
    face = (xs - c) ** 2 + (ys - c) ** 2 <= (size // 6) ** 2
    img[face] = (200, 200, 210)
    return img, mask


def make_dataset(root, n=3, width=96, height=128, seed=0, hands=True, wrist_missing=()):
    """Write ``n`` records under ``root``; returns the ids.

    ``wrist_missing`` lists record indices whose wrist keypoints are (0, 0).
    ``hands`` may be a bool or a set of indices that get a landmark file.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    for d in pipeline.REQUIRED_DIRS + (pipeline.HAND_DIR,):
        (root / d).mkdir(parents=True, exist_ok=True)
    ids = []
    for i in range(n):
        image_id = f"{i:05d}_00"
        ids.append(image_id)
        band_x = int(rng.integers(width // 2 + 4, width - 30))
        arm_y = int(rng.integers(height // 2, height - 20))
        img, parse, center, hand = make_scene(width, height, band_x, arm_y)
        imaging.write_image(root / pipeline.IMAGE_DIR / f"{image_id}.png", img)
        imaging.write_parse(root / pipeline.PARSE_DIR / f"{image_id}.png", parse)

        pose = [[0.0, 0.0, 0.0] for _ in range(keypoints.N_BODY)]
        pose[1] = [width / 4, height / 4, 0.9]
        if i not in wrist_missing:
            pose[keypoints.L_WRIST] = [center[0], center[1], 0.8]
        doc = keypoints.body_pose_to_document(keypoints.BodyPose(tuple(map(tuple, pose))))
        (root / pipeline.POSE_DIR / f"{image_id}{pipeline.POSE_SUFFIX}").write_text(json.dumps(doc))

        if hands is True or (not isinstance(hands, bool) and i in hands):
            hdoc = keypoints.hand_to_document(hand, width, height)
            (root / pipeline.HAND_DIR / f"{image_id}.json").write_text(json.dumps(hdoc))

        acc, acc_mask = make_accessory()
        imaging.write_image(root / pipeline.ACCESSORY_DIR / f"{image_id}.png", acc)
        imaging.write_mask(root / pipeline.ACCESSORY_MASK_DIR / f"{image_id}.png", acc_mask)
    return ids
