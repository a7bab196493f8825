"""Where does the watch go? Three ways to find out on a synthetic person."""
import numpy as np

from accessory_tryon import agnostic, keypoints, locate, synthetic

img, parse, true_center, hand = synthetic.make_scene()
print("watch band drawn at", true_center)

# landmark 0 sits halfway between the watch and the middle of landmarks 9/13
site = locate.watch_from_hand(hand)
print("from hand landmarks:", site.center, "radius", round(site.radius, 2))

# no hand detector output: fall back to the arm split by the band
print("from arm components:", locate.wrist_fallback(parse))

# resolve_site tries hand, then body wrist, then arm
empty_pose = keypoints.BodyPose(tuple((0.0, 0.0, 0.0) for _ in range(keypoints.N_BODY)))
print("resolved without hands:", locate.resolve_site([], empty_pose, parse).source)

bundle = agnostic.build_bundle(img, site, parse)
print("region pixels:", int(bundle.region_mask.sum()))
print("agnostic gray inside region:", np.unique(bundle.agnostic_image[bundle.region_mask]))
print("target crop outside region:", np.unique(bundle.target_crop[~bundle.region_mask]))
