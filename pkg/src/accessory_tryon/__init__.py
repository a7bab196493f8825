"""Watch try-on preprocessing, TPS warp fitting and SSIM evaluation."""
from .agnostic import (AgnosticBundle, build_agnostic, build_bundle,
                       build_region_mask, build_target_crop)
from .gmm import GmmConfig, fit_tps, gmm_objective
from .imaging import (ComponentStats, binarize, connected_components,
                      label_mask, mask_intersect, overlay_gray, rasterize_disk)
from .keypoints import (BodyPose, HandLandmarks, parse_body_pose,
                        parse_hand_landmarks, wrist)
from .locate import WatchSite, resolve_site, watch_from_hand, wrist_fallback
from .metrics import SsimReport, evaluate_pairs, ssim
from .tps import (TpsParams, WarpGrid, correlate_features, gic_loss, l1_loss,
                  tps_grid, warp_image)

__version__ = "0.1.0"
