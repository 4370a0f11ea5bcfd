import numpy as np
import pytest

from homtrack import simulator
from homtrack.geometry import CorrespondenceSet, normalize_homography, project_points


def random_homography(rng, projective_scale=1e-4):
    """Well-conditioned random homography (mild perspective)."""
    H = np.eye(3)
    H[:2, :2] += rng.normal(0, 0.1, (2, 2))
    H[:2, 2] = rng.normal(0, 20.0, 2)
    H[2, :2] = rng.normal(0, projective_scale, 2)
    return normalize_homography(H)


def exact_correspondences(H, rng, n=8, span=1000.0):
    src = rng.uniform(0, span, (n, 2))
    return CorrespondenceSet(src, project_points(H, src))


def gt_eval_dict(bundle):
    return {
        frame: [(g.track_id, g.box, g.class_id) for g in lst]
        for frame, lst in bundle.gt.items()
    }


def tracks_to_pred(tracks):
    pred = {}
    for trk in tracks:
        for frame, box in trk.history:
            pred.setdefault(frame, []).append((trk.track_id, box, trk.class_id))
    return pred


class IdentityGraph:
    def homography_between(self, a, b):
        return np.eye(3)


class GtGraph:
    def __init__(self, bundle):
        self.bundle = bundle

    def homography_between(self, a, b):
        return self.bundle.gt_homography(a, b)


@pytest.fixture(scope="session")
def hover_bundle():
    cfg = simulator.ScenarioConfig(scenario="hover", frames=30, objects=5, seed=7)
    return simulator.generate_sequence(cfg)


@pytest.fixture(scope="session")
def linear_bundle():
    cfg = simulator.ScenarioConfig(scenario="linear", frames=60, objects=0, seed=2)
    return simulator.generate_sequence(cfg)
