"""Synthetic moving-camera scene generator with exact ground truth.

A pinhole camera flies over a ground plane populated with rectangular
objects. Because everything of interest lies on the plane, the
plane-induced homography between any two frames is exact, which makes the
projective-IoU association and the keyframe interpolation directly
verifiable against ground truth.

World frame: z up, ground plane z = 0, units meters. Image frame: pixels,
origin top-left, y down.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import geometry
from .association import Detection
from .errors import InvalidConfig, PlaneBehindCamera
from .geometry import BBox, CorrespondenceSet

SCENARIOS = ("hover", "turn_left", "turn_right", "ascend", "descend", "linear", "mixed")


@dataclass(frozen=True)
class CameraPose:
    position: np.ndarray          # (3,), z = height above ground > 0
    yaw: float = 0.0              # heading, radians
    pitch: float = 0.0            # tilt away from nadir, radians
    roll: float = 0.0
    focal: float = 800.0
    principal_point: tuple = (500.0, 500.0)

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos[2] <= 0:
            raise ValueError("camera must be above the ground plane")
        object.__setattr__(self, "position", pos)

    def rotation(self) -> np.ndarray:
        """World-to-camera rotation; yaw/pitch/roll about a nadir base view."""
        cy, sy = np.cos(self.yaw), np.sin(self.yaw)
        cp, sp = np.cos(self.pitch), np.sin(self.pitch)
        cr, sr = np.cos(self.roll), np.sin(self.roll)
        Rz_yaw = np.array([[cy, sy, 0], [-sy, cy, 0], [0, 0, 1]])
        nadir = np.diag([1.0, -1.0, -1.0])  # camera z looks straight down
        Rx_pitch = np.array([[1, 0, 0], [0, cp, sp], [0, -sp, cp]])
        Rz_roll = np.array([[cr, sr, 0], [-sr, cr, 0], [0, 0, 1]])
        return Rz_roll @ Rx_pitch @ nadir @ Rz_yaw

    def intrinsics(self) -> np.ndarray:
        px, py = self.principal_point
        return np.array([[self.focal, 0, px], [0, self.focal, py], [0, 0, 1.0]])

    def plane_to_image(self) -> np.ndarray:
        """3x3 map from ground-plane (x, y, 1) to homogeneous pixels."""
        R = self.rotation()
        c = self.position
        ext = np.column_stack([R[:, 0], R[:, 1], -R @ c])
        return self.intrinsics() @ ext

    def looks_at_ground(self) -> bool:
        optical_axis = self.rotation().T @ np.array([0.0, 0.0, 1.0])
        return optical_axis[2] < 0

    def project_ground(self, points_xy: np.ndarray) -> np.ndarray:
        """Project (N, 2) ground points to pixels."""
        return geometry.project_points(self.plane_to_image(), points_xy)


def plane_homography(pose_a: CameraPose, pose_b: CameraPose) -> np.ndarray:
    """Exact image-a -> image-b homography for ground-plane points."""
    if not (pose_a.looks_at_ground() and pose_b.looks_at_ground()):
        raise PlaneBehindCamera("a pose does not face the ground plane")
    M_a = pose_a.plane_to_image()
    M_b = pose_b.plane_to_image()
    return geometry.normalize_homography(M_b @ np.linalg.inv(M_a))


@dataclass
class ScenarioConfig:
    scenario: str = "hover"
    frames: int = 60
    objects: int = 8
    frame_size: tuple = (1000, 1000)
    det_noise_sigma: float = 0.0
    det_dropout: float = 0.0
    false_positive_rate: float = 0.0
    correspondence_count: int = 200
    correspondence_outlier_rate: float = 0.0
    embedding_dim: int = 64
    embedding_view_noise: float = 0.1
    seed: int = 0

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise InvalidConfig(f"unknown scenario {self.scenario!r}")
        if self.frames < 2:
            raise InvalidConfig("need at least 2 frames")
        if self.objects < 0 or self.correspondence_count < 4:
            raise InvalidConfig("objects >= 0 and correspondence_count >= 4 required")
        for name in ("det_dropout", "correspondence_outlier_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1]")
        if self.false_positive_rate < 0:
            raise InvalidConfig("false_positive_rate must be non-negative")
        if self.det_noise_sigma < 0 or self.embedding_view_noise < 0:
            raise InvalidConfig("noise scales must be non-negative")
        if self.embedding_dim < 4:
            raise InvalidConfig("embedding_dim must be >= 4")
        return self


# per-frame motion constants for the named flight states
BASE_HEIGHT = 50.0
HOVER_YAW_RATE = 0.30
TURN_YAW_RATE = 0.30
TURN_SPEED = 0.8
CLIMB_RATE = 0.45
LINEAR_SPEED = 0.6
MIXED_ACCEL = 0.02
MIXED_YAW_RATE = 0.02


def scenario_pose(scenario: str, t: int, frame_size=(1000, 1000)) -> CameraPose:
    """Camera pose at 0-based step t of a named trajectory."""
    pp = (frame_size[0] / 2.0, frame_size[1] / 2.0)
    x = y = 0.0
    z = BASE_HEIGHT
    yaw = 0.0
    if scenario == "hover":
        yaw = HOVER_YAW_RATE * t
    elif scenario in ("turn_left", "turn_right"):
        sign = 1.0 if scenario == "turn_left" else -1.0
        yaw = sign * TURN_YAW_RATE * t
        # integrate forward motion along the turning heading
        steps = np.arange(t)
        x = TURN_SPEED * np.sum(np.cos(sign * TURN_YAW_RATE * steps))
        y = TURN_SPEED * np.sum(np.sin(sign * TURN_YAW_RATE * steps))
    elif scenario == "ascend":
        z = BASE_HEIGHT + CLIMB_RATE * t
    elif scenario == "descend":
        z = max(BASE_HEIGHT - CLIMB_RATE * t, 10.0)
    elif scenario == "linear":
        x = LINEAR_SPEED * t
    elif scenario == "mixed":
        x = 0.5 * MIXED_ACCEL * t * t
        yaw = MIXED_YAW_RATE * t
    else:
        raise InvalidConfig(f"unknown scenario {scenario!r}")
    return CameraPose(np.array([x, y, z]), yaw=yaw, principal_point=pp)


@dataclass(frozen=True)
class GroundObject:
    track_id: int
    class_id: int
    center0: np.ndarray   # (2,) world meters at t = 0
    velocity: np.ndarray  # (2,) meters per frame
    size: tuple           # (length, width) meters
    heading: float        # fixed orientation, radians

    def corners_at(self, t: int) -> np.ndarray:
        c = self.center0 + self.velocity * t
        l, w = self.size
        ch, sh = np.cos(self.heading), np.sin(self.heading)
        R = np.array([[ch, -sh], [sh, ch]])
        local = np.array([[-l / 2, -w / 2], [l / 2, -w / 2], [l / 2, w / 2], [-l / 2, w / 2]])
        return c + local @ R.T


@dataclass(frozen=True)
class GtBox:
    track_id: int
    box: BBox
    class_id: int
    visibility: float = 1.0


@dataclass
class SequenceBundle:
    """A generated sequence with exact ground truth for every subsystem."""

    config: ScenarioConfig
    poses: list
    gt: dict                 # frame -> list[GtBox]
    detections: dict         # frame -> list[Detection]
    gt_homographies: dict    # (t, t+1) -> H mapping frame t+1 into frame t
    objects: list = field(default_factory=list)

    @property
    def frame_count(self) -> int:
        return self.config.frames

    def gt_homography(self, t_a: int, t_b: int) -> np.ndarray:
        """Exact H(t_a, t_b) from the camera poses (any pair)."""
        return plane_homography(self.poses[t_b - 1], self.poses[t_a - 1])

    def correspondences(self, frame_src: int, frame_dst: int) -> CorrespondenceSet:
        """Seeded ground-point matches between two frames (src points first)."""
        cfg = self.config
        pose_s = self.poses[frame_src - 1]
        pose_d = self.poses[frame_dst - 1]
        rng = np.random.default_rng([cfg.seed, 101, frame_src, frame_dst])
        w, h = cfg.frame_size
        # sample around the midpoint footprint, sized to the lower camera
        center = 0.5 * (pose_s.position[:2] + pose_d.position[:2])
        reach = 0.45 * min(pose_s.position[2], pose_d.position[2]) * min(w, h) / pose_s.focal
        src_pts = []
        dst_pts = []
        for _ in range(50):
            world = center + rng.uniform(-reach, reach, (4 * cfg.correspondence_count, 2))
            ps = pose_s.project_ground(world)
            pd = pose_d.project_ground(world)
            ok = (
                (ps[:, 0] >= 0) & (ps[:, 0] < w) & (ps[:, 1] >= 0) & (ps[:, 1] < h)
                & (pd[:, 0] >= 0) & (pd[:, 0] < w) & (pd[:, 1] >= 0) & (pd[:, 1] < h)
            )
            src_pts.append(ps[ok])
            dst_pts.append(pd[ok])
            if sum(len(p) for p in src_pts) >= cfg.correspondence_count:
                break
        src = np.concatenate(src_pts)[: cfg.correspondence_count]
        dst = np.concatenate(dst_pts)[: cfg.correspondence_count]
        if len(src) < 4:
            raise InvalidConfig(
                f"frames {frame_src} and {frame_dst} share too little ground"
            )
        if cfg.correspondence_outlier_rate > 0:
            outliers = rng.random(len(src)) < cfg.correspondence_outlier_rate
            dst = dst.copy()
            dst[outliers] = rng.uniform([0, 0], [w, h], (int(outliers.sum()), 2))
        return CorrespondenceSet(src, dst, frame_src=frame_src, frame_dst=frame_dst)


def _visible_box(quad: np.ndarray, frame_size) -> BBox | None:
    w, h = frame_size
    lo = quad.min(axis=0)
    hi = quad.max(axis=0)
    cx, cy = (lo + hi) / 2.0
    if not (0 <= cx < w and 0 <= cy < h):
        return None
    if hi[0] - lo[0] <= 0 or hi[1] - lo[1] <= 0:
        return None
    return BBox(lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1])


def generate_sequence(cfg: ScenarioConfig) -> SequenceBundle:
    """Deterministically generate ground truth, detections, embeddings."""
    cfg.validate()
    rng = np.random.default_rng([cfg.seed, 7])
    poses = [scenario_pose(cfg.scenario, t, cfg.frame_size) for t in range(cfg.frames)]

    objects = []
    for i in range(cfg.objects):
        center = rng.uniform(-15.0, 15.0, 2)
        velocity = rng.uniform(-0.25, 0.25, 2)
        if i == 0:
            # one guaranteed-static object at a known offset for hover/turn checks
            center = np.array([12.0, 9.0])
            velocity = np.zeros(2)
        objects.append(
            GroundObject(
                track_id=i + 1,
                class_id=1,
                center0=center,
                velocity=velocity,
                size=(4.0, 2.0),
                heading=rng.uniform(0, np.pi),
            )
        )
    latents = rng.standard_normal((cfg.objects, cfg.embedding_dim))
    latents /= np.linalg.norm(latents, axis=1, keepdims=True)

    gt: dict[int, list] = {}
    detections: dict[int, list] = {}
    w, h = cfg.frame_size
    for frame in range(1, cfg.frames + 1):
        pose = poses[frame - 1]
        frame_rng = np.random.default_rng([cfg.seed, 13, frame])
        gt_list = []
        det_list = []
        for obj, latent in zip(objects, latents):
            quad = pose.project_ground(obj.corners_at(frame - 1))
            box = _visible_box(quad, cfg.frame_size)
            if box is None:
                continue
            gt_list.append(GtBox(obj.track_id, box, obj.class_id))
            if frame_rng.random() < cfg.det_dropout:
                continue
            noisy_quad = quad + frame_rng.normal(0, cfg.det_noise_sigma, quad.shape)
            det_box = _visible_box(noisy_quad, cfg.frame_size)
            if det_box is None:
                continue
            view_scale = cfg.embedding_view_noise * (0.5 + abs(pose.yaw - poses[0].yaw))
            emb = latent + view_scale * frame_rng.standard_normal(cfg.embedding_dim)
            emb /= np.linalg.norm(emb)
            det_list.append(
                Detection(
                    frame=frame,
                    box=det_box,
                    confidence=float(frame_rng.uniform(0.8, 1.0)),
                    class_id=obj.class_id,
                    embedding=emb,
                )
            )
        for _ in range(frame_rng.poisson(cfg.false_positive_rate)):
            fw = frame_rng.uniform(20, 80)
            fh = frame_rng.uniform(20, 80)
            fp_box = BBox(frame_rng.uniform(0, w - fw), frame_rng.uniform(0, h - fh), fw, fh)
            fp_emb = frame_rng.standard_normal(cfg.embedding_dim)
            fp_emb /= np.linalg.norm(fp_emb)
            det_list.append(
                Detection(
                    frame=frame,
                    box=fp_box,
                    confidence=float(frame_rng.uniform(0.4, 0.7)),
                    class_id=1,
                    embedding=fp_emb,
                )
            )
        gt[frame] = gt_list
        detections[frame] = det_list

    gt_homographies = {
        (t, t + 1): plane_homography(poses[t], poses[t - 1])
        for t in range(1, cfg.frames)
    }
    return SequenceBundle(
        config=cfg,
        poses=poses,
        gt=gt,
        detections=detections,
        gt_homographies=gt_homographies,
        objects=objects,
    )


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "frame_size":
            out["frame_width"], out["frame_height"] = int(v[0]), int(v[1])
        else:
            out[f.name] = v
    return out
