"""Fast homography estimation over a video sequence.

Homographies are estimated directly only between sampled keyframes; every
other frame's transform is derived from its interval's keyframe matrix and
per-axis displacement ratios, then arbitrary frame pairs are answered by
chaining cached matrices.

Conventions: frames are 1-based; a stored or returned matrix ``H(a, b)``
maps points of frame ``b`` into frame ``a``.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import (
    DegenerateAlpha,
    FrameOutOfRange,
    InvalidInterval,
    ZeroKeyframeDisplacement,
)
from .geometry import CorrespondenceSet

ALPHA_EPS = 1e-6
DISP_EPS = 1e-9


@dataclass(frozen=True)
class KeyframeSchedule:
    """Uniformly sampled keyframes 1, 1+h, 1+2h, ... plus the last frame."""

    frame_count: int
    interval: int
    keyframes: tuple

    def interval_of(self, t: int):
        """The keyframe pair (k1, k2) bounding frame t, k1 <= t <= k2."""
        if not 1 <= t <= self.frame_count:
            raise FrameOutOfRange(f"frame {t} outside [1, {self.frame_count}]")
        ks = self.keyframes
        for i in range(len(ks) - 1):
            if ks[i] <= t <= ks[i + 1]:
                return ks[i], ks[i + 1]
        return ks[-1], ks[-1]


def keyframe_schedule(frame_count: int, interval: int) -> KeyframeSchedule:
    if interval < 1:
        raise InvalidInterval(f"sampling interval must be >= 1, got {interval}")
    if frame_count < 2:
        raise ValueError(f"need at least 2 frames, got {frame_count}")
    keys = list(range(1, frame_count + 1, interval))
    if keys[-1] != frame_count:
        keys.append(frame_count)
    return KeyframeSchedule(frame_count, interval, tuple(keys))


def compute_alpha(corr_t_k1: CorrespondenceSet, corr_k2_k1: CorrespondenceSet):
    """Per-axis ratio of mean keypoint displacement (t vs k1) / (k2 vs k1).

    Both sets carry k1-frame points as src. Displacements are absolute
    per coordinate; returns (alpha1, alpha2) for x and y.
    """
    if len(corr_t_k1) == 0 or len(corr_k2_k1) == 0:
        raise ValueError("correspondence sets must be non-empty")
    num = np.abs(corr_t_k1.dst - corr_t_k1.src).mean(axis=0)
    den = np.abs(corr_k2_k1.dst - corr_k2_k1.src).mean(axis=0)
    valid = den > DISP_EPS
    if not valid.any():
        raise ZeroKeyframeDisplacement("keyframe pair shows no displacement")
    ratios = np.divide(num, den, out=np.zeros(2), where=valid)
    if not valid.all():
        # axis-aligned motion: reuse the informative axis's ratio
        ratios[~valid] = ratios[valid][0]
    return float(ratios[0]), float(ratios[1])


def derive_within_interval(H_k2_k1: np.ndarray, alpha, mode: str = "lerp") -> np.ndarray:
    """Derive H(t, k1) inside an interval from H(k2, k1) and the alpha pair.

    ``paper_literal`` scales the first two rows by alpha1/alpha2 (the
    row-scaling reading of the displacement-ratio derivation); ``lerp``
    blends toward the identity so that alpha 0 gives I and alpha 1 gives
    H(k2, k1) exactly.
    """
    a1, a2 = alpha
    H = geometry.normalize_homography(H_k2_k1)
    if mode == "paper_literal":
        if a1 < ALPHA_EPS or a2 < ALPHA_EPS:
            raise DegenerateAlpha(f"alpha too small for literal mode: {alpha}")
        scaled = np.diag([a1, a2, 1.0]) @ H
        return geometry.normalize_homography(scaled)
    if mode == "lerp":
        a = 0.5 * (a1 + a2)
        blended = (1.0 - a) * np.eye(3) + a * H
        return geometry.normalize_homography(blended)
    raise ValueError(f"unknown derivation mode {mode!r}")


@dataclass
class HomographyGraph:
    """Pairwise homography oracle over a sequence.

    ``direct`` holds estimated or derived anchor matrices keyed by
    (frame_a, frame_b); any other pair is answered by chaining along the
    shortest path of direct edges and cached. After :meth:`freeze`,
    queries are thread-safe and construction helpers refuse to mutate.
    """

    direct: dict = field(default_factory=dict)
    schedule: KeyframeSchedule | None = None
    mode: str = "lerp"
    _cache: dict = field(default_factory=dict)
    _adj: dict = field(default_factory=dict)
    _frozen: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add_direct(self, frame_a: int, frame_b: int, H: np.ndarray):
        if self._frozen:
            raise RuntimeError("graph is frozen")
        if abs(np.linalg.det(H)) < geometry.DET_EPS:
            raise geometry.SingularMatrix(f"entry ({frame_a}, {frame_b}) is singular")
        self.direct[(frame_a, frame_b)] = geometry.normalize_homography(H)
        self._adj.setdefault(frame_a, set()).add(frame_b)
        self._adj.setdefault(frame_b, set()).add(frame_a)

    def freeze(self):
        self._frozen = True
        return self

    @property
    def frames(self):
        return sorted(self._adj)

    def _edge(self, a: int, b: int) -> np.ndarray:
        """Matrix mapping frame b into frame a along a direct edge."""
        H = self.direct.get((a, b))
        if H is not None:
            return H
        return geometry.invert(self.direct[(b, a)])

    def _path(self, src: int, dst: int):
        """Shortest chain of frames from src to dst over direct edges."""
        prev = {src: None}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            if cur == dst:
                path = [cur]
                while prev[cur] is not None:
                    cur = prev[cur]
                    path.append(cur)
                return path[::-1]
            for nxt in self._adj.get(cur, ()):
                if nxt not in prev:
                    prev[nxt] = cur
                    queue.append(nxt)
        return None

    def homography_between(self, t_a: int, t_b: int) -> np.ndarray:
        """H(t_a, t_b): maps frame t_b coordinates into frame t_a."""
        if self.schedule is not None:
            T = self.schedule.frame_count
            if not (1 <= t_a <= T and 1 <= t_b <= T):
                raise FrameOutOfRange(f"pair ({t_a}, {t_b}) outside [1, {T}]")
        if t_a == t_b:
            return np.eye(3)
        key = (t_a, t_b)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        H = self.direct.get(key)
        if H is None:
            path = self._path(t_b, t_a)
            if path is None:
                raise FrameOutOfRange(f"no homography chain between {t_a} and {t_b}")
            H = np.eye(3)
            for i in range(len(path) - 1):
                H = self._edge(path[i + 1], path[i]) @ H
            H = geometry.normalize_homography(H)
        with self._lock:
            self._cache[key] = H
        return H


def build_graph(
    frame_count: int,
    interval: int,
    provider,
    mode: str = "lerp",
    ransac_threshold: float = 2.0,
    ransac_iters: int = 100,
    seed: int = 0,
    use_ransac: bool = True,
) -> HomographyGraph:
    """Estimate keyframe homographies and derive all in-interval anchors.

    ``provider(frame_src, frame_dst)`` must return a CorrespondenceSet whose
    src points live in ``frame_src``. Non-keyframes get an anchor matrix
    H(t, k1) derived from their interval's keyframe matrix; afterwards any
    pair query needs only matrix products.
    """
    schedule = keyframe_schedule(frame_count, interval)
    graph = HomographyGraph(schedule=schedule, mode=mode)
    keys = schedule.keyframes
    for k1, k2 in zip(keys, keys[1:]):
        corr = provider(k1, k2)
        if use_ransac:
            H_k2_k1, _ = geometry.estimate_homography_ransac(
                corr, threshold=ransac_threshold, max_iters=ransac_iters, seed=seed
            )
        else:
            H_k2_k1 = geometry.estimate_homography_dlt(corr)
        graph.add_direct(k2, k1, H_k2_k1)
        for t in range(k1 + 1, k2):
            try:
                alpha = compute_alpha(provider(k1, t), corr)
                H_t_k1 = derive_within_interval(H_k2_k1, alpha, mode)
            except ZeroKeyframeDisplacement:
                # static camera within the interval: fall back to identity
                H_t_k1 = np.eye(3)
            graph.add_direct(t, k1, H_t_k1)
    return graph.freeze()
