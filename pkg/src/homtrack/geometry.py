"""Homogeneous-coordinate primitives.

Homographies are plain 3x3 numpy arrays, normalized so that H[2,2] = 1
whenever that entry is safely nonzero (Frobenius norm 1 otherwise).
Convex quads are (4, 2) float arrays in consistent winding order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DegenerateProjection,
    NoConsensus,
    PointAtInfinity,
    SingularMatrix,
    TooFewCorrespondences,
)

W_EPS = 1e-9
DET_EPS = 1e-12
SVD_TOL = 1e-10


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel coordinates, origin top-left."""

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"box must have positive size, got {self}")

    @property
    def right(self):
        return self.left + self.width

    @property
    def bottom(self):
        return self.top + self.height

    def corners(self) -> np.ndarray:
        """Counter-clockwise corner quad (in image coords with y down)."""
        return np.array(
            [
                [self.left, self.top],
                [self.right, self.top],
                [self.right, self.bottom],
                [self.left, self.bottom],
            ],
            dtype=float,
        )

    def area(self):
        return self.width * self.height

    def center(self):
        return np.array([self.left + self.width / 2.0, self.top + self.height / 2.0])

    def diagonal(self):
        return float(np.hypot(self.width, self.height))


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched keypoint pairs between two frames.

    ``src`` and ``dst`` are (N, 2) arrays; the homography estimated from the
    set maps src-frame coordinates into the dst frame.
    """

    src: np.ndarray
    dst: np.ndarray
    frame_src: int = -1
    frame_dst: int = -1

    def __post_init__(self):
        src = np.asarray(self.src, dtype=float)
        dst = np.asarray(self.dst, dtype=float)
        if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
            raise ValueError("correspondences must be matching (N, 2) arrays")
        if not (np.isfinite(src).all() and np.isfinite(dst).all()):
            raise ValueError("correspondence points must be finite")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)

    def __len__(self):
        return self.src.shape[0]


def normalize_homography(H: np.ndarray) -> np.ndarray:
    """Scale so H[2,2] = 1 when safely nonzero, else unit Frobenius norm."""
    H = np.asarray(H, dtype=float)
    if abs(H[2, 2]) > W_EPS:
        return H / H[2, 2]
    return H / np.linalg.norm(H)


def _hartley_transform(points: np.ndarray) -> np.ndarray:
    """Similarity that moves the centroid to the origin, mean distance sqrt(2)."""
    centroid = points.mean(axis=0)
    dist = np.linalg.norm(points - centroid, axis=1).mean()
    scale = np.sqrt(2.0) / dist if dist > 0 else 1.0
    return np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )


def estimate_homography_dlt(corr: CorrespondenceSet) -> np.ndarray:
    """Least-squares homography from >= 4 correspondences (src -> dst).

    Points are normalized (centroid at origin, mean distance sqrt(2)) before
    building the stacked 2n x 9 design matrix, whose smallest right singular
    vector is the solution; the normalization is undone afterward.
    """
    n = len(corr)
    if n < 4:
        raise TooFewCorrespondences(f"need at least 4 pairs, got {n}")
    uniq = np.unique(corr.src, axis=0)
    if uniq.shape[0] < 4:
        raise DegenerateConfiguration("fewer than 4 distinct source points")

    t_src = _hartley_transform(corr.src)
    t_dst = _hartley_transform(corr.dst)
    src = corr.src @ t_src[:2, :2].T + t_src[:2, 2]
    dst = corr.dst @ t_dst[:2, :2].T + t_dst[:2, 2]

    x, y = src[:, 0], src[:, 1]
    u, v = dst[:, 0], dst[:, 1]
    zero = np.zeros(n)
    one = np.ones(n)
    rows_x = np.stack([-x, -y, -one, zero, zero, zero, u * x, u * y, u], axis=1)
    rows_y = np.stack([zero, zero, zero, -x, -y, -one, v * x, v * y, v], axis=1)
    A = np.empty((2 * n, 9))
    A[0::2] = rows_x
    A[1::2] = rows_y

    _, s, vt = np.linalg.svd(A)
    if n > 4 and s[-2] < SVD_TOL:
        raise DegenerateConfiguration("design matrix has a rank-deficient null space")
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(t_dst) @ Hn @ t_src
    if abs(np.linalg.det(H)) < DET_EPS:
        raise DegenerateConfiguration("estimated homography is singular")
    return normalize_homography(H)


def symmetric_transfer_error(H: np.ndarray, corr: CorrespondenceSet) -> np.ndarray:
    """Per-pair average of forward and backward reprojection distances."""
    Hinv = invert(H)
    fwd = project_points(H, corr.src) - corr.dst
    bwd = project_points(Hinv, corr.dst) - corr.src
    return 0.5 * (np.linalg.norm(fwd, axis=1) + np.linalg.norm(bwd, axis=1))


def estimate_homography_ransac(
    corr: CorrespondenceSet,
    threshold: float = 2.0,
    max_iters: int = 200,
    seed: int = 0,
):
    """RANSAC homography; returns (H, inlier_mask). Deterministic per seed."""
    n = len(corr)
    if n < 4:
        raise TooFewCorrespondences(f"need at least 4 pairs, got {n}")
    if threshold <= 0:
        raise ValueError("threshold must be positive")

    rng = np.random.default_rng(seed)
    best_mask = None
    best_count = 0
    for _ in range(max_iters):
        idx = rng.choice(n, size=4, replace=False)
        sample = CorrespondenceSet(corr.src[idx], corr.dst[idx])
        try:
            H = estimate_homography_dlt(sample)
        except DegenerateConfiguration:
            continue
        err = symmetric_transfer_error(H, corr)
        mask = err < threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
            if count == n:
                break
    if best_mask is None or best_count < 4:
        raise NoConsensus(f"best inlier set has {best_count} pairs")
    inliers = CorrespondenceSet(corr.src[best_mask], corr.dst[best_mask])
    H = estimate_homography_dlt(inliers)
    # one re-scoring pass so the reported mask matches the refit matrix
    final_mask = symmetric_transfer_error(H, corr) < threshold
    if final_mask.sum() < 4:
        final_mask = best_mask
    return H, final_mask


def project_point(H: np.ndarray, p) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    w = H[2, 0] * x + H[2, 1] * y + H[2, 2]
    if abs(w) < W_EPS:
        raise PointAtInfinity(f"projected w = {w:.3e}")
    u = (H[0, 0] * x + H[0, 1] * y + H[0, 2]) / w
    v = (H[1, 0] * x + H[1, 1] * y + H[1, 2]) / w
    return np.array([u, v])


def project_points(H: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Vectorized projection of an (N, 2) array."""
    pts = np.asarray(pts, dtype=float)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ H.T
    w = hom[:, 2]
    if np.any(np.abs(w) < W_EPS):
        raise PointAtInfinity("a projected point is at infinity")
    return hom[:, :2] / w[:, None]


def compose(H_ba: np.ndarray, H_cb: np.ndarray) -> np.ndarray:
    """Product such that applying the result equals applying H_cb then H_ba."""
    for H in (H_ba, H_cb):
        if abs(np.linalg.det(H)) < DET_EPS:
            raise SingularMatrix("operand is singular")
    return normalize_homography(H_ba @ H_cb)


def invert(H: np.ndarray) -> np.ndarray:
    if abs(np.linalg.det(H)) < DET_EPS:
        raise SingularMatrix("homography is singular")
    return normalize_homography(np.linalg.inv(H))


def quad_area(quad: np.ndarray) -> float:
    """Shoelace area (absolute)."""
    x = quad[:, 0]
    y = quad[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def is_convex(poly: np.ndarray) -> bool:
    """Strictly convex under either winding (no repeated/collinear corners)."""
    n = len(poly)
    cross = np.empty(n)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        c = poly[(i + 2) % n]
        cross[i] = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
    return bool(np.all(cross > 0) or np.all(cross < 0))


def project_box(H: np.ndarray, box: BBox, mode: str = "polygon"):
    """Project a box's corners; return the quad or its axis-aligned hull."""
    try:
        quad = project_points(H, box.corners())
    except PointAtInfinity as exc:
        raise DegenerateProjection(str(exc)) from exc
    if not np.isfinite(quad).all():
        raise DegenerateProjection("projected corner is not finite")
    if not is_convex(quad):
        raise DegenerateProjection("projected quad is not convex")
    if mode == "polygon":
        return quad
    if mode == "aabb":
        lo = quad.min(axis=0)
        hi = quad.max(axis=0)
        return BBox(lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1])
    raise ValueError(f"unknown projection mode {mode!r}")


def _clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of `subject` against convex `clip` (CCW)."""
    output = [tuple(p) for p in subject]
    cp1 = tuple(clip[-1])
    for cp2 in (tuple(p) for p in clip):
        if not output:
            break
        dx = cp2[0] - cp1[0]
        dy = cp2[1] - cp1[1]
        inputs = output
        output = []
        s = inputs[-1]
        s_in = dx * (s[1] - cp1[1]) - dy * (s[0] - cp1[0]) >= 0
        for e in inputs:
            e_in = dx * (e[1] - cp1[1]) - dy * (e[0] - cp1[0]) >= 0
            if e_in != s_in:
                # segment crosses the clip edge
                ex, ey = e[0] - s[0], e[1] - s[1]
                denom = dx * ey - dy * ex
                if denom != 0:
                    t = (dx * (cp1[1] - s[1]) - dy * (cp1[0] - s[0])) / denom
                    output.append((s[0] + t * ex, s[1] + t * ey))
            if e_in:
                output.append(e)
            s, s_in = e, e_in
        cp1 = cp2
    return np.array(output) if output else np.empty((0, 2))


def _as_ccw(quad: np.ndarray) -> np.ndarray:
    """Force counter-clockwise winding in the (x right, y down) sense."""
    x = quad[:, 0]
    y = quad[:, 1]
    signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return quad if signed >= 0 else quad[::-1]


def polygon_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Exact IoU of two convex polygons via clipping + shoelace areas."""
    a = _as_ccw(np.asarray(a, dtype=float))
    b = _as_ccw(np.asarray(b, dtype=float))
    inter_poly = _clip_polygon(a, b)
    if len(inter_poly) < 3:
        return 0.0
    inter = quad_area(inter_poly)
    union = quad_area(a) + quad_area(b) - inter
    if union <= 0:
        return 0.0
    return float(min(max(inter / union, 0.0), 1.0))


def box_iou(a: BBox, b: BBox) -> float:
    """Plain axis-aligned IoU."""
    w = min(a.right, b.right) - max(a.left, b.left)
    h = min(a.bottom, b.bottom) - max(a.top, b.top)
    if w <= 0 or h <= 0:
        return 0.0
    inter = w * h
    return inter / (a.area() + b.area() - inter)
