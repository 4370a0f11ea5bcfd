"""Frame-to-frame association and track lifecycle.

The association cost projects boxes across frames through the inter-frame
homography before IoU (both directions, averaged), optionally fused with
embedding similarity, and is solved by a minimum-cost assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import geometry
from .errors import NonMonotonicFrame, ShapeMismatch
from .geometry import BBox

GATE_COST = 1.0 + 1e-6  # above any admissible threshold

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
LOST = "lost"
REMOVED = "removed"


@dataclass(frozen=True)
class Detection:
    frame: int
    box: BBox
    confidence: float = 1.0
    class_id: int = -1
    embedding: np.ndarray | None = None


@dataclass
class Track:
    track_id: int
    class_id: int
    state: str
    last_box: BBox
    last_frame: int
    embedding: np.ndarray | None = None
    hits: int = 1
    age: int = 0
    misses: int = 0
    history: list = field(default_factory=list)


@dataclass
class TrackerConfig:
    iou_weight: float = 0.5
    match_threshold: float = 0.8
    min_confidence: float = 0.3
    confirm_hits: int = 2
    max_misses: int = 30
    embedding_momentum: float = 0.9
    use_vcil: bool = False
    hmf_mode: str = "polygon"

    def validate(self):
        if not 0.0 <= self.iou_weight <= 1.0:
            raise ValueError(f"iou_weight must be in [0, 1], got {self.iou_weight}")
        if not 0.0 <= self.embedding_momentum <= 1.0:
            raise ValueError("embedding_momentum must be in [0, 1]")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must be in [0, 1]")
        if self.confirm_hits < 1 or self.max_misses < 0:
            raise ValueError("confirm_hits >= 1 and max_misses >= 0 required")
        if self.hmf_mode not in ("polygon", "aabb"):
            raise ValueError(f"unknown hmf_mode {self.hmf_mode!r}")
        return self


def hmf_pair(box_a: BBox, box_b: BBox, H_ab: np.ndarray, mode: str = "polygon") -> float:
    """Cross-projected IoU of one box pair, averaged over both directions.

    ``H_ab`` maps frame-b coordinates into frame a (box_a's frame).
    """
    H_ba = geometry.invert(H_ab)
    if mode == "polygon":
        ab = geometry.polygon_iou(geometry.project_box(H_ba, box_a), box_b.corners())
        ba = geometry.polygon_iou(geometry.project_box(H_ab, box_b), box_a.corners())
    else:
        ab = geometry.box_iou(geometry.project_box(H_ba, box_a, "aabb"), box_b)
        ba = geometry.box_iou(geometry.project_box(H_ab, box_b, "aabb"), box_a)
    return 0.5 * (ab + ba)


def hmf_cost(boxes_a, boxes_b, H_ab: np.ndarray, mode: str = "polygon") -> np.ndarray:
    """Cost matrix 1 - HMF over two box lists; degenerate entries cost 1."""
    cost = np.ones((len(boxes_a), len(boxes_b)))
    for i, ba in enumerate(boxes_a):
        for j, bb in enumerate(boxes_b):
            try:
                cost[i, j] = 1.0 - hmf_pair(ba, bb, H_ab, mode)
            except geometry.DegenerateProjection:
                cost[i, j] = 1.0
    return cost


def id_similarity_cost(tracks_emb, dets_emb) -> np.ndarray:
    """(1 - cosine)/2 per pair; missing embeddings rate 0.5 (uninformative)."""
    cost = np.full((len(tracks_emb), len(dets_emb)), 0.5)
    for i, te in enumerate(tracks_emb):
        if te is None:
            continue
        for j, de in enumerate(dets_emb):
            if de is None:
                continue
            cos = float(np.dot(te, de))
            cost[i, j] = min(max((1.0 - cos) / 2.0, 0.0), 1.0)
    return cost


def fuse_costs(
    iou_cost: np.ndarray,
    id_cost: np.ndarray,
    iou_weight: float,
    gate_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Convex combination, with gated entries forced above all thresholds."""
    iou_cost = np.asarray(iou_cost, dtype=float)
    id_cost = np.asarray(id_cost, dtype=float)
    if iou_cost.shape != id_cost.shape:
        raise ShapeMismatch(f"{iou_cost.shape} vs {id_cost.shape}")
    fused = iou_weight * iou_cost + (1.0 - iou_weight) * id_cost
    if gate_mask is not None:
        fused = np.where(gate_mask, GATE_COST, fused)
    return fused


def hungarian(cost: np.ndarray, threshold: float):
    """Minimum-cost assignment; pairs at or above threshold are dropped.

    Returns (matches, unmatched_rows, unmatched_cols) with matches a list of
    (row, col). Rectangular matrices are padded with threshold-cost dummies.
    """
    cost = np.asarray(cost, dtype=float)
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return [], list(range(n_rows)), list(range(n_cols))
    n = max(n_rows, n_cols)
    padded = np.full((n, n), threshold)
    # clamp at the threshold so pairs destined to be dropped are
    # interchangeable with dummies; otherwise an expensive real pair can
    # distort the assignment of the pairs that survive
    padded[:n_rows, :n_cols] = np.minimum(cost, threshold)
    rows, cols = linear_sum_assignment(padded)
    matches = [
        (int(r), int(c))
        for r, c in zip(rows, cols)
        if r < n_rows and c < n_cols and cost[r, c] < threshold
    ]
    matched_r = {r for r, _ in matches}
    matched_c = {c for _, c in matches}
    unmatched_rows = [r for r in range(n_rows) if r not in matched_r]
    unmatched_cols = [c for c in range(n_cols) if c not in matched_c]
    return matches, unmatched_rows, unmatched_cols


class TrackerState:
    """Single-sequence tracker state, mutated one frame at a time."""

    def __init__(self):
        self.frame = 0
        self.tracks: list[Track] = []
        self.next_id = 1
        # H mapping each remembered past frame's coords into self.frame
        self._to_cur: dict[int, np.ndarray] = {}

    def live_tracks(self):
        return [t for t in self.tracks if t.state in (TENTATIVE, CONFIRMED, LOST)]

    def confirmed_tracks(self):
        return [t for t in self.tracks if t.state == CONFIRMED]

    def homography_to_current(self, frame: int) -> np.ndarray:
        if frame == self.frame:
            return np.eye(3)
        return self._to_cur[frame]

    def advance(self, new_frame: int, H_prev_cur: np.ndarray):
        """Shift the cached per-frame homographies onto the new frame."""
        if self.frame > 0:
            self._to_cur = {
                f: geometry.normalize_homography(H_prev_cur @ H)
                for f, H in self._to_cur.items()
            }
            self._to_cur[self.frame] = geometry.normalize_homography(H_prev_cur)
        self.frame = new_frame
        needed = {t.last_frame for t in self.live_tracks()}
        self._to_cur = {f: H for f, H in self._to_cur.items() if f in needed}


def tracker_step(
    state: TrackerState,
    detections: list[Detection],
    H_prev_cur: np.ndarray,
    cfg: TrackerConfig,
) -> tuple[TrackerState, list[Track]]:
    """Process one frame: associate, update lifecycles, spawn new tracks.

    ``H_prev_cur`` maps the previously processed frame's coordinates into
    the current frame. Returns the state and the confirmed tracks matched
    in this frame.
    """
    if detections:
        frames = {d.frame for d in detections}
        if len(frames) != 1:
            raise NonMonotonicFrame("detections span multiple frames")
        frame = frames.pop()
    else:
        frame = state.frame + 1
    if frame <= state.frame:
        raise NonMonotonicFrame(f"frame {frame} does not advance past {state.frame}")

    state.advance(frame, H_prev_cur)
    dets = [d for d in detections if d.confidence >= cfg.min_confidence]
    tracks = state.live_tracks()

    iou_cost = np.ones((len(tracks), len(dets)))
    gate = np.zeros_like(iou_cost, dtype=bool)
    det_boxes = [d.box for d in dets]
    for i, trk in enumerate(tracks):
        H_cur_last = state.homography_to_current(trk.last_frame)
        H_last_cur = geometry.invert(H_cur_last)
        if det_boxes:
            iou_cost[i, :] = hmf_cost([trk.last_box], det_boxes, H_last_cur, cfg.hmf_mode)[0]
            try:
                proj_center = geometry.project_point(H_cur_last, trk.last_box.center())
            except geometry.PointAtInfinity:
                proj_center = None
            for j, det in enumerate(dets):
                if trk.class_id != det.class_id and trk.class_id != -1 and det.class_id != -1:
                    gate[i, j] = True
                elif iou_cost[i, j] >= 1.0 - 1e-12:
                    # no projected overlap: allow appearance rescue only nearby
                    reach = 2.0 * max(trk.last_box.diagonal(), det.box.diagonal())
                    if proj_center is None or np.linalg.norm(proj_center - det.box.center()) > reach:
                        gate[i, j] = True

    id_cost = id_similarity_cost([t.embedding for t in tracks], [d.embedding for d in dets])
    fused = fuse_costs(iou_cost, id_cost, cfg.iou_weight, gate)
    matches, unmatched_tracks, unmatched_dets = hungarian(fused, cfg.match_threshold)

    emitted = []
    for ti, dj in matches:
        trk, det = tracks[ti], dets[dj]
        trk.last_box = det.box
        trk.last_frame = frame
        trk.misses = 0
        trk.hits += 1
        trk.history.append((frame, det.box))
        if det.embedding is not None:
            if trk.embedding is None:
                trk.embedding = np.array(det.embedding, dtype=float)
            else:
                m = cfg.embedding_momentum
                mixed = m * trk.embedding + (1.0 - m) * det.embedding
                trk.embedding = mixed / np.linalg.norm(mixed)
        if trk.state == TENTATIVE and trk.hits >= cfg.confirm_hits:
            trk.state = CONFIRMED
        elif trk.state == LOST:
            trk.state = CONFIRMED
        if trk.state == CONFIRMED:
            emitted.append(trk)

    for ti in unmatched_tracks:
        trk = tracks[ti]
        trk.misses += 1
        if trk.state == TENTATIVE:
            # confirmation requires consecutive matches
            trk.state = REMOVED
        elif trk.state == CONFIRMED:
            trk.state = LOST
        if trk.state == LOST and trk.misses > cfg.max_misses:
            trk.state = REMOVED

    for dj in unmatched_dets:
        det = dets[dj]
        trk = Track(
            track_id=state.next_id,
            class_id=det.class_id,
            state=CONFIRMED if cfg.confirm_hits <= 1 else TENTATIVE,
            last_box=det.box,
            last_frame=frame,
            embedding=None if det.embedding is None else np.array(det.embedding, dtype=float),
            history=[(frame, det.box)],
        )
        state.next_id += 1
        state.tracks.append(trk)
        if trk.state == CONFIRMED:
            emitted.append(trk)

    for trk in state.tracks:
        if trk.state != REMOVED:
            trk.age += 1

    return state, emitted


def run_sequence(
    detections_by_frame: dict[int, list[Detection]],
    frame_count: int,
    graph,
    cfg: TrackerConfig,
    vcil_updater=None,
) -> list[Track]:
    """Track frames 1..frame_count and return every track that confirmed.

    ``graph`` answers ``homography_between(a, b)`` (frame b coords -> frame
    a). When a VCIL updater is given, detection embeddings are replaced by
    their view-corrected versions before association.
    """
    cfg.validate()
    state = TrackerState()
    prev_emb = None
    for frame in range(1, frame_count + 1):
        dets = list(detections_by_frame.get(frame, []))
        H_prev_cur = (
            np.eye(3) if frame == 1 else graph.homography_between(frame, frame - 1)
        )
        if vcil_updater is not None and dets:
            emb = np.array([d.embedding for d in dets if d.embedding is not None])
            if prev_emb is not None and len(emb) == len(dets) and len(emb) > 0:
                H_prev_cur_inv = geometry.invert(H_prev_cur)
                updated = vcil_updater.update(prev_emb, emb, H_prev_cur_inv)
                dets = [
                    Detection(d.frame, d.box, d.confidence, d.class_id, updated[i])
                    for i, d in enumerate(dets)
                ]
            prev_emb = emb if len(emb) > 0 else prev_emb
        state, _ = tracker_step(state, dets, H_prev_cur, cfg)
    return [t for t in state.tracks if t.hits >= cfg.confirm_hits]
