"""CLEAR-MOT and identity-based tracking evaluation.

Inputs are per-frame dicts ``{frame: [(track_id, BBox, class_id)]}``. The
frame-level matcher prefers carrying over the previous assignment while its
IoU stays above threshold, then fills in with a minimum-cost assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import FrameMismatch
from .geometry import BBox, box_iou

MT_COVERAGE = 0.8
ML_COVERAGE = 0.2


@dataclass
class EvalReport:
    mota: float = 0.0
    motp: float = 0.0
    idf1: float = 0.0
    mt: int = 0
    ml: int = 0
    fp: int = 0
    fn: int = 0
    ids: int = 0
    fm: int = 0
    gt_count: int = 0
    pred_count: int = 0
    matches: int = 0
    iou_sum: float = 0.0
    per_sequence: dict = field(default_factory=dict)

    def as_lines(self):
        """Machine-readable key=value lines."""
        return [
            f"mota={self.mota:.4f}",
            f"motp={self.motp:.4f}",
            f"idf1={self.idf1:.4f}",
            f"mt={self.mt}",
            f"ml={self.ml}",
            f"fp={self.fp}",
            f"fn={self.fn}",
            f"ids={self.ids}",
            f"fm={self.fm}",
        ]

    def as_table(self):
        header = f"{'MOTA%':>8} {'MOTP%':>8} {'IDF1%':>8} {'MT':>5} {'ML':>5} {'FP':>7} {'FN':>7} {'IDs':>6} {'FM':>6}"
        row = (
            f"{self.mota:>8.1f} {self.motp:>8.1f} {self.idf1:>8.1f} "
            f"{self.mt:>5d} {self.ml:>5d} {self.fp:>7d} {self.fn:>7d} "
            f"{self.ids:>6d} {self.fm:>6d}"
        )
        return header + "\n" + row


def _check_frames(gt: dict, pred: dict):
    if gt and pred:
        extra = set(pred) - set(range(1, max(gt) + 1))
        if extra:
            raise FrameMismatch(
                f"predictions reference frames beyond ground truth: {sorted(extra)[:5]}"
            )


def _frame_match(gt_list, pred_list, prev_assign, iou_threshold):
    """Match one frame; returns list of (gt_id, pred_id, iou)."""
    gt_ids = [g[0] for g in gt_list]
    pred_ids = [p[0] for p in pred_list]
    gt_boxes = {g[0]: g[1] for g in gt_list}
    pred_boxes = {p[0]: p[1] for p in pred_list}

    matched = []
    used_gt, used_pred = set(), set()
    # CLEAR carry-over: keep last frame's pairing while still overlapping
    for gid in gt_ids:
        pid = prev_assign.get(gid)
        if pid is not None and pid in pred_boxes and pid not in used_pred:
            iou = box_iou(gt_boxes[gid], pred_boxes[pid])
            if iou >= iou_threshold:
                matched.append((gid, pid, iou))
                used_gt.add(gid)
                used_pred.add(pid)

    rem_gt = [g for g in gt_ids if g not in used_gt]
    rem_pred = [p for p in pred_ids if p not in used_pred]
    if rem_gt and rem_pred:
        cost = np.ones((len(rem_gt), len(rem_pred)))
        for i, gid in enumerate(rem_gt):
            for j, pid in enumerate(rem_pred):
                iou = box_iou(gt_boxes[gid], pred_boxes[pid])
                if iou >= iou_threshold:
                    cost[i, j] = 1.0 - iou
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            if cost[r, c] < 1.0 - 1e-12:
                matched.append((rem_gt[r], rem_pred[c], 1.0 - cost[r, c]))
    return matched


def _clear_single(gt: dict, pred: dict, iou_threshold: float) -> EvalReport:
    rep = EvalReport()
    frames = sorted(set(gt) | set(pred))
    prev_assign: dict = {}       # gt_id -> pred_id in the previous frame
    last_pred: dict = {}         # gt_id -> last pred_id ever matched
    last_status: dict = {}       # gt_id -> was matched at its last appearance
    gt_frames: dict = {}
    gt_matched_frames: dict = {}

    for frame in frames:
        gt_list = gt.get(frame, [])
        pred_list = pred.get(frame, [])
        matched = _frame_match(gt_list, pred_list, prev_assign, iou_threshold)
        matched_gt = {m[0] for m in matched}
        matched_pred = {m[1] for m in matched}

        rep.fp += len(pred_list) - len(matched_pred)
        rep.fn += len(gt_list) - len(matched_gt)
        rep.gt_count += len(gt_list)
        rep.pred_count += len(pred_list)
        for gid, pid, iou in matched:
            rep.matches += 1
            rep.iou_sum += iou
            if gid in last_pred and last_pred[gid] != pid:
                rep.ids += 1
            if gid in last_pred and last_status.get(gid) is False:
                # re-acquired after a gap while the track existed
                rep.fm += 1
            last_pred[gid] = pid
        prev_assign = {gid: pid for gid, pid, _ in matched}
        for g in gt_list:
            gid = g[0]
            gt_frames[gid] = gt_frames.get(gid, 0) + 1
            if gid in matched_gt:
                gt_matched_frames[gid] = gt_matched_frames.get(gid, 0) + 1
            last_status[gid] = gid in matched_gt

    for gid, total in gt_frames.items():
        coverage = gt_matched_frames.get(gid, 0) / total
        if coverage >= MT_COVERAGE:
            rep.mt += 1
        elif coverage <= ML_COVERAGE:
            rep.ml += 1
    _finalize(rep)
    return rep


def _finalize(rep: EvalReport):
    if rep.gt_count > 0:
        rep.mota = 100.0 * (1.0 - (rep.fp + rep.fn + rep.ids) / rep.gt_count)
    rep.motp = 100.0 * rep.iou_sum / rep.matches if rep.matches else 0.0


def _split_by_class(records: dict) -> dict:
    out: dict = {}
    for frame, items in records.items():
        for item in items:
            cls = item[2] if len(item) > 2 else -1
            out.setdefault(cls, {}).setdefault(frame, []).append(item)
    return out


def clear_mot(gt: dict, pred: dict, iou_threshold: float = 0.5) -> EvalReport:
    """CLEAR metrics; per-class evaluation micro-averaged when classes exist."""
    _check_frames(gt, pred)
    gt_by_cls = _split_by_class(gt)
    if len(gt_by_cls) <= 1:
        return _clear_single(gt, pred, iou_threshold)
    pred_by_cls = _split_by_class(pred)
    total = EvalReport()
    for cls, gt_c in sorted(gt_by_cls.items()):
        rep = _clear_single(gt_c, pred_by_cls.get(cls, {}), iou_threshold)
        for f in ("mt", "ml", "fp", "fn", "ids", "fm", "gt_count", "pred_count", "matches"):
            setattr(total, f, getattr(total, f) + getattr(rep, f))
        total.iou_sum += rep.iou_sum
    _finalize(total)
    return total


def idf1(gt: dict, pred: dict, iou_threshold: float = 0.5) -> float:
    """Identity F1 from a global trajectory-level bipartite matching."""
    _check_frames(gt, pred)
    overlaps: dict = {}
    gt_total = 0
    pred_total = 0
    frames = sorted(set(gt) | set(pred))
    for frame in frames:
        gt_list = gt.get(frame, [])
        pred_list = pred.get(frame, [])
        gt_total += len(gt_list)
        pred_total += len(pred_list)
        for gid, gbox, *_ in gt_list:
            for pid, pbox, *_ in pred_list:
                if box_iou(gbox, pbox) >= iou_threshold:
                    overlaps[(gid, pid)] = overlaps.get((gid, pid), 0) + 1
    if not overlaps or gt_total + pred_total == 0:
        return 0.0
    gt_ids = sorted({k[0] for k in overlaps})
    pred_ids = sorted({k[1] for k in overlaps})
    gain = np.zeros((len(gt_ids), len(pred_ids)))
    for (gid, pid), n in overlaps.items():
        gain[gt_ids.index(gid), pred_ids.index(pid)] = n
    rows, cols = linear_sum_assignment(-gain)
    idtp = gain[rows, cols].sum()
    return float(100.0 * 2.0 * idtp / (gt_total + pred_total))


def evaluate(gt: dict, pred: dict, iou_threshold: float = 0.5) -> EvalReport:
    """Full report: CLEAR fields plus IDF1."""
    rep = clear_mot(gt, pred, iou_threshold)
    rep.idf1 = idf1(gt, pred, iou_threshold)
    return rep


def merge_reports(reports: dict) -> EvalReport:
    """Micro-average per-sequence reports by summing count fields."""
    total = EvalReport(per_sequence=dict(reports))
    idtp_weighted = 0.0
    for rep in reports.values():
        for f in ("mt", "ml", "fp", "fn", "ids", "fm", "gt_count", "pred_count", "matches"):
            setattr(total, f, getattr(total, f) + getattr(rep, f))
        total.iou_sum += rep.iou_sum
        idtp_weighted += rep.idf1 * (rep.gt_count + rep.pred_count) / 2.0
    _finalize(total)
    denom = (total.gt_count + total.pred_count) / 2.0
    total.idf1 = idtp_weighted / denom if denom else 0.0
    return total
