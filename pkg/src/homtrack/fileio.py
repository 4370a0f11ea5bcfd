"""Text file formats: MOT records, embeddings, homography caches, configs.

All formats are plain text with decimal-point numerics; readers reject
NaN/infinite values and report line numbers on failure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fhe, simulator
from .association import Detection, TrackerConfig
from .errors import (
    DimensionMismatch,
    NonInvertibleEntry,
    NonPositiveBox,
    ParseError,
    UnknownKey,
)
from .geometry import DET_EPS, BBox, CorrespondenceSet, normalize_homography


@dataclass(frozen=True)
class MotRecord:
    frame: int
    track_id: int
    box: BBox
    conf: float = 1.0
    class_id: int = -1
    visibility: float = 1.0
    extra: tuple = ()

    def format(self) -> str:
        parts = [
            str(self.frame),
            str(self.track_id),
            _fmt(self.box.left),
            _fmt(self.box.top),
            _fmt(self.box.width),
            _fmt(self.box.height),
            _fmt(self.conf),
            str(self.class_id),
            _fmt(self.visibility),
        ]
        parts.extend(self.extra)
        return ",".join(parts)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _float(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ParseError(f"bad {what} {token!r}", line_no) from exc
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {token!r}", line_no)
    return value


def read_mot(path) -> dict:
    """Parse a MOT-style CSV into {frame: [MotRecord]}."""
    records: dict[int, list] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) < 6:
                raise ParseError(f"expected at least 6 fields, got {len(tokens)}", line_no)
            try:
                frame = int(tokens[0])
                track_id = int(tokens[1])
            except ValueError as exc:
                raise ParseError(f"bad integer field: {exc}", line_no) from exc
            if frame < 1:
                raise ParseError(f"frame index must be >= 1, got {frame}", line_no)
            l, t, w, h = (_float(tok, line_no, "box field") for tok in tokens[2:6])
            if w <= 0 or h <= 0:
                raise NonPositiveBox(f"box size {w} x {h}", line_no)
            conf = _float(tokens[6], line_no, "confidence") if len(tokens) > 6 else 1.0
            class_id = int(tokens[7]) if len(tokens) > 7 else -1
            vis = _float(tokens[8], line_no, "visibility") if len(tokens) > 8 else 1.0
            rec = MotRecord(frame, track_id, BBox(l, t, w, h), conf, class_id, vis,
                            extra=tuple(tokens[9:]))
            records.setdefault(frame, []).append(rec)
    return records


def write_mot(records, path):
    """Write records (iterable or {frame: [MotRecord]}) sorted by frame."""
    if isinstance(records, dict):
        flat = [r for frame in sorted(records) for r in records[frame]]
    else:
        flat = sorted(records, key=lambda r: (r.frame, r.track_id))
    with open(path, "w") as fh:
        for rec in flat:
            fh.write(rec.format() + "\n")


def mot_to_eval(records: dict) -> dict:
    """{frame: [(id, BBox, class_id)]} view for the metrics module."""
    return {
        frame: [(r.track_id, r.box, r.class_id) for r in recs]
        for frame, recs in records.items()
    }


def records_to_detections(records: dict, embeddings: dict | None = None) -> dict:
    """MOT records (+ optional sidecar embeddings) to per-frame Detections."""
    out: dict[int, list] = {}
    for frame, recs in records.items():
        dets = []
        for idx, rec in enumerate(recs):
            emb = None
            if embeddings is not None:
                emb = embeddings.get((frame, idx))
            dets.append(Detection(frame, rec.box, rec.conf, rec.class_id, emb))
        out[frame] = dets
    return out


def read_embeddings(path) -> dict:
    """Sidecar embeddings keyed by (frame, detection_index)."""
    out: dict = {}
    dim = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) < 3:
                raise ParseError("expected frame,index,v1,...", line_no)
            try:
                frame = int(tokens[0])
                det_index = int(tokens[1])
            except ValueError as exc:
                raise ParseError(f"bad integer field: {exc}", line_no) from exc
            vec = np.array([_float(t, line_no, "component") for t in tokens[2:]])
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise DimensionMismatch(
                    f"line {line_no}: dimension {len(vec)} != {dim}"
                )
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ParseError("zero embedding vector", line_no)
            if abs(norm - 1.0) > 1e-3:
                warnings.warn(f"{path}: renormalized embedding at line {line_no}")
            out[(frame, det_index)] = vec / norm
    return out


def write_embeddings(embeddings: dict, path):
    with open(path, "w") as fh:
        for (frame, det_index), vec in sorted(embeddings.items()):
            comps = ",".join(_fmt(v) for v in vec)
            fh.write(f"{frame},{det_index},{comps}\n")


def read_homography_cache(path) -> fhe.HomographyGraph:
    """Load `frame_a frame_b h1..h9` lines into a frozen query graph."""
    graph = fhe.HomographyGraph()
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 11:
                raise ParseError(f"expected 11 fields, got {len(tokens)}", line_no)
            try:
                a, b = int(tokens[0]), int(tokens[1])
            except ValueError as exc:
                raise ParseError(f"bad frame index: {exc}", line_no) from exc
            H = np.array([_float(t, line_no, "matrix entry") for t in tokens[2:]]).reshape(3, 3)
            if abs(np.linalg.det(H)) < DET_EPS:
                raise NonInvertibleEntry(f"entry ({a}, {b}) is singular", line_no)
            if a != b:
                graph.add_direct(a, b, H)
    return graph.freeze()


def write_homography_cache(graph: fhe.HomographyGraph, path, extra_pairs=()):
    """Write all direct entries plus any requested derived pairs."""
    with open(path, "w") as fh:
        for (a, b) in sorted(graph.direct):
            _write_cache_line(fh, a, b, graph.direct[(a, b)])
        for (a, b) in extra_pairs:
            if (a, b) not in graph.direct and a != b:
                _write_cache_line(fh, a, b, graph.homography_between(a, b))


def _write_cache_line(fh, a, b, H):
    H = normalize_homography(H)
    fh.write(f"{a} {b} " + " ".join(_fmt(v) for v in H.ravel()) + "\n")


def write_identity_cache(frame_count: int, path):
    """All-identity adjacent-frame cache (plain-IoU baseline)."""
    eye = np.eye(3)
    with open(path, "w") as fh:
        for t in range(1, frame_count):
            _write_cache_line(fh, t, t + 1, eye)


# ---------------------------------------------------------------------------
# flat `key = value` config files

_TRACKER_KEYS = {
    "iou_weight": float,
    "match_threshold": float,
    "min_confidence": float,
    "confirm_hits": int,
    "max_misses": int,
    "embedding_momentum": float,
    "use_vcil": lambda s: s.lower() in ("1", "true", "yes"),
    "hmf_mode": str,
}
_SCENARIO_KEYS = {
    "scenario": str,
    "frames": int,
    "objects": int,
    "frame_width": int,
    "frame_height": int,
    "det_noise_sigma": float,
    "det_dropout": float,
    "false_positive_rate": float,
    "correspondence_count": int,
    "correspondence_outlier_rate": float,
    "embedding_dim": int,
    "embedding_view_noise": float,
    "seed": int,
}
_EXTRA_KEYS = {"h": int, "mode": str}


def read_config(path):
    """Parse a flat config into (TrackerConfig, scenario overrides, extras).

    Unknown keys are hard errors; value errors name the offending key.
    """
    tracker = TrackerConfig()
    scenario: dict = {}
    extras: dict = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", line_no)
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key in _TRACKER_KEYS:
                setattr(tracker, key, _coerce(key, raw, _TRACKER_KEYS[key]))
            elif key in _SCENARIO_KEYS:
                scenario[key] = _coerce(key, raw, _SCENARIO_KEYS[key])
            elif key in _EXTRA_KEYS:
                extras[key] = _coerce(key, raw, _EXTRA_KEYS[key])
            else:
                raise UnknownKey(f"unknown config key {key!r} at line {line_no}")
    try:
        tracker.validate()
    except ValueError as exc:
        raise TypeError(str(exc)) from exc
    if "h" in extras and extras["h"] < 1:
        raise TypeError("h must be >= 1")
    return tracker, scenario, extras


def _coerce(key, raw, conv):
    try:
        value = conv(raw)
    except ValueError as exc:
        raise TypeError(f"bad value for {key!r}: {raw!r}") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise TypeError(f"non-finite value for {key!r}")
    return value


def scenario_config_from_dict(overrides: dict) -> simulator.ScenarioConfig:
    cfg = simulator.ScenarioConfig()
    width, height = cfg.frame_size
    for key, value in overrides.items():
        if key == "frame_width":
            width = value
        elif key == "frame_height":
            height = value
        else:
            setattr(cfg, key, value)
    cfg.frame_size = (width, height)
    return cfg.validate()


# ---------------------------------------------------------------------------
# simulator bundle directories

def write_bundle(bundle: simulator.SequenceBundle, out_dir, corr_window: int = 10):
    """Write gt.txt, det.txt, emb.txt, homog_gt.txt, corr/, scenario.cfg."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gt_records = {
        frame: [
            MotRecord(frame, g.track_id, g.box, 1.0, g.class_id, g.visibility)
            for g in lst
        ]
        for frame, lst in bundle.gt.items()
    }
    write_mot(gt_records, out / "gt.txt")

    det_records: dict = {}
    embeddings: dict = {}
    for frame, dets in bundle.detections.items():
        det_records[frame] = [
            MotRecord(frame, -1, d.box, d.confidence, d.class_id) for d in dets
        ]
        for idx, d in enumerate(dets):
            if d.embedding is not None:
                embeddings[(frame, idx)] = d.embedding
    write_mot(det_records, out / "det.txt")
    write_embeddings(embeddings, out / "emb.txt")

    with open(out / "homog_gt.txt", "w") as fh:
        for (a, b), H in sorted(bundle.gt_homographies.items()):
            _write_cache_line(fh, a, b, H)

    corr_dir = out / "corr"
    corr_dir.mkdir(exist_ok=True)
    T = bundle.frame_count
    for a in range(1, T + 1):
        for b in range(a + 1, min(a + corr_window, T) + 1):
            corr = bundle.correspondences(a, b)
            write_correspondences(corr, corr_dir / f"corr_{a:06d}_{b:06d}.txt")

    with open(out / "scenario.cfg", "w") as fh:
        for key, value in simulator.config_to_dict(bundle.config).items():
            fh.write(f"{key} = {value}\n")


def write_correspondences(corr: CorrespondenceSet, path):
    with open(path, "w") as fh:
        for (xs, ys), (xd, yd) in zip(corr.src, corr.dst):
            fh.write(f"{_fmt(xs)} {_fmt(ys)} {_fmt(xd)} {_fmt(yd)}\n")


def read_correspondences(path, frame_src=-1, frame_dst=-1) -> CorrespondenceSet:
    src, dst = [], []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 4:
                raise ParseError(f"expected 4 fields, got {len(tokens)}", line_no)
            vals = [_float(t, line_no, "coordinate") for t in tokens]
            src.append(vals[:2])
            dst.append(vals[2:])
    return CorrespondenceSet(np.array(src), np.array(dst), frame_src, frame_dst)


class CorrespondenceDir:
    """Provider reading per-pair files ``corr_AAAAAA_BBBBBB.txt`` on demand."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def __call__(self, frame_src: int, frame_dst: int) -> CorrespondenceSet:
        a, b = frame_src, frame_dst
        path = self.directory / f"corr_{a:06d}_{b:06d}.txt"
        if path.exists():
            return read_correspondences(path, a, b)
        swapped = self.directory / f"corr_{b:06d}_{a:06d}.txt"
        if swapped.exists():
            corr = read_correspondences(swapped, b, a)
            return CorrespondenceSet(corr.dst, corr.src, a, b)
        raise FileNotFoundError(f"no correspondence file for pair ({a}, {b})")
