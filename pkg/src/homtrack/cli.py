"""Command-line entry point.

Subcommands: simulate, homog (estimate | derive), track, eval, ablate-h.
Exit codes: 0 success, 1 usage error, 2 data/processing error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import fhe, fileio, metrics, plotting, simulator
from .association import TrackerConfig, run_sequence
from .errors import HomtrackError
from .vcil import VcilUpdater

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="homtrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic sequence bundle")
    p_sim.add_argument("--scenario", required=True, choices=simulator.SCENARIOS)
    p_sim.add_argument("--frames", type=int, default=60)
    p_sim.add_argument("--objects", type=int, default=8)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--det-noise-sigma", type=float, default=0.0)
    p_sim.add_argument("--det-dropout", type=float, default=0.0)
    p_sim.add_argument("--false-positive-rate", type=float, default=0.0)
    p_sim.add_argument("--corr-count", type=int, default=200)
    p_sim.add_argument("--corr-outlier-rate", type=float, default=0.0)
    p_sim.add_argument("--emb-dim", type=int, default=64)
    p_sim.add_argument("--emb-view-noise", type=float, default=0.1)
    p_sim.add_argument("--corr-window", type=int, default=10,
                       help="write correspondence files for pairs up to this frame gap")

    p_hom = sub.add_parser("homog", help="estimate or query homography caches")
    hom_sub = p_hom.add_subparsers(dest="homog_command", required=True)
    p_est = hom_sub.add_parser("estimate", help="build a cache from correspondence files")
    p_est.add_argument("--corr", required=True, help="directory of corr_A_B.txt files")
    p_est.add_argument("--h", type=int, default=10, help="keyframe sampling interval")
    p_est.add_argument("--mode", choices=("lerp", "paper_literal"), default="lerp")
    p_est.add_argument("--frames", type=int, default=0,
                       help="frame count (default: inferred from file names)")
    p_est.add_argument("--ransac-threshold", type=float, default=2.0)
    p_est.add_argument("--ransac-iters", type=int, default=100)
    p_est.add_argument("--seed", type=int, default=0)
    p_est.add_argument("--out", required=True)
    p_der = hom_sub.add_parser("derive", help="print the matrix for one frame pair")
    p_der.add_argument("--cache", required=True)
    p_der.add_argument("--pair", type=int, nargs=2, required=True, metavar=("A", "B"))

    p_trk = sub.add_parser("track", help="run the tracker over a detection file")
    p_trk.add_argument("--det", required=True)
    p_trk.add_argument("--emb", default=None)
    p_trk.add_argument("--homog", default=None, help="precomputed homography cache")
    p_trk.add_argument("--corr", default=None, help="correspondence dir (estimate on the fly)")
    p_trk.add_argument("--h", type=int, default=10)
    p_trk.add_argument("--mode", choices=("lerp", "paper_literal"), default="lerp")
    p_trk.add_argument("--vcil", action="store_true")
    p_trk.add_argument("--config", default=None)
    p_trk.add_argument("--seed", type=int, default=0)
    p_trk.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a result file against ground truth")
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--iou", type=float, default=0.5)

    p_abl = sub.add_parser("ablate-h", help="sweep the sampling interval")
    p_abl.add_argument("--scenario", required=True, choices=simulator.SCENARIOS)
    p_abl.add_argument("--frames", type=int, default=60)
    p_abl.add_argument("--objects", type=int, default=8)
    p_abl.add_argument("--h-list", required=True, help="comma-separated intervals")
    p_abl.add_argument("--seed", type=int, default=0)
    p_abl.add_argument("--det-noise-sigma", type=float, default=2.0)
    p_abl.add_argument("--det-dropout", type=float, default=0.05)
    p_abl.add_argument("--corr-count", type=int, default=200)
    p_abl.add_argument("--out", required=True, help="output CSV path")
    p_abl.add_argument("--no-figures", action="store_true")
    return parser


def _scenario_config(args) -> simulator.ScenarioConfig:
    return simulator.ScenarioConfig(
        scenario=args.scenario,
        frames=args.frames,
        objects=args.objects,
        det_noise_sigma=getattr(args, "det_noise_sigma", 0.0),
        det_dropout=getattr(args, "det_dropout", 0.0),
        false_positive_rate=getattr(args, "false_positive_rate", 0.0),
        correspondence_count=getattr(args, "corr_count", 200),
        correspondence_outlier_rate=getattr(args, "corr_outlier_rate", 0.0),
        embedding_dim=getattr(args, "emb_dim", 64),
        embedding_view_noise=getattr(args, "emb_view_noise", 0.1),
        seed=args.seed,
    ).validate()


def cmd_simulate(args) -> int:
    bundle = simulator.generate_sequence(_scenario_config(args))
    fileio.write_bundle(bundle, args.out, corr_window=args.corr_window)
    n_gt = sum(len(v) for v in bundle.gt.values())
    n_det = sum(len(v) for v in bundle.detections.values())
    print(
        f"wrote {args.scenario} bundle to {args.out}: "
        f"{bundle.frame_count} frames, {n_gt} gt boxes, {n_det} detections"
    )
    return EXIT_OK


def _infer_frames(corr_dir) -> int:
    frames = 0
    for path in Path(corr_dir).glob("corr_*_*.txt"):
        parts = path.stem.split("_")
        frames = max(frames, int(parts[1]), int(parts[2]))
    if frames < 2:
        raise HomtrackError(f"no correspondence files found in {corr_dir}")
    return frames


def cmd_homog(args) -> int:
    if args.homog_command == "estimate":
        provider = fileio.CorrespondenceDir(args.corr)
        frames = args.frames or _infer_frames(args.corr)
        graph = fhe.build_graph(
            frames,
            args.h,
            provider,
            mode=args.mode,
            ransac_threshold=args.ransac_threshold,
            ransac_iters=args.ransac_iters,
            seed=args.seed,
        )
        fileio.write_homography_cache(graph, args.out)
        print(f"wrote {len(graph.direct)} entries for {frames} frames (h={args.h}) to {args.out}")
        return EXIT_OK
    graph = fileio.read_homography_cache(args.cache)
    a, b = args.pair
    H = graph.homography_between(a, b)
    print(f"{a} {b} " + " ".join(format(v, '.9g') for v in H.ravel()))
    return EXIT_OK


def _tracker_setup(args):
    cfg = TrackerConfig()
    if args.config:
        cfg, _, extras = fileio.read_config(args.config)
        if "h" in extras and args.h == 10:
            args.h = extras["h"]
    if args.vcil:
        cfg.use_vcil = True
    return cfg


def cmd_track(args) -> int:
    if (args.homog is None) == (args.corr is None):
        raise _UsageError("exactly one of --homog or --corr is required")
    cfg = _tracker_setup(args)
    records = fileio.read_mot(args.det)
    if not records:
        raise HomtrackError(f"no detections in {args.det}")
    frame_count = max(records)

    embeddings = None
    if args.emb:
        embeddings = fileio.read_embeddings(args.emb)
    else:
        cfg.iou_weight = 1.0
        print("warning: no embedding file, association uses IoU only", file=sys.stderr)
    detections = fileio.records_to_detections(records, embeddings)

    if args.homog:
        graph = fileio.read_homography_cache(args.homog)
    else:
        provider = fileio.CorrespondenceDir(args.corr)
        graph = fhe.build_graph(frame_count, args.h, provider, mode=args.mode, seed=args.seed)

    updater = None
    if cfg.use_vcil and embeddings is not None:
        dim = len(next(iter(embeddings.values())))
        updater = VcilUpdater(n_slots=4, C=dim, seed=args.seed)

    start = time.perf_counter()
    tracks = run_sequence(detections, frame_count, graph, cfg, vcil_updater=updater)
    elapsed = time.perf_counter() - start

    out_records = []
    for trk in tracks:
        for frame, box in trk.history:
            out_records.append(
                fileio.MotRecord(frame, trk.track_id, box, 1.0, trk.class_id)
            )
    fileio.write_mot(out_records, args.out)
    fps = frame_count / elapsed if elapsed > 0 else float("inf")
    print(f"tracked {frame_count} frames, {len(tracks)} tracks, {fps:.1f} frames/s")
    return EXIT_OK


def cmd_eval(args) -> int:
    gt = fileio.mot_to_eval(fileio.read_mot(args.gt))
    pred = fileio.mot_to_eval(fileio.read_mot(args.pred))
    report = metrics.evaluate(gt, pred, args.iou)
    print(report.as_table())
    for line in report.as_lines():
        print(line)
    return EXIT_OK


def cmd_ablate(args) -> int:
    h_values = [int(tok) for tok in args.h_list.split(",") if tok.strip()]
    if not h_values:
        raise _UsageError("empty --h-list")
    cfg = _scenario_config(args)
    bundle = simulator.generate_sequence(cfg)
    gt = {
        frame: [(g.track_id, g.box, g.class_id) for g in lst]
        for frame, lst in bundle.gt.items()
    }
    # pre-generate correspondences so timing isolates estimation itself
    corr_cache: dict = {}

    def provider(a, b):
        if (a, b) not in corr_cache:
            corr_cache[(a, b)] = bundle.correspondences(a, b)
        return corr_cache[(a, b)]

    for h in h_values:
        sched = fhe.keyframe_schedule(cfg.frames, h)
        for k1, k2 in zip(sched.keyframes, sched.keyframes[1:]):
            provider(k1, k2)
            for t in range(k1 + 1, k2):
                provider(k1, t)

    rows = []
    for h in h_values:
        start = time.perf_counter()
        graph = fhe.build_graph(cfg.frames, h, provider, seed=args.seed)
        wall_ms = 1000.0 * (time.perf_counter() - start)
        tracks = run_sequence(bundle.detections, cfg.frames, graph, TrackerConfig())
        pred = {}
        for trk in tracks:
            for frame, box in trk.history:
                pred.setdefault(frame, []).append((trk.track_id, box, trk.class_id))
        report = metrics.evaluate(gt, pred)
        rows.append(
            {"h": h, "mota": report.mota, "idf1": report.idf1,
             "ids": report.ids, "wall_ms": wall_ms}
        )
        print(f"h={h:3d} MOTA={report.mota:6.2f} IDF1={report.idf1:6.2f} "
              f"IDs={report.ids:4d} homog={wall_ms:8.1f} ms")

    with open(args.out, "w") as fh:
        fh.write("h,mota,idf1,ids,wall_ms\n")
        for row in rows:
            fh.write(f"{row['h']},{row['mota']:.4f},{row['idf1']:.4f},"
                     f"{row['ids']},{row['wall_ms']:.3f}\n")
    if not args.no_figures:
        for path in plotting.save_ablation_figures(rows, args.out):
            print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "homog": cmd_homog,
    "track": cmd_track,
    "eval": cmd_eval,
    "ablate-h": cmd_ablate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HomtrackError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
