"""Figure rendering for the report paths (matplotlib, file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def save_ablation_figures(rows: list[dict], csv_path) -> list[str]:
    """Render accuracy and timing trends vs the sampling interval.

    ``rows`` are the ablation CSV rows (h, mota, idf1, ids, wall_ms).
    Figures are written next to the CSV; returns the written paths.
    """
    base = Path(csv_path)
    hs = [r["h"] for r in rows]
    written = []

    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(hs, [r["mota"] for r in rows], "o-", label="MOTA")
    ax1.plot(hs, [r["idf1"] for r in rows], "s-", label="IDF1")
    ax1.set_xlabel("sampling interval h")
    ax1.set_ylabel("score (%)")
    ax2 = ax1.twinx()
    ax2.plot(hs, [r["ids"] for r in rows], "^--", color="tab:red", label="IDs")
    ax2.set_ylabel("identity switches")
    lines1, labels1 = ax1.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax1.legend(lines1 + lines2, labels1 + labels2, loc="best")
    ax1.set_title("Tracking accuracy vs sampling interval")
    fig.tight_layout()
    acc_path = base.with_name(base.stem + "_accuracy.png")
    fig.savefig(acc_path, dpi=120)
    plt.close(fig)
    written.append(str(acc_path))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(hs, [r["wall_ms"] for r in rows], "o-")
    ax.set_xlabel("sampling interval h")
    ax.set_ylabel("homography phase wall time (ms)")
    ax.set_title("Homography estimation cost vs sampling interval")
    fig.tight_layout()
    time_path = base.with_name(base.stem + "_timing.png")
    fig.savefig(time_path, dpi=120)
    plt.close(fig)
    written.append(str(time_path))
    return written
