"""Overlay the T-PV curve, the feeder H surface and the TD-PV curve of one run.

usage: python tools/plot_overlay.py OUT_DIR [--save overlay.png]
"""

import argparse
import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path, x, y):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [float(r[x]) for r in rows], [float(r[y]) for r in rows]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--save", type=Path)
    args = ap.parse_args()
    d = args.out_dir

    fig, ax = plt.subplots(figsize=(6, 4.5))
    if (d / "t_pv.csv").exists():
        ax.plot(*read(d / "t_pv.csv", "lambda", "v_monitored"), label="T-PV (boundary bus)")
    if (d / "td_pv.csv").exists():
        ax.plot(*read(d / "td_pv.csv", "lambda", "v_monitored"), label="TD-PV (boundary bus)")
    if (d / "h_surface.csv").exists():
        vb, lam = read(d / "h_surface.csv", "v_b", "lambda_max")
        ax.plot(lam, vb, "--", label="H surface")
    report = d / "report.json"
    if report.exists():
        c = json.loads(report.read_text()).get("classification", {})
        if c.get("lambda_cut") is not None:
            ax.plot([c["lambda_cut"]], [c["v_cut"]], "ko")
            ax.annotate(f"cut {c['lambda_cut']:.3f}", (c["lambda_cut"], c["v_cut"]), textcoords="offset points",
                        xytext=(6, 6))
        if c:
            ax.set_title(f"Case {c['case']}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("voltage (pu)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.save or d / "overlay.png", dpi=120)


if __name__ == "__main__":
    main()
