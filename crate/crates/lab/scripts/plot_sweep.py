#!/usr/bin/env python3
"""Plot a sweep CSV written by `levelset-lab sweep`.

usage: plot_sweep.py SWEEP.csv [-o FIGURE.png] [--logy]

Draws the upper and lower bounds against the grid parameter and marks the
points where the norm cap was hit. Needs matplotlib.
"""

import argparse
import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_sweep(path):
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip()]
    for ln in lines:
        if not ln.startswith("#"):
            break
        body = ln[1:].strip()
        if body.startswith("config=") or body.startswith("error "):
            continue
        for part in body.split():
            key, _, value = part.partition("=")
            meta[key] = value
    data = [ln for ln in lines if not ln.startswith("#")]
    for rec in csv.DictReader(data):
        rows.append(
            {
                "param": float(rec["param"]),
                "lower": float(rec["lower"]),
                "upper": float(rec["upper"]),
                "cap_hit": rec["cap_hit"] == "true",
            }
        )
    return meta, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", default=None)
    ap.add_argument("--logy", action="store_true", help="logarithmic value axis")
    args = ap.parse_args()

    meta, rows = read_sweep(args.csv)
    finite = [r for r in rows if math.isfinite(r["upper"])]
    xs = [r["param"] for r in finite]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, [r["upper"] for r in finite], "-", label="upper")
    ax.plot(xs, [r["lower"] for r in finite], "--", label="lower")
    capped = [r for r in finite if r["cap_hit"]]
    if capped:
        ax.plot(
            [r["param"] for r in capped],
            [r["upper"] for r in capped],
            "x",
            label="norm cap hit",
        )
    axis = meta.get("axis", "v_of_tau")
    ax.set_xlabel("tau" if axis == "v_of_tau" else "u")
    ax.set_ylabel("v(tau)" if axis == "v_of_tau" else "p(u)")
    if args.logy:
        ax.set_yscale("symlog", linthresh=1e-8)
    ax.set_title(f"{meta.get('instance', '')}  R={meta.get('norm_cap', '?')}")
    ax.legend()
    fig.tight_layout()
    out = args.output or args.csv.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
