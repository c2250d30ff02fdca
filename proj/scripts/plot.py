#!/usr/bin/env python3
"""Plot the .dat series written by rmtlab (columns: x y yerr)."""
import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load(path):
    labels = ("x", "y")
    with open(path) as f:
        first = f.readline()
    if first.startswith("#"):
        parts = first[1:].split()
        if len(parts) >= 2:
            labels = (parts[0], parts[1])
    data = np.atleast_2d(np.loadtxt(path, comments="#"))
    return data, labels


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("dir", help="result directory containing .dat files")
    ap.add_argument("--log", action="store_true", help="log-log axes")
    ap.add_argument("--out", help="output directory for PNG files (default: the result directory)")
    args = ap.parse_args()
    src = pathlib.Path(args.dir)
    dst = pathlib.Path(args.out) if args.out else src
    dst.mkdir(parents=True, exist_ok=True)
    for dat in sorted(src.glob("*.dat")):
        data, (xl, yl) = load(dat)
        if data.size == 0:
            continue
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.errorbar(data[:, 0], data[:, 1], yerr=data[:, 2], fmt="o-", ms=3, capsize=2)
        if args.log:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_title(dat.stem)
        fig.tight_layout()
        fig.savefig(dst / (dat.stem + ".png"), dpi=120)
        plt.close(fig)
        print(dst / (dat.stem + ".png"))


if __name__ == "__main__":
    main()
