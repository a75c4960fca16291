"""Plot a trajectory CSV written by ``diraclab simulate``.

Usage: python3 plot_trajectory.py out/fig1-persistence.csv [out/fig1-persistence_hj.csv]

Needs matplotlib, which the library itself does not depend on.
"""
import csv
import sys

import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {key: [float(r[key]) for r in rows] for key in ("t", "rho", "xbar", "umax")}


def main(paths):
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6, 7))
    for path in paths:
        data = load(path)
        label = path.rsplit("/", 1)[-1]
        axes[0].semilogy(data["t"], [max(v, 1e-300) for v in data["rho"]], label=label)
        axes[1].plot(data["t"], data["xbar"], label=label)
        axes[2].plot(data["t"], data["umax"], label=label)
    axes[0].set_ylabel("rho")
    axes[1].set_ylabel("xbar")
    axes[2].set_ylabel("max u")
    axes[2].set_xlabel("t")
    axes[0].legend()
    fig.tight_layout()
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1:])
