#!/usr/bin/env python3
"""Plot complete trials of a two-objective result file."""

import json
import sys

import matplotlib.pyplot as plt


def main(src, dst):
    result = json.load(open(src))
    pts = [t["values"] for t in result["trials"] if t["state"] == "complete"]
    front = {t["id"] for t in result.get("pareto_front", [])}
    xs, ys = zip(*pts)
    plt.scatter(xs, ys, s=8, c="grey")
    best = [t["values"] for t in result["trials"] if t["id"] in front]
    if best:
        bx, by = zip(*best)
        plt.scatter(bx, by, s=12, c="red")
    plt.savefig(dst)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
