#!/usr/bin/env python3
"""Writes the bundled small classification datasets to data/datasets/.

Three come from scikit-learn's bundled copies of classic UCI sets; the rest
are regenerated from their published definitions or drawn from seeded toy
generators. Output is deterministic.
"""
import csv
import itertools
import pathlib
import sys

import numpy as np
from sklearn import datasets as skd

OUT = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "data" / "datasets"


def write(name, header, rows):
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / f"{name}.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.4f}".rstrip("0").rstrip(".") if isinstance(v, float) else v for v in r])


def from_sklearn(name, bunch):
    names = [n.replace(" ", "_").replace("(", "").replace(")", "").replace("/", "_") for n in bunch.feature_names]
    labels = [str(bunch.target_names[t]).replace(" ", "_") for t in bunch.target]
    write(name, names + ["class"], [list(map(float, x)) + [y] for x, y in zip(bunch.data, labels)])


def tic_tac_toe():
    # Every board reachable at the end of a game with x moving first; class is
    # whether x has three in a row.
    lines = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]

    def wins(b, p):
        return any(all(b[i] == p for i in l) for l in lines)

    finals = set()

    def play(b, turn):
        if wins(b, "x") or wins(b, "o") or "b" not in b:
            finals.add(tuple(b))
            return
        for i in range(9):
            if b[i] == "b":
                b[i] = turn
                play(b, "o" if turn == "x" else "x")
                b[i] = "b"

    play(["b"] * 9, "x")
    cells = ["top_left", "top_middle", "top_right", "middle_left", "middle_middle", "middle_right",
             "bottom_left", "bottom_middle", "bottom_right"]
    rows = [list(b) + ["positive" if wins(b, "x") else "negative"] for b in sorted(finals)]
    write("tic_tac_toe", cells + ["class"], rows)


def balance_scale():
    rows = []
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        rows.append([lw, ld, rw, rd, "L" if left > right else "R" if right > left else "B"])
    write("balance_scale", ["left_weight", "left_distance", "right_weight", "right_distance", "class"], rows)


def monks1():
    # Full attribute space of the first MONK's problem: (a1 == a2) or (a5 == 1).
    sizes = [3, 3, 2, 3, 4, 2]
    rows = []
    for a in itertools.product(*[range(1, s + 1) for s in sizes]):
        label = "1" if a[0] == a[1] or a[4] == 1 else "0"
        rows.append([f"v{x}" for x in a] + [label])
    write("monks1", [f"a{i}" for i in range(1, 7)] + ["class"], rows)


def moons():
    x, y = skd.make_moons(n_samples=300, noise=0.25, random_state=7)
    write("moons", ["x1", "x2", "class"], [[float(a), float(b), f"c{t}"] for (a, b), t in zip(x, y)])


def blobs():
    x, y = skd.make_blobs(n_samples=300, centers=4, n_features=5, cluster_std=2.5, random_state=11)
    write("blobs", [f"x{i}" for i in range(1, 6)] + ["class"], [list(map(float, r)) + [f"c{t}"] for r, t in zip(x, y)])


def noisy_xor():
    rng = np.random.default_rng(5)
    rows = []
    for _ in range(400):
        a, b = rng.integers(0, 2, size=2)
        noise = rng.normal(0.0, 0.3, size=2)
        extra = rng.normal(0.0, 1.0, size=2)
        colour = ["red", "green", "blue"][rng.integers(0, 3)]
        label = "yes" if a != b else "no"
        rows.append([float(a + noise[0]), float(b + noise[1]), float(extra[0]), float(extra[1]), colour, label])
    write("noisy_xor", ["x1", "x2", "x3", "x4", "colour", "class"], rows)


def main():
    from_sklearn("iris", skd.load_iris())
    from_sklearn("wine", skd.load_wine())
    from_sklearn("breast_cancer", skd.load_breast_cancer())
    tic_tac_toe()
    balance_scale()
    monks1()
    moons()
    blobs()
    noisy_xor()


if __name__ == "__main__":
    main()
