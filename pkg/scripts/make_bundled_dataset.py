#!/usr/bin/env python3
"""Regenerate the bundled sample dataset (checked into src/svrgkit/data/).

The file mimics the shape of the LibSVM 'adult' binary task: 123 binary
features, ~14 active per example, imbalanced noisy labels from a planted
linear rule.  It is a synthetic stand-in so the test suite never needs
network access; fetch the real datasets from the LibSVM site for full-size
experiments.
"""

import math
from pathlib import Path

import numpy as np

N = 2000
D = 123
MEAN_ACTIVE = 14
SEED = 20240817

OUT = Path(__file__).resolve().parent.parent / "src" / "svrgkit" / "data" / \
    "a9a_like_2000.libsvm"


def main():
    rng = np.random.default_rng(SEED)
    # skewed feature popularity, like one-hot encoded census fields
    popularity = 1.0 / (np.arange(D) + 5.0)
    popularity *= MEAN_ACTIVE / popularity.sum()
    # Label noise is kept high on purpose: a hard-to-fit training set keeps
    # single-sample gradient noise alive near the optimum, which is the
    # regime the fixed-pass-budget comparisons in the test suite probe.
    w_star = rng.normal(size=D) * (rng.random(D) < 0.4)
    intercept = -1.1
    lines = []
    n_pos = 0
    for _ in range(N):
        active = np.flatnonzero(rng.random(D) < popularity)
        while active.size == 0:
            active = np.flatnonzero(rng.random(D) < popularity)
        margin = w_star[active].sum() + intercept
        p_pos = 1.0 / (1.0 + math.exp(-2.0 * margin))
        label = 1 if rng.random() < p_pos else -1
        n_pos += label == 1
        feats = " ".join(f"{j + 1}:1" for j in active)
        lines.append(f"{label:+d} {feats}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")
    nnz = sum(line.count(":") for line in lines)
    print(f"wrote {OUT} ({N} examples, {n_pos} positive, "
          f"{nnz / N:.1f} features/example)")


if __name__ == "__main__":
    main()
