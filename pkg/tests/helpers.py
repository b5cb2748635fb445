"""Tiny synthetic datasets and configs for runner and CLI tests."""
import csv
import json

import numpy as np

SCHEMA = {"x1": "numeric", "x2": "numeric", "cat": "categorical",
          "grp": "sensitive", "y": "label"}


def write_dataset(path, n=200, seed=0):
    rng = np.random.default_rng(seed)
    grp = rng.integers(0, 2, n)
    x1 = rng.normal(size=n) + 0.5 * grp
    x2 = rng.normal(size=n)
    logit = 1.5 * x1 - x2 + 0.3 * grp
    y = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(int)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "cat", "grp", "y", "unused"])
        for i in range(n):
            w.writerow([f"{x1[i]:.4f}", f"{x2[i]:.4f}", "abc"[i % 3],
                        ["maj", "min"][grp[i]], y[i], "z"])
    return path


def small_config(**overrides):
    cfg = {
        "dataset": "data.csv", "schema": SCHEMA, "positive_label": "1",
        "protected_value": "min", "k": 4, "batch_size": 10, "iterations": 3,
        "runs": 2, "c_grid": [0.1, 1.0], "max_iter_grid": [50], "cv_folds": 2,
        "fair_lambda": 100.0,
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, n=200, **overrides):
    write_dataset(tmp_path / "data.csv", n=n)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(small_config(**overrides)))
    return path
