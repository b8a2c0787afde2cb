"""Samplers for the concentric-spheres data, its box-surface variant, and lp balls.

Labels are 1 for the outer shell (radius R) and 0 for the inner shell
(radius 1). All samplers are pure functions of their seed.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def sample_d2(count: int, d: int, R: float = 1.3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points on two concentric l2 spheres of radii 1 and R."""
    if d < 1 or R <= 1.0:
        raise ValueError("need d >= 1 and R > 1")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=count)
    z = rng.standard_normal((count, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = np.where(y == 1, R, 1.0)
    return z * r[:, None], y


def sample_dinf(count: int, d: int, R: float = 1.3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points on the surfaces of linf cubes of half-widths 1 and R.

    A face is picked uniformly among the 2d faces, its coordinate pinned at
    +-radius, and the remaining coordinates drawn Uniform[-radius, radius].
    """
    if d < 1 or R <= 1.0:
        raise ValueError("need d >= 1 and R > 1")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=count)
    r = np.where(y == 1, R, 1.0)
    x = rng.uniform(-1.0, 1.0, size=(count, d)) * r[:, None]
    axis = rng.integers(0, d, size=count)
    sign = rng.integers(0, 2, size=count) * 2 - 1
    x[np.arange(count), axis] = sign * r
    return x, y


def sample_ball(count: int, d: int, p: float, eps: float, seed: int = 0) -> np.ndarray:
    """I.i.d. uniform points in the lp ball of radius eps, p in {2, inf}."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(seed)
    if np.isinf(p):
        return rng.uniform(-eps, eps, size=(count, d))
    if p == 2:
        z = rng.standard_normal((count, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = eps * rng.uniform(0.0, 1.0, size=count) ** (1.0 / d)
        return z * r[:, None]
    raise ValueError(f"unsupported norm order {p}")


def save_samples_csv(x: np.ndarray, y: np.ndarray, path: str | Path) -> None:
    """One row per sample: d coordinates then the label."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for xi, yi in zip(x, y):
            writer.writerow([repr(float(v)) for v in xi] + [int(yi)])
