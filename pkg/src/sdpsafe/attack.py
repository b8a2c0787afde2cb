"""Projected gradient ascent lower bound on the maximum logit over a norm ball."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dataset
from .network import NetworkParams, grad_input_batch
from .sdpform import InputRegion


@dataclass(frozen=True)
class PgdConfig:
    b: int = 256
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    patience: int = 100
    tol: float = 1e-4
    max_steps: int = 20000
    p: float = 2.0
    eps: float = 1.0

    def __post_init__(self):
        if self.b < 1 or self.patience < 1 or self.tol <= 0:
            raise ValueError("need b >= 1, patience >= 1, tol > 0")


def project(point: np.ndarray, region: InputRegion) -> np.ndarray:
    """Euclidean projection onto the lp ball; rows of a 2-d array project independently."""
    x = np.asarray(point, dtype=float)
    if np.isinf(region.p):
        return np.clip(x, -region.eps, region.eps)
    if x.ndim == 1:
        nrm = np.linalg.norm(x)
        return x * (region.eps / nrm) if nrm > region.eps else x.copy()
    nrm = np.linalg.norm(x, axis=1, keepdims=True)
    scale = np.where(nrm > region.eps, region.eps / np.maximum(nrm, 1e-300), 1.0)
    return x * scale


def pgd_lower_bound(
    params: NetworkParams,
    region: InputRegion | None = None,
    config: PgdConfig = PgdConfig(),
    seed: int = 0,
) -> tuple[float, np.ndarray]:
    """Adam-driven ascent of the logit inside the ball; per-point updates,
    batch maximum reported. Stops once the best value has not improved by
    more than ``tol`` for ``patience`` steps."""
    if region is None:
        region = InputRegion(p=config.p, eps=config.eps)
    x = dataset.sample_ball(config.b, params.d, region.p, region.eps, seed)
    m = np.zeros_like(x)
    v = np.zeros_like(x)

    best_val = -np.inf
    best_point = x[0].copy()
    since_improve = 0
    for t in range(1, config.max_steps + 1):
        logits, g = grad_input_batch(params, x)
        idx = int(np.argmax(logits))
        if logits[idx] > best_val + config.tol:
            since_improve = 0
        else:
            since_improve += 1
        if logits[idx] > best_val:
            best_val = float(logits[idx])
            best_point = x[idx].copy()
        if since_improve >= config.patience:
            break
        m = config.beta1 * m + (1 - config.beta1) * g
        v = config.beta2 * v + (1 - config.beta2) * g * g
        mh = m / (1 - config.beta1**t)
        vh = v / (1 - config.beta2**t)
        x = project(x + config.lr * mh / (np.sqrt(vh) + 1e-8), region)
    return best_val, best_point
