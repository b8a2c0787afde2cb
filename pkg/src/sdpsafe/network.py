"""Feedforward ReLU classifier: init, forward/backward passes, metrics, checkpoints.

A network maps R^d -> R through L hidden layers of uniform width h:
``x_l = relu(W_l x_{l-1} + b_l)`` and ``logit = W_{L+1} x_L + b_{L+1}``.
Weights are stored as ``W[0] (h x d), W[1..L-1] (h x h), W[L] (1 x h)``.
Sign convention: logit <= 0 predicts the inner class (label 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit


@dataclass
class NetworkParams:
    d: int
    h: int
    L: int
    W: list[np.ndarray]
    b: list[np.ndarray]

    def validate(self) -> None:
        dims = [self.d] + [self.h] * self.L + [1]
        if len(self.W) != self.L + 1 or len(self.b) != self.L + 1:
            raise ValueError("expected L+1 weight matrices and bias vectors")
        for l, (w, bv) in enumerate(zip(self.W, self.b)):
            if w.shape != (dims[l + 1], dims[l]) or bv.shape != (dims[l + 1],):
                raise ValueError(f"layer {l}: bad shape {w.shape}, {bv.shape}")
            if not (np.isfinite(w).all() and np.isfinite(bv).all()):
                raise ValueError(f"layer {l}: non-finite entries")

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.d, self.h, self.L, [w.copy() for w in self.W], [v.copy() for v in self.b]
        )


@dataclass(frozen=True)
class ForwardTrace:
    """All activations of one forward pass (inputs to the rank-one SDP lift)."""

    x0: np.ndarray
    preacts: list[np.ndarray]
    postacts: list[np.ndarray]
    logit: float


def init_xavier(d: int, h: int, L: int, seed: int) -> NetworkParams:
    """Uniform[-1/sqrt(fan_in), 1/sqrt(fan_in)] entries for weights and biases."""
    if min(d, h, L) < 1:
        raise ValueError("d, h, L must all be >= 1")
    rng = np.random.default_rng(seed)
    dims = [d] + [h] * L + [1]
    W, b = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        W.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        b.append(rng.uniform(-bound, bound, size=fan_out))
    return NetworkParams(d=d, h=h, L=L, W=W, b=b)


def forward(params: NetworkParams, x: np.ndarray) -> ForwardTrace:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.d,):
        raise ValueError(f"input has shape {x.shape}, expected ({params.d},)")
    preacts, postacts = [], []
    a = x
    for l in range(params.L):
        z = params.W[l] @ a + params.b[l]
        a = np.maximum(z, 0.0)
        preacts.append(z)
        postacts.append(a)
    logit = float(params.W[params.L][0] @ a + params.b[params.L][0])
    return ForwardTrace(x0=x, preacts=preacts, postacts=postacts, logit=logit)


def forward_batch(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Logits for a batch of rows, shape (n,)."""
    a = np.asarray(x, dtype=float)
    for l in range(params.L):
        a = np.maximum(a @ params.W[l].T + params.b[l], 0.0)
    return a @ params.W[params.L][0] + params.b[params.L][0]


def grad_input_batch(params: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logits and d(logit)/dx for a batch; ReLU subgradient at 0 taken as 0."""
    a = np.asarray(x, dtype=float)
    masks = []
    for l in range(params.L):
        z = a @ params.W[l].T + params.b[l]
        masks.append(z > 0.0)
        a = np.maximum(z, 0.0)
    logits = a @ params.W[params.L][0] + params.b[params.L][0]
    g = np.broadcast_to(params.W[params.L][0], (x.shape[0], params.h)).copy()
    for l in range(params.L - 1, -1, -1):
        g = (g * masks[l]) @ params.W[l]
    return logits, g


GradList = tuple[list[np.ndarray], list[np.ndarray]]


def loss_and_grad(params: NetworkParams, x: np.ndarray, y: np.ndarray) -> tuple[float, GradList]:
    """Mean binary cross-entropy with logits (label 1 = outer class, positive logit).

    Returns the loss and its gradient as (dW list, db list) matching params.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    n = x.shape[0]
    acts = [x]
    pres = []
    a = x
    for l in range(params.L):
        z = a @ params.W[l].T + params.b[l]
        a = np.maximum(z, 0.0)
        pres.append(z)
        acts.append(a)
    z_out = a @ params.W[params.L][0] + params.b[params.L][0]
    loss = float(np.mean(np.logaddexp(0.0, z_out) - y * z_out))

    g = (expit(z_out) - y) / n
    dW = [np.zeros_like(w) for w in params.W]
    db = [np.zeros_like(bv) for bv in params.b]
    dW[params.L][0] = g @ acts[params.L]
    db[params.L][0] = g.sum()
    ga = np.outer(g, params.W[params.L][0])
    for l in range(params.L - 1, -1, -1):
        gz = ga * (pres[l] > 0.0)
        dW[l] = gz.T @ acts[l]
        db[l] = gz.sum(axis=0)
        if l > 0:
            ga = gz @ params.W[l]
    return loss, (dW, db)


def evaluate(params: NetworkParams, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(accuracy, inner-class recall) at threshold 0; logit <= 0 predicts inner."""
    logits = forward_batch(params, x)
    pred_outer = logits > 0.0
    accuracy = float(np.mean(pred_outer == (np.asarray(y) == 1)))
    inner = np.asarray(y) == 0
    recall_inner = float(np.mean(logits[inner] <= 0.0)) if inner.any() else 1.0
    return accuracy, recall_inner


def save_checkpoint(params: NetworkParams, path: str | Path, seed: int | None = None,
                    meta: dict | None = None) -> None:
    """JSON checkpoint; floats serialize via repr so round-trips are exact."""
    payload = {
        "d": params.d,
        "h": params.h,
        "L": params.L,
        "W": [w.tolist() for w in params.W],
        "b": [v.tolist() for v in params.b],
        "seed": seed,
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path: str | Path) -> NetworkParams:
    payload = json.loads(Path(path).read_text())
    params = NetworkParams(
        d=int(payload["d"]),
        h=int(payload["h"]),
        L=int(payload["L"]),
        W=[np.asarray(w, dtype=float) for w in payload["W"]],
        b=[np.asarray(v, dtype=float) for v in payload["b"]],
    )
    params.validate()
    return params
