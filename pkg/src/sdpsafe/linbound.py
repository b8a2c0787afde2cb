"""Linear relaxation upper bounds with optimizable lower slopes, interval
intermediate bounds, the one-hidden-layer closed form, and asymptotic limit
calculators for the certified bound of random networks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkParams
from .sdpform import InputRegion


@dataclass
class PreactBounds:
    lower: list[np.ndarray]
    upper: list[np.ndarray]


@dataclass
class AlphaVector:
    """Per-layer lower-bound slopes in [0, 1]; only unstable neurons matter."""

    slopes: list[np.ndarray]

    def clipped(self) -> "AlphaVector":
        return AlphaVector([np.clip(s, 0.0, 1.0) for s in self.slopes])

    @staticmethod
    def constant(params: NetworkParams, value: float) -> "AlphaVector":
        return AlphaVector([np.full(params.h, value) for _ in range(params.L)])


def interval_bounds(params: NetworkParams, region: InputRegion) -> PreactBounds:
    """Pre-activation interval bounds: dual-norm bound at layer 1, interval
    arithmetic through ReLU for deeper layers."""
    W1, b1 = params.W[0], params.b[0]
    if np.isinf(region.p):
        radius = region.eps * np.abs(W1).sum(axis=1)
    else:
        radius = region.eps * np.linalg.norm(W1, axis=1)
    lower = [b1 - radius]
    upper = [b1 + radius]
    for l in range(1, params.L):
        pl = np.clip(lower[-1], 0.0, None)
        pu = np.clip(upper[-1], 0.0, None)
        W, b = params.W[l], params.b[l]
        Wp = np.clip(W, 0.0, None)
        Wm = np.clip(W, None, 0.0)
        lower.append(Wp @ pl + Wm @ pu + b)
        upper.append(Wp @ pu + Wm @ pl + b)
    return PreactBounds(lower=lower, upper=upper)


def _relaxation(lb: np.ndarray, ub: np.ndarray, alpha: np.ndarray):
    """Per-neuron linear relaxation of ReLU on [lb, ub].

    Stable active -> identity; stable inactive -> zero map; unstable ->
    chord upper bound and slope-alpha lower bound.
    """
    up_slope = np.zeros_like(lb)
    up_int = np.zeros_like(lb)
    low_slope = np.zeros_like(lb)
    active = lb >= 0.0
    inactive = ub <= 0.0
    unstable = ~(active | inactive)
    up_slope[active] = 1.0
    low_slope[active] = 1.0
    denom = ub[unstable] - lb[unstable]
    up_slope[unstable] = ub[unstable] / denom
    up_int[unstable] = -ub[unstable] * lb[unstable] / denom
    low_slope[unstable] = alpha[unstable]
    return up_slope, up_int, low_slope, unstable


def _backward_pass(params: NetworkParams, region: InputRegion, alpha: AlphaVector,
                   bounds: PreactBounds, want_grad: bool):
    a = params.W[params.L][0].copy()
    t = float(params.b[params.L][0])
    tape = []
    for l in range(params.L, 0, -1):
        lb, ub = bounds.lower[l - 1], bounds.upper[l - 1]
        up_slope, up_int, low_slope, unstable = _relaxation(lb, ub, alpha.slopes[l - 1])
        pos = a >= 0.0
        a_tilde = a * np.where(pos, up_slope, low_slope)
        t += float(a[pos] @ up_int[pos])
        tape.append((l, a, pos, unstable))
        a = a_tilde @ params.W[l - 1]
        t += float(a_tilde @ params.b[l - 1])
    if np.isinf(region.p):
        bound = t + region.eps * float(np.abs(a).sum())
        g_a = region.eps * np.sign(a)
    else:
        nrm = float(np.linalg.norm(a))
        bound = t + region.eps * nrm
        g_a = region.eps * a / nrm if nrm > 0 else np.zeros_like(a)
    if not want_grad:
        return bound, None
    # reverse sweep: d(bound)/d(alpha) by accumulating sensitivities to a_tilde
    grads = [np.zeros(params.h) for _ in range(params.L)]
    g = g_a
    for l, a_in, pos, unstable in reversed(tape):
        g_tilde = g @ params.W[l - 1].T + params.b[l - 1]
        take = (~pos) & unstable
        grads[l - 1][take] = g_tilde[take] * a_in[take]
        lb, ub = bounds.lower[l - 1], bounds.upper[l - 1]
        up_slope, up_int, low_slope, _ = _relaxation(lb, ub, alpha.slopes[l - 1])
        g = g_tilde * np.where(pos, up_slope, low_slope) + pos * up_int
    return bound, grads


def crown_upper_bound(params: NetworkParams, region: InputRegion,
                      alpha: AlphaVector, bounds: PreactBounds | None = None) -> float:
    """Sound upper bound on max f(x) over the region via backward substitution."""
    if bounds is None:
        bounds = interval_bounds(params, region)
    bound, _ = _backward_pass(params, region, alpha.clipped(), bounds, want_grad=False)
    return bound


def optimize_alpha(params: NetworkParams, region: InputRegion,
                   steps: int = 100, lr: float = 0.1) -> tuple[AlphaVector, float]:
    """Projected gradient descent on the bound over alpha in [0, 1]^*.

    The endpoints alpha = 0 and alpha = 1 are always candidates, so the
    returned bound never exceeds either.
    """
    bounds = interval_bounds(params, region)
    best_alpha = AlphaVector.constant(params, 0.0)
    best_val = crown_upper_bound(params, region, best_alpha, bounds)
    for value in (1.0, 0.5):
        cand = AlphaVector.constant(params, value)
        val = crown_upper_bound(params, region, cand, bounds)
        if val < best_val:
            best_alpha, best_val = cand, val
    alpha = AlphaVector([s.copy() for s in best_alpha.slopes])
    for _ in range(steps):
        val, grads = _backward_pass(params, region, alpha, bounds, want_grad=True)
        if val < best_val:
            best_val = val
            best_alpha = AlphaVector([s.copy() for s in alpha.slopes])
        alpha = AlphaVector(
            [np.clip(s - lr * g, 0.0, 1.0) for s, g in zip(alpha.slopes, grads)]
        )
    val = crown_upper_bound(params, region, alpha, bounds)
    if val < best_val:
        best_val, best_alpha = val, alpha
    return best_alpha, best_val


def closed_form_B(params: NetworkParams, eps: float) -> float:
    """(eps/2) sum_j [W2_j]_+ sum_i |W1_ji| for a one-hidden-layer bias-free net."""
    if params.L != 1:
        raise ValueError("closed form applies to one-hidden-layer networks")
    if any(float(np.abs(bv).max()) > 0 for bv in params.b):
        raise ValueError("closed form applies to bias-free networks")
    w2 = params.W[1][0]
    row_l1 = np.abs(params.W[0]).sum(axis=1)
    return 0.5 * eps * float(np.clip(w2, 0.0, None) @ row_l1)


def theory_sdp_limit(d: int, h: int, L: int, eps: float, p: float) -> float:
    """Wide-network limit of the certified-bound cap for Xavier initialization.

    Uses the nuclear-norm seed eps^2 (p = 2) or d eps^2 (p = inf).
    """
    nuc = eps**2 if p == 2 else d * eps**2
    ratio = h / d
    term1 = 2.0 ** (L - 1) / np.sqrt(3.0 ** (L + 1)) * (1.0 + np.sqrt(ratio)) * np.sqrt(nuc)
    term2 = np.sqrt(ratio / 3.0) * 2.0 ** (L - 1) / np.sqrt(3.0**L)
    term3 = ((2.0 / np.sqrt(3.0)) ** (L - 1) - 1.0) / (2.0 * np.sqrt(3.0) - 3.0)
    return float(term1 + term2 + term3)


def bai_yin_norm(a: int, b: int) -> float:
    """Limiting spectral norm (sqrt(a)+sqrt(b))/sqrt(3a) of a b x a matrix with
    Uniform[-1/sqrt(a), 1/sqrt(a)] entries."""
    return float((np.sqrt(a) + np.sqrt(b)) / np.sqrt(3.0 * a))
