"""Independent oracles used by the test suite.

These deliberately avoid the library's structured code paths: the brute-force
maximum enumerates ReLU activation patterns and candidate boundary points in
closed form (d = 2 only), and the finite-difference helpers probe scalar
functions directly.
"""

from itertools import combinations, product

import numpy as np


def forward_plain(params, x):
    """Straightforward re-implementation of the network forward pass."""
    a = list(x)
    for l in range(params.L):
        z = [sum(params.W[l][j][i] * a[i] for i in range(len(a))) + params.b[l][j]
             for j in range(params.h)]
        a = [max(0.0, v) for v in z]
    return sum(params.W[params.L][0][j] * a[j] for j in range(params.h)) + params.b[params.L][0]


def _affine_through_pattern(params, pattern):
    """For a fixed ReLU on/off pattern, the network is affine: returns the
    objective (g, g0) and the list of halfplane boundary lines (normal, offset)
    whose sign pattern carves out the cell."""
    A = np.eye(params.d)
    c = np.zeros(params.d)
    lines = []
    for l in range(params.L):
        A = params.W[l] @ A
        c = params.W[l] @ c + params.b[l]
        for j in range(params.h):
            lines.append((A[j].copy(), c[j]))
        keep = np.asarray(pattern[l], dtype=float)
        A = A * keep[:, None]
        c = c * keep
    g = params.W[params.L][0] @ A
    g0 = float(params.W[params.L][0] @ c + params.b[params.L][0])
    return g, g0, lines


def _line_line(n1, b1, n2, b2):
    M = np.array([n1, n2])
    if abs(np.linalg.det(M)) < 1e-12:
        return []
    return [np.linalg.solve(M, np.array([b1, b2]))]


def _line_circle(n, b, eps):
    # points with n.x = b and |x| = eps
    nn = np.linalg.norm(n)
    if nn < 1e-14:
        return []
    p0 = n * (b / nn**2)
    d2 = eps**2 - b**2 / nn**2
    if d2 < 0:
        return []
    t = np.array([-n[1], n[0]]) / nn
    r = np.sqrt(d2)
    return [p0 + r * t, p0 - r * t]


def brute_force_max(params, region):
    """Exact max of the logit over the region by activation-pattern enumeration.

    d = 2 only. Every cell's affine maximum sits on a cell vertex (two active
    boundary lines, or a line-circle crossing) or at the ball point aligned
    with the cell gradient; evaluating the true network at all such candidate
    points over all patterns therefore recovers the global maximum.
    """
    assert params.d == 2, "oracle implemented for d = 2"
    eps = region.eps
    box_lines = [(np.array([1.0, 0.0]), eps), (np.array([1.0, 0.0]), -eps),
                 (np.array([0.0, 1.0]), eps), (np.array([0.0, 1.0]), -eps)]
    candidates = [np.zeros(2)]
    n_units = params.L * params.h
    for bits in product([0, 1], repeat=n_units):
        pattern = [bits[l * params.h:(l + 1) * params.h] for l in range(params.L)]
        g, _, cell_lines = _affine_through_pattern(params, pattern)
        lines = [(n, -b) for n, b in cell_lines]  # boundary: n.x + b = 0 -> n.x = -b
        if np.isinf(region.p):
            lines = lines + box_lines
            for (n1, b1), (n2, b2) in combinations(lines, 2):
                candidates.extend(_line_line(n1, b1, n2, b2))
            gn = np.where(g >= 0, eps, -eps)
            candidates.append(gn)
        else:
            for (n1, b1), (n2, b2) in combinations(lines, 2):
                candidates.extend(_line_line(n1, b1, n2, b2))
            for n, b in lines:
                candidates.extend(_line_circle(n, b, eps))
            nrm = np.linalg.norm(g)
            if nrm > 0:
                candidates.append(eps * g / nrm)

    best = -np.inf
    for pt in candidates:
        if np.isinf(region.p):
            pt = np.clip(pt, -eps, eps)
        else:
            nrm = np.linalg.norm(pt)
            if nrm > eps:
                pt = pt * (eps / nrm)
        best = max(best, forward_plain(params, pt))
    return best


def finite_difference_grad(f, x0, step=1e-5):
    """Central-difference gradient of a scalar function of a flat vector."""
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        xp = x0.copy()
        xp[i] += step
        xm = x0.copy()
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2 * step)
    return g


def flatten_params(params):
    return np.concatenate([w.ravel() for w in params.W] + [b.ravel() for b in params.b])


def unflatten_params(params, vec):
    out = params.copy()
    pos = 0
    for l, w in enumerate(out.W):
        out.W[l] = vec[pos:pos + w.size].reshape(w.shape).copy()
        pos += w.size
    for l, b in enumerate(out.b):
        out.b[l] = vec[pos:pos + b.size].copy()
        pos += b.size
    assert pos == vec.size
    return out
