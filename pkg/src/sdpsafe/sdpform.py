"""Canonical equality-form SDP data built from network weights and an input region.

The PSD variable is ordered ``[1 | x_0 | x_1 | ... | x_L | slacks]``. Each
scalar inequality gets one fresh slack entry on the diagonal, turning it into
an equality while keeping a single PSD block:

    maximize  <C, X> + c   subject to   <A_alpha, X> = a_alpha,  X >= 0.

Constraint order: the P[1] = 1 pin, then the input constraint(s) (one trace
inequality for p=2, d per-coordinate inequalities for p=inf), then per layer
the h nonnegativity rows, the h affine-lower rows, and the h diagonal
equality rows.

Every constraint matrix is a diagonal part plus at most one symmetric pair
term, ``A = diag(D) + (u e_k^T + e_k u^T) / 2``, so that
``<A, X> = D . diag(X) + u^T X e_k``. The pair column index k is 0 (the [1]
row) for nonnegativity and affine rows, and the neuron's own diagonal index
for the quadratic equality rows. This is what makes the Gram matrix and the
adjoint cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .network import ForwardTrace, NetworkParams


@dataclass(frozen=True)
class InputRegion:
    """Norm-ball input region {x : |x|_p <= eps} with p in {2, inf}."""

    p: float
    eps: float

    def __post_init__(self):
        if not (self.p == 2 or np.isinf(self.p)):
            raise ValueError(f"unsupported norm order {self.p}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class BlockIndex:
    """Offsets of the [1], [x_0], ..., [x_L] blocks and of the slack tail."""

    d: int
    h: int
    L: int
    offsets: tuple[int, ...]
    slack_offset: int
    n_slack: int

    @property
    def n_core(self) -> int:
        return self.slack_offset

    @property
    def n(self) -> int:
        return self.slack_offset + self.n_slack

    def x_offset(self, l: int) -> int:
        """Offset of the x_l block, l = 0..L."""
        return self.offsets[l + 1]

    def block_size(self, l: int) -> int:
        return self.d if l == 0 else self.h

    def x_index(self, l: int, j: int) -> int:
        return self.x_offset(l) + j


@dataclass
class SdpProblem:
    """Structured SDP data (C, c, A, a) for one network and input region.

    ``diag_parts``, ``pair_vecs`` are dense (m, n) arrays holding D and u per
    constraint row; ``pair_col`` holds the pair index k (u rows are zero for
    constraints without a pair term). ``kinds`` labels each row, and
    ``nonneg_rows`` / ``affine_rows`` / ``diageq_rows`` (shape (L, h)) map a
    (layer, neuron) to its constraint row.
    """

    block: BlockIndex
    region: InputRegion
    C: np.ndarray
    c: float
    a: np.ndarray
    diag_parts: np.ndarray
    pair_vecs: np.ndarray
    pair_col: np.ndarray
    kinds: list[str]
    slack_of_row: np.ndarray
    input_rows: np.ndarray
    nonneg_rows: np.ndarray
    affine_rows: np.ndarray
    diageq_rows: np.ndarray

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.block.n

    def dense_constraint(self, alpha: int) -> np.ndarray:
        """Materialize A_alpha as a full symmetric matrix (tests, debugging)."""
        n = self.n
        A = np.zeros((n, n))
        A[np.arange(n), np.arange(n)] = self.diag_parts[alpha]
        u = self.pair_vecs[alpha]
        k = self.pair_col[alpha]
        A[:, k] += 0.5 * u
        A[k, :] += 0.5 * u
        return A

    def debug_dump(self) -> dict:
        """JSON-friendly dump of (C, a, block map, constraint kinds)."""
        return {
            "n": int(self.n),
            "m": int(self.m),
            "c": float(self.c),
            "C": self.C.tolist(),
            "a": self.a.tolist(),
            "block_offsets": list(self.block.offsets),
            "slack_offset": int(self.block.slack_offset),
            "n_slack": int(self.block.n_slack),
            "kinds": list(self.kinds),
        }

    def debug_dump_json(self) -> str:
        return json.dumps(self.debug_dump())


def block_index_for(d: int, h: int, L: int, region: InputRegion) -> BlockIndex:
    offsets = [0, 1]
    for l in range(1, L + 1):
        offsets.append(offsets[-1] + (d if l == 1 else h))
    slack_offset = offsets[-1] + h
    n_input_ineq = 1 if region.p == 2 else d
    n_slack = n_input_ineq + 2 * L * h
    return BlockIndex(
        d=d, h=h, L=L, offsets=tuple(offsets), slack_offset=slack_offset, n_slack=n_slack
    )


def build_sdp(params: NetworkParams, region: InputRegion) -> SdpProblem:
    """Assemble the canonical SDP for max f(x) over the region."""
    params.validate()
    d, h, L = params.d, params.h, params.L
    block = block_index_for(d, h, L, region)
    n = block.n
    n_input_ineq = 1 if region.p == 2 else d
    m = 1 + n_input_ineq + 3 * L * h

    D = np.zeros((m, n))
    U = np.zeros((m, n))
    K = np.zeros(m, dtype=np.intp)
    a = np.zeros(m)
    kinds: list[str] = []
    slack_of_row = np.full(m, -1, dtype=np.intp)

    row = 0
    slack = block.slack_offset

    # P[1] = 1
    D[row, 0] = 1.0
    a[row] = 1.0
    kinds.append("pin1")
    row += 1

    # input constraint(s), slacked
    x0 = block.x_offset(0)
    input_rows = []
    if region.p == 2:
        D[row, x0:x0 + d] = 1.0
        D[row, slack] = 1.0
        a[row] = region.eps**2
        slack_of_row[row] = slack
        kinds.append("input_l2")
        input_rows.append(row)
        row += 1
        slack += 1
    else:
        for i in range(d):
            D[row, x0 + i] = 1.0
            D[row, slack] = 1.0
            a[row] = region.eps**2
            slack_of_row[row] = slack
            kinds.append("input_linf")
            input_rows.append(row)
            row += 1
            slack += 1

    nonneg_rows = np.zeros((L, h), dtype=np.intp)
    affine_rows = np.zeros((L, h), dtype=np.intp)
    diageq_rows = np.zeros((L, h), dtype=np.intp)
    for l in range(1, L + 1):
        W, bvec = params.W[l - 1], params.b[l - 1]
        prev = block.x_offset(l - 1)
        prev_size = block.block_size(l - 1)
        off = block.x_offset(l)

        # P[x_l]_j >= 0  ->  -P[x_l]_j + slack = 0
        for j in range(h):
            U[row, off + j] = -1.0
            K[row] = 0
            D[row, slack] = 1.0
            a[row] = 0.0
            slack_of_row[row] = slack
            nonneg_rows[l - 1, j] = row
            kinds.append("nonneg")
            row += 1
            slack += 1

        # P[x_l]_j >= (W P[x_{l-1}])_j + b_j  ->  (W P)_j - P[x_l]_j + slack = -b_j
        for j in range(h):
            U[row, prev:prev + prev_size] = W[j]
            U[row, off + j] += -1.0
            K[row] = 0
            D[row, slack] = 1.0
            a[row] = -bvec[j]
            slack_of_row[row] = slack
            affine_rows[l - 1, j] = row
            kinds.append("affine")
            row += 1
            slack += 1

        # P[x_l x_l^T]_jj = (W P[x_{l-1} x_l^T])_jj + b_j P[x_l]_j
        for j in range(h):
            D[row, off + j] = 1.0
            U[row, prev:prev + prev_size] = -W[j]
            U[row, 0] = -bvec[j]
            K[row] = off + j
            a[row] = 0.0
            diageq_rows[l - 1, j] = row
            kinds.append("diageq")
            row += 1

    assert row == m and slack == n

    C = np.zeros((n, n))
    out_off = block.x_offset(L)
    C[0, out_off:out_off + h] = 0.5 * params.W[L][0]
    C[out_off:out_off + h, 0] = 0.5 * params.W[L][0]
    c = float(params.b[L][0])

    return SdpProblem(
        block=block,
        region=region,
        C=C,
        c=c,
        a=a,
        diag_parts=D,
        pair_vecs=U,
        pair_col=K,
        kinds=kinds,
        slack_of_row=slack_of_row,
        input_rows=np.asarray(input_rows, dtype=np.intp),
        nonneg_rows=nonneg_rows,
        affine_rows=affine_rows,
        diageq_rows=diageq_rows,
    )


def apply_A(problem: SdpProblem, X: np.ndarray) -> np.ndarray:
    """{<A_alpha, X>}_alpha for symmetric X."""
    if X.shape != (problem.n, problem.n):
        raise ValueError(f"X has shape {X.shape}, expected {(problem.n, problem.n)}")
    out = problem.diag_parts @ X.diagonal()
    out += np.einsum("ij,ji->i", problem.pair_vecs, X[:, problem.pair_col])
    return out


def apply_At(problem: SdpProblem, y: np.ndarray) -> np.ndarray:
    """Adjoint sum_alpha y_alpha A_alpha as a dense symmetric matrix."""
    if y.shape != (problem.m,):
        raise ValueError(f"y has shape {y.shape}, expected {(problem.m,)}")
    n = problem.n
    half = np.zeros((n, n))
    # rows with k = 0 all scatter into column 0; the remaining pair columns
    # are mutually distinct, so plain fancy indexing accumulates correctly
    k0, rest = problem._k0_rows, problem._rest_rows
    if k0.size:
        half[0, :] = problem.pair_vecs[k0].T @ (0.5 * y[k0])
    if rest.size:
        half[problem.pair_col[rest], :] += problem.pair_vecs[rest] * (0.5 * y[rest])[:, None]
    out = half + half.T
    out[np.arange(n), np.arange(n)] += problem.diag_parts.T @ y
    return out


def gram_AAt(problem: SdpProblem) -> np.ndarray:
    """Gram matrix <A_alpha, A_beta>, exploiting the diagonal+pair structure.

    Diagonal supports of distinct constraints are disjoint by construction
    (each slack and each quadratic diagonal entry belongs to one row), so the
    diagonal parts only contribute on the Gram diagonal. Pair terms satisfy
    <S(u, e_k), S(u', e_k')> = (u.u' [k == k'] + u'[k] u[k']) / 2.
    """
    D, U, K = problem.diag_parts, problem.pair_vecs, problem.pair_col
    m = problem.m
    G = np.zeros((m, m))
    idx = np.arange(m)
    G[idx, idx] += (D * D).sum(axis=1)

    k0 = np.flatnonzero(K == 0)
    if k0.size:
        G[np.ix_(k0, k0)] += 0.5 * (U[k0] @ U[k0].T)
    rest = np.flatnonzero(K != 0)
    if rest.size:
        # pair columns are distinct outside the k=0 group
        G[rest, rest] += 0.5 * (U[rest] * U[rest]).sum(axis=1)

    Z = U[:, K]
    G += 0.5 * Z * Z.T
    return G


def lagrangian_theta_grad(
    problem: SdpProblem,
    params: NetworkParams,
    y: np.ndarray,
    S: np.ndarray,
    X: np.ndarray,
    s: float,
    x: float,
    mu: float,
    rho: float,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradient over (W, b) of the theta-dependent augmented-Lagrangian terms.

    Differentiates -x (a.y + c + s) - <X, At(y) - S - C>
    + (a.y + c + s)^2 / (2 rho) + |At(y) - S - C|^2 / (2 mu); the classifier
    loss gradient is added by the caller. All of a, c, C, A are affine in
    theta, so the gradient reads entries off M = -X + R/mu at the indices the
    parameters occupy.
    """
    R = apply_At(problem, y) - S - problem.C
    sigma = float(problem.a @ y) + problem.c + s
    k1 = -x + (0.0 if np.isinf(rho) else sigma / rho)
    M = -X + R / mu

    block = problem.block
    dW = [np.zeros_like(w) for w in params.W]
    db = [np.zeros_like(bv) for bv in params.b]
    for l in range(1, params.L + 1):
        prev = block.x_offset(l - 1)
        prev_size = block.block_size(l - 1)
        off = block.x_offset(l)
        y_aff = y[problem.affine_rows[l - 1]]
        y_deq = y[problem.diageq_rows[l - 1]]
        m_prev0 = M[prev:prev + prev_size, 0]
        m_cross = M[prev:prev + prev_size, off:off + params.h]
        dW[l - 1] = np.outer(y_aff, m_prev0) - (m_cross * y_deq[None, :]).T
        db[l - 1] = -k1 * y_aff - y_deq * M[0, off:off + params.h]
    out_off = block.x_offset(params.L)
    dW[params.L][0] = -M[0, out_off:out_off + params.h]
    db[params.L][0] = k1
    return dW, db


def lift_rank_one(problem: SdpProblem, trace: ForwardTrace) -> np.ndarray:
    """Feasible primal point from a forward trace: vv^T plus induced slacks.

    The slack diagonal entries are whatever makes each slacked row an
    equality; they are nonnegative exactly when the traced input lies in the
    region.
    """
    n = problem.n
    v = np.concatenate([[1.0], trace.x0] + [p for p in trace.postacts])
    X = np.zeros((n, n))
    nc = problem.block.n_core
    X[:nc, :nc] = np.outer(v, v)
    vals = apply_A(problem, X)
    for row, slack in enumerate(problem.slack_of_row):
        if slack >= 0:
            X[slack, slack] = problem.a[row] - vals[row]
    return X
