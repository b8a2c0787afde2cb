"""Rigorous certification of the safety bound from approximate dual iterates.

An approximate dual point y gives S~ = A^T(y) - C which may fail positive
semidefiniteness by a little. For every feasible primal X with tr(X) <= tau,

    <C, X> + c = a.y + c - <S~, X> <= a.y + c + tau * max(0, -lambda_min(S~)),

so a trace cap tau derived from the constraint set converts the dual value
into a valid upper bound without an exact solve. The cap follows the
nuclear-norm recursion sqrt(t_l) <= |W_l|_2 sqrt(t_{l-1}) + |b_l|_2 seeded by
the input constraint, plus a budget for every slack entry.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import sdpform
from .network import NetworkParams
from .sdpform import InputRegion, SdpProblem


@dataclass(frozen=True)
class CertifiedBound:
    dual_value: float
    lambda_min: float
    tau: float
    certified: float
    safe: bool

    def to_json(self, **extra) -> str:
        payload = asdict(self)
        payload.update(extra)
        return json.dumps(payload)


def trace_cap(params: NetworkParams, region: InputRegion) -> float:
    """Upper bound on tr(X) over all feasible primal points, slacks included."""
    d, h, L = params.d, params.h, params.L
    caps = [region.eps**2 if region.p == 2 else d * region.eps**2]
    for l in range(L):
        w_norm = float(np.linalg.norm(params.W[l], 2))
        b_norm = float(np.linalg.norm(params.b[l]))
        caps.append((w_norm * np.sqrt(caps[-1]) + b_norm) ** 2)

    slack_budget = caps[0]  # input slack(s): eps^2, or d of them for p = inf
    for l in range(L):
        row_norm_sum = float(np.linalg.norm(params.W[l], axis=1).sum())
        b_l1 = float(np.abs(params.b[l]).sum())
        post_sum = np.sqrt(h * caps[l + 1])  # sum_j P[x_l]_j <= sqrt(h tr)
        slack_budget += post_sum  # nonnegativity slacks
        slack_budget += b_l1 + post_sum + row_norm_sum * np.sqrt(caps[l])  # affine slacks
    return 1.0 + float(sum(caps)) + float(slack_budget)


def certify_dual(problem: SdpProblem, y: np.ndarray, params: NetworkParams,
                 region: InputRegion) -> CertifiedBound:
    """Valid upper bound on the relaxation optimum from any dual vector y."""
    s_tilde = sdpform.apply_At(problem, y) - problem.C
    nc = problem.block.n_core
    lam_core = float(np.linalg.eigvalsh(s_tilde[:nc, :nc])[0])
    slack_diag = s_tilde.diagonal()[nc:]
    lam_min = min(lam_core, float(slack_diag.min())) if slack_diag.size else lam_core
    tau = trace_cap(params, region)
    dual_value = float(problem.a @ y) + problem.c
    certified = dual_value + tau * max(0.0, -lam_min)
    return CertifiedBound(
        dual_value=dual_value,
        lambda_min=lam_min,
        tau=tau,
        certified=certified,
        safe=certified <= 0.0,
    )


def certify_recall(params: NetworkParams, tol: float = 1e-6,
                   max_inner: int = 20000) -> bool:
    """True iff the logit is certifiably <= 0 on the whole unit l2 ball,
    which covers every inner-class point."""
    from . import admm  # local import: admm also certifies checkpoints through us

    region = InputRegion(p=2.0, eps=1.0)
    problem = sdpform.build_sdp(params, region)
    frozen = admm.solve_frozen(problem, tol=tol, max_inner=max_inner)
    return certify_dual(problem, frozen.y, params, region).safe
