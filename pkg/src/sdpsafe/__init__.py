"""Provably safe ReLU classifier training via an ADMM-solved semidefinite bound."""

from .network import NetworkParams, init_xavier, forward, evaluate
from .sdpform import InputRegion, SdpProblem, build_sdp
from .admm import TrainConfig, run_training, solve_frozen
from .attack import PgdConfig, pgd_lower_bound
from .verify import CertifiedBound, certify_dual, certify_recall, trace_cap

__all__ = [
    "NetworkParams",
    "init_xavier",
    "forward",
    "evaluate",
    "InputRegion",
    "SdpProblem",
    "build_sdp",
    "TrainConfig",
    "run_training",
    "solve_frozen",
    "PgdConfig",
    "pgd_lower_bound",
    "CertifiedBound",
    "certify_dual",
    "certify_recall",
    "trace_cap",
]
