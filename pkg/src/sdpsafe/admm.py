"""Dual-form ADMM: inner (y, S, X) iterations, tolerance-gated logit multiplier
steps, and interleaved weight updates; plus a frozen-weights mode that solves
the SDP itself to a target residual.

One inner iteration is:
  1. y  <- (A A^T / mu + a a^T / rho)^{-1} [A(S + C)/mu + A(X) - a(c + s)/rho + a x]
  2. S  <- psd_project(A^T(y) - C - mu X)
  3. X  <- X - nu (A^T(y) - S - C) / mu
The logit steps (s, x) and the weight step run only once the dual residual
|A^T(y) - C - S|_F drops below the tolerance delta.

Slack rows and columns of every iterate stay exactly diagonal (no constraint
or objective touches their off-diagonal entries and the initial iterates are
block-diagonal), so the S projection eigendecomposes the core block only and
clips the slack diagonal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import dataset, network, numerics, sdpform
from .network import NetworkParams
from .sdpform import InputRegion, SdpProblem, apply_A, apply_At, gram_AAt


@dataclass
class AdmmState:
    y: np.ndarray
    S: np.ndarray
    X: np.ndarray
    s: float
    x: float
    mu: float
    rho: float
    delta: float
    alpha: float
    nu: float
    eta: float
    inner_steps: int = 0
    outer_steps: int = 0

    def copy(self) -> "AdmmState":
        return replace(self, y=self.y.copy(), S=self.S.copy(), X=self.X.copy())


@dataclass
class LogRecord:
    step: int
    inner_iters: int
    lagrangian: float
    logit_bound: float
    accuracy: float


@dataclass
class TrainLog:
    records: list[LogRecord] = field(default_factory=list)

    def append(self, rec: LogRecord) -> None:
        self.records.append(rec)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "inner_iters", "lagrangian", "logit_bound", "accuracy"])
            for r in self.records:
                writer.writerow([r.step, r.inner_iters, repr(r.lagrangian),
                                 repr(r.logit_bound), repr(r.accuracy)])


@dataclass
class TrainConfig:
    d: int
    h: int
    L: int = 2
    p: float = 2.0
    eps_safe: float = 1.0
    R: float = 1.3
    budget: int = 5000
    mu: float = 0.65
    rho: float = 1.21
    delta: float = 2.4e-3
    alpha: float = 0.046
    eta: float = 2.65e-3
    nu: float = 1.6
    batch_size: int = 256
    seed: int = 0
    momentum: float = 0.0
    max_inner_per_step: int = 1000
    checkpoint_every: int = 100
    frozen_tol: float = 1e-6
    frozen_max_inner: int = 20000
    select_samples: int = 20000

    def validate(self) -> None:
        if min(self.d, self.h, self.L, self.budget, self.batch_size) < 1:
            raise ValueError("d, h, L, budget, batch_size must be >= 1")
        for name in ("mu", "rho", "delta", "eta", "alpha", "nu"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TrainResult:
    params: NetworkParams
    log: TrainLog
    best_safe_params: NetworkParams | None = None
    best_safe_accuracy: float = -1.0
    best_safe_step: int = -1


@dataclass
class FrozenResult:
    y: np.ndarray
    S: np.ndarray
    X: np.ndarray
    residual: float
    iterations: int
    converged: bool
    primal_infeas: float = 0.0
    gap: float = 0.0


def _project_psd_block(problem: SdpProblem, M: np.ndarray) -> np.ndarray:
    """psd_project specialized to core-block + slack-diagonal matrices."""
    nc = problem.block.n_core
    out = np.zeros_like(M)
    out[:nc, :nc] = numerics.psd_project(M[:nc, :nc])
    sl = np.arange(nc, problem.n)
    out[sl, sl] = np.clip(M[sl, sl], 0.0, None)
    return out


def init_state(problem: SdpProblem, mu: float, rho: float, delta: float,
               alpha: float, eta: float, nu: float = 1.6) -> AdmmState:
    """y = 0, S = psd_project(-C), X = 0, s = 0, x = 0."""
    n = problem.n
    return AdmmState(
        y=np.zeros(problem.m),
        S=_project_psd_block(problem, -problem.C),
        X=np.zeros((n, n)),
        s=0.0,
        x=0.0,
        mu=mu,
        rho=rho,
        delta=delta,
        alpha=alpha,
        nu=nu,
        eta=eta,
    )


def prepare_y_solver(problem: SdpProblem, mu: float, rho: float) -> numerics.SpdSolver:
    """Factor A A^T / mu + a a^T / rho once per weight configuration."""
    K = gram_AAt(problem) / mu
    if not math.isinf(rho):
        K = K + np.outer(problem.a, problem.a) / rho
    return numerics.SpdSolver(K)


def _y_rhs(state: AdmmState, problem: SdpProblem) -> np.ndarray:
    rhs = apply_A(problem, state.S + problem.C) / state.mu + apply_A(problem, state.X)
    coef = state.x
    if not math.isinf(state.rho):
        coef -= (problem.c + state.s) / state.rho
    return rhs + coef * problem.a


def update_y(state: AdmmState, problem: SdpProblem,
             solver: numerics.SpdSolver | None = None) -> np.ndarray:
    if solver is None:
        solver = prepare_y_solver(problem, state.mu, state.rho)
    state.y = solver.solve(_y_rhs(state, problem))
    return state.y


def update_S(state: AdmmState, problem: SdpProblem) -> np.ndarray:
    V = apply_At(problem, state.y) - problem.C - state.mu * state.X
    state.S = _project_psd_block(problem, V)
    return state.S


def update_X(state: AdmmState, problem: SdpProblem) -> np.ndarray:
    R = apply_At(problem, state.y) - state.S - problem.C
    state.X = state.X - (state.nu / state.mu) * R
    return state.X


def dual_residual(state: AdmmState, problem: SdpProblem) -> float:
    return float(np.linalg.norm(apply_At(problem, state.y) - problem.C - state.S))


def inner_converged(state: AdmmState, problem: SdpProblem, delta: float | None = None) -> bool:
    tol = state.delta if delta is None else delta
    return dual_residual(state, problem) <= tol


def update_s_x(state: AdmmState, problem: SdpProblem) -> tuple[float, float]:
    dual_value = float(problem.a @ state.y) + problem.c
    v = state.rho * state.x - dual_value
    state.s = max(0.0, v)
    state.x = state.x - state.alpha * (dual_value + state.s) / state.rho
    return state.s, state.x


def _inner_step(state: AdmmState, problem: SdpProblem,
                solver: numerics.SpdSolver) -> float:
    """One pass of steps 1-3 sharing a single A^T(y); returns the residual."""
    state.y = solver.solve(_y_rhs(state, problem))
    at_y = apply_At(problem, state.y)
    V = at_y - problem.C - state.mu * state.X
    state.S = _project_psd_block(problem, V)
    R = at_y - state.S - problem.C
    state.X = state.X - (state.nu / state.mu) * R
    state.inner_steps += 1
    if state.inner_steps % 50 == 0:
        # nu = 1.6 lets X drift slightly indefinite; re-project periodically
        state.X = _project_psd_block(problem, state.X)
    return float(np.linalg.norm(R))


def lagrangian(problem: SdpProblem, state: AdmmState, classifier_loss: float = 0.0) -> float:
    """Augmented Lagrangian value at the current iterates."""
    R = apply_At(problem, state.y) - state.S - problem.C
    sigma = float(problem.a @ state.y) + problem.c + state.s
    val = classifier_loss - state.x * sigma - float(np.tensordot(state.X, R))
    val += float(np.tensordot(R, R)) / (2.0 * state.mu)
    if not math.isinf(state.rho):
        val += sigma**2 / (2.0 * state.rho)
    return val


def weight_step(
    state: AdmmState,
    params: NetworkParams,
    problem: SdpProblem,
    batch: tuple[np.ndarray, np.ndarray],
    velocity: tuple[list[np.ndarray], list[np.ndarray]] | None = None,
    momentum: float = 0.0,
) -> tuple[NetworkParams, SdpProblem]:
    """Gradient step on theta against classifier loss + Lagrangian terms,
    then rebuild the SDP data at the new weights."""
    bx, by = batch
    _, (dWc, dbc) = network.loss_and_grad(params, bx, by)
    dWs, dbs = sdpform.lagrangian_theta_grad(
        problem, params, state.y, state.S, state.X, state.s, state.x,
        state.mu, state.rho,
    )
    new = params.copy()
    for l in range(params.L + 1):
        gw = dWc[l] + dWs[l]
        gb = dbc[l] + dbs[l]
        if velocity is not None and momentum > 0.0:
            velocity[0][l] = momentum * velocity[0][l] + gw
            velocity[1][l] = momentum * velocity[1][l] + gb
            gw, gb = velocity[0][l], velocity[1][l]
        new.W[l] = new.W[l] - state.eta * gw
        new.b[l] = new.b[l] - state.eta * gb
    state.outer_steps += 1
    return new, sdpform.build_sdp(new, problem.region)


def _primal_stats(state: AdmmState, problem: SdpProblem) -> tuple[float, float]:
    pinf = float(np.linalg.norm(apply_A(problem, state.X) - problem.a))
    pinf /= 1.0 + float(np.linalg.norm(problem.a))
    primal = float(np.tensordot(problem.C, state.X)) + problem.c
    dual = float(problem.a @ state.y) + problem.c
    gap = abs(dual - primal) / (1.0 + abs(dual) + abs(primal))
    return pinf, gap


def solve_frozen(
    problem: SdpProblem,
    tol: float = 1e-6,
    max_inner: int = 20000,
    mu: float = 1.0,
    nu: float = 1.6,
    state0: AdmmState | None = None,
) -> FrozenResult:
    """Run steps 1-3 on fixed weights until the iterates solve the SDP.

    The logit multiplier is frozen at x = -1 with s = 0 and rho -> inf: the
    term -x (a.y + c + s) then equals the dual objective a.y + c, turning the
    inner loop into the standard dual-ADMM whose fixed points are the KKT
    points of the SDP. (With x = 0 every dual-feasible point would be
    stationary and the loop could stall far from the optimum.)
    Stops when the dual residual |A^T(y) - C - S|_F falls below tol AND the
    relative primal infeasibility and duality gap fall below max(tol, 1e-8);
    the dual residual alone can dip early at points far from the optimum.
    """
    if state0 is None:
        state = init_state(problem, mu=mu, rho=math.inf, delta=tol, alpha=1.0, eta=0.0, nu=nu)
    else:
        state = state0.copy()
        state.mu, state.nu, state.rho = mu, nu, math.inf
    state.s, state.x = 0.0, -1.0
    solver = prepare_y_solver(problem, state.mu, state.rho)
    aux_tol = max(tol, 1e-8)
    resid = dual_residual(state, problem)
    pinf, gap = _primal_stats(state, problem)
    iters = 0
    while not (resid <= tol and pinf <= aux_tol and gap <= aux_tol) and iters < max_inner:
        resid = _inner_step(state, problem, solver)
        pinf, gap = _primal_stats(state, problem)
        iters += 1
    return FrozenResult(
        y=state.y, S=state.S, X=state.X, residual=resid, iterations=iters,
        converged=resid <= tol and pinf <= aux_tol and gap <= aux_tol,
        primal_infeas=pinf, gap=gap,
    )


def _sample_batch(config: TrainConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if config.p == 2:
        return dataset.sample_d2(config.batch_size, config.d, config.R, seed)
    return dataset.sample_dinf(config.batch_size, config.d, config.R, seed)


def run_training(config: TrainConfig, log_path=None) -> TrainResult:
    """Full training loop with periodic certified checkpointing.

    Every ``checkpoint_every`` weight steps the SDP is solved to
    ``frozen_tol`` at the current weights and certified; the
    highest-accuracy certified-safe checkpoint is retained.
    """
    from . import verify  # local import: verify depends on this module for recall checks

    config.validate()
    rng = np.random.default_rng(config.seed)
    params = network.init_xavier(config.d, config.h, config.L, seed=int(rng.integers(2**31)))
    region = InputRegion(p=config.p, eps=config.eps_safe)
    problem = sdpform.build_sdp(params, region)
    state = init_state(problem, mu=config.mu, rho=config.rho, delta=config.delta,
                       alpha=config.alpha, eta=config.eta, nu=config.nu)
    solver = prepare_y_solver(problem, state.mu, state.rho)
    velocity = None
    if config.momentum > 0.0:
        velocity = ([np.zeros_like(w) for w in params.W],
                    [np.zeros_like(b) for b in params.b])

    log = TrainLog()
    result = TrainResult(params=params, log=log)
    writer = None
    fh = None
    if log_path is not None:
        fh = open(log_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["iter", "inner_iters", "lagrangian", "logit_bound", "accuracy"])

    def consider_checkpoint(step: int) -> None:
        frozen = solve_frozen(problem, tol=config.frozen_tol,
                              max_inner=config.frozen_max_inner, mu=config.mu,
                              nu=config.nu, state0=state)
        cert = verify.certify_dual(problem, frozen.y, params, region)
        if cert.safe:
            ex, ey = _sample_batch_eval(config, seed=int(rng.integers(2**31)))
            acc, _ = network.evaluate(params, ex, ey)
            if acc > result.best_safe_accuracy:
                result.best_safe_params = params.copy()
                result.best_safe_accuracy = acc
                result.best_safe_step = step

    def _sample_batch_eval(cfg: TrainConfig, seed: int):
        if cfg.p == 2:
            return dataset.sample_d2(cfg.select_samples, cfg.d, cfg.R, seed)
        return dataset.sample_dinf(cfg.select_samples, cfg.d, cfg.R, seed)

    try:
        for step in range(1, config.budget + 1):
            # steps 1-3 run at least once; the gate (step 4) decides when the
            # multiplier and weight steps may follow
            inner = 0
            while True:
                resid = _inner_step(state, problem, solver)
                inner += 1
                if resid <= config.delta or inner >= config.max_inner_per_step:
                    break
            update_s_x(state, problem)
            batch = _sample_batch(config, seed=int(rng.integers(2**31)))
            loss, _ = network.loss_and_grad(params, *batch)
            logit_bound = float(problem.a @ state.y) + problem.c
            acc, _ = network.evaluate(params, *batch)
            rec = LogRecord(step=step, inner_iters=inner,
                            lagrangian=lagrangian(problem, state, loss),
                            logit_bound=logit_bound, accuracy=acc)
            log.append(rec)
            if writer is not None:
                writer.writerow([rec.step, rec.inner_iters, repr(rec.lagrangian),
                                 repr(rec.logit_bound), repr(rec.accuracy)])
            params, problem = weight_step(state, params, problem, batch,
                                          velocity=velocity, momentum=config.momentum)
            solver = prepare_y_solver(problem, state.mu, state.rho)
            if step % config.checkpoint_every == 0 or step == config.budget:
                consider_checkpoint(step)
    finally:
        if fh is not None:
            fh.close()

    result.params = params
    return result
