"""
Generic two-block ADMM engine.

Solves  min H(u) + G(v)  subject to  Au + Bv = b  with the iteration

    u+   = argmin H(u) - <lam, Au> + tau/2 ||b - Au - Bv||^2
    v+   = argmin G(v) - <lam, Bv> + tau/2 ||b - Au+ - Bv||^2
    lam+ = lam + tau (b - Au+ - Bv+)

where the two argmins are supplied by the problem instance as oracles.
The order of the two block updates can be swapped.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, List, Optional, Tuple

import numpy as np

from src.lib import config
from src.lib.errors import SolverError, ValidationError
from src.lib.linmap import ConstraintSystem
from src.lib.policies import (
    NONSMOOTH_FIRST,
    SMOOTH_FIRST,
    AccelMemory,
    ConstantPolicy,
    PenaltyPolicy,
)

logger = logging.getLogger(__name__)

ORDERS = (SMOOTH_FIRST, NONSMOOTH_FIRST)
STATUSES = ("converged", "max_iter", "diverged", "solver_error")


@dataclass(frozen=True)
class ProblemInstance:
    """
    A constraint system plus the two block oracles.

    solve_u(v, lam, tau) and solve_v(u, lam, tau) return the block
    minimizers; objective(u, v) is the reported objective; recover(u, v)
    returns the recovered signal, image or coefficient vector.
    """

    constraint: ConstraintSystem
    solve_u: Callable
    solve_v: Callable
    objective: Callable
    init: Tuple[np.ndarray, np.ndarray, np.ndarray]
    name: str
    recover: Optional[Callable] = None

    def __post_init__(self):
        u0, v0, lam0 = self.init
        cs = self.constraint
        if len(u0) != cs.A.in_dim or len(v0) != cs.B.in_dim or len(lam0) != cs.A.out_dim:
            raise ValidationError(
                f"{self.name}: initial iterate dimensions ({len(u0)}, {len(v0)}, {len(lam0)}) "
                f"do not match the constraint system"
            )

    def output(self, u, v) -> np.ndarray:
        return self.recover(u, v) if self.recover is not None else v


@dataclass(frozen=True)
class SolverState:
    """
    Iterates after k steps. u_prev/v_prev/lam_prev are the points the last
    step started from; lam_hat is that step's intermediate dual.
    """

    u: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    tau: float
    k: int = 0
    u_prev: Optional[np.ndarray] = None
    v_prev: Optional[np.ndarray] = None
    lam_prev: Optional[np.ndarray] = None
    lam_hat: Optional[np.ndarray] = None
    policy_memory: Any = None


@dataclass(frozen=True)
class Residuals:
    r: np.ndarray
    d: np.ndarray
    r_norm: float
    d_norm: float
    r_rel_denom: float
    d_rel_denom: float


@dataclass(frozen=True)
class SolveConfig:
    eps_tol: float = config.DEFAULT_EPS_TOL
    max_iter: int = 2000
    order: str = SMOOTH_FIRST
    policy: PenaltyPolicy = field(default_factory=ConstantPolicy)
    record_trace: bool = True
    tau0: float = config.DEFAULT_TAU0
    divergence_limit: float = config.DIVERGENCE_LIMIT

    def __post_init__(self):
        if not self.eps_tol >= 0:
            raise ValidationError(f"eps_tol must be nonnegative, got {self.eps_tol}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.order not in ORDERS:
            raise ValidationError(f"order must be one of {ORDERS}, got {self.order!r}")
        if not self.policy.tau_min <= self.tau0 <= self.policy.tau_max:
            raise ValidationError(
                f"tau0={self.tau0} outside [{self.policy.tau_min}, {self.policy.tau_max}]"
            )


@dataclass(frozen=True)
class TraceRow:
    k: int
    r_norm: float
    d_norm: float
    tau: float
    objective: float
    combined: Optional[float] = None
    restart: Optional[bool] = None


@dataclass
class SolveReport:
    status: str
    iterations: int
    final_objective: float
    trace: List[TraceRow]
    final_u: np.ndarray
    final_v: np.ndarray
    final_tau: float
    problem: str = ""
    policy: str = ""
    order: str = SMOOTH_FIRST
    restarts: int = 0
    policy_params: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self, include_trace: bool = True) -> dict:
        out = {
            "problem": self.problem,
            "policy": self.policy,
            "policy_params": self.policy_params,
            "order": self.order,
            "status": self.status,
            "iterations": self.iterations,
            "final_objective": _json_float(self.final_objective),
            "final_tau": self.final_tau,
            "restarts": self.restarts,
            "final_u": _encode_vector(self.final_u),
            "final_v": _encode_vector(self.final_v),
        }
        if include_trace:
            out["trace"] = [
                {key: _json_float(val) for key, val in asdict(row).items()} for row in self.trace
            ]
        return out


def _json_float(x):
    if x is None or isinstance(x, int):
        return x
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _encode_vector(x: np.ndarray) -> dict:
    if np.iscomplexobj(x):
        return {"real": np.real(x).tolist(), "imag": np.imag(x).tolist()}
    return {"real": np.asarray(x, dtype=float).tolist()}


# =============================================================================
# Iteration
# =============================================================================


def initial_state(prob: ProblemInstance, cfg: SolveConfig) -> SolverState:
    u0, v0, lam0 = (np.array(x, copy=True) for x in prob.init)
    memory = cfg.policy.initial_memory(u0, v0, lam0, cfg.order)
    return SolverState(u=u0, v=v0, lam=lam0, tau=float(cfg.tau0), policy_memory=memory)


def step(state: SolverState, prob: ProblemInstance, cfg: SolveConfig) -> SolverState:
    """One ADMM iteration in the configured block order."""
    cs = prob.constraint
    tau = state.tau
    lam = state.lam
    if cfg.order == SMOOTH_FIRST:
        u = prob.solve_u(state.v, lam, tau)
        Au = cs.A.apply(u)
        lam_hat = lam + tau * (cs.b - Au - cs.B.apply(state.v))
        v = prob.solve_v(u, lam, tau)
        Bv = cs.B.apply(v)
    else:
        v = prob.solve_v(state.u, lam, tau)
        Bv = cs.B.apply(v)
        lam_hat = lam + tau * (cs.b - cs.A.apply(state.u) - Bv)
        u = prob.solve_u(v, lam, tau)
        Au = cs.A.apply(u)
    return replace(
        state,
        u=u,
        v=v,
        lam=lam + tau * (cs.b - Au - Bv),
        k=state.k + 1,
        u_prev=state.u,
        v_prev=state.v,
        lam_prev=lam,
        lam_hat=lam_hat,
    )


def residuals(
    state_before: SolverState,
    state_after: SolverState,
    cs: ConstraintSystem,
    order: str = SMOOTH_FIRST,
) -> Residuals:
    """
    Primal residual r = b - Au - Bv and the dual residual of the block
    updated second, lagged against the step's starting point.
    """
    Au = cs.A.apply(state_after.u)
    Bv = cs.B.apply(state_after.v)
    r = cs.b - Au - Bv
    tau = state_before.tau
    if order == SMOOTH_FIRST:
        d = tau * cs.A.adjoint_apply(cs.B.apply(state_after.v - state_before.v))
        d_denom = np.linalg.norm(cs.A.adjoint_apply(state_after.lam))
    else:
        d = tau * cs.B.adjoint_apply(cs.A.apply(state_after.u - state_before.u))
        d_denom = np.linalg.norm(cs.B.adjoint_apply(state_after.lam))
    r_denom = max(np.linalg.norm(Au), np.linalg.norm(Bv), np.linalg.norm(cs.b))
    return Residuals(
        r=r,
        d=d,
        r_norm=float(np.linalg.norm(r)),
        d_norm=float(np.linalg.norm(d)),
        r_rel_denom=float(r_denom),
        d_rel_denom=float(d_denom),
    )


def check_stop(res: Residuals, eps_tol: float) -> bool:
    """Relative primal and dual residual test; both bounds are inclusive."""
    return res.r_norm <= eps_tol * res.r_rel_denom and res.d_norm <= eps_tol * res.d_rel_denom


# =============================================================================
# Fast ADMM with restart
# =============================================================================


def _carried(state: SolverState, order: str) -> np.ndarray:
    """The block that feeds the next step: v for smooth_first, u otherwise."""
    return state.v if order == SMOOTH_FIRST else state.u


def _extrapolated(state: SolverState, order: str) -> SolverState:
    mem = state.policy_memory
    if order == SMOOTH_FIRST:
        return replace(state, v=mem.x_hat, lam=mem.lam_hat)
    return replace(state, u=mem.x_hat, lam=mem.lam_hat)


def _accelerated_pair(state, prob, cfg) -> Tuple[SolverState, SolverState]:
    if not isinstance(state.policy_memory, AccelMemory):
        raise ValidationError("accelerated steps need an accelerated policy")
    cs = prob.constraint
    order = cfg.order
    eta = getattr(cfg.policy, "eta", config.RESTART_ETA)
    mem = state.policy_memory

    before = _extrapolated(state, order)
    after = step(before, prob, cfg)

    tau = before.tau
    x_now = _carried(after, order)
    x_hat = _carried(before, order)
    block = cs.B if order == SMOOTH_FIRST else cs.A
    combined = (
        np.linalg.norm(after.lam - before.lam) ** 2 / tau
        + tau * np.linalg.norm(block.apply(x_now - x_hat)) ** 2
    )

    if mem.combined is None or combined < eta * mem.combined:
        alpha = (1.0 + math.sqrt(1.0 + 4.0 * mem.alpha**2)) / 2.0
        momentum = (mem.alpha - 1.0) / alpha
        x_prev = _carried(state, order)
        new_mem = AccelMemory(
            alpha=alpha,
            x_hat=x_now + momentum * (x_now - x_prev),
            lam_hat=after.lam + momentum * (after.lam - state.lam),
            combined=float(combined),
            measured=float(combined),
            restarts=mem.restarts,
        )
    else:
        logger.debug("restart at k=%d (combined residual %.3e)", after.k, combined)
        new_mem = AccelMemory(
            alpha=1.0,
            x_hat=x_now.copy(),
            lam_hat=after.lam.copy(),
            combined=mem.combined / eta,
            measured=float(combined),
            restarted=True,
            restarts=mem.restarts + 1,
        )
    return before, replace(after, policy_memory=new_mem)


def accelerated_step(state: SolverState, prob: ProblemInstance, cfg: SolveConfig) -> SolverState:
    """
    One fast-ADMM step: a plain step from the extrapolated point, then a
    momentum update. The step restarts (momentum reset to 1, extrapolation
    dropped) when the combined residual fails to shrink by the factor eta.
    """
    return _accelerated_pair(state, prob, cfg)[1]


# =============================================================================
# Driver
# =============================================================================


def _diverged(state: SolverState, limit: float) -> bool:
    for x in (state.u, state.v, state.lam):
        norm = np.linalg.norm(x)
        if not np.isfinite(norm) or norm > limit:
            return True
    return False


def _objective(prob: ProblemInstance, u, v) -> float:
    with np.errstate(all="ignore"):
        try:
            return float(prob.objective(u, v))
        except (ValueError, FloatingPointError, OverflowError):
            return float("nan")


def solve(prob: ProblemInstance, cfg: SolveConfig) -> SolveReport:
    """
    Run ADMM until the stopping test holds or max_iter steps are taken.

    Oracle failures end the run with status solver_error; iterates growing
    past the divergence limit or turning non-finite end it with diverged.
    """
    cs = prob.constraint
    state = initial_state(prob, cfg)
    trace: List[TraceRow] = []
    status = "max_iter"
    accelerated = cfg.policy.accelerated

    try:
        while state.k < cfg.max_iter:
            if accelerated:
                before, after = _accelerated_pair(state, prob, cfg)
            else:
                before, after = state, step(state, prob, cfg)

            with np.errstate(all="ignore"):
                res = residuals(before, after, cs, cfg.order)
            if cfg.record_trace:
                accel = after.policy_memory if accelerated else None
                trace.append(
                    TraceRow(
                        k=after.k,
                        r_norm=res.r_norm,
                        d_norm=res.d_norm,
                        tau=after.tau,
                        objective=_objective(prob, after.u, after.v),
                        combined=accel.measured if accel else None,
                        restart=accel.restarted if accel else None,
                    )
                )

            if _diverged(after, cfg.divergence_limit):
                logger.warning("%s diverged at k=%d (tau=%g)", prob.name, after.k, after.tau)
                state = after
                status = "diverged"
                break

            if check_stop(res, cfg.eps_tol):
                state = after
                status = "converged"
                break
            tau_next, memory = cfg.policy.next_tau(before, after, res, cs, cfg.order, after.policy_memory)
            state = replace(after, tau=tau_next, policy_memory=memory)
    except SolverError as exc:
        logger.warning("%s: solver error at k=%d: %s", prob.name, state.k + 1, exc)
        status = "solver_error"

    restarts = state.policy_memory.restarts if accelerated else 0
    return SolveReport(
        status=status,
        iterations=state.k,
        final_objective=_objective(prob, state.u, state.v),
        trace=trace,
        final_u=state.u,
        final_v=state.v,
        final_tau=state.tau,
        problem=prob.name,
        policy=cfg.policy.kind,
        order=cfg.order,
        restarts=restarts,
        policy_params=cfg.policy.describe(),
    )
