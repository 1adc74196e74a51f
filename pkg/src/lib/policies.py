"""
Penalty parameter policies for ADMM.

Each policy maps the solver history to the next penalty tau. Per-solve
state (spectral anchors, momentum) is returned as a memory object that the
engine stores on the solver state, so policy objects themselves are
immutable and can be shared between concurrent solves.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Any, Optional

import numpy as np

from src.lib import config
from src.lib.errors import ValidationError
from src.lib.linmap import inner

logger = logging.getLogger(__name__)

SMOOTH_FIRST = "smooth_first"
NONSMOOTH_FIRST = "nonsmooth_first"


# =============================================================================
# Rules
# =============================================================================


def update_constant(tau: float) -> float:
    return tau


@dataclass(frozen=True)
class BalanceParams:
    mu: float = config.BALANCE_MU
    eta: float = config.BALANCE_ETA
    tau_min: float = config.TAU_MIN
    tau_max: float = config.TAU_MAX

    def __post_init__(self):
        if not (self.mu > 1 and self.eta > 1):
            raise ValidationError(f"mu and eta must exceed 1, got {self.mu}, {self.eta}")
        if not 0 < self.tau_min < self.tau_max:
            raise ValidationError(f"need 0 < tau_min < tau_max, got {self.tau_min}, {self.tau_max}")


def update_balance(tau: float, res, p: BalanceParams) -> float:
    """Multiply or divide tau by eta when one residual dominates the other by mu."""
    if res.r_norm > p.mu * res.d_norm:
        tau = tau * p.eta
    elif res.d_norm > p.mu * res.r_norm:
        tau = tau / p.eta
    return min(max(tau, p.tau_min), p.tau_max)


@dataclass(frozen=True)
class SpectralMemory:
    """Anchor iterate for the spectral secant pairs."""

    Au: np.ndarray
    Bv: np.ndarray
    lam_hat: np.ndarray
    lam: np.ndarray
    k0: int
    period: int = config.SPECTRAL_PERIOD


def _spectral_estimate(dx: np.ndarray, dlam: np.ndarray, eps_corr: float) -> Optional[float]:
    """Hybrid steepest-descent / minimum-gradient curvature, or None if unsafe."""
    nx = np.linalg.norm(dx)
    nl = np.linalg.norm(dlam)
    if nx == 0 or nl == 0:
        return None
    cross = inner(dx, dlam)
    if cross / (nx * nl) <= eps_corr:
        return None
    sd = inner(dlam, dlam) / cross
    mg = cross / inner(dx, dx)
    return mg if 2.0 * mg > sd else sd - mg / 2.0


def update_spectral(
    state,
    mem: Optional[SpectralMemory],
    cs,
    eps_corr: float = config.SPECTRAL_EPS_CORR,
    order: str = SMOOTH_FIRST,
    period: int = config.SPECTRAL_PERIOD,
):
    """
    Spectral penalty estimate from secant pairs since the anchor iterate.

    The block updated first pairs with the intermediate dual lam_hat, the
    other with lam. Returns (tau, refreshed memory); with no anchor yet, or
    when both correlation safeguards fail, tau is returned unchanged.
    """
    Au = cs.A.apply(state.u)
    Bv = cs.B.apply(state.v)
    refreshed = SpectralMemory(
        Au=Au, Bv=Bv, lam_hat=state.lam_hat, lam=state.lam, k0=state.k, period=period
    )
    if mem is None:
        return state.tau, refreshed

    dh = Au - mem.Au
    dg = Bv - mem.Bv
    dlam_hat = state.lam_hat - mem.lam_hat
    dlam = state.lam - mem.lam
    if order == SMOOTH_FIRST:
        alpha = _spectral_estimate(dh, dlam_hat, eps_corr)
        beta = _spectral_estimate(dg, dlam, eps_corr)
    else:
        alpha = _spectral_estimate(dh, dlam, eps_corr)
        beta = _spectral_estimate(dg, dlam_hat, eps_corr)

    if alpha is not None and beta is not None:
        tau = math.sqrt(alpha * beta)
    elif alpha is not None:
        tau = alpha
    elif beta is not None:
        tau = beta
    else:
        logger.debug("spectral safeguard failed on both sides at k=%d", state.k)
        tau = state.tau
    return tau, refreshed


@dataclass
class AccelMemory:
    """
    Momentum state for fast ADMM with restart.

    combined is the reference the next step's combined residual must beat
    (the last measured value, or the previous reference over eta after a
    restart); measured is the value the last step actually produced.
    """

    alpha: float
    x_hat: np.ndarray
    lam_hat: np.ndarray
    combined: Optional[float] = None
    measured: Optional[float] = None
    restarted: bool = False
    restarts: int = 0


# =============================================================================
# Policies
# =============================================================================


@dataclass(frozen=True)
class PenaltyPolicy(ABC):
    tau_min: float = config.TAU_MIN
    tau_max: float = config.TAU_MAX
    adapt_horizon: int = config.ADAPT_HORIZON

    kind = "abstract"
    accelerated = False

    def __post_init__(self):
        if not 0 < self.tau_min < self.tau_max:
            raise ValidationError(f"need 0 < tau_min < tau_max, got {self.tau_min}, {self.tau_max}")
        if self.adapt_horizon < 0:
            raise ValidationError(f"adapt_horizon must be >= 0, got {self.adapt_horizon}")

    def initial_memory(self, u, v, lam, order: str) -> Any:
        return None

    def next_tau(self, before, after, res, cs, order: str, memory):
        """Penalty for the next iteration; adaptation stops after adapt_horizon."""
        if after.k > self.adapt_horizon:
            return after.tau, memory
        tau, memory = self._propose(before, after, res, cs, order, memory)
        if not (math.isfinite(tau) and tau > 0):
            logger.warning(
                "%s proposed invalid tau=%r at k=%d; keeping %g", self.kind, tau, after.k, after.tau
            )
            tau = after.tau
        return min(max(tau, self.tau_min), self.tau_max), memory

    @abstractmethod
    def _propose(self, before, after, res, cs, order, memory): ...

    def describe(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class ConstantPolicy(PenaltyPolicy):
    kind = "constant"

    def next_tau(self, before, after, res, cs, order, memory):
        return update_constant(after.tau), memory

    def _propose(self, before, after, res, cs, order, memory):
        return update_constant(after.tau), memory


@dataclass(frozen=True)
class ResidualBalancePolicy(PenaltyPolicy):
    mu: float = config.BALANCE_MU
    eta: float = config.BALANCE_ETA

    kind = "residual_balance"

    def __post_init__(self):
        super().__post_init__()
        BalanceParams(self.mu, self.eta, self.tau_min, self.tau_max)

    @property
    def params(self) -> BalanceParams:
        return BalanceParams(self.mu, self.eta, self.tau_min, self.tau_max)

    def _propose(self, before, after, res, cs, order, memory):
        return update_balance(after.tau, res, self.params), memory


@dataclass(frozen=True)
class SpectralPolicy(PenaltyPolicy):
    period: int = config.SPECTRAL_PERIOD
    eps_corr: float = config.SPECTRAL_EPS_CORR

    kind = "spectral"

    def __post_init__(self):
        super().__post_init__()
        if self.period < 1:
            raise ValidationError(f"spectral period must be >= 1, got {self.period}")
        if not 0 <= self.eps_corr < 1:
            raise ValidationError(f"eps_corr must lie in [0, 1), got {self.eps_corr}")

    def _propose(self, before, after, res, cs, order, memory):
        if memory is not None and after.k - memory.k0 < self.period:
            return after.tau, memory
        return update_spectral(after, memory, cs, eps_corr=self.eps_corr, order=order, period=self.period)


@dataclass(frozen=True)
class AcceleratedRestartPolicy(PenaltyPolicy):
    """Constant penalty; the engine runs Nesterov-accelerated steps with restart."""

    eta: float = config.RESTART_ETA

    kind = "accelerated"
    accelerated = True

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.eta < 1:
            raise ValidationError(f"restart eta must lie in (0, 1), got {self.eta}")

    def initial_memory(self, u, v, lam, order):
        x = v if order == SMOOTH_FIRST else u
        return AccelMemory(alpha=1.0, x_hat=x.copy(), lam_hat=lam.copy())

    def next_tau(self, before, after, res, cs, order, memory):
        return after.tau, memory

    def _propose(self, before, after, res, cs, order, memory):
        return after.tau, memory


POLICIES = {
    cls.kind: cls
    for cls in (ConstantPolicy, ResidualBalancePolicy, SpectralPolicy, AcceleratedRestartPolicy)
}


def make_policy(kind: str, **params) -> PenaltyPolicy:
    """Build a policy by kind name; unknown parameters are rejected."""
    try:
        cls = POLICIES[kind]
    except KeyError:
        raise ValidationError(f"unknown policy {kind!r}; expected one of {sorted(POLICIES)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for policy {kind!r}: {exc}") from exc
