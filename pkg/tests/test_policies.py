#!/usr/bin/env python3
"""Unit tests for policies.py"""

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.lib.engine import ProblemInstance, Residuals, SolveConfig, SolverState, solve  # noqa: E402
from src.lib.errors import ValidationError  # noqa: E402
from src.lib.linmap import ConstraintSystem, IdentityMap  # noqa: E402
from src.lib.policies import (  # noqa: E402
    AcceleratedRestartPolicy,
    AccelMemory,
    BalanceParams,
    ConstantPolicy,
    ResidualBalancePolicy,
    SpectralMemory,
    SpectralPolicy,
    _spectral_estimate,
    make_policy,
    update_balance,
    update_constant,
    update_spectral,
)

CS = ConstraintSystem(IdentityMap(3), -IdentityMap(3), np.zeros(3))


def _res(r_norm, d_norm):
    return Residuals(np.zeros(1), np.zeros(1), r_norm, d_norm, 1.0, 1.0)


def _state(u, v, lam, lam_hat, tau=1.0, k=5):
    return SolverState(
        u=np.asarray(u, float),
        v=np.asarray(v, float),
        lam=np.asarray(lam, float),
        tau=tau,
        k=k,
        lam_hat=np.asarray(lam_hat, float),
    )


def _anchor(k0=3):
    zeros = np.zeros(3)
    return SpectralMemory(Au=zeros, Bv=zeros, lam_hat=zeros, lam=zeros, k0=k0)


# =============================================================================
# Tests for update_constant() and update_balance()
# =============================================================================


class TestUpdateConstant:
    def test_returns_input(self):
        assert update_constant(3.5) == 3.5


class TestUpdateBalance:
    """Tests for residual balancing."""

    def test_primal_dominates_increases(self):
        assert update_balance(1.0, _res(100.0, 1.0), BalanceParams()) == 2.0

    def test_dual_dominates_decreases(self):
        assert update_balance(1.0, _res(1.0, 100.0), BalanceParams()) == 0.5

    def test_balanced_unchanged(self):
        assert update_balance(1.0, _res(5.0, 1.0), BalanceParams()) == 1.0

    def test_ratio_exactly_mu_unchanged(self):
        """The dominance test is strict."""
        assert update_balance(1.0, _res(10.0, 1.0), BalanceParams()) == 1.0

    def test_clamped_to_bounds(self):
        p = BalanceParams(tau_min=0.1, tau_max=1.5)
        assert update_balance(1.0, _res(100.0, 1.0), p) == 1.5
        assert update_balance(0.15, _res(1.0, 100.0), p) == 0.1

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValidationError):
            BalanceParams(mu=1.0)
        with pytest.raises(ValidationError):
            BalanceParams(tau_min=2.0, tau_max=1.0)

    def test_zero_primal_residual_decreases(self):
        """||r|| = 0 against any dual residual divides tau by eta."""
        assert update_balance(4.0, _res(0.0, 1e-3), BalanceParams()) == 2.0

    @given(
        r=st.floats(min_value=1e-6, max_value=1e6),
        d=st.floats(min_value=1e-6, max_value=1e6),
        scale=st.floats(min_value=1e-3, max_value=1e3),
        tau=st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_scale_consistent(self, r, d, scale, tau):
        """Scaling both residual norms by one positive constant leaves the branch unchanged."""
        p = BalanceParams()
        ratio = r / d
        assume(abs(ratio - p.mu) > 1e-9 * p.mu and abs(ratio - 1.0 / p.mu) > 1e-9 / p.mu)
        assert update_balance(tau, _res(r, d), p) == update_balance(tau, _res(scale * r, scale * d), p)


# =============================================================================
# Tests for update_spectral()
# =============================================================================


class TestSpectralEstimate:
    """Tests for the curvature estimate of one secant pair."""

    def test_proportional_pair(self):
        """dlam = a * dx gives curvature a."""
        dx = np.array([1.0, -2.0, 0.5])
        assert _spectral_estimate(dx, 4.0 * dx, 0.2) == pytest.approx(4.0)

    def test_uncorrelated_pair_rejected(self):
        assert _spectral_estimate(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.2) is None

    def test_zero_step_rejected(self):
        assert _spectral_estimate(np.zeros(2), np.ones(2), 0.2) is None

    def test_negative_correlation_rejected(self):
        dx = np.array([1.0, 2.0])
        assert _spectral_estimate(dx, -dx, 0.2) is None


class TestUpdateSpectral:
    """Tests for update_spectral() on hand-built secant pairs."""

    def test_first_call_sets_anchor(self):
        state = _state([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], tau=2.0, k=4)
        tau, mem = update_spectral(state, None, CS)
        assert tau == 2.0
        assert mem.k0 == 4
        np.testing.assert_array_equal(mem.Bv, [0, -1, 0])

    def test_geometric_mean_smooth_first(self):
        """alpha pairs A u with lam_hat, beta pairs B v with lam."""
        x = np.array([1.0, 2.0, -1.0])
        y = np.array([0.5, -1.0, 2.0])
        # dh = x, dlam_hat = 4x; dg = -y, dlam = 9(-y)
        state = _state(u=x, v=y, lam=-9.0 * y, lam_hat=4.0 * x)
        tau, mem = update_spectral(state, _anchor(), CS, order="smooth_first")
        assert tau == pytest.approx(6.0)
        assert mem.k0 == state.k

    def test_geometric_mean_nonsmooth_first(self):
        """With the order swapped, A u pairs with lam and B v with lam_hat."""
        x = np.array([1.0, 2.0, -1.0])
        y = np.array([0.5, -1.0, 2.0])
        state = _state(u=x, v=y, lam=4.0 * x, lam_hat=-9.0 * y)
        tau, _ = update_spectral(state, _anchor(), CS, order="nonsmooth_first")
        assert tau == pytest.approx(6.0)

    def test_one_safeguard_fails(self):
        """Only the correlated side is used when the other fails."""
        x = np.array([1.0, 0.0, 0.0])
        y = np.array([0.0, 1.0, 0.0])
        # dg = -y paired with dlam = x: orthogonal
        state = _state(u=x, v=y, lam=x, lam_hat=4.0 * x)
        tau, _ = update_spectral(state, _anchor(), CS, order="smooth_first")
        assert tau == pytest.approx(4.0)

    def test_both_safeguards_fail(self):
        x = np.array([1.0, 0.0, 0.0])
        y = np.array([0.0, 1.0, 0.0])
        state = _state(u=x, v=x, lam=y, lam_hat=y, tau=0.7)
        tau, _ = update_spectral(state, _anchor(), CS)
        assert tau == 0.7


def quadratic_instance(p, q, s=1.0, t=-2.0):
    """H(u) = p/2 (u - s)^2 and G(v) = q/2 (v - t)^2 subject to u - v = 0, in one dimension."""
    return ProblemInstance(
        constraint=ConstraintSystem(IdentityMap(1), -IdentityMap(1), np.zeros(1)),
        solve_u=lambda v, lam, tau: (lam + tau * v + p * s) / (p + tau),
        solve_v=lambda u, lam, tau: (tau * u - lam + q * t) / (q + tau),
        objective=lambda u, v: float(0.5 * p * (u[0] - s) ** 2 + 0.5 * q * (v[0] - t) ** 2),
        init=(np.zeros(1), np.zeros(1), np.zeros(1)),
        name="quadratic",
    )


class TestSpectralOnQuadratics:
    """On exact quadratics the secant pairs recover the curvatures of H and G."""

    @pytest.mark.parametrize("order", ["smooth_first", "nonsmooth_first"])
    @pytest.mark.parametrize("p,q,expected", [(4.0, 9.0, 6.0), (1.0, 25.0, 5.0), (4.0, 0.0, 4.0)])
    def test_first_update_is_geometric_mean(self, order, p, q, expected):
        """alpha -> p and beta -> q give tau = sqrt(pq); with G = 0 the dual never moves and tau = p."""
        cfg = SolveConfig(policy=SpectralPolicy(), order=order, tau0=1.0, max_iter=4, eps_tol=0.0)
        report = solve(quadratic_instance(p, q), cfg)
        taus = [row.tau for row in report.trace]
        assert taus[:3] == [1.0, 1.0, 1.0]
        assert taus[3] == pytest.approx(expected, rel=1e-9)
        assert report.final_tau == pytest.approx(expected, rel=1e-9)


# =============================================================================
# Tests for PenaltyPolicy subclasses
# =============================================================================


class TestPolicies:
    """Tests for policy objects and make_policy()."""

    def test_make_policy_kinds(self):
        assert isinstance(make_policy("constant"), ConstantPolicy)
        assert isinstance(make_policy("residual_balance", mu=5.0), ResidualBalancePolicy)
        assert isinstance(make_policy("spectral"), SpectralPolicy)
        assert make_policy("accelerated").accelerated

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            make_policy("magic")

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ValidationError):
            make_policy("spectral", gamma=3)

    def test_describe(self):
        info = ResidualBalancePolicy().describe()
        assert info["kind"] == "residual_balance"
        assert info["mu"] == 10.0
        assert info["eta"] == 2.0

    def test_adaptation_stops_after_horizon(self):
        policy = ResidualBalancePolicy(adapt_horizon=10)
        before = _state(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), tau=1.0, k=10)
        after = _state(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), tau=1.0, k=11)
        tau, _ = policy.next_tau(before, after, _res(100.0, 1.0), CS, "smooth_first", None)
        assert tau == 1.0
        after = _state(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), tau=1.0, k=10)
        tau, _ = policy.next_tau(before, after, _res(100.0, 1.0), CS, "smooth_first", None)
        assert tau == 2.0

    def test_spectral_waits_for_period(self):
        """Between updates the penalty and anchor are left alone."""
        policy = SpectralPolicy(period=3)
        anchor = _anchor(k0=5)
        x = np.array([1.0, 2.0, -1.0])
        state = _state(u=x, v=x, lam=-x, lam_hat=x, tau=1.5, k=7)
        tau, mem = policy.next_tau(state, state, _res(1.0, 1.0), CS, "smooth_first", anchor)
        assert tau == 1.5
        assert mem is anchor

    def test_spectral_clamped(self):
        policy = SpectralPolicy(tau_max=2.0)
        x = np.array([1.0, 2.0, -1.0])
        state = _state(u=x, v=x, lam=-100.0 * x, lam_hat=100.0 * x, tau=1.0, k=5)
        tau, _ = policy.next_tau(state, state, _res(1.0, 1.0), CS, "smooth_first", _anchor(k0=3))
        assert tau == 2.0

    def test_invalid_spectral_settings_rejected(self):
        with pytest.raises(ValidationError):
            SpectralPolicy(period=0)
        with pytest.raises(ValidationError):
            SpectralPolicy(eps_corr=1.0)

    def test_accelerated_memory_tracks_carried_block(self):
        policy = AcceleratedRestartPolicy()
        u, v, lam = np.ones(2), 2 * np.ones(2), np.zeros(2)
        mem = policy.initial_memory(u, v, lam, "smooth_first")
        assert isinstance(mem, AccelMemory)
        np.testing.assert_array_equal(mem.x_hat, v)
        np.testing.assert_array_equal(policy.initial_memory(u, v, lam, "nonsmooth_first").x_hat, u)

    def test_accelerated_eta_range(self):
        with pytest.raises(ValidationError):
            AcceleratedRestartPolicy(eta=1.0)

    def test_policies_are_immutable(self):
        policy = ConstantPolicy()
        with pytest.raises(Exception):
            policy.tau_min = 0.5
