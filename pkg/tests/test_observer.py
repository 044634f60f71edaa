import numpy as np
import pytest

from switchstab.linalg import solve_lyapunov
from switchstab.model import oscillator_example
from switchstab.observer import (
    GainCollapseError,
    error_bound_check,
    gramian_lower_bound_slack,
    observer_rhs,
    quadratic_error_decay_slack,
    trace_bound_check,
    variation_of_constants,
)

G01 = np.array([
    [0.5 - np.sin(2.0) / 4.0, np.sin(1.0) ** 2 / 2.0],
    [np.sin(1.0) ** 2 / 2.0, 0.5 + np.sin(2.0) / 4.0],
])


@pytest.fixture(scope="module")
def osc():
    return oscillator_example()


class TestObserverRhs:
    def test_zero_innovation(self, osc):
        sys_, _, _ = osc
        x = np.array([1.5, -0.5])
        for u, theta in [(0.0, 1.0), (-1.0, 2.0), (0.7, 0.3)]:
            dxhat, _ = observer_rhs(sys_, u, theta, x, x.copy(), np.eye(2))
            assert np.allclose(dxhat, sys_.A(u) @ x + sys_.b_vec(u), atol=1e-14)

    def test_stationary_gain(self, osc):
        sys_, _, _ = osc
        s_inf = solve_lyapunov(sys_.A(0.0), sys_.C, 1.0)
        _, ds = observer_rhs(sys_, 0.0, 1.0, np.zeros(2), np.zeros(2), s_inf)
        assert np.allclose(ds, 0.0, atol=1e-12)

    def test_identity_gain_slope(self, osc):
        # skew parts of A(0) cancel: dS = -Id + C'C
        sys_, _, _ = osc
        _, ds = observer_rhs(sys_, 0.0, 1.0, np.zeros(2), np.zeros(2), np.eye(2))
        assert np.allclose(ds, [[-1.0, 0.0], [0.0, 0.0]], atol=1e-14)

    def test_gain_collapse(self, osc):
        sys_, _, _ = osc
        with pytest.raises(GainCollapseError, match="gain collapse"):
            observer_rhs(sys_, 0.0, 1.0, np.zeros(2), np.zeros(2), 1e-15 * np.eye(2))


class TestVariationOfConstants:
    def test_empty_interval(self, osc):
        sys_, _, _ = osc
        s0 = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.array_equal(variation_of_constants(sys_, lambda s: 0.0, s0, 1.0, 3.0, 3.0), s0)

    def test_zero_gain_zero_start_is_window_gramian(self, osc):
        sys_, _, _ = osc
        got = variation_of_constants(sys_, lambda s: 0.0, np.zeros((2, 2)), 0.0, 0.0, 1.0, quad_step=1e-4)
        assert np.allclose(got, G01, atol=1e-6)

    def test_matches_direct_propagation(self, osc):
        # independent route: integrate the gain ODE directly with RK4
        sys_, _, _ = osc
        theta, t_end, h = 1.0, 0.5, 1e-4
        s = np.eye(2)
        a = sys_.A(0.0)
        ctc = sys_.C.T @ sys_.C

        def slope(s_mat):
            return -(a.T @ s_mat + s_mat @ a) - theta * s_mat + ctc

        steps = int(round(t_end / h))
        for _ in range(steps):
            k1 = slope(s)
            k2 = slope(s + h / 2 * k1)
            k3 = slope(s + h / 2 * k2)
            k4 = slope(s + h * k3)
            s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        got = variation_of_constants(sys_, lambda q: 0.0, np.eye(2), theta, 0.0, t_end, quad_step=1e-4)
        assert np.linalg.norm(got - s) / np.linalg.norm(s) <= 1e-6


class TestErrorBound:
    def test_zero_error_stays_zero(self):
        times = np.linspace(0.0, 1.0, 11)
        eps = np.zeros((11, 2))
        s_stack = np.stack([np.eye(2)] * 11)
        assert error_bound_check(times, eps, s_stack, 1.0) <= 0.0

    def test_exact_decay_is_tight(self):
        # with S = Id the bound is exactly e^{-theta t / 2} |eps0|
        theta = 2.0
        times = np.linspace(0.0, 1.0, 21)
        eps = np.exp(-0.5 * theta * times)[:, None] * np.array([1.0, 0.0])
        s_stack = np.stack([np.eye(2)] * 21)
        slack = error_bound_check(times, eps, s_stack, theta)
        assert abs(slack) <= 1e-12

    def test_violation_detected(self):
        times = np.array([0.0, 1.0])
        eps = np.array([[1.0, 0.0], [2.0, 0.0]])
        s_stack = np.stack([np.eye(2)] * 2)
        assert error_bound_check(times, eps, s_stack, 1.0) > 0.5

    def test_quadratic_decay_slack(self):
        theta = 1.0
        times = np.linspace(0.0, 2.0, 21)
        eps = np.exp(-0.5 * theta * times)[:, None] * np.array([0.0, 1.0])
        s_stack = np.stack([np.eye(2)] * 21)
        assert quadratic_error_decay_slack(times, eps, s_stack, theta) <= 1e-12


class TestTraceBound:
    def test_inapplicable(self):
        with pytest.raises(ValueError, match="bound inapplicable"):
            trace_bound_check(np.stack([np.eye(2)]), 1.0, np.sqrt(2.0), 1.0)

    def test_constant_stationary(self, osc):
        sys_, _, _ = osc
        s_inf = solve_lyapunov(sys_.A(0.0), sys_.C, 3.0)
        stack = np.stack([s_inf] * 5)
        assert trace_bound_check(stack, 3.0, np.sqrt(2.0), 1.0)

    def test_cap_violation(self):
        stack = np.stack([np.eye(2), 100.0 * np.eye(2)])
        assert not trace_bound_check(stack, 3.0, np.sqrt(2.0), 1.0)


def test_gramian_lower_bound_slack_sign():
    s_now = np.eye(2)
    gram = 0.5 * np.eye(2)
    assert gramian_lower_bound_slack(s_now, gram, 1.0, 1.0) > 0.0
    assert gramian_lower_bound_slack(0.1 * np.eye(2), np.eye(2), 0.0, 0.0) < 0.0
