import numpy as np
import pytest

from switchstab.integrator import (
    BlowUpError,
    HistoryBuffer,
    IntegratorConfig,
    interpolate_input,
    locate_event,
    rk_step,
)

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TestRkStep:
    def test_constant_state(self):
        y = np.array([1.0, -2.0, 3.0])
        out = rk_step(lambda t, s: np.zeros(3), 0.0, y, 0.1)
        assert np.array_equal(out, y)

    def test_rotation_step(self):
        h = 0.01
        out = rk_step(lambda t, s: ROTATION @ s, 0.0, np.array([1.0, 0.0]), h)
        assert np.allclose(out, [np.cos(h), -np.sin(h)], atol=1e-9)

    def test_exponential_decay(self):
        out = rk_step(lambda t, s: -s, 0.0, np.array([1.0]), 0.1)
        assert out[0] == pytest.approx(np.exp(-0.1), abs=1e-7)

    def test_order(self):
        # global error over [0, 1] on the rotation system shrinks by >= 14x
        # per halving (16x asymptotically)
        def propagate(h):
            y = np.array([1.0, 0.0])
            steps = int(round(1.0 / h))
            for k in range(steps):
                y = rk_step(lambda t, s: ROTATION @ s, k * h, y, h)
            return np.linalg.norm(y - [np.cos(1.0), -np.sin(1.0)])

        e1, e2 = propagate(0.02), propagate(0.01)
        assert e1 / e2 >= 14.0

    def test_blow_up(self):
        with pytest.raises(BlowUpError, match="blow-up at t="):
            rk_step(lambda t, s: np.array([np.inf]), 3.0, np.array([1.0]), 0.1)


class TestLocateEvent:
    def test_linear(self):
        t = locate_event(lambda t: 1.0 - t, (0.0, 1.0), 0.5, 1e-6)
        assert t == pytest.approx(0.5, abs=1e-6)

    def test_cosine(self):
        t = locate_event(np.cos, (1.0, 2.0), 0.0, 1e-8)
        assert t == pytest.approx(np.pi / 2.0, abs=1e-8)

    def test_no_crossing(self):
        with pytest.raises(ValueError, match="no crossing"):
            locate_event(lambda t: 1.0, (0.0, 1.0), 0.5, 1e-6)

    def test_returns_crossed_side(self):
        t = locate_event(lambda t: 1.0 - t, (0.0, 1.0), 0.5, 1e-6)
        assert 1.0 - t <= 0.5

    def test_earliest_crossing(self):
        # three crossings of 0 inside the bracket at 1/6, 1/2, 5/6
        g = lambda t: np.cos(3.0 * np.pi * t)
        tol = 1e-8
        t_star = locate_event(g, (0.0, 1.0), 0.0, tol)
        ts = np.linspace(0.0, 1.0, 100 * 64 + 1)
        first = ts[np.argmax(g(ts) <= 0.0)]
        assert t_star == pytest.approx(1.0 / 6.0, abs=1e-2 / 64 + tol)
        assert abs(t_star - first) <= 1.0 / (64 * 2) + tol


class TestHistoryBuffer:
    def test_midpoint(self):
        hist = HistoryBuffer(window=1.0)
        hist.append(0.0, 0.0)
        hist.append(1.0, 2.0)
        assert interpolate_input(hist, 0.5) == pytest.approx(1.0)

    def test_exact_node(self):
        hist = HistoryBuffer(window=1.0)
        hist.append(0.0, 3.0)
        assert interpolate_input(hist, 0.0) == 3.0

    def test_underrun(self):
        hist = HistoryBuffer(window=1.0)
        hist.append(0.0, 0.0)
        hist.append(1.0, 2.0)
        with pytest.raises(ValueError, match="history underrun"):
            interpolate_input(hist, 1.5)
        with pytest.raises(ValueError, match="history underrun"):
            interpolate_input(hist, -0.1)

    def test_monotonic_times(self):
        hist = HistoryBuffer(window=1.0)
        hist.append(0.0, 0.0)
        with pytest.raises(ValueError, match="strictly increasing"):
            hist.append(0.0, 1.0)

    def test_exact_at_samples(self):
        hist = HistoryBuffer(window=1.0)
        values = [0.3, -1.2, 4.0, 0.0]
        for k, v in enumerate(values):
            hist.append(0.1 * k, v)
        for k, v in enumerate(values):
            assert hist.interp(0.1 * k) == v


class TestIntegratorConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            IntegratorConfig(step=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(step=1e-3, event_tol=-1.0)
        with pytest.raises(ValueError):
            IntegratorConfig(scheme="euler")

    def test_window_constraint(self):
        IntegratorConfig(step=0.25).validate_window(1.0)
        with pytest.raises(ValueError, match="step .* too large"):
            IntegratorConfig(step=0.3).validate_window(1.0)
