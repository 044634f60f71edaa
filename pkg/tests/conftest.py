"""Shared reference runs (session-scoped: the long scenario is reused by
many checks)."""

from __future__ import annotations

import time
import warnings

import numpy as np
import pytest

from switchstab import IntegratorConfig, SwitchParams, run_closed_loop
from switchstab.model import Feedback, oscillator_example


TABLE_PARAMS = dict(t_obs=2.0, t_stab=3.0, T=1.0, g_min=5e-4, alpha=1.0, beta=1.0, gamma=10.0)


@pytest.fixture(scope="session")
def oscillator():
    return oscillator_example()


@pytest.fixture(scope="session")
def reference_run(oscillator):
    """The headline scenario: oscillator, published parameter table,
    x0 = (-10, 0), xhat0 = (-15, 5), S0 = Id, horizon 50, step 1e-3."""
    sys_, fb, lyap = oscillator
    params = SwitchParams(**TABLE_PARAMS)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run = run_closed_loop(
            sys_, fb, lyap, params,
            np.array([-10.0, 0.0]), np.array([-15.0, 5.0]), np.eye(2),
            50.0, IntegratorConfig(step=1e-3, event_tol=1e-6),
        )
    run.wall_time = time.perf_counter() - t0
    return run


@pytest.fixture(scope="session")
def zero_input_run(oscillator):
    """Oscillator with zero feedback: realized input identically 0, no
    Gramian damping.  The sliding window then carries the constant-input
    Gramian, with closed-form trig values at t = T."""
    sys_, _, lyap = oscillator
    fb0 = Feedback(law=lambda x: 0.0, u_bar=100.0)
    params = SwitchParams(t_obs=2.0, t_stab=3.0, T=1.0, g_min=5e-4, alpha=1.0, beta=1.0, gamma=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_closed_loop(
            sys_, fb0, lyap, params,
            np.array([1.0, 2.0]), np.array([0.0, 0.0]), np.eye(2),
            6.0, IntegratorConfig(step=1e-3, event_tol=1e-6),
        )


@pytest.fixture(scope="session")
def high_gain_zero_input_run(oscillator):
    """Zero feedback with alpha = beta = 3: constant gain above twice the
    Frobenius sup sqrt(2) of A(0), so the gain-trace cap applies."""
    sys_, _, lyap = oscillator
    fb0 = Feedback(law=lambda x: 0.0, u_bar=100.0)
    params = SwitchParams(t_obs=2.0, t_stab=3.0, T=1.0, g_min=5e-4, alpha=3.0, beta=3.0, gamma=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_closed_loop(
            sys_, fb0, lyap, params,
            np.array([2.0, -1.0]), np.array([1.0, 1.0]), 0.5 * np.eye(2),
            8.0, IntegratorConfig(step=1e-3, event_tol=1e-6),
        )


@pytest.fixture(scope="session")
def equilibrium_run(oscillator):
    sys_, fb, lyap = oscillator
    params = SwitchParams(**TABLE_PARAMS)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_closed_loop(
            sys_, fb, lyap, params,
            np.zeros(2), np.zeros(2), np.eye(2),
            8.0, IntegratorConfig(step=1e-3, event_tol=1e-6),
        )


@pytest.fixture(scope="session")
def event_run(oscillator):
    """Scenario with a genuinely mid-interval Gramian trigger (a threshold
    crossing well after the dwell expires, so the switch time is localized
    by bisection rather than read off the dwell boundary)."""
    sys_, fb, lyap = oscillator
    params = SwitchParams(t_obs=1.0, t_stab=1.0, T=0.3, g_min=2e-3, alpha=1.0, beta=1.0, gamma=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_closed_loop(
            sys_, fb, lyap, params,
            np.array([-3.0, 0.0]), np.array([-3.5, 0.5]), np.eye(2),
            15.0, IntegratorConfig(step=1e-3, event_tol=1e-7),
        )
