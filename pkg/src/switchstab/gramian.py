"""Sliding-window observability Gramian of the realized input.

The window transition matrix Phi(t) = Phi_u(t, t-T) and the window Gramian
G(t) = G_u(t-T, t) are propagated jointly: a growing-window startup phase on
[0, T] followed by the sliding phase, whose right-hand side subtracts the
information leaving the window through the delayed input u(t-T).

A damping shift gamma >= 0 replaces A(u) by A(u) + gamma*Id in both
propagations, which turns G into the exponentially weighted Gramian
integral of exp(-2*gamma*(t-s)) * Phi_u(t,s)' C'C Phi_u(t,s); positivity is
unaffected.  ``window_mass_compensation`` rescales eigenvalues of the damped
Gramian so that thresholds keep a gamma-independent meaning (factor 1 at
gamma = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import smallest_eigenvalue
from .model import SystemDef

STARTUP = "startup"
SLIDING = "sliding"


@dataclass
class GramianState:
    """Window transition matrix, window Gramian, damping, and phase tag."""

    phi: np.ndarray
    gram: np.ndarray
    gamma: float = 0.0
    phase: str = STARTUP

    @classmethod
    def initial(cls, n: int, gamma: float = 0.0) -> "GramianState":
        return cls(phi=np.eye(n), gram=np.zeros((n, n)), gamma=gamma, phase=STARTUP)


def startup_rhs(a_now: np.ndarray, c: np.ndarray, state: GramianState):
    """Growing-window right-hand sides on [0, T]: Phi(t) = Phi_u(t, 0),
    G(t) = G_u(0, t).  No delayed term enters before the window is full."""
    a_g = a_now + state.gamma * np.eye(a_now.shape[0])
    ctc = c.T @ c
    d_phi = -state.phi @ a_g
    d_gram = -(a_g.T @ state.gram + state.gram @ a_g) + ctc
    return d_phi, d_gram


def gramian_rhs(a_now: np.ndarray, a_delayed: np.ndarray, c: np.ndarray, state: GramianState):
    """Sliding-window right-hand sides for t >= T.

    ``a_delayed`` must be A evaluated at the input seen one window ago.
    """
    eye = np.eye(a_now.shape[0])
    a_g = a_now + state.gamma * eye
    a_gd = a_delayed + state.gamma * eye
    ctc = c.T @ c
    d_phi = -state.phi @ a_g + a_gd @ state.phi
    d_gram = -(a_g.T @ state.gram + state.gram @ a_g) + ctc - state.phi.T @ ctc @ state.phi
    return d_phi, d_gram


def smallest_gram_eigenvalue(state: GramianState) -> float:
    """Smallest eigenvalue of the window Gramian; defined only once sliding."""
    if state.phase != SLIDING:
        raise ValueError("g undefined before T")
    return smallest_eigenvalue(state.gram)


def window_mass_compensation(gamma: float, window: float) -> float:
    """Rescaling 2*gamma*T / (1 - exp(-2*gamma*T)) of damped-Gramian
    eigenvalues; equals 1 at gamma = 0 and restores the undamped scale for a
    window-constant integrand, so the supervisor threshold keeps one meaning
    across gamma choices."""
    if gamma == 0.0:
        return 1.0
    z = 2.0 * gamma * window
    return z / -np.expm1(-z)


def gramian_oracle(
    sys: SystemDef,
    u_history: Callable[[float], float],
    t0: float,
    t1: float,
    gamma: float = 0.0,
    quad_step: float = 1e-4,
    u_history_left: Callable[[float], float] | None = None,
) -> np.ndarray:
    """Brute-force window Gramian by quadrature.

    Propagates Phi(t1, s) backward in s with RK4 on
    dPhi/ds = (A(u(s)) + gamma*Id) Phi from Phi(t1, t1) = Id and accumulates
    the trapezoid sum of Phi' C'C Phi over the quadrature nodes.  Independent
    of the sliding-window propagation; used as its test oracle.

    When the input carries recorded jumps, pass its left-continuous lookup as
    ``u_history_left``: a backward step covering (s_lo, s_hi) opens exactly
    on the jump time s_hi and must read the jump's left side there.
    """
    n = sys.n
    if t1 <= t0:
        return np.zeros((n, n))
    u_left = u_history if u_history_left is None else u_history_left
    ctc = sys.C.T @ sys.C
    eye = np.eye(n)
    n_steps = max(1, int(np.ceil((t1 - t0) / quad_step)))
    nodes = np.linspace(t1, t0, n_steps + 1)
    phi = eye.copy()
    integrand_prev = ctc.copy()
    accum = np.zeros((n, n))

    def slope(u: float, p: np.ndarray) -> np.ndarray:
        return (sys.A(u) + gamma * eye) @ p

    for s_hi, s_lo in zip(nodes[:-1], nodes[1:]):
        h = s_lo - s_hi  # negative: backward sweep
        s_mid = s_hi + 0.5 * h
        k1 = slope(u_left(s_hi), phi)
        k2 = slope(u_history(s_mid), phi + 0.5 * h * k1)
        k3 = slope(u_history(s_mid), phi + 0.5 * h * k2)
        k4 = slope(u_history(s_lo), phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        integrand = phi.T @ ctc @ phi
        accum += 0.5 * (s_hi - s_lo) * (integrand_prev + integrand)
        integrand_prev = integrand
    return 0.5 * (accum + accum.T)


def propagate_window(
    sys: SystemDef,
    u_of_t: Callable[[float], float],
    window: float,
    gamma: float,
    t_end: float,
    step: float,
) -> tuple[np.ndarray, list[GramianState]]:
    """Drive the startup + sliding window ODEs under a prescribed open-loop
    input.  Returns the sample times and per-sample states (test utility and
    backing for the CLI oracle checks)."""
    n = sys.n
    state = GramianState.initial(n, gamma)
    times = [0.0]
    states = [GramianState(state.phi.copy(), state.gram.copy(), gamma, state.phase)]
    n_steps = int(round(t_end / step))
    boundary = window

    def rhs(t: float, phi: np.ndarray, gram: np.ndarray, sliding: bool):
        probe = GramianState(phi, gram, gamma, SLIDING if sliding else STARTUP)
        a_now = sys.A(u_of_t(t))
        if sliding:
            return gramian_rhs(a_now, sys.A(u_of_t(t - window)), sys.C, probe)
        return startup_rhs(a_now, sys.C, probe)

    t = 0.0
    for _ in range(n_steps):
        h = min(step, t_end - t)
        if t < boundary <= t + h:
            h = boundary - t
        sliding = state.phase == SLIDING
        p, g = state.phi, state.gram
        k1p, k1g = rhs(t, p, g, sliding)
        k2p, k2g = rhs(t + h / 2, p + h / 2 * k1p, g + h / 2 * k1g, sliding)
        k3p, k3g = rhs(t + h / 2, p + h / 2 * k2p, g + h / 2 * k2g, sliding)
        k4p, k4g = rhs(t + h, p + h * k3p, g + h * k3g, sliding)
        state.phi = p + (h / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)
        state.gram = 0.5 * ((g + (h / 6) * (k1g + 2 * k2g + 2 * k3g + k4g))
                            + (g + (h / 6) * (k1g + 2 * k2g + 2 * k3g + k4g)).T)
        t += h
        if state.phase == STARTUP and t >= boundary - 1e-12:
            state.phase = SLIDING
        times.append(t)
        states.append(GramianState(state.phi.copy(), state.gram.copy(), gamma, state.phase))
        if t >= t_end - 1e-12:
            break
    return np.asarray(times), states
