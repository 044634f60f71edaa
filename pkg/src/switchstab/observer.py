"""Kalman-like observer: estimator and gain dynamics, plus bound diagnostics.

The gain matrix S follows the Lyapunov differential equation
Sdot = -A(u)'S - S A(u) - theta S + C'C and the estimator is corrected by
S^{-1} C' (C xhat - y), evaluated through a symmetric solve.  The estimation
error is never integrated separately; it is xhat - x by construction.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .linalg import eigenvalues_sym, largest_eigenvalue, smallest_eigenvalue, solve_sym
from .model import SystemDef

GAIN_COLLAPSE_EIG = 1e-14


class GainCollapseError(RuntimeError):
    """Gain matrix numerically singular; the observer correction is lost."""

    def __init__(self, t: float | None = None):
        msg = "gain collapse" if t is None else f"gain collapse at t={t:.6g}"
        super().__init__(msg)
        self.time = t


def observer_rhs(
    sys: SystemDef,
    u: float,
    theta: float,
    x: np.ndarray,
    xhat: np.ndarray,
    s_gain: np.ndarray,
):
    """Right-hand sides (dxhat, dS) with the measurement y = C x."""
    if smallest_eigenvalue(s_gain) < GAIN_COLLAPSE_EIG:
        raise GainCollapseError()
    a = sys.A(u)
    b = sys.b_vec(u)
    ctc = sys.C.T @ sys.C
    innovation = float(sys.C[0] @ (xhat - x))
    correction = solve_sym(s_gain, sys.C.T.reshape(-1)) * innovation
    dxhat = a @ xhat + b - correction
    ds = -(a.T @ s_gain + s_gain @ a) - theta * s_gain + ctc
    return dxhat, 0.5 * (ds + ds.T)


def variation_of_constants(
    sys: SystemDef,
    u_history: Callable[[float], float],
    s0: np.ndarray,
    theta: float,
    t0: float,
    t: float,
    quad_step: float = 1e-4,
    u_history_left: Callable[[float], float] | None = None,
) -> np.ndarray:
    """Closed-form gain-matrix solution over a constant-theta interval:

        S(t) = e^{-theta (t-t0)} Phi(t,t0)' S0 Phi(t,t0)
               + int_t0^t e^{-theta (t-s)} Phi(t,s)' C'C Phi(t,s) ds

    with Phi the (undamped) window transition matrix, propagated backward in
    s exactly as in the Gramian oracle, and the integral taken by the
    trapezoid rule at ``quad_step``.  Serves as an independent cross-check of
    the propagated S.  ``u_history_left`` supplies the left-continuous
    lookup when the recorded input carries jumps (the sweep opens each
    backward step on its upper time, where a jump must be read from the
    left).
    """
    s0 = np.asarray(s0, dtype=float)
    if t <= t0:
        return s0.copy()
    u_left = u_history if u_history_left is None else u_history_left
    n = sys.n
    ctc = sys.C.T @ sys.C
    n_steps = max(1, int(np.ceil((t - t0) / quad_step)))
    nodes = np.linspace(t, t0, n_steps + 1)
    phi = np.eye(n)

    def slope(u: float, p: np.ndarray) -> np.ndarray:
        return sys.A(u) @ p

    def weighted(s: float, p: np.ndarray) -> np.ndarray:
        return np.exp(-theta * (t - s)) * (p.T @ ctc @ p)

    integrand_prev = weighted(t, phi)
    accum = np.zeros((n, n))
    for s_hi, s_lo in zip(nodes[:-1], nodes[1:]):
        h = s_lo - s_hi
        s_mid = s_hi + 0.5 * h
        k1 = slope(u_left(s_hi), phi)
        k2 = slope(u_history(s_mid), phi + 0.5 * h * k1)
        k3 = slope(u_history(s_mid), phi + 0.5 * h * k2)
        k4 = slope(u_history(s_lo), phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        integrand = weighted(s_lo, phi)
        accum += 0.5 * (s_hi - s_lo) * (integrand_prev + integrand)
        integrand_prev = integrand
    free = np.exp(-theta * (t - t0)) * (phi.T @ s0 @ phi)
    out = free + accum
    return 0.5 * (out + out.T)


def error_bound_check(
    times: np.ndarray,
    eps: np.ndarray,
    s_stack: np.ndarray,
    theta: float,
) -> float:
    """Worst slack of the per-mode error bound

        |eps(t)| <= e^{-theta (t-t0)/2} sqrt(S_max(t0)/S_min(t)) |eps(t0)|

    over samples of one constant-theta mode (t0 = times[0]).  A non-positive
    return certifies the bound along the samples.
    """
    times = np.asarray(times, dtype=float)
    t0 = times[0]
    e0 = float(np.linalg.norm(eps[0]))
    s_max0 = largest_eigenvalue(s_stack[0])
    s_min = np.linalg.eigvalsh(np.asarray(s_stack))[:, 0]
    bounds = np.exp(-0.5 * theta * (times - t0)) * np.sqrt(s_max0 / s_min) * e0
    return float(np.max(np.linalg.norm(np.asarray(eps), axis=1) - bounds))


def quadratic_error_decay_slack(
    times: np.ndarray,
    eps: np.ndarray,
    s_stack: np.ndarray,
    theta: float,
) -> float:
    """Worst relative excess of eps'S eps(t) over e^{-theta (t-t0)} eps'S eps(t0)."""
    times = np.asarray(times, dtype=float)
    eps = np.asarray(eps)
    t0 = times[0]
    v = np.einsum("ki,kij,kj->k", eps, np.asarray(s_stack), eps)
    ref = np.exp(-theta * (times - t0)) * v[0]
    return float(np.max(v - ref * (1.0 + 1e-9)))


def trace_bound_check(
    s_stack: np.ndarray,
    theta: float,
    a_frob: float,
    c_norm_sq: float,
    tol: float = 1e-9,
) -> bool:
    """Check tr(S(t)) <= max(tr(S(t0)), |C|^2/(theta - 2 a_F)) at all samples.

    The caller passes a_frob = sup sqrt(tr(A(u)'A(u))) realized along the
    samples and c_norm_sq = tr(C'C).  Requires theta > 2 a_frob.
    """
    if theta <= 2.0 * a_frob:
        raise ValueError("bound inapplicable")
    traces = np.trace(np.asarray(s_stack), axis1=-2, axis2=-1)
    cap = max(float(traces[0]), c_norm_sq / (theta - 2.0 * a_frob))
    return bool(np.all(traces <= cap + tol))


def gramian_lower_bound_slack(
    s_now: np.ndarray,
    gram_from_mode_start: np.ndarray,
    theta: float,
    dt: float,
) -> float:
    """Smallest eigenvalue of S(t) - e^{-theta (t-t0)} G(t0, t).

    Non-negative (up to slack) certifies the Gramian lower bound on the gain
    matrix within a constant-theta mode started dt ago.
    """
    diff = s_now - np.exp(-theta * dt) * gram_from_mode_start
    return float(eigenvalues_sym(diff)[0])
