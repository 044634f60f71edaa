"""Plant family, feedback law, and Lyapunov function declarations.

A system is a state-affine SISO plant  xdot = A(u) x + B(u),  y = C x,
with A, B supplied as callables of the scalar input.  The built-in
"oscillator" instance is a harmonic oscillator whose rotation speed depends
on the input; it loses observability at u = -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SystemDef:
    """State-affine plant: callables u -> A(u), u -> B(u) and the output row C."""

    n: int
    A: Callable[[float], np.ndarray]
    B: Callable[[float], np.ndarray]
    C: np.ndarray
    lipschitz_note: str = ""

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.C, dtype=float))
        if c.shape != (1, self.n):
            raise ValueError(f"C must be a single row of length {self.n}")
        object.__setattr__(self, "C", c)
        for u in (-10.0, -1.0, 0.0, 0.5, 10.0):
            a, b = np.asarray(self.A(u)), np.asarray(self.B(u))
            if a.shape != (self.n, self.n) or b.reshape(-1).shape != (self.n,):
                raise ValueError("A(u)/B(u) dimensions inconsistent with n")
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
                raise ValueError(f"A(u), B(u) must be finite (failed at u={u})")

    def b_vec(self, u: float) -> np.ndarray:
        return np.asarray(self.B(u), dtype=float).reshape(self.n)


@dataclass(frozen=True)
class Feedback:
    """Feedback law clamped to |u| <= u_bar."""

    law: Callable[[np.ndarray], float]
    u_bar: float = 100.0

    def __call__(self, x: np.ndarray) -> float:
        u = float(self.law(x))
        if u > self.u_bar:
            return self.u_bar
        if u < -self.u_bar:
            return -self.u_bar
        return u


@dataclass(frozen=True)
class LyapunovFn:
    """Candidate Lyapunov function with analytic gradient.

    ``quad_form`` holds the matrix P when V(x) = x'Px; it is None for custom
    (non-quadratic) functions, in which case the analytic sublevel-set
    geometry used by the tuning procedure is unavailable.
    """

    V: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    quad_form: np.ndarray | None = None

    @property
    def is_quadratic(self) -> bool:
        return self.quad_form is not None


def quadratic_lyapunov(p: np.ndarray) -> LyapunovFn:
    p = 0.5 * (np.asarray(p, dtype=float) + np.asarray(p, dtype=float).T)
    return LyapunovFn(
        V=lambda x: float(x @ p @ x),
        grad=lambda x: 2.0 * (p @ x),
        quad_form=p,
    )


def oscillator_example(u_bar: float = 100.0) -> tuple[SystemDef, Feedback, LyapunovFn]:
    """Harmonic oscillator with input-dependent speed.

    A(u) = [[0, 1+u], [-(1+u), 0]], B(u) = [u, 0]', C = [0, 1].  The pair
    (C, A(0)) is observable while (C, A(-1)) is not, so the constant input
    u = -1 is an observability singularity.  The linear feedback
    lambda(x) = -x_1 (clamped at u_bar) stabilizes the origin, with
    V(x) = |x|^2 as the associated Lyapunov candidate.
    """
    sys = SystemDef(
        n=2,
        A=lambda u: np.array([[0.0, 1.0 + u], [-(1.0 + u), 0.0]]),
        B=lambda u: np.array([u, 0.0]),
        C=np.array([[0.0, 1.0]]),
        lipschitz_note="affine in u; globally Lipschitz on bounded input sets",
    )
    fb = Feedback(law=lambda x: -x[0], u_bar=u_bar)
    lyap = quadratic_lyapunov(np.eye(2))
    return sys, fb, lyap


def bilinear_system(a0: np.ndarray, a1: np.ndarray, b1: np.ndarray, c: np.ndarray) -> SystemDef:
    """Bilinear instance A(u) = A0 + u A1, B(u) = u B1."""
    a0 = np.asarray(a0, dtype=float)
    a1 = np.asarray(a1, dtype=float)
    b1 = np.asarray(b1, dtype=float).reshape(-1)
    n = a0.shape[0]
    return SystemDef(
        n=n,
        A=lambda u: a0 + u * a1,
        B=lambda u: u * b1,
        C=c,
        lipschitz_note="bilinear: A, B affine in u",
    )


def closed_loop_vector_field(sys: SystemDef, fb: Feedback, x: np.ndarray) -> np.ndarray:
    """Vector field A(lambda(x)) x + B(lambda(x)) of the state-feedback loop."""
    x = np.asarray(x, dtype=float)
    u = fb(x)
    return sys.A(u) @ x + sys.b_vec(u)


def lyapunov_decrease_check(sys: SystemDef, fb: Feedback, lyap: LyapunovFn, x: np.ndarray) -> float:
    """Diagnostic value gradV(x) . f(x) + V(x); non-positive where the decay
    condition Vdot <= -V holds.  Positive values flag pointwise violations
    (the built-in oscillator with V = |x|^2 has them, e.g. at x = (0, 1));
    the simulation is not gated on this check.
    """
    x = np.asarray(x, dtype=float)
    return float(lyap.grad(x) @ closed_loop_vector_field(sys, fb, x) + lyap.V(x))
