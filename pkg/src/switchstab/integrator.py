"""Fixed-step RK4 propagation, input-history interpolation, event bisection."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable

import numpy as np


class BlowUpError(RuntimeError):
    """Non-finite derivative or state during integration."""

    def __init__(self, t: float):
        super().__init__(f"blow-up at t={t:.6g}")
        self.time = t


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed RK4 step and the time accuracy of localized switching events."""

    step: float = 1e-3
    event_tol: float = 1e-6
    scheme: str = "rk4"

    def __post_init__(self):
        if self.step <= 0 or self.event_tol <= 0:
            raise ValueError("step and event_tol must be positive")
        if self.scheme != "rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def validate_window(self, window: float) -> None:
        # h <= T/4 keeps every delayed lookup strictly inside recorded history
        if self.step > window / 4.0:
            raise ValueError(
                f"step {self.step} too large for window {window}: need step <= T/4"
            )


class HistoryBuffer:
    """Time-ordered (t, u) samples of the realized input.

    Samples must be appended with strictly increasing times, except that an
    input jump (a mode switch) is recorded as a second sample at the same
    instant; interpolation is then left-continuous into the jump time and
    right-continuous from it, matching the realized one-sided inputs.
    Queries outside the covered range raise ValueError("history underrun").
    """

    def __init__(self, window: float):
        self.window = window
        self.times: list[float] = []
        self.values: list[float] = []

    def append(self, t: float, u: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("history samples must have strictly increasing times")
        self.times.append(t)
        self.values.append(u)

    def append_jump(self, t: float, u_after: float) -> None:
        """Record the right-sided value of an input jump at the last sample
        time (the left-sided value must already be recorded)."""
        if not self.times or t != self.times[-1]:
            raise ValueError("jump must land on the last recorded sample time")
        if len(self.times) >= 2 and self.times[-2] == t:
            raise ValueError("at most one jump per sample time")
        self.times.append(t)
        self.values.append(u_after)

    def covers(self, t: float) -> bool:
        return bool(self.times) and self.times[0] <= t <= self.times[-1]

    def interp(self, t: float) -> float:
        """Right-continuous lookup: at a recorded jump, the value after it."""
        if not self.covers(t):
            raise ValueError("history underrun")
        idx = bisect_right(self.times, t)
        if idx == len(self.times):
            return self.values[-1]
        if idx == 0 or self.times[idx - 1] == t:
            return self.values[idx - 1] if idx > 0 else self.values[0]
        t0, t1 = self.times[idx - 1], self.times[idx]
        v0, v1 = self.values[idx - 1], self.values[idx]
        w = (t - t0) / (t1 - t0)
        return v0 + w * (v1 - v0)

    def interp_left(self, t: float) -> float:
        """Left-continuous lookup: at a recorded jump, the value before it.
        Identical to ``interp`` away from jumps; integration stages that
        close a step on a jump image must use this side."""
        if not self.covers(t):
            raise ValueError("history underrun")
        idx = bisect_left(self.times, t)
        if idx < len(self.times) and self.times[idx] == t:
            return self.values[idx]
        return self.interp(t)

    def as_callable(self) -> Callable[[float], float]:
        return self.interp


def interpolate_input(hist: HistoryBuffer, t_query: float) -> float:
    """Piecewise-linear lookup of the recorded input; exact at sample times."""
    return hist.interp(t_query)


def rk_step(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    state: np.ndarray,
    h: float,
) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step from (t, state)."""
    k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * h, state + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, state + 0.5 * h * k2)
    k4 = rhs(t + h, state + h * k3)
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(t)
    return out


def locate_event(
    g_of_t: Callable[[float], float],
    bracket: tuple[float, float],
    threshold: float,
    tol: float,
    scan: int = 64,
) -> float:
    """First time in ``bracket`` at which g drops to ``threshold``.

    Requires g(t_lo) > threshold >= g(t_hi).  A uniform pre-scan isolates the
    earliest sign change, then bisection refines it to within ``tol``; the
    returned time satisfies g(t*) <= threshold.
    """
    t_lo, t_hi = bracket
    if t_hi <= t_lo:
        raise ValueError("empty bracket")
    g_lo = g_of_t(t_lo)
    g_hi = g_of_t(t_hi)
    if not (g_lo > threshold >= g_hi):
        raise ValueError("no crossing")
    # isolate the earliest crossing before bisecting
    if scan > 1:
        ts = np.linspace(t_lo, t_hi, scan + 1)
        for a, b in zip(ts[:-1], ts[1:]):
            if g_of_t(b) <= threshold:
                t_lo, t_hi = a, b
                break
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if g_of_t(mid) > threshold:
            t_lo = mid
        else:
            t_hi = mid
    return t_hi
