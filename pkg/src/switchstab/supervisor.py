"""Switching law and closed-loop simulation.

Modes alternate, starting in observation at t = 0.  Observation modes last
exactly t_obs with input u = 0 and gain parameter alpha.  Stabilization
modes apply u = lambda(xhat) with gain parameter beta; they last at least
t_stab and end at the first later time the monitored smallest eigenvalue of
the sliding-window Gramian drops to g_min (localized by bisection inside
the integration step that crosses the threshold).

The integrator lands exactly on every mode boundary, on the startup/sliding
transition of the Gramian window, and on the delayed images (switch time +
window) where the interpolated input history has corners, so the piecewise
smoothness of the closed loop is respected by every RK4 step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gramian import SLIDING, STARTUP, GramianState, gramian_rhs, startup_rhs, window_mass_compensation
from .integrator import BlowUpError, HistoryBuffer, IntegratorConfig, locate_event, rk_step
from .linalg import smallest_eigenvalue, solve_sym
from .model import Feedback, LyapunovFn, SystemDef
from .observer import GAIN_COLLAPSE_EIG, GainCollapseError

OBSERVATION = "observation"
STABILIZATION = "stabilization"

TRIGGER_TIMER = "timer"
TRIGGER_GRAM = "gram_eigenvalue"
TRIGGER_NONE_FINAL = "none_final"

_TIME_EPS = 1e-9


@dataclass(frozen=True)
class SwitchParams:
    """Supervisor constants: mode durations, Gramian window and threshold,
    per-mode observer gains, and the Gramian damping."""

    t_obs: float
    t_stab: float
    T: float
    g_min: float
    alpha: float
    beta: float
    gamma: float = 0.0

    def __post_init__(self):
        if min(self.t_obs, self.t_stab, self.T, self.g_min, self.alpha, self.beta) <= 0:
            raise ValueError("t_obs, t_stab, T, g_min, alpha, beta must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    def check_window(self, strict: bool = False) -> bool:
        """The certified tuning regime needs T < min(t_obs, t_stab)/3; larger
        windows are allowed for experimentation but flagged."""
        ok = self.T < min(self.t_obs, self.t_stab) / 3.0
        if not ok:
            msg = (
                f"T={self.T} outside certified range (need T < "
                f"{min(self.t_obs, self.t_stab) / 3.0:.6g})"
            )
            if strict:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=2)
        return ok


@dataclass(frozen=True)
class Mode:
    tag: str
    started_at: float


@dataclass(frozen=True)
class SwitchEvent:
    index: int
    time: float
    new_mode: str
    trigger: str


@dataclass
class SwitchLog:
    events: list[SwitchEvent] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(1 for e in self.events if e.trigger != TRIGGER_NONE_FINAL)

    def realized_times(self) -> list[float]:
        return [e.time for e in self.events if e.trigger != TRIGGER_NONE_FINAL]


@dataclass(frozen=True)
class Decision:
    action: str  # "stay" | "switch_now" | "switch_at"
    at: float | None = None


def control_and_gain(mode: Mode, xhat: np.ndarray, fb: Feedback, p: SwitchParams):
    """Input and gain parameter of the active mode: (0, alpha) while
    observing, (lambda(xhat), beta) while stabilizing."""
    if mode.tag == OBSERVATION:
        return 0.0, p.alpha
    return fb(xhat), p.beta


def next_transition(mode: Mode, t: float, g_now: float | None, p: SwitchParams) -> Decision:
    """Mode-exit decision at time t.

    Observation exits on a timer at started_at + t_obs.  Stabilization stays
    for the dwell t_stab, then exits as soon as the monitored Gramian
    eigenvalue is at or below g_min.
    """
    if mode.tag == OBSERVATION:
        return Decision("switch_at", mode.started_at + p.t_obs)
    if t < mode.started_at + p.t_stab - _TIME_EPS:
        return Decision("stay")
    if g_now is None:
        raise ValueError("g required once the stabilization dwell has elapsed")
    if g_now <= p.g_min:
        return Decision("switch_now")
    return Decision("stay")


@dataclass
class Trace:
    """Per-step records of the augmented closed-loop state."""

    t: np.ndarray
    mode: list[str]
    u: np.ndarray
    theta: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    s: np.ndarray
    phi: np.ndarray
    gram: np.ndarray
    g: np.ndarray  # monitored Gramian eigenvalue signal; NaN before t = T

    def __len__(self) -> int:
        return len(self.t)

    def eps(self) -> np.ndarray:
        return self.xhat - self.x

    def eps_norm(self) -> np.ndarray:
        return np.linalg.norm(self.eps(), axis=1)

    def x_norm_sq(self) -> np.ndarray:
        return np.sum(self.x * self.x, axis=1)

    def s_eigen_extremes(self) -> tuple[np.ndarray, np.ndarray]:
        vals = np.linalg.eigvalsh(self.s)
        return vals[:, 0], vals[:, -1]

    def index_at(self, time: float) -> int:
        idx = int(np.argmin(np.abs(self.t - time)))
        if abs(self.t[idx] - time) > 1e-7:
            raise KeyError(f"no trace row at t={time}")
        return idx


@dataclass
class RunResult:
    trace: Trace
    switch_log: SwitchLog
    history: HistoryBuffer
    params: SwitchParams
    horizon: float

    def mode_segments(self) -> list[tuple[str, float, int, int]]:
        """(tag, theta, first_row, last_row) per mode; the row at a switch
        time closes the previous segment and opens the next."""
        bounds = [0.0] + self.switch_log.realized_times() + [float(self.trace.t[-1])]
        segs = []
        tag = OBSERVATION
        alpha, beta = self.params.alpha, self.params.beta
        for k in range(len(bounds) - 1):
            i0 = self.trace.index_at(bounds[k])
            i1 = self.trace.index_at(bounds[k + 1])
            segs.append((tag, alpha if tag == OBSERVATION else beta, i0, i1))
            tag = STABILIZATION if tag == OBSERVATION else OBSERVATION
        return segs


class SimulationError(RuntimeError):
    """Run aborted (gain collapse or blow-up); carries the partial trace."""

    def __init__(self, msg: str, time: float, partial: "RunResult | None"):
        super().__init__(msg)
        self.time = time
        self.partial = partial


class _Recorder:
    def __init__(self):
        self.t: list[float] = []
        self.mode: list[str] = []
        self.u: list[float] = []
        self.theta: list[float] = []
        self.x: list[np.ndarray] = []
        self.xhat: list[np.ndarray] = []
        self.s: list[np.ndarray] = []
        self.phi: list[np.ndarray] = []
        self.gram: list[np.ndarray] = []
        self.g: list[float] = []

    def add(self, t, mode, u, theta, x, xhat, s, phi, gram, g):
        self.t.append(t)
        self.mode.append(mode)
        self.u.append(u)
        self.theta.append(theta)
        self.x.append(x.copy())
        self.xhat.append(xhat.copy())
        self.s.append(s.copy())
        self.phi.append(phi.copy())
        self.gram.append(gram.copy())
        self.g.append(g)

    def to_trace(self) -> Trace:
        return Trace(
            t=np.asarray(self.t),
            mode=list(self.mode),
            u=np.asarray(self.u),
            theta=np.asarray(self.theta),
            x=np.asarray(self.x),
            xhat=np.asarray(self.xhat),
            s=np.asarray(self.s),
            phi=np.asarray(self.phi),
            gram=np.asarray(self.gram),
            g=np.asarray(self.g),
        )


def run_closed_loop(
    sys: SystemDef,
    fb: Feedback,
    lyap: LyapunovFn,
    params: SwitchParams,
    x0: np.ndarray,
    xhat0: np.ndarray,
    s0: np.ndarray,
    horizon: float,
    integ: IntegratorConfig,
    _rhs_flavor: str = "auto",
) -> RunResult:
    """Simulate the switched output-feedback loop on [0, horizon].

    The augmented state is (x, xhat, S, Phi, G) with the input history kept
    in a side buffer for the delayed window terms.  Raises SimulationError
    (with the partial trace attached) on gain collapse or blow-up.
    ``_rhs_flavor`` pins the right-hand-side implementation ("generic" or
    "auto", which unrolls the n = 2 case); the two are equivalent and tested
    against each other.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    x0 = np.asarray(x0, dtype=float).reshape(sys.n)
    xhat0 = np.asarray(xhat0, dtype=float).reshape(sys.n)
    s0 = np.asarray(s0, dtype=float)
    if smallest_eigenvalue(s0) <= 0:
        raise ValueError("S0 must be positive definite")
    params.check_window(strict=False)
    integ.validate_window(params.T)

    n = sys.n
    iu = np.triu_indices(n)
    eye = np.eye(n)
    c_row = sys.C
    ct = c_row.T.reshape(n)
    ctc = c_row.T @ c_row
    comp = window_mass_compensation(params.gamma, params.T)
    h = integ.step

    def pack(x, xhat, s, phi, gram):
        return np.concatenate([x, xhat, s[iu], phi.reshape(-1), gram[iu]])

    nsym = len(iu[0])
    o_x, o_xh, o_s, o_phi, o_g = (
        slice(0, n),
        slice(n, 2 * n),
        slice(2 * n, 2 * n + nsym),
        slice(2 * n + nsym, 2 * n + nsym + n * n),
        slice(2 * n + nsym + n * n, 2 * n + 2 * nsym + n * n),
    )

    def unvech(v):
        m = np.empty((n, n))
        m[iu] = v
        m[(iu[1], iu[0])] = v
        return m

    def unpack(y):
        return (
            y[o_x],
            y[o_xh],
            unvech(y[o_s]),
            y[o_phi].reshape(n, n),
            unvech(y[o_g]),
        )

    hist = HistoryBuffer(params.T)
    # interval of the step currently being integrated; a stage that closes a
    # step exactly on the delayed image of an input jump must read the jump's
    # left side, interior and opening stages its right side
    step_ctx = [0.0, 0.0]

    def delayed_input(tt: float) -> float:
        s = tt - params.T
        if tt >= step_ctx[1] - 1e-12:
            return hist.interp_left(s)
        return hist.interp(s)

    def make_rhs_generic(mode_tag: str, theta: float, sliding: bool):
        observing = mode_tag == OBSERVATION

        def rhs(tt: float, yy: np.ndarray) -> np.ndarray:
            if not np.all(np.isfinite(yy)):
                raise BlowUpError(tt)
            x, xhat, s, phi, gram = unpack(yy)
            if smallest_eigenvalue(s) < GAIN_COLLAPSE_EIG:
                raise GainCollapseError(tt)
            u = 0.0 if observing else fb(xhat)
            a = sys.A(u)
            b = sys.b_vec(u)
            dx = a @ x + b
            innovation = float(c_row @ xhat - c_row @ x)
            dxhat = a @ xhat + b - solve_sym(s, ct) * innovation
            ds = -(a.T @ s + s @ a) - theta * s + ctc
            probe = GramianState(phi, gram, params.gamma, SLIDING if sliding else STARTUP)
            if sliding:
                a_del = sys.A(delayed_input(tt))
                dphi, dgram = gramian_rhs(a, a_del, c_row, probe)
            else:
                dphi, dgram = startup_rhs(a, c_row, probe)
            return pack(dx, dxhat, ds, dphi, dgram)

        return rhs

    def make_rhs_n2(mode_tag: str, theta: float, sliding: bool):
        # scalar unrolling of make_rhs_generic for n = 2 (the RK stages
        # dominate the run time); equivalence is pinned by a unit test
        observing = mode_tag == OBSERVATION
        gamma = params.gamma
        window = params.T
        c0, c1 = float(c_row[0, 0]), float(c_row[0, 1])
        u_bar = fb.u_bar
        law = fb.law

        def rhs(tt: float, yy: np.ndarray) -> np.ndarray:
            (x0_, x1_, xh0, xh1, s00, s01, s11,
             p00, p01, p10, p11, g00, g01, g11) = yy.tolist()
            # gain-collapse guard via the 2x2 eigenvalue closed form
            half = 0.5 * (s00 + s11)
            det_s = s00 * s11 - s01 * s01
            disc_sq = half * half - det_s
            smin = half - (disc_sq ** 0.5 if disc_sq > 0.0 else 0.0)
            if not smin >= GAIN_COLLAPSE_EIG:  # also catches NaN
                raise GainCollapseError(tt) if np.isfinite(smin) else BlowUpError(tt)
            if observing:
                u = 0.0
            else:
                u = float(law(np.array((xh0, xh1))))
                if u > u_bar:
                    u = u_bar
                elif u < -u_bar:
                    u = -u_bar
            a_mat = sys.A(u)
            b_vec = sys.b_vec(u)
            a00, a01 = float(a_mat[0, 0]), float(a_mat[0, 1])
            a10, a11 = float(a_mat[1, 0]), float(a_mat[1, 1])
            b0, b1 = float(b_vec[0]), float(b_vec[1])
            dx0 = a00 * x0_ + a01 * x1_ + b0
            dx1 = a10 * x0_ + a11 * x1_ + b1
            innovation = c0 * (xh0 - x0_) + c1 * (xh1 - x1_)
            z0 = (s11 * c0 - s01 * c1) / det_s
            z1 = (-s01 * c0 + s00 * c1) / det_s
            dxh0 = a00 * xh0 + a01 * xh1 + b0 - z0 * innovation
            dxh1 = a10 * xh0 + a11 * xh1 + b1 - z1 * innovation
            # dS = -(A'S + SA) - theta S + C'C
            ds00 = -2.0 * (a00 * s00 + a10 * s01) - theta * s00 + c0 * c0
            ds01 = -(a01 * s00 + a11 * s01 + a00 * s01 + a10 * s11) - theta * s01 + c0 * c1
            ds11 = -2.0 * (a01 * s01 + a11 * s11) - theta * s11 + c1 * c1
            q00, q01, q10, q11 = a00 + gamma, a01, a10, a11 + gamma
            # window integrand Phi' C'C Phi
            cp0 = c0 * p00 + c1 * p10
            cp1 = c0 * p01 + c1 * p11
            if sliding:
                a_del = sys.A(delayed_input(tt))
                r00 = float(a_del[0, 0]) + gamma
                r01 = float(a_del[0, 1])
                r10 = float(a_del[1, 0])
                r11 = float(a_del[1, 1]) + gamma
                dp00 = -(p00 * q00 + p01 * q10) + (r00 * p00 + r01 * p10)
                dp01 = -(p00 * q01 + p01 * q11) + (r00 * p01 + r01 * p11)
                dp10 = -(p10 * q00 + p11 * q10) + (r10 * p00 + r11 * p10)
                dp11 = -(p10 * q01 + p11 * q11) + (r10 * p01 + r11 * p11)
                w00, w01, w11 = cp0 * cp0, cp0 * cp1, cp1 * cp1
            else:
                dp00 = -(p00 * q00 + p01 * q10)
                dp01 = -(p00 * q01 + p01 * q11)
                dp10 = -(p10 * q00 + p11 * q10)
                dp11 = -(p10 * q01 + p11 * q11)
                w00 = w01 = w11 = 0.0
            dg00 = -2.0 * (q00 * g00 + q10 * g01) + c0 * c0 - w00
            dg01 = -(q01 * g00 + q11 * g01 + q00 * g01 + q10 * g11) + c0 * c1 - w01
            dg11 = -2.0 * (q01 * g01 + q11 * g11) + c1 * c1 - w11
            return np.array((
                dx0, dx1, dxh0, dxh1, ds00, ds01, ds11,
                dp00, dp01, dp10, dp11, dg00, dg01, dg11,
            ))

        return rhs

    make_rhs = make_rhs_n2 if (n == 2 and _rhs_flavor == "auto") else make_rhs_generic

    def g_signal(gram: np.ndarray, sliding: bool) -> float:
        if not sliding:
            return float("nan")
        return comp * smallest_eigenvalue(gram)

    rec = _Recorder()
    events: list[SwitchEvent] = []
    t = 0.0
    y = pack(x0, xhat0, s0, eye.copy(), np.zeros((n, n)))
    mode = Mode(OBSERVATION, 0.0)
    theta = params.alpha
    sliding = params.T <= _TIME_EPS
    kinks: list[float] = []

    def record(t_now, y_now, u_now):
        x, xhat, s, phi, gram = unpack(y_now)
        rec.add(t_now, mode.tag, u_now, theta, x, xhat, s, phi, gram, g_signal(gram, sliding))

    u0, _ = control_and_gain(mode, xhat0, fb, params)
    record(0.0, y, u0)
    hist.append(0.0, u0)

    def partial_result() -> RunResult:
        trace = rec.to_trace()
        log = SwitchLog(events + [SwitchEvent(len(events) + 1, t, mode.tag, TRIGGER_NONE_FINAL)])
        return RunResult(trace, log, hist, params, horizon)

    try:
        while t < horizon - _TIME_EPS:
            k_next = int(np.floor(t / h + _TIME_EPS)) + 1
            t_next = k_next * h
            deadline = mode.started_at + (params.t_obs if mode.tag == OBSERVATION else params.t_stab)
            candidates = [t_next, horizon]
            if deadline > t + _TIME_EPS:
                candidates.append(deadline)
            if not sliding:
                candidates.append(params.T)
            candidates.extend(k for k in kinks if k > t + _TIME_EPS)
            t_next = min(c for c in candidates if c > t + _TIME_EPS)
            t_next = min(t_next, horizon)

            rhs = make_rhs(mode.tag, theta, sliding)
            step_ctx[0], step_ctx[1] = t, t_next
            y_next = rk_step(rhs, t, y, t_next - t)

            switched_at = None
            trigger = None
            monitoring = (
                mode.tag == STABILIZATION
                and sliding
                and t >= mode.started_at + params.t_stab - _TIME_EPS
            )
            if monitoring:
                g_new = g_signal(unpack(y_next)[4], sliding)
                if g_new <= params.g_min:
                    # threshold crossed inside (t, t_next]: localize by
                    # re-integrating from the last committed state
                    def g_probe(tp: float, _t0=t, _y0=y.copy(), _rhs=rhs) -> float:
                        if tp <= _t0 + 1e-15:
                            return g_signal(unpack(_y0)[4], True)
                        step_ctx[0], step_ctx[1] = _t0, tp
                        yp = rk_step(_rhs, _t0, _y0, tp - _t0)
                        return g_signal(unpack(yp)[4], True)

                    if g_probe(t) <= params.g_min:
                        raise AssertionError("monitored g was not above threshold at step start")
                    t_star = locate_event(g_probe, (t, t_next), params.g_min, integ.event_tol)
                    step_ctx[0], step_ctx[1] = t, t_star
                    y_next = rk_step(rhs, t, y, t_star - t)
                    switched_at = t_star
                    trigger = TRIGGER_GRAM
                    t_next = t_star

            t, y = t_next, y_next
            if not sliding and t >= params.T - _TIME_EPS:
                sliding = True

            # timer exit of observation modes; immediate-gram exit exactly at
            # the dwell boundary
            if switched_at is None and mode.tag == OBSERVATION:
                if t >= mode.started_at + params.t_obs - _TIME_EPS:
                    switched_at, trigger = t, TRIGGER_TIMER
            elif switched_at is None and mode.tag == STABILIZATION and sliding:
                if abs(t - (mode.started_at + params.t_stab)) <= _TIME_EPS:
                    g_here = g_signal(unpack(y)[4], sliding)
                    if g_here <= params.g_min:
                        switched_at, trigger = t, TRIGGER_GRAM

            # the left-sided realized input closes the elapsed step; a switch
            # appends the right-sided value as a jump at the same instant
            u_left, _ = control_and_gain(mode, unpack(y)[1], fb, params)
            hist.append(t, u_left)
            if switched_at is not None and t < horizon - _TIME_EPS:
                new_tag = STABILIZATION if mode.tag == OBSERVATION else OBSERVATION
                mode = Mode(new_tag, switched_at)
                theta = params.beta if new_tag == STABILIZATION else params.alpha
                events.append(SwitchEvent(len(events) + 1, switched_at, new_tag, trigger))
                if switched_at + params.T < horizon:
                    kinks.append(switched_at + params.T)
                u_right, _ = control_and_gain(mode, unpack(y)[1], fb, params)
                if u_right != u_left:
                    hist.append_jump(t, u_right)
                record(t, y, u_right)
            else:
                record(t, y, u_left)
            kinks = [k for k in kinks if k > t + _TIME_EPS]
    except (GainCollapseError, BlowUpError) as exc:
        when = getattr(exc, "time", t) or t
        raise SimulationError(str(exc), when, partial_result()) from exc

    log = SwitchLog(events + [SwitchEvent(len(events) + 1, horizon, mode.tag, TRIGGER_NONE_FINAL)])
    return RunResult(rec.to_trace(), log, hist, params, horizon)
