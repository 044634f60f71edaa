"""Constructive tuning of the supervisor constants for quadratic Lyapunov
functions.

Given compact sets of admissible initial conditions (a Lyapunov level R0 for
the plant, a ball radius for the estimator, a trace bound for the initial
gain matrix), the procedure produces the chain of constants that certify
boundedness and convergence of the switched loop: the per-cycle growth
margin eta, the largest certifiable observation time, the sublevel-set
geometry, the four gain constants K1..K4, and lower bounds on the mode
gains alpha and beta.  All exponential inequalities are solved in the log
domain; certified gains for realistic clamps are astronomically
conservative, and the point of the report is an honest comparison against
the gains actually configured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gramian import gramian_oracle
from .linalg import smallest_eigenvalue
from .model import Feedback, LyapunovFn, SystemDef
from .supervisor import SwitchParams


@dataclass(frozen=True)
class CompactSets:
    """Initial-condition sets: plant inside the Lyapunov sublevel set of
    level ``R0``, estimator inside the origin-centered ball of radius
    ``xhat_radius``, initial gain trace at most ``s_trace_max``."""

    R0: float
    xhat_radius: float
    s_trace_max: float

    def __post_init__(self):
        if min(self.R0, self.xhat_radius, self.s_trace_max) <= 0:
            raise ValueError("compact-set parameters must be positive")


@dataclass
class TuningConstants:
    eta: float = math.nan
    t_obs_max: float = math.nan
    a0: float = math.nan
    a_inf: float = math.nan
    a_frob: float = math.nan
    r0: float = math.nan
    c_norm_sq: float = math.nan
    d0: float = math.nan
    d0p: float = math.nan
    dist_mid: float = math.nan      # gap D((1+eta)R0) -> D((1+2 eta)R0)^c
    dist_low: float = math.nan      # gap D((1-eta)R0) -> D(R0)^c
    m_bar: float = math.nan         # gradient sup on D((1+2 eta)R0)
    m_low: float = math.nan         # gradient sup on D((1-eta)R0)
    s_bar: float = math.nan
    theta_floor: float = math.nan
    g0: float = math.nan
    window_cert: float = math.nan
    # the gain constants span hundreds of orders of magnitude (K2 carries
    # e^{-6 a_inf t_stab}), so their logs are the primary representation;
    # the plain values may underflow to 0.0
    ln_k1: float = math.nan
    ln_k2: float = math.nan
    ln_k3: float = math.nan
    ln_k4: float = math.nan
    alpha_min: float = math.nan
    beta_min: float = math.nan
    kappa: float = math.nan
    ln_s_lower: float = math.nan    # log of the certified lower bound on S
    ln_rho: float = math.nan

    @property
    def k1(self) -> float:
        return math.exp(self.ln_k1)

    @property
    def k2(self) -> float:
        return math.exp(self.ln_k2)

    @property
    def k3(self) -> float:
        return math.exp(self.ln_k3)

    @property
    def k4(self) -> float:
        return math.exp(self.ln_k4)

    @property
    def s_lower(self) -> float:
        return math.exp(self.ln_s_lower)

    @property
    def rho(self) -> float:
        return math.exp(self.ln_rho)


def compute_eta(t_stab: float) -> float:
    """Growth margin eta = (e^t - 1 - t) / (2 + e^t) at t = t_stab."""
    if t_stab <= 0:
        raise ValueError("t_stab must be positive")
    et = math.exp(t_stab)
    return (et - 1.0 - t_stab) / (2.0 + et)


def compute_kappa(t_stab: float) -> float:
    """Per-cycle contraction factor (1 + eta + t_stab) e^{-t_stab} < 1."""
    return (1.0 + compute_eta(t_stab) + t_stab) * math.exp(-t_stab)


def _quad_eigs(lyap: LyapunovFn) -> tuple[float, float]:
    if not lyap.is_quadratic:
        raise ValueError("analytic geometry requires quadratic V")
    vals = np.linalg.eigvalsh(lyap.quad_form)
    if vals[0] <= 0:
        raise ValueError("quadratic V must be positive definite")
    return float(vals[0]), float(vals[-1])


def sublevel_geometry(lyap: LyapunovFn, level: float) -> tuple[float, float]:
    """(diameter of {V <= level}, sup of |grad V| over it) for quadratic V.

    For V = x'Px these are 2 sqrt(level/lambda_min(P)) and
    2 sqrt(level lambda_max(P)).
    """
    lam_min, lam_max = _quad_eigs(lyap)
    diam = 2.0 * math.sqrt(level / lam_min)
    grad_sup = 2.0 * math.sqrt(level * lam_max)
    return diam, grad_sup


def sublevel_geometry_mc(
    lyap: LyapunovFn, level: float, dim: int = 2, samples: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo estimate of (diam, grad sup) for non-quadratic V.

    Radially bisects the sublevel boundary along random directions.
    Approximate by construction; callers must treat the result as such.
    """
    rng = np.random.default_rng(seed)
    n = dim if lyap.quad_form is None else lyap.quad_form.shape[0]
    dirs = rng.normal(size=(samples, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    max_radius = 0.0
    grad_sup = 0.0
    for d in dirs:
        lo, hi = 0.0, 1.0
        while lyap.V(hi * d) <= level and hi < 1e12:
            hi *= 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if lyap.V(mid * d) <= level:
                lo = mid
            else:
                hi = mid
        max_radius = max(max_radius, lo)
        grad_sup = max(grad_sup, float(np.linalg.norm(lyap.grad(lo * d))))
    return 2.0 * max_radius, grad_sup


def sublevel_gap(lyap: LyapunovFn, level_inner: float, level_outer: float) -> float:
    """Distance from {V <= level_inner} to the complement of
    {V <= level_outer}; thinnest along the stiffest eigendirection of P."""
    if level_outer <= level_inner:
        raise ValueError("outer level must exceed inner level")
    _, lam_max = _quad_eigs(lyap)
    return (math.sqrt(level_outer) - math.sqrt(level_inner)) / math.sqrt(lam_max)


def union_ball_diameter(lyap: LyapunovFn, level: float, ball_radius: float) -> float:
    """Diameter of {V <= level} united with the origin ball of given radius."""
    lam_min, _ = _quad_eigs(lyap)
    return 2.0 * max(math.sqrt(level / lam_min), ball_radius)


def operator_norm_sup(sys: SystemDef, u_lo: float, u_hi: float, points: int = 2001) -> float:
    """sup of ||A(u)||_2 over a uniform input grid."""
    grid = np.linspace(u_lo, u_hi, points)
    return max(float(np.linalg.norm(sys.A(u), 2)) for u in grid)


def frobenius_sup(sys: SystemDef, u_lo: float, u_hi: float, points: int = 2001) -> float:
    """sup of sqrt(tr(A(u)'A(u))) over a uniform input grid."""
    grid = np.linspace(u_lo, u_hi, points)
    return max(float(np.linalg.norm(sys.A(u), "fro")) for u in grid)


def compute_t_obs_max(lyap: LyapunovFn, r0: float, a0: float, eta: float) -> float:
    """Largest certifiable observation-mode duration.

    Solves Q(R0) * t * e^{a0 t} = eta for t, where for quadratic V the
    level-wise supremum Q(R) = 2 sqrt((1+eta) lambda_max) *
    (2 a0 / sqrt(lambda_min) + sqrt(R)) is increasing in R and so attained
    at R0.  Bisection to 1e-10 absolute.
    """
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    lam_min, lam_max = _quad_eigs(lyap)
    q = 2.0 * math.sqrt((1.0 + eta) * lam_max) * (2.0 * a0 / math.sqrt(lam_min) + math.sqrt(r0))

    def excess(t: float) -> float:
        return q * t * math.exp(a0 * t) - eta

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tuning_monotone_expression(lyap: LyapunovFn, r0: float, a0: float, eta: float, t: float) -> float:
    """The certification expression Q(R0) * t * e^{a0 t} (test hook)."""
    lam_min, lam_max = _quad_eigs(lyap)
    q = 2.0 * math.sqrt((1.0 + eta) * lam_max) * (2.0 * a0 / math.sqrt(lam_min) + math.sqrt(r0))
    return q * t * math.exp(a0 * t)


def gain_bound_logs(
    consts: TuningConstants,
    p: SwitchParams,
    window: float | None = None,
    beta_eval: float | None = None,
) -> tuple[float, float, float, float, float, float]:
    """(alpha_min, beta_min, ln K1, ln K2, ln K3, ln K4).

    ``window`` defaults to consts.window_cert and must satisfy
    t_obs > 3*window and t_stab > 3*window.  beta_min comes from the two
    stabilization inequalities

        e^{-beta (t_stab - T)} < K3 g_min,
        e^{-beta (t_stab - 3T)} < K4 g_min^3,

    and alpha_min from the observation inequalities

        e^{-alpha (t_obs - T)} < K1 g0,
        e^{-alpha (t_obs - 3T)} < K2 g0^3 e^{-2 beta t_stab},

    evaluated at beta = ``beta_eval`` (default: the beta_min just computed,
    raised to the gain floor).  Everything is solved in logs: K2 carries
    e^{-6 a_inf t_stab} and underflows as a plain float for realistic
    feedback clamps.  Returned bounds are clamped below by the gain floor
    that backs the trace bound s_bar.
    """
    w = consts.window_cert if window is None else window
    if p.t_obs <= 3.0 * w or p.t_stab <= 3.0 * w:
        raise ValueError("window too large")
    ln_g0 = math.log(consts.g0)
    ln_gmin = math.log(p.g_min)

    ln_k1 = 2.0 * min(math.log(consts.dist_mid),
                      math.log(consts.dist_low) - consts.a_inf * p.t_stab) \
        - math.log(consts.s_bar) - 2.0 * math.log(consts.d0)
    ln_k2 = 2.0 * math.log(consts.r0) - 6.0 * consts.a_inf * p.t_stab \
        - math.log(consts.s_bar) - 2.0 * math.log(consts.d0) \
        - 2.0 * math.log(consts.c_norm_sq) - 2.0 * math.log(consts.m_bar)
    ln_k3 = 2.0 * math.log(consts.dist_low) - math.log(consts.s_bar) - 2.0 * math.log(consts.d0p)
    ln_k4 = 2.0 * math.log1p(-consts.eta) + 2.0 * math.log(consts.r0) \
        - math.log(consts.s_bar) - 2.0 * math.log(consts.d0p) - 2.0 * math.log(consts.m_low)

    beta_1 = -(ln_k3 + ln_gmin) / (p.t_stab - w)
    beta_2 = -(ln_k4 + 3.0 * ln_gmin) / (p.t_stab - 3.0 * w)
    beta_min = max(beta_1, beta_2, consts.theta_floor)
    beta_used = beta_min if beta_eval is None else max(beta_eval, consts.theta_floor)

    alpha_1 = -(ln_k1 + ln_g0) / (p.t_obs - w)
    alpha_2 = (2.0 * beta_used * p.t_stab - ln_k2 - 3.0 * ln_g0) / (p.t_obs - 3.0 * w)
    alpha_min = max(alpha_1, alpha_2, consts.theta_floor)

    return alpha_min, beta_min, ln_k1, ln_k2, ln_k3, ln_k4


def compute_gain_bounds(
    consts: TuningConstants,
    p: SwitchParams,
    window: float | None = None,
    beta_eval: float | None = None,
) -> tuple[float, float, float, float, float, float]:
    """(alpha_min, beta_min, K1, K2, K3, K4); the K's may underflow to 0.0,
    see ``gain_bound_logs`` for the exact representation."""
    alpha_min, beta_min, ln_k1, ln_k2, ln_k3, ln_k4 = gain_bound_logs(consts, p, window, beta_eval)
    return (
        alpha_min,
        beta_min,
        math.exp(ln_k1),
        math.exp(ln_k2),
        math.exp(ln_k3),
        math.exp(ln_k4),
    )


def derive_tuning(
    sys: SystemDef,
    fb: Feedback,
    lyap: LyapunovFn,
    sets: CompactSets,
    p: SwitchParams,
    window_cert: float | None = None,
    theta_floor: float | None = None,
) -> TuningConstants:
    """Run the whole certification pipeline for a quadratic V.

    ``window_cert`` is the Gramian window used for certification; it
    defaults to the configured T when that satisfies T < min(t_obs,
    t_stab)/3, and to min(t_obs, t_stab)/6 otherwise.  The gain floor
    ``theta_floor`` (default 2 a_F + |C|^2 / s_trace_max) makes the
    configured trace bound dominate the gain-trace estimate; returned gain
    bounds never fall below it.
    """
    consts = TuningConstants()
    consts.eta = compute_eta(p.t_stab)
    consts.kappa = compute_kappa(p.t_stab)

    c_norm_sq = float(np.sum(sys.C * sys.C))
    consts.c_norm_sq = c_norm_sq
    consts.r0 = sets.R0

    consts.a0 = float(np.linalg.norm(sys.A(0.0), 2))
    consts.a_inf = operator_norm_sup(sys, -fb.u_bar, fb.u_bar)
    consts.a_frob = frobenius_sup(sys, -fb.u_bar, fb.u_bar)

    consts.t_obs_max = compute_t_obs_max(lyap, sets.R0, consts.a0, consts.eta)

    eta, r0 = consts.eta, sets.R0
    consts.d0 = union_ball_diameter(lyap, r0, sets.xhat_radius)
    consts.d0p, _ = sublevel_geometry(lyap, (1.0 + 2.0 * eta) * r0)
    consts.dist_mid = sublevel_gap(lyap, (1.0 + eta) * r0, (1.0 + 2.0 * eta) * r0)
    consts.dist_low = sublevel_gap(lyap, (1.0 - eta) * r0, r0)
    _, consts.m_bar = sublevel_geometry(lyap, (1.0 + 2.0 * eta) * r0)
    _, consts.m_low = sublevel_geometry(lyap, (1.0 - eta) * r0)

    if theta_floor is None:
        theta_floor = 2.0 * consts.a_frob + c_norm_sq / sets.s_trace_max
    if theta_floor <= 2.0 * consts.a_frob:
        raise ValueError("gain floor must exceed 2 a_F")
    consts.theta_floor = theta_floor
    consts.s_bar = max(sets.s_trace_max, c_norm_sq / (theta_floor - 2.0 * consts.a_frob))

    if window_cert is None:
        window_cert = p.T if p.T < min(p.t_obs, p.t_stab) / 3.0 else min(p.t_obs, p.t_stab) / 6.0
    consts.window_cert = window_cert
    consts.g0 = smallest_eigenvalue(
        gramian_oracle(sys, lambda s: 0.0, 0.0, window_cert, 0.0, quad_step=min(1e-4, window_cert / 200.0))
    )

    alpha_min, beta_min, ln_k1, ln_k2, ln_k3, ln_k4 = gain_bound_logs(consts, p, window=window_cert)
    consts.alpha_min, consts.beta_min = alpha_min, beta_min
    consts.ln_k1, consts.ln_k2, consts.ln_k3, consts.ln_k4 = ln_k1, ln_k2, ln_k3, ln_k4

    # certified lower bound on the gain matrix at the certified gains, and
    # the derived small-error radius factor (both kept in logs: the certified
    # gains make them underflow any float)
    ln_g0, ln_gmin = math.log(consts.g0), math.log(p.g_min)
    consts.ln_s_lower = -beta_min * window_cert + min(
        -alpha_min * window_cert + ln_gmin,
        -(alpha_min + 2.0 * consts.a_inf) * p.t_stab - beta_min * window_cert + ln_g0,
    )
    consts.ln_rho = 1.5 * consts.ln_s_lower - 0.5 * math.log(consts.s_bar) \
        - math.log(c_norm_sq * consts.m_bar)
    return consts
