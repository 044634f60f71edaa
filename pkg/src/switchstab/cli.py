"""Command-line front end: run scenarios, verify identities, tune gains.

Subcommands:
    run    --config cfg.ini [--out DIR] [--step H] [--horizon T]
    verify --config cfg.ini --check {gramian_oracle,variation_of_constants,
                                     error_bound,trace_bound}
    tune   --config cfg.ini

``run`` writes trace.csv, switches.csv and summary.txt into the output
directory; identical configurations produce byte-identical traces.
"""

from __future__ import annotations

import argparse
import sys as _sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .gramian import gramian_oracle
from .integrator import IntegratorConfig
from .linalg import solve_lyapunov
from .observer import (
    error_bound_check,
    quadratic_error_decay_slack,
    trace_bound_check,
    variation_of_constants,
)
from .supervisor import (
    STABILIZATION,
    TRIGGER_NONE_FINAL,
    RunResult,
    SimulationError,
    run_closed_loop,
)
from .tuning import derive_tuning


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(run: RunResult, lyap, path: Path) -> None:
    tr = run.trace
    n = tr.x.shape[1]
    cols = (
        ["t", "mode", "u", "theta"]
        + [f"x_{i+1}" for i in range(n)]
        + [f"xhat_{i+1}" for i in range(n)]
        + ["eps_norm", "x_norm_sq", "V_x", "V_xhat", "S_min_eig", "S_max_eig", "g"]
    )
    eps_norm = tr.eps_norm()
    x_norm_sq = tr.x_norm_sq()
    s_min, s_max = tr.s_eigen_extremes()
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(len(tr)):
            row = [
                _fmt(tr.t[k]),
                tr.mode[k],
                _fmt(tr.u[k]),
                _fmt(tr.theta[k]),
                *(_fmt(v) for v in tr.x[k]),
                *(_fmt(v) for v in tr.xhat[k]),
                _fmt(eps_norm[k]),
                _fmt(x_norm_sq[k]),
                _fmt(lyap.V(tr.x[k])),
                _fmt(lyap.V(tr.xhat[k])),
                _fmt(s_min[k]),
                _fmt(s_max[k]),
                "" if np.isnan(tr.g[k]) else _fmt(tr.g[k]),
            ]
            fh.write(",".join(row) + "\n")


def write_switches_csv(run: RunResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("k,t_k,new_mode,trigger\n")
        for ev in run.switch_log.events:
            fh.write(f"{ev.index},{_fmt(ev.time)},{ev.new_mode},{ev.trigger}\n")


@dataclass
class RunSummary:
    switch_count: int
    final_mode: str
    final_x_norm: float
    final_eps_norm: float
    s_infty_error: float
    wall_time: float

    def lines(self) -> list[str]:
        return [
            f"switch_count = {self.switch_count}",
            f"final_mode = {self.final_mode}",
            f"final_x_norm = {_fmt(self.final_x_norm)}",
            f"final_eps_norm = {_fmt(self.final_eps_norm)}",
            f"S_infty_error = {_fmt(self.s_infty_error)}",
            f"wall_time_s = {self.wall_time:.3f}",
        ]


def summarize(cfg: RunConfig, run: RunResult, wall_time: float) -> RunSummary:
    tr = run.trace
    s_inf = solve_lyapunov(cfg.system.A(0.0), cfg.system.C, cfg.switch_params.beta)
    return RunSummary(
        switch_count=run.switch_log.count,
        final_mode=tr.mode[-1],
        final_x_norm=float(np.linalg.norm(tr.x[-1])),
        final_eps_norm=float(np.linalg.norm(tr.xhat[-1] - tr.x[-1])),
        s_infty_error=float(np.linalg.norm(tr.s[-1] - s_inf)),
        wall_time=wall_time,
    )


def execute_run(cfg: RunConfig) -> tuple[RunResult, RunSummary]:
    t0 = time.perf_counter()
    run = run_closed_loop(
        cfg.system,
        cfg.feedback,
        cfg.lyapunov,
        cfg.switch_params,
        cfg.x0,
        cfg.xhat0,
        cfg.s0,
        cfg.horizon,
        cfg.integrator,
    )
    return run, summarize(cfg, run, time.perf_counter() - t0)


def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        run, summary = execute_run(cfg)
    except SimulationError as exc:
        if exc.partial is not None:
            write_trace_csv(exc.partial, cfg.lyapunov, out_dir / "trace.csv")
            write_switches_csv(exc.partial, out_dir / "switches.csv")
        (out_dir / "summary.txt").write_text(
            f"status = aborted\nreason = {exc}\nabort_time = {_fmt(exc.time)}\n"
        )
        print(f"run aborted: {exc}", file=_sys.stderr)
        return 2
    write_trace_csv(run, cfg.lyapunov, out_dir / "trace.csv")
    write_switches_csv(run, out_dir / "switches.csv")
    (out_dir / "summary.txt").write_text("status = ok\n" + "\n".join(summary.lines()) + "\n")
    for line in summary.lines():
        print(line)
    return 0


def _check_gramian_oracle(cfg: RunConfig, run: RunResult, probes: int = 50) -> tuple[bool, str]:
    tr = run.trace
    p = run.params
    t_lo, t_hi = p.T, float(tr.t[-1])
    if t_hi <= t_lo:
        return False, "trace too short for the window"
    worst = 0.0
    for tp in np.linspace(t_lo, t_hi, probes):
        idx = int(np.argmin(np.abs(tr.t - tp)))
        t_at = float(tr.t[idx])
        oracle = gramian_oracle(
            cfg.system, run.history.interp, t_at - p.T, t_at, p.gamma,
            quad_step=1e-4, u_history_left=run.history.interp_left,
        )
        err = np.linalg.norm(tr.gram[idx] - oracle) / (1.0 + np.linalg.norm(oracle))
        worst = max(worst, float(err))
    return worst <= 1e-6, f"worst relative error {worst:.3e} over {probes} probes (tol 1e-06)"


def _check_variation_of_constants(cfg: RunConfig, run: RunResult) -> tuple[bool, str]:
    tr = run.trace
    worst = 0.0
    for tag, theta, i0, i1 in run.mode_segments():
        t0, t1 = float(tr.t[i0]), float(tr.t[i1])
        t_end = min(t0 + 2.0, t1)
        if t_end <= t0:
            continue
        i_end = int(np.argmin(np.abs(tr.t - t_end)))
        predicted = variation_of_constants(
            cfg.system, run.history.interp, tr.s[i0], theta, t0, float(tr.t[i_end]),
            quad_step=2e-4, u_history_left=run.history.interp_left,
        )
        err = np.linalg.norm(predicted - tr.s[i_end]) / np.linalg.norm(tr.s[i_end])
        worst = max(worst, float(err))
    return worst <= 1e-5, f"worst relative error {worst:.3e} across modes (tol 1e-05)"


def _check_error_bound(cfg: RunConfig, run: RunResult) -> tuple[bool, str]:
    tr = run.trace
    eps = tr.eps()
    worst = -np.inf
    for tag, theta, i0, i1 in run.mode_segments():
        sl = slice(i0, i1 + 1)
        worst = max(worst, error_bound_check(tr.t[sl], eps[sl], tr.s[sl], theta))
        worst = max(worst, quadratic_error_decay_slack(tr.t[sl], eps[sl], tr.s[sl], theta))
    return worst <= 1e-9, f"worst slack {worst:.3e} (tol 1e-09)"


def _check_trace_bound(cfg: RunConfig, run: RunResult) -> tuple[bool, str]:
    p = run.params
    if p.alpha != p.beta:
        return False, "bound inapplicable (theta switches between alpha and beta)"
    tr = run.trace
    a_frob = max(float(np.linalg.norm(cfg.system.A(u), "fro")) for u in tr.u)
    c_norm_sq = float(np.sum(cfg.system.C * cfg.system.C))
    try:
        ok = trace_bound_check(tr.s, p.alpha, a_frob, c_norm_sq)
    except ValueError as exc:
        return False, f"bound inapplicable ({exc}; theta={p.alpha}, 2 a_F={2*a_frob:.4g})"
    return ok, f"tr(S) cap respected at all {len(tr)} samples (theta={p.alpha}, a_F={a_frob:.4g})"


VERIFY_CHECKS = {
    "gramian_oracle": _check_gramian_oracle,
    "variation_of_constants": _check_variation_of_constants,
    "error_bound": _check_error_bound,
    "trace_bound": _check_trace_bound,
}


def cmd_verify(cfg: RunConfig, check: str) -> int:
    if check not in VERIFY_CHECKS:
        print(f"unknown check {check!r}; choose from {sorted(VERIFY_CHECKS)}", file=_sys.stderr)
        return 2
    run, _ = execute_run(cfg)
    ok, detail = VERIFY_CHECKS[check](cfg, run)
    print(f"{'PASS' if ok else 'FAIL'} {check}: {detail}")
    return 0 if ok else 1


def cmd_tune(cfg: RunConfig) -> int:
    if cfg.tuning_sets is None:
        print("config has no [tuning] section (R0, xhat_radius, S_trace_max)", file=_sys.stderr)
        return 2
    if not cfg.lyapunov.is_quadratic:
        print("tuning requires a quadratic Lyapunov function", file=_sys.stderr)
        return 2
    p = cfg.switch_params
    window_ok = p.T < min(p.t_obs, p.t_stab) / 3.0
    consts = derive_tuning(cfg.system, cfg.feedback, cfg.lyapunov, cfg.tuning_sets, p)

    print("tuning report")
    print("=============")
    if not window_ok:
        print(f"warning: T outside certified range "
              f"(T={p.T}, need T < {min(p.t_obs, p.t_stab)/3.0:.6g}); "
              f"certifying at T={consts.window_cert:.6g}")
    if p.t_obs >= consts.t_obs_max:
        print(f"warning: t_obs={p.t_obs} exceeds the certifiable maximum "
              f"{consts.t_obs_max:.6g}; gain bounds are conditional on the "
              f"observation-mode growth premise")
    alpha_ok = p.alpha > consts.alpha_min
    beta_ok = p.beta > consts.beta_min
    if alpha_ok and beta_ok:
        print("verdict: configured gains meet the certified bounds")
    else:
        print(f"verdict: configured gains alpha={p.alpha}, beta={p.beta} are BELOW "
              f"the certified bounds (alpha_min={consts.alpha_min:.6g}, "
              f"beta_min={consts.beta_min:.6g}); convergence is not certified "
              f"at these gains")
    print()
    print("constants")
    print("---------")
    pairs = [
        ("eta", consts.eta),
        ("kappa", consts.kappa),
        ("t_obs_max", consts.t_obs_max),
        ("a0", consts.a0),
        ("a_inf", consts.a_inf),
        ("a_F", consts.a_frob),
        ("d0", consts.d0),
        ("d0_prime", consts.d0p),
        ("D", consts.dist_mid),
        ("D_prime", consts.dist_low),
        ("m_bar", consts.m_bar),
        ("s_bar", consts.s_bar),
        ("theta_floor", consts.theta_floor),
        ("window_cert", consts.window_cert),
        ("g0", consts.g0),
        ("K1", consts.k1),
        ("K2", consts.k2),
        ("K3", consts.k3),
        ("K4", consts.k4),
        ("alpha_min", consts.alpha_min),
        ("beta_min", consts.beta_min),
        ("ln_s_lower", consts.ln_s_lower),
        ("ln_rho", consts.ln_rho),
    ]
    for key, val in pairs:
        print(f"{key} = {_fmt(val)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="switchstab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a configuration and emit CSV traces")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.add_argument("--step", type=float, default=None, help="integrator step override")
    p_run.add_argument("--horizon", type=float, default=None, help="horizon override")

    p_ver = sub.add_parser("verify", help="re-run and check the propagation identities")
    p_ver.add_argument("--config", required=True)
    p_ver.add_argument("--check", required=True)

    p_tune = sub.add_parser("tune", help="emit the certified-constant report")
    p_tune.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2

    if args.command == "run":
        if args.step is not None:
            cfg.integrator = IntegratorConfig(step=args.step, event_tol=cfg.integrator.event_tol)
        if args.horizon is not None:
            cfg.horizon = args.horizon
        out_dir = Path(args.out) if args.out else cfg.outputs
        return cmd_run(cfg, out_dir)
    if args.command == "verify":
        return cmd_verify(cfg, args.check)
    if args.command == "tune":
        return cmd_tune(cfg)
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
