"""Run configuration: flat INI sections, matrices as bracketed row lists.

Grammar (sections and keys; matrices/vectors use Python literal syntax):

    [system]
    name = oscillator | bilinear
    u_bar = 100.0                 # feedback clamp
    # bilinear systems (A(u) = A0 + u*A1, B(u) = u*B1) additionally take:
    # A0 = [[0,1],[-1,0]]
    # A1 = [[0,1],[-1,0]]
    # B1 = [1, 0]
    # C  = [0, 1]
    # feedback_gain = [-1, 0]     # lambda(x) = feedback_gain . x
    # lyapunov_P = [[1,0],[0,1]]  # V(x) = x'Px, defaults to identity

    [switching]
    t_obs = 2.0
    t_stab = 3.0
    T = 1.0
    g_min = 5e-4
    alpha = 1.0
    beta = 1.0
    gamma = 10.0

    [integrator]
    step = 1e-3
    event_tol = 1e-6

    [initial]
    x0 = [-10.0, 0.0]
    xhat0 = [-15.0, 5.0]
    S0 = identity                 # or a bracketed matrix

    [run]
    horizon = 50.0
    outputs = out

    [tuning]                      # optional; needed by the tune subcommand
    R0 = 400.0
    xhat_radius = 20.0
    S_trace_max = 2.0
"""

from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .integrator import IntegratorConfig
from .linalg import is_positive_definite
from .model import Feedback, LyapunovFn, SystemDef, bilinear_system, oscillator_example, quadratic_lyapunov
from .supervisor import SwitchParams
from .tuning import CompactSets


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    system: SystemDef
    feedback: Feedback
    lyapunov: LyapunovFn
    switch_params: SwitchParams
    integrator: IntegratorConfig
    x0: np.ndarray
    xhat0: np.ndarray
    s0: np.ndarray
    horizon: float
    outputs: Path
    tuning_sets: CompactSets | None


def _literal_array(text: str, key: str) -> np.ndarray:
    try:
        value = ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as a numeric literal") from exc
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{key}: non-finite entries")
    return arr


def _get(section, key: str, cast, default=None):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"missing key {key!r} in section [{section.name}]")
    try:
        return cast(section[key])
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case (T vs t)
    parser.read(path)

    for needed in ("system", "switching", "initial", "run"):
        if needed not in parser:
            raise ConfigError(f"missing section [{needed}]")

    sys_sec = parser["system"]
    name = _get(sys_sec, "name", str)
    u_bar = _get(sys_sec, "u_bar", float, default=100.0)
    if name == "oscillator":
        system, feedback, lyapunov = oscillator_example(u_bar=u_bar)
    elif name == "bilinear":
        a0 = _literal_array(_get(sys_sec, "A0", str), "A0")
        a1 = _literal_array(_get(sys_sec, "A1", str), "A1")
        b1 = _literal_array(_get(sys_sec, "B1", str), "B1")
        c = _literal_array(_get(sys_sec, "C", str), "C").reshape(1, -1)
        gain = _literal_array(_get(sys_sec, "feedback_gain", str), "feedback_gain")
        system = bilinear_system(a0, a1, b1, c)
        feedback = Feedback(law=lambda x, _g=gain: float(_g @ x), u_bar=u_bar)
        if "lyapunov_P" in sys_sec:
            lyapunov = quadratic_lyapunov(_literal_array(sys_sec["lyapunov_P"], "lyapunov_P"))
        else:
            lyapunov = quadratic_lyapunov(np.eye(system.n))
    else:
        raise ConfigError(f"unknown system name {name!r}")

    sw = parser["switching"]
    params = SwitchParams(
        t_obs=_get(sw, "t_obs", float),
        t_stab=_get(sw, "t_stab", float),
        T=_get(sw, "T", float),
        g_min=_get(sw, "g_min", float),
        alpha=_get(sw, "alpha", float),
        beta=_get(sw, "beta", float),
        gamma=_get(sw, "gamma", float, default=0.0),
    )

    integ_sec = parser["integrator"] if "integrator" in parser else {}
    integ = IntegratorConfig(
        step=float(integ_sec.get("step", 1e-3)),
        event_tol=float(integ_sec.get("event_tol", 1e-6)),
    )

    init = parser["initial"]
    x0 = _literal_array(_get(init, "x0", str), "x0").reshape(system.n)
    xhat0 = _literal_array(_get(init, "xhat0", str), "xhat0").reshape(system.n)
    s0_text = _get(init, "S0", str).strip()
    if s0_text == "identity":
        s0 = np.eye(system.n)
    else:
        s0 = _literal_array(s0_text, "S0")
    if s0.shape != (system.n, system.n):
        raise ConfigError(f"S0 must be {system.n}x{system.n}")
    if not is_positive_definite(s0):
        raise ConfigError("S0 must be positive definite")

    run_sec = parser["run"]
    horizon = _get(run_sec, "horizon", float)
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    outputs = Path(_get(run_sec, "outputs", str, default="out"))
    if not outputs.is_absolute():
        outputs = path.parent / outputs

    tuning_sets = None
    if "tuning" in parser:
        tun = parser["tuning"]
        tuning_sets = CompactSets(
            R0=_get(tun, "R0", float),
            xhat_radius=_get(tun, "xhat_radius", float),
            s_trace_max=_get(tun, "S_trace_max", float),
        )

    return RunConfig(
        system=system,
        feedback=feedback,
        lyapunov=lyapunov,
        switch_params=params,
        integrator=integ,
        x0=x0,
        xhat0=xhat0,
        s0=s0,
        horizon=horizon,
        outputs=outputs,
        tuning_sets=tuning_sets,
    )
