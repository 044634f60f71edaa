"""Switched output-feedback stabilization with online observability monitoring."""

from .gramian import GramianState, gramian_oracle, smallest_gram_eigenvalue
from .integrator import HistoryBuffer, IntegratorConfig, locate_event, rk_step
from .linalg import is_positive_definite, observability_rank, smallest_eigenvalue, solve_lyapunov
from .model import Feedback, LyapunovFn, SystemDef, oscillator_example
from .observer import observer_rhs, variation_of_constants
from .supervisor import (
    Mode,
    RunResult,
    SimulationError,
    SwitchLog,
    SwitchParams,
    Trace,
    control_and_gain,
    next_transition,
    run_closed_loop,
)
from .tuning import CompactSets, TuningConstants, compute_eta, derive_tuning

__all__ = [
    "CompactSets",
    "Feedback",
    "GramianState",
    "HistoryBuffer",
    "IntegratorConfig",
    "LyapunovFn",
    "Mode",
    "RunResult",
    "SimulationError",
    "SwitchLog",
    "SwitchParams",
    "SystemDef",
    "Trace",
    "TuningConstants",
    "compute_eta",
    "control_and_gain",
    "derive_tuning",
    "gramian_oracle",
    "is_positive_definite",
    "locate_event",
    "next_transition",
    "observability_rank",
    "observer_rhs",
    "oscillator_example",
    "rk_step",
    "run_closed_loop",
    "smallest_eigenvalue",
    "smallest_gram_eigenvalue",
    "solve_lyapunov",
    "variation_of_constants",
]

__version__ = "0.1.0"
