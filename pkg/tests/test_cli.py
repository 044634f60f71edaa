import warnings
from pathlib import Path

import numpy as np
import pytest

from switchstab.cli import main
from switchstab.config import ConfigError, load_config

SMALL_CONFIG = """
[system]
name = oscillator
u_bar = 100.0

[switching]
t_obs = 1.0
t_stab = 1.0
T = 0.25
g_min = 5e-4
alpha = 1.0
beta = 1.0
gamma = 10.0

[integrator]
step = 2e-3
event_tol = 1e-6

[initial]
x0 = [-2.0, 0.0]
xhat0 = [-2.5, 0.5]
S0 = identity

[run]
horizon = 5.0
outputs = out
"""

ZERO_FEEDBACK_CONFIG = """
[system]
name = bilinear
A0 = [[0.0, 1.0], [-1.0, 0.0]]
A1 = [[0.0, 1.0], [-1.0, 0.0]]
B1 = [1.0, 0.0]
C = [0.0, 1.0]
feedback_gain = [0.0, 0.0]
u_bar = 100.0

[switching]
t_obs = 1.0
t_stab = 1.0
T = 0.25
g_min = 1e-6
alpha = 3.0
beta = 3.0
gamma = 0.0

[integrator]
step = 2e-3

[initial]
x0 = [1.0, 2.0]
xhat0 = [0.0, 0.0]
S0 = [[1.0, 0.0], [0.0, 1.0]]

[run]
horizon = 4.0
outputs = out
"""

TUNE_CONFIG = """
[system]
name = oscillator
u_bar = 100.0

[switching]
t_obs = 2.0
t_stab = 3.0
T = 1.0
g_min = 5e-4
alpha = 1.0
beta = 1.0
gamma = 10.0

[initial]
x0 = [-10.0, 0.0]
xhat0 = [-15.0, 5.0]
S0 = identity

[run]
horizon = 50.0
outputs = out

[tuning]
R0 = 400.0
xhat_radius = 20.0
S_trace_max = 2.0
"""


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_CONFIG)
    return path


def _run(args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main(args)


class TestConfig:
    def test_loads(self, small_cfg):
        cfg = load_config(small_cfg)
        assert cfg.system.n == 2
        assert cfg.switch_params.gamma == 10.0
        assert cfg.integrator.step == 2e-3
        assert np.array_equal(cfg.s0, np.eye(2))
        assert cfg.horizon == 5.0

    def test_missing_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[system]\nname = oscillator\n")
        with pytest.raises(ConfigError, match="missing section"):
            load_config(path)

    def test_unknown_system(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(SMALL_CONFIG.replace("name = oscillator", "name = pendulum"))
        with pytest.raises(ConfigError, match="unknown system"):
            load_config(path)

    def test_indefinite_s0(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(SMALL_CONFIG.replace("S0 = identity", "S0 = [[1.0, 0.0], [0.0, -1.0]]"))
        with pytest.raises(ConfigError, match="positive definite"):
            load_config(path)

    def test_bilinear_system(self, tmp_path):
        path = tmp_path / "bil.ini"
        path.write_text(ZERO_FEEDBACK_CONFIG)
        cfg = load_config(path)
        assert np.allclose(cfg.system.A(0.3), [[0.0, 1.3], [-1.3, 0.0]])
        assert cfg.feedback(np.array([5.0, 5.0])) == 0.0


class TestRunCommand:
    def test_produces_outputs(self, small_cfg, tmp_path, capsys):
        out = tmp_path / "results"
        assert _run(["run", "--config", str(small_cfg), "--out", str(out)]) == 0
        trace = (out / "trace.csv").read_text().splitlines()
        header = trace[0].split(",")
        assert header == [
            "t", "mode", "u", "theta", "x_1", "x_2", "xhat_1", "xhat_2",
            "eps_norm", "x_norm_sq", "V_x", "V_xhat", "S_min_eig", "S_max_eig", "g",
        ]
        assert len(trace) > 1000
        switches = (out / "switches.csv").read_text().splitlines()
        assert switches[0] == "k,t_k,new_mode,trigger"
        assert switches[-1].endswith("none_final")
        summary = (out / "summary.txt").read_text()
        assert "switch_count" in summary and "status = ok" in summary
        n_switches = sum(1 for line in switches[1:] if not line.endswith("none_final"))
        assert f"switch_count = {n_switches}" in summary

    def test_g_column_empty_before_window(self, small_cfg, tmp_path):
        out = tmp_path / "results"
        _run(["run", "--config", str(small_cfg), "--out", str(out)])
        rows = (out / "trace.csv").read_text().splitlines()[1:]
        for row in rows:
            cells = row.split(",")
            t, g = float(cells[0]), cells[-1]
            if t < 0.25:
                assert g == ""
            else:
                assert g != ""

    def test_deterministic_bytes(self, small_cfg, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        _run(["run", "--config", str(small_cfg), "--out", str(out1)])
        _run(["run", "--config", str(small_cfg), "--out", str(out2)])
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
        assert (out1 / "switches.csv").read_bytes() == (out2 / "switches.csv").read_bytes()

    def test_zero_horizon(self, small_cfg, tmp_path):
        out = tmp_path / "zero"
        assert _run(["run", "--config", str(small_cfg), "--out", str(out), "--horizon", "0"]) == 0
        rows = (out / "trace.csv").read_text().splitlines()
        assert len(rows) == 2  # header + initial state
        summary = (out / "summary.txt").read_text()
        assert "switch_count = 0" in summary
        assert "final_mode = observation" in summary

    def test_abort_writes_diagnostic(self, tmp_path):
        # zero output row: no information ever reaches the gain matrix, so it
        # decays to singularity and the run must abort with a diagnostic
        path = tmp_path / "collapse.ini"
        path.write_text("""
[system]
name = bilinear
A0 = [[0.0, 1.0], [-1.0, 0.0]]
A1 = [[0.0, 0.0], [0.0, 0.0]]
B1 = [0.0, 0.0]
C = [0.0, 0.0]
feedback_gain = [0.0, 0.0]

[switching]
t_obs = 1.0
t_stab = 1.0
T = 0.25
g_min = 1e-30
alpha = 8.0
beta = 8.0
gamma = 0.0

[integrator]
step = 2e-3

[initial]
x0 = [1.0, 0.0]
xhat0 = [0.0, 0.0]
S0 = identity

[run]
horizon = 20.0
outputs = out
""")
        out = tmp_path / "aborted"
        code = _run(["run", "--config", str(path), "--out", str(out)])
        assert code == 2
        assert "aborted" in (out / "summary.txt").read_text()
        assert (out / "trace.csv").exists()


class TestVerifyCommand:
    def test_gramian_oracle_pass(self, small_cfg, capsys):
        assert _run(["verify", "--config", str(small_cfg), "--check", "gramian_oracle"]) == 0
        assert "PASS gramian_oracle" in capsys.readouterr().out

    def test_variation_of_constants_pass(self, small_cfg, capsys):
        assert _run(["verify", "--config", str(small_cfg), "--check", "variation_of_constants"]) == 0
        assert "PASS variation_of_constants" in capsys.readouterr().out

    def test_error_bound_pass(self, small_cfg, capsys):
        assert _run(["verify", "--config", str(small_cfg), "--check", "error_bound"]) == 0
        assert "PASS error_bound" in capsys.readouterr().out

    def test_trace_bound_pass_on_zero_feedback(self, tmp_path, capsys):
        path = tmp_path / "zf.ini"
        path.write_text(ZERO_FEEDBACK_CONFIG)
        assert _run(["verify", "--config", str(path), "--check", "trace_bound"]) == 0
        assert "PASS trace_bound" in capsys.readouterr().out

    def test_trace_bound_inapplicable(self, small_cfg, capsys):
        # alpha = beta = 1 but the realized inputs push 2 a_F above theta
        code = _run(["verify", "--config", str(small_cfg), "--check", "trace_bound"])
        out = capsys.readouterr().out
        assert code == 1
        assert "bound inapplicable" in out

    def test_unknown_check(self, small_cfg, capsys):
        assert _run(["verify", "--config", str(small_cfg), "--check", "nonsense"]) == 2


class TestTuneCommand:
    def test_report(self, tmp_path, capsys):
        path = tmp_path / "tune.ini"
        path.write_text(TUNE_CONFIG)
        assert _run(["tune", "--config", str(path)]) == 0
        out = capsys.readouterr().out
        assert "T outside certified range" in out
        assert "BELOW the certified bounds" in out
        assert "eta = 0.7283" in out
        assert "alpha_min" in out and "beta_min" in out

    def test_requires_tuning_section(self, small_cfg, capsys):
        assert _run(["tune", "--config", str(small_cfg)]) == 2
