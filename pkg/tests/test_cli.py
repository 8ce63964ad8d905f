"""Command-line interface: outputs, flags, exit codes."""
import os
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nmqo import green
from nmqo.cli import main
from nmqo.config import load_config, parse_config
from nmqo.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

NULL_INI = """
[scenario]
kind = cavity
omega0 = 1.0
n_max = 6
initial = fock 1
[bath]
model = null
beta = 1
[grid]
T = 2
N = 40
[method]
route = both
"""

TWO_STATE_INI = """
[scenario]
kind = two-state
initial = excited
[bath]
model = lorentzian
gamma0 = 0.2
lam = 1
omega = 1
[grid]
T = 1
N = 50
[method]
route = unravel
n_traj = 300
seed = 11
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(x) for x in l.split(",")] for l in lines[1:]])
    return header, data


def test_null_compare_gaps_vanish(tmp_path, capsys):
    cfg = write(tmp_path, NULL_INI)
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    header, data = read_csv(tmp_path / "o" / "compare.csv")
    assert header == ["t"] + [f"{c}{j}" for j in "123" for c in ("A", "B", "abs_gap", "rel_gap")]
    for j in "123":
        assert np.max(data[:, header.index(f"abs_gap{j}")]) <= 1e-12
    assert "# summary" in capsys.readouterr().out
    text = (tmp_path / "o" / "compare.csv").read_text()
    assert re.search(r"^# summary .*time_integral=\S+ time_green=\S+$", text, re.M)
    assert (tmp_path / "o" / "observables.csv").exists()


def test_outputs_use_fifteen_significant_digits(tmp_path):
    cfg = write(tmp_path, NULL_INI)
    main(["coeffs", "--config", str(cfg), "--out", str(tmp_path / "o")])
    lines = (tmp_path / "o" / "coeffs.csv").read_text().splitlines()
    assert lines[0] == "t,A1,A2,A3"
    # omega0 * t_1 etc. need the full mantissa; A1 = omega0 on the null bath
    row = lines[7].split(",")
    assert float(row[1]) == 1.0
    mantissas = [len(re.sub(r"[-.]|e.*", "", v).lstrip("0")) for v in lines[3].split(",")]
    assert max(mantissas) <= 15


def test_repeated_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, NULL_INI.replace("model = null", "model = ohmic-exp\neta = 0.05\nwc = 5").replace("n_max = 6", "n_max = 12"))
    for d in ("a", "b"):
        assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / d), "--dump-tables"]) == 0
    for name in ("coeffs.csv", "observables.csv", "tables/x21.csv", "tables/x11bar.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    # compare.csv differs only in the timing fields of the summary line
    strip = lambda p: re.sub(r"time_\w+=\S+", "", p.read_text())
    assert strip(tmp_path / "a" / "compare.csv") == strip(tmp_path / "b" / "compare.csv")


def test_dump_tables_layout(tmp_path):
    cfg = write(tmp_path, NULL_INI)
    main(["coeffs", "--config", str(cfg), "--out", str(tmp_path / "o"), "--dump-tables"])
    tables = sorted(p.name for p in (tmp_path / "o" / "tables").iterdir())
    assert tables == ["x11.csv", "x12.csv", "x21.csv", "y.csv"]
    header, data = read_csv(tmp_path / "o" / "tables" / "x11.csv")
    assert header == ["i", "j", "t_i", "t_j", "re", "im"]
    assert np.all(data[:, 1] <= data[:, 0])  # lower triangle
    assert len(data) == 41 * 42 // 2
    header, data = read_csv(tmp_path / "o" / "tables" / "x21.csv")
    assert np.all(data[:, 1] == 0) and len(data) == 41


def test_propagate_writes_observables(tmp_path):
    cfg = write(tmp_path, NULL_INI)
    assert main(["propagate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    header, data = read_csv(tmp_path / "o" / "observables.csv")
    assert header[0] == "t" and data.shape[0] == 21  # every other node (step 2h)
    assert np.allclose(data[:, header.index("trace")], 1.0, atol=1e-12)


def test_output_dir_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write(tmp_path, NULL_INI + "[output]\ndir = here\n")
    assert main(["coeffs", "--config", str(cfg)]) == 0
    assert (tmp_path / "here" / "coeffs.csv").exists()


@pytest.mark.parametrize("text", [
    "[scenario]\nkind = cavity\n[nonsense]\nx = 1\n",
    "[bath]\nmodel = lorentzian\ngamma0 = 0.1\n",
    "[grid]\nN = many\n",
    "[method]\nroute = sideways\n",
    "[scenario]\nkind = two-state\n[method]\nroute = green\n",
    "[bath]\nmodel = flat\ngamma = 0.1\nwmax = 3\nbeta = 1\n",
    "not an ini file",
])
def test_bad_config_exit_2(tmp_path, capsys, text):
    cfg = write(tmp_path, text)
    assert main(["coeffs", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path):
    assert main(["coeffs", "--config", str(tmp_path / "absent.ini")]) == 2


def test_negative_threads_exit_2(tmp_path):
    cfg = write(tmp_path, TWO_STATE_INI)
    assert main(["unravel", "--config", str(cfg), "--threads", "-1"]) == 2


def test_picard_divergence_exit_3(tmp_path, capsys):
    text = NULL_INI.replace("model = null", "model = ohmic-exp\neta = 2\nwc = 5") + "solver = picard\n"
    cfg = write(tmp_path, text)
    assert main(["coeffs", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert "error:" in err and "diagnostics:" in err


def test_singularity_exit_4(tmp_path, monkeypatch, capsys):
    real = green.solve_u

    def vanishing_u(kernel, omega0, grid):
        u = real(kernel, omega0, grid).copy()
        u[grid.N // 2] = 1e-12
        return u

    monkeypatch.setattr(green, "solve_u", vanishing_u)
    cfg = write(tmp_path, NULL_INI)
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4
    assert "error:" in capsys.readouterr().err


def test_truncation_exit_5(tmp_path, capsys):
    # thermal bath at beta = 1 leaks population up the ladder past n_max = 6
    text = NULL_INI.replace("model = null", "model = ohmic-exp\neta = 0.05\nwc = 5")
    cfg = write(tmp_path, text)
    assert main(["propagate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 5
    assert "n_max" in capsys.readouterr().err


def test_unravel_thread_count_does_not_change_output(tmp_path):
    cfg = write(tmp_path, TWO_STATE_INI)
    for d, th in (("one", "1"), ("two", "2")):
        assert main(["unravel", "--config", str(cfg), "--out", str(tmp_path / d), "--threads", th]) == 0
    a = (tmp_path / "one" / "ensemble.csv").read_bytes()
    assert a == (tmp_path / "two" / "ensemble.csv").read_bytes()
    header, data = read_csv(tmp_path / "one" / "ensemble.csv")
    assert header == ["t", "mean_obs", "stderr_obs", "mean_trace", "stderr_trace", "n_used"]
    assert data[0, 1] == 1.0 and np.all(data[:, 5] == 300)


def test_threads_env_is_used_when_flag_absent_or_zero(tmp_path, monkeypatch):
    from nmqo import unravel

    seen = []
    real = unravel.resolve_threads
    monkeypatch.setattr(unravel, "resolve_threads", lambda t: seen.append(real(t)) or seen[-1])
    monkeypatch.setenv("NMQO_THREADS", "3")
    cfg = write(tmp_path, TWO_STATE_INI)
    main(["unravel", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["unravel", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "0"])
    main(["unravel", "--config", str(cfg), "--out", str(tmp_path / "c"), "--threads", "2"])
    assert seen == [3, 3, 2]


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 3


def test_console_script_entry_point(tmp_path):
    cfg = write(tmp_path, NULL_INI)
    r = subprocess.run([sys.executable, "-m", "nmqo.cli", "coeffs", "--config", str(cfg), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "nmqo.cli", "coeffs", "--config", str(tmp_path / "nope.ini")],
                       capture_output=True, text=True)
    assert r.returncode == 2


@pytest.mark.parametrize("name", ["reference.ini", "two_state.ini", "two_state_unravel.ini", "driven.ini"])
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.grid.N > 0


def test_config_defaults_and_overrides():
    cfg = parse_config("")
    assert cfg.scenario.kind == "cavity" and cfg.beta == 1.0 and cfg.grid.N == 400 and cfg.route == "both"
    cfg = parse_config("[scenario]\nkind = two-state\n[bath]\nmodel = lorentzian\ngamma0=0.1\nlam=1\nomega=0\n")
    assert cfg.beta == np.inf and cfg.route == "integral" and cfg.scenario.initial == ("excited",)
    cfg = parse_config("[scenario]\ninitial = coherent 0.5+0.5j\n[bath]\nbeta = inf\n[method]\nomit_channels = yes\n")
    assert cfg.scenario.initial == ("coherent", 0.5 + 0.5j) and cfg.omit_channels
    with pytest.raises(ConfigError):
        parse_config("[scenario]\ninitial = bloch 1\n")


def test_tabulated_bath_table_relative_to_config(tmp_path):
    w = np.linspace(0, 20, 401)
    np.savetxt(tmp_path / "J.csv", np.column_stack([w, 0.05 * w * np.exp(-w / 5)]), delimiter=",")
    cfg = load_config(write(tmp_path, "[bath]\nmodel = tabulated\ntable = J.csv\n"))
    assert cfg.scenario.model.J(1.0) == pytest.approx(0.05 * np.exp(-0.2), rel=1e-3)


def test_scaling_ratios_best_of_repeats():
    from nmqo.pipeline import scaling_ratios

    cfg = parse_config(NULL_INI)
    r = scaling_ratios(cfg, factor=2, repeat=2)
    assert set(r) == {"integral", "green", "seconds", "reports"}
    assert r["reports"]["fine"].grid.N == 80 and r["integral"] > 0 and r["green"] > 0
    with pytest.raises(ConfigError):
        scaling_ratios(cfg, repeat=0)
