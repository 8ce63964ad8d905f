"""INI run configuration.

Sections and keys (natural units, hbar = k_B = 1)::

    [scenario]  kind = cavity | driven-cavity | two-state
                omega0, n_max, initial (e.g. "fock 1", "coherent 0.5", "excited", "bloch 1.0 0.0")
                drive = constant | sinusoid, drive_amplitude, drive_omega, drive_phase
    [bath]      model = ohmic-exp | lorentzian | flat | tabulated | null
                eta, wc | gamma0, lam, Omega | gamma, wmax | table (CSV of omega,J)
                beta (number, or "inf" for the vacuum bath; default 1, or inf for two-state)
    [grid]      T, N
    [method]    route = integral | green | both | unravel
                solver = dense | picard, picard_tol, picard_max_iter, relaxation
                n_traj, seed, omit_channels
    [output]    dir, dump_tables

Missing keys fall back to the reference scenario: ohmic-exp bath with
eta = 0.05, wc = 5, beta = 1; omega0 = 1; T = 4, N = 400.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefffuncs import SolverPolicy
from .dynamics import Drive, Scenario
from .errors import ConfigError
from .kernels import FlatCutoff, LorentzianExtended, Null, OhmicExp, Tabulated, TimeGrid

ROUTES = ("integral", "green", "both", "unravel")
SECTIONS = ("scenario", "bath", "grid", "method", "output")


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    grid: TimeGrid
    route: str = "both"
    policy: SolverPolicy = field(default_factory=SolverPolicy)
    n_traj: int = 1000
    seed: int = 0
    omit_channels: bool = False
    out_dir: Path = Path("out")
    dump_tables: bool = False

    @property
    def beta(self) -> float:
        return self.scenario.beta


def _float(sec, key, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] missing key {key!r}")
        return default
    raw = sec[key].strip().lower()
    if raw in ("inf", "infinity", "zero-temperature"):
        return math.inf
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {sec[key]!r} is not a number") from None


def _int(sec, key, default=None):
    v = _float(sec, key, default)
    if not math.isfinite(v) or v != int(v):
        raise ConfigError(f"[{sec.name}] {key} must be an integer")
    return int(v)


def _bool(sec, key, default=False):
    try:
        return sec.getboolean(key, fallback=default)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} must be a boolean") from None


def _initial(text: str) -> tuple:
    parts = text.split()
    if not parts:
        raise ConfigError("[scenario] initial is empty")
    name, args = parts[0].lower(), parts[1:]
    try:
        if name == "fock":
            return ("fock", int(args[0]) if args else 0)
        if name == "coherent":
            return ("coherent", complex(args[0]) if args else 0j)
        if name == "bloch":
            return ("bloch", float(args[0]), float(args[1]))
    except (IndexError, ValueError):
        raise ConfigError(f"[scenario] cannot parse initial = {text!r}") from None
    return (name,)


def _model(sec, base: Path):
    name = sec.get("model", "ohmic-exp").strip().lower()
    if name == "ohmic-exp":
        return OhmicExp(_float(sec, "eta", 0.05), _float(sec, "wc", 5.0))
    if name == "lorentzian":
        return LorentzianExtended(_float(sec, "gamma0"), _float(sec, "lam"), _float(sec, "omega"))
    if name == "flat":
        return FlatCutoff(_float(sec, "gamma"), _float(sec, "wmax"))
    if name == "null":
        return Null()
    if name == "tabulated":
        if "table" not in sec:
            raise ConfigError("[bath] tabulated model needs table = <csv path>")
        path = (base / sec["table"]).expanduser()
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        except (OSError, ValueError) as exc:
            raise ConfigError(f"[bath] cannot read table {path}: {exc}") from None
        return Tabulated(tuple(data[:, 0]), tuple(data[:, 1]))
    raise ConfigError(f"[bath] unknown model {name!r}")


def parse_config(text: str, base: Path | str = ".") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from None
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"config: unknown section(s) {sorted(unknown)}")
    for s in SECTIONS:
        if not cp.has_section(s):
            cp.add_section(s)
    base = Path(base)
    sc, bath, gr, me, out = (cp[s] for s in SECTIONS)

    drive = None
    kind = sc.get("kind", "cavity").strip().lower()
    if kind == "driven-cavity":
        drive = Drive(sc.get("drive", "constant").strip().lower(), _float(sc, "drive_amplitude", 0.0),
                      _float(sc, "drive_omega", 0.0), _float(sc, "drive_phase", 0.0))
    default_initial = "excited" if kind == "two-state" else "fock 0"
    scenario = Scenario(
        kind=kind,
        omega0=_float(sc, "omega0", 1.0),
        model=_model(bath, base),
        beta=_float(bath, "beta", math.inf if kind == "two-state" else 1.0),
        n_max=_int(sc, "n_max", 10),
        initial=_initial(sc.get("initial", default_initial)),
        drive=drive,
    )
    T = _float(gr, "t", 4.0)
    if not (T > 0 and math.isfinite(T)):
        raise ConfigError("[grid] T must be positive")
    grid = TimeGrid.from_horizon(T, _int(gr, "n", 400))

    route = me.get("route", "integral" if kind == "two-state" else "both").strip().lower()
    if route not in ROUTES:
        raise ConfigError(f"[method] route must be one of {ROUTES}, got {route!r}")
    policy = SolverPolicy(
        method=me.get("solver", "dense").strip().lower(),
        picard_tol=_float(me, "picard_tol", 1e-10),
        picard_max_iter=_int(me, "picard_max_iter", 200),
        relaxation=_float(me, "relaxation", 1.0),
    )
    cfg = RunConfig(
        scenario=scenario,
        grid=grid,
        route=route,
        policy=policy,
        n_traj=_int(me, "n_traj", 1000),
        seed=_int(me, "seed", 0),
        omit_channels=_bool(me, "omit_channels"),
        out_dir=Path(out.get("dir", "out")),
        dump_tables=_bool(out, "dump_tables"),
    )
    if route in ("green", "both") and kind == "two-state":
        raise ConfigError("[method] the green route covers the cavity coefficients only; use route = integral")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    return parse_config(text, base=path.parent)
