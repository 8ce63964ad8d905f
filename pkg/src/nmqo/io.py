"""CSV writers. Fixed 15 significant digits, '.' decimal, no locale."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .assemble import CoeffSeries
from .coefffuncs import OneVarTable, TwoVarTable


def fmt(x) -> str:
    return format(float(x), ".15g")


def write_csv(path, header, columns, extra_lines=()) -> Path:
    """Write equal-length ``columns`` under ``header``; ``extra_lines`` go last verbatim."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float) for c in columns]
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")
        for line in extra_lines:
            fh.write(line + "\n")
    return path


def write_coeffs(path, series: CoeffSeries) -> Path:
    t = series.grid.times
    if series.kind == "driven-extra":
        C, D = series["C"], series["D"]
        return write_csv(path, ("t", "ReC", "ImC", "ReD", "ImD"), (t, C.real, C.imag, D.real, D.imag))
    names = series.names
    return write_csv(path, ("t",) + tuple(names), (t,) + tuple(series[n] for n in names))


def write_observables(path, traj) -> Path:
    from .dynamics import OBS_COLUMNS

    return write_csv(path, ("t",) + OBS_COLUMNS, (traj.times,) + tuple(traj[c] for c in OBS_COLUMNS))


def write_ensemble(path, result, obs: str = "n_or_pe") -> Path:
    n = np.full(result.times.size, result.n_used)
    return write_csv(
        path,
        ("t", "mean_obs", "stderr_obs", "mean_trace", "stderr_trace", "n_used"),
        (result.times, result.mean[obs], result.stderr[obs], result.mean["trace"], result.stderr["trace"], n),
    )


def write_table(path, table) -> Path:
    """Dump a coefficient-function table as ``i,j,t_i,t_j,re,im`` (stored triangle only)."""
    grid = table.grid
    t = grid.times
    if isinstance(table, OneVarTable):
        i = np.arange(grid.N + 1)
        j = np.zeros_like(i)
        vals = table.values
    elif isinstance(table, TwoVarTable):
        i, j = np.tril_indices(grid.N + 1)
        vals = table.values[i, j]
    else:
        raise TypeError(f"cannot dump {type(table).__name__}")
    return write_csv(path, ("i", "j", "t_i", "t_j", "re", "im"), (i, j, t[i], t[j], vals.real, vals.imag))
