"""End-to-end runs: kernels -> coefficient functions -> coefficients -> dynamics."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .assemble import CoeffSeries, assemble_A, assemble_CD, assemble_RS, zero_drive_extra
from .coefffuncs import DEFAULT_POLICY, SolverPolicy, compute_y, solve_cavity, solve_x21, solve_x_tsa
from .config import RunConfig
from .errors import ConfigError
from .green import assemble_B, solve_green, xbar_tables
from .kernels import ResponseKernel, TimeGrid, sample_kernels

log = logging.getLogger(__name__)


@dataclass
class IntegralRoute:
    coeffs: CoeffSeries
    extra: CoeffSeries | None
    tables: dict
    seconds: float


@dataclass
class GreenRoute:
    coeffs: CoeffSeries
    tables: dict
    seconds: float


def integral_route(kernel: ResponseKernel, scenario, grid: TimeGrid,
                   policy: SolverPolicy = DEFAULT_POLICY) -> IntegralRoute:
    t0 = time.perf_counter()
    omega0 = scenario.omega0
    if scenario.kind == "two-state":
        x = solve_x_tsa(kernel, omega0, grid, policy)
        rs = assemble_RS(kernel, x, grid)
        return IntegralRoute(rs, None, {"x_tsa": x}, time.perf_counter() - t0)
    x21 = solve_x21(kernel, omega0, grid, policy)
    drive = scenario.drive.samples(grid) if scenario.kind == "driven-cavity" else None
    xs = solve_cavity(kernel, omega0, grid, policy, x21=x21, drive=drive)
    y = compute_y(xs["x11"], xs["x12"])
    A = assemble_A(kernel, omega0, xs["x11"], x21, y, grid)
    extra = assemble_CD(kernel, xs["x13"], drive, grid) if drive is not None else zero_drive_extra(grid)
    tables = {"x11": xs["x11"], "x12": xs["x12"], "x21": x21, "y": y}
    if "x13" in xs:
        tables["x13"] = xs["x13"]
    return IntegralRoute(A, extra, tables, time.perf_counter() - t0)


def green_route(kernel: ResponseKernel, scenario, grid: TimeGrid) -> GreenRoute:
    if scenario.kind == "two-state":
        raise ConfigError("the green route covers the cavity coefficients only")
    t0 = time.perf_counter()
    sol = solve_green(kernel, scenario.omega0, grid)
    tables = xbar_tables(sol)
    B = assemble_B(kernel, scenario.omega0, tables, grid)
    return GreenRoute(B, tables, time.perf_counter() - t0)


@dataclass
class ComparisonReport:
    grid: TimeGrid
    A: CoeffSeries
    B: CoeffSeries
    abs_gap: dict = field(default_factory=dict)
    rel_gap: dict = field(default_factory=dict)
    seconds_integral: float = 0.0
    seconds_green: float = 0.0

    @property
    def max_abs(self) -> dict:
        return {k: float(np.max(v)) for k, v in self.abs_gap.items()}

    @property
    def max_rel(self) -> dict:
        return {k: float(np.max(v)) for k, v in self.rel_gap.items()}

    def summary(self) -> str:
        parts = [f"max_abs_{k}={v:.6e}" for k, v in self.max_abs.items()]
        parts += [f"max_rel_{k}={v:.6e}" for k, v in self.max_rel.items()]
        parts += [f"time_integral={self.seconds_integral:.6f}", f"time_green={self.seconds_green:.6f}"]
        return "# summary " + " ".join(parts)


def gaps(A: CoeffSeries, B: CoeffSeries):
    """Per-node |A_j - B_j| and the same normalised by max_t |B_j|.

    A coefficient that vanishes identically on the oracle side (e.g. the
    null bath) is reported with its absolute gap as the relative gap.
    """
    abs_gap, rel_gap = {}, {}
    for j in ("1", "2", "3"):
        a, b = A["A" + j], B["B" + j]
        d = np.abs(a - b)
        scale = float(np.max(np.abs(b)))
        abs_gap[j] = d
        rel_gap[j] = d / scale if scale > 0 else d
    return abs_gap, rel_gap


def compare_methods(cfg: RunConfig, kernel: ResponseKernel | None = None):
    """Both routes on the configured cavity scenario, with wall-clock timings.

    Returns ``(report, integral, green)``; kernel sampling is excluded from
    the timings because both routes share it.
    """
    if cfg.scenario.kind == "two-state":
        raise ConfigError("compare needs a cavity scenario")
    if kernel is None:
        kernel = sample_kernels(cfg.scenario.model, cfg.scenario.beta, cfg.grid)
    ir = integral_route(kernel, cfg.scenario, cfg.grid, cfg.policy)
    gr = green_route(kernel, cfg.scenario, cfg.grid)
    abs_gap, rel_gap = gaps(ir.coeffs, gr.coeffs)
    report = ComparisonReport(cfg.grid, ir.coeffs, gr.coeffs, abs_gap, rel_gap, ir.seconds, gr.seconds)
    log.info("compare: %s", report.summary())
    return report, ir, gr


def scaling_ratios(cfg: RunConfig, factor: int = 2, repeat: int = 1) -> dict:
    """Time ratios of both routes under N -> factor*N (same horizon).

    With ``repeat > 1`` each grid is compared that many times and the
    fastest time per route is kept (best-of-k), which suppresses scheduler
    noise in the short green-route timings.
    """
    from dataclasses import replace

    if repeat < 1:
        raise ConfigError("repeat must be >= 1")
    out, best = {}, {}
    for label, grid in (("coarse", cfg.grid), ("fine", cfg.grid.refined(factor))):
        kernel = sample_kernels(cfg.scenario.model, cfg.scenario.beta, grid)
        runs = [compare_methods(replace(cfg, grid=grid), kernel)[0] for _ in range(repeat)]
        out[label] = runs[0]
        best[label] = (min(r.seconds_integral for r in runs), min(r.seconds_green for r in runs))
    return {
        "integral": best["fine"][0] / best["coarse"][0],
        "green": best["fine"][1] / best["coarse"][1],
        "seconds": best,
        "reports": out,
    }
