"""Error estimation over repetitions, convergence sweeps and error-bound diagnostics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..dirichlet import DirichletConfig, run_dirichlet
from ..grid_interp import GridFunction1D, PeriodicGrid1D, norm_l2, seminorm_h1, project
from ..heat_periodic import HeatConfig, Mode, anti_cfl_ratio, deterministic_evolve, run_heat
from ..rng import derive_seed
from .config import ConvergenceSection, DirichletSection
from .output import Table

Z95 = 1.959963984540054


@dataclass
class MCErrorEstimate:
    mean_sq_error: float
    halfwidth: float
    std_error: float
    errors: np.ndarray

    @property
    def rms(self) -> float:
        return math.sqrt(self.mean_sq_error)


def _squared_error(cfg, u0, reference, threads):
    if isinstance(cfg, DirichletConfig):
        return run_dirichlet(cfg, threads=threads).l2_error ** 2
    _, final = run_heat(cfg, u0, threads=threads)
    if reference is None:
        t = cfg.m_t * cfg.dt
        reference = u0.exact(t, cfg.grid.nodes, cfg.nu)
    diff = GridFunction1D(cfg.grid, final.values - reference)
    return norm_l2(diff) ** 2


def estimate_mc_error(cfg, reps: int, u0=None, reference=None, threads: int = 1) -> MCErrorEstimate:
    """Mean squared l2 error at the final time over ``reps`` independent runs.

    Repetition ``r`` runs with ``derive_seed(cfg.seed, r)``. For the periodic
    problem the reference is the exact solution when ``u0`` is a :class:`Mode`,
    otherwise ``Q^{M_T} u0``. Returns the mean and a 95% normal halfwidth.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if isinstance(cfg, HeatConfig):
        if u0 is None:
            raise ValueError("periodic runs need an initial condition")
        if reference is None and not isinstance(u0, Mode):
            reference = deterministic_evolve(u0, cfg, cfg.m_t).values
    errs = np.array(
        [_squared_error(cfg.with_seed(derive_seed(cfg.seed, r)), u0, reference, threads) for r in range(reps)]
    )
    sd = float(np.std(errs, ddof=1))
    se = sd / math.sqrt(reps)
    return MCErrorEstimate(float(errs.mean()), Z95 * se, se, errs)


def fit_loglog_slope(n_values, errors) -> tuple[float, float, float]:
    """Least-squares line log10(error) = slope * log10(n) + intercept; returns (slope, intercept, rms residual)."""
    lx = np.log10(np.asarray(n_values, dtype=float))
    ly = np.log10(np.asarray(errors, dtype=float))
    if lx.size < 3:
        raise ValueError("slope fit needs at least 3 points")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(math.sqrt(np.mean(resid**2)))


@dataclass
class ConvergenceRow:
    n: int
    n_mc: int
    mean_sq_error: float
    std_error: float
    runtime_seconds: float


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow] = field(default_factory=list)
    slopes: dict[int, tuple[float, float]] = field(default_factory=dict)

    def n_mc_values(self) -> list[int]:
        return sorted({r.n_mc for r in self.rows})

    def rms_series(self) -> dict[str, tuple[list[int], list[float]]]:
        out = {}
        for n_mc in self.n_mc_values():
            rows = sorted((r for r in self.rows if r.n_mc == n_mc), key=lambda r: r.n)
            out[f"N={n_mc}"] = ([r.n for r in rows], [math.sqrt(r.mean_sq_error) for r in rows])
        return out

    def fit_slopes(self) -> dict[int, tuple[float, float]]:
        """Slope of log10(RMS error) vs log10(n) and its residual, per N."""
        self.slopes = {}
        for label, (ns, errs) in self.rms_series().items():
            slope, _, resid = fit_loglog_slope(ns, errs)
            self.slopes[int(label[2:])] = (slope, resid)
        return self.slopes

    def rms(self, n: int, n_mc: int) -> float:
        for r in self.rows:
            if r.n == n and r.n_mc == n_mc:
                return math.sqrt(r.mean_sq_error)
        raise KeyError((n, n_mc))

    def to_table(self) -> Table:
        return Table(
            ["n", "N", "mean_sq_error", "std_error"],
            [(r.n, r.n_mc, r.mean_sq_error, r.std_error) for r in self.rows],
        )

    def slope_table(self) -> Table:
        return Table(["N", "slope", "residual"], [(k, s, res) for k, (s, res) in sorted(self.slopes.items())])

    def timing_table(self) -> Table:
        return Table(["n", "N", "runtime_seconds"], [(r.n, r.n_mc, r.runtime_seconds) for r in self.rows])


def convergence_cell_config(sec: ConvergenceSection, n: int, n_mc: int, seed: int,
                            dirichlet: DirichletSection | None = None):
    if sec.problem == "heat_periodic":
        return HeatConfig(sec.nu, 1.0 / n, PeriodicGrid1D(n), n_mc, sec.t_final, seed)
    d = dirichlet or DirichletSection()
    return DirichletConfig(
        nu=sec.nu, dt=1.0 / n, dx=1.0 / n, n_interior=n_mc,
        n_boundary=sec.boundary_ratio * n_mc, tau=1.0 / (n * sec.substeps),
        boundary_margin=d.boundary_margin, t_final=sec.t_final, seed=seed,
        domain=tuple(d.domain), bridge_test=d.bridge_test,
    )


def convergence_study(sec: ConvergenceSection, reps: int, seed: int,
                      dirichlet: DirichletSection | None = None, threads: int = 1) -> ConvergenceTable:
    """Run every (n, N) cell with dt = dx = 1/n and fit one slope per N.

    All cells share the master seed, so repetition r uses the same sub-seed in
    every cell; rows come out ordered by (N, n).
    """
    table = ConvergenceTable()
    u0 = Mode(sec.mode, sec.phase)
    for n_mc in sec.n_mc_values:
        for n in sec.n_values:
            cfg = convergence_cell_config(sec, n, n_mc, seed, dirichlet)
            start = time.perf_counter()
            est = estimate_mc_error(cfg, reps, u0=u0 if sec.problem == "heat_periodic" else None, threads=threads)
            table.rows.append(ConvergenceRow(n, n_mc, est.mean_sq_error, est.std_error, time.perf_counter() - start))
    table.fit_slopes()
    return table


@dataclass
class BoundReport:
    """Diagnostic evaluation of the Monte-Carlo error bound with all constants set to 1.

    ``nu_rate`` is the coefficient of the generator written as (nu_rate / 2) d_xx,
    i.e. twice the viscosity of u_t = nu u_xx.
    """

    nu_rate: float
    h1_sq: float
    a_nu: float
    b_nu: float
    rhs: dict[int, float]
    anti_cfl: float

    def table(self) -> Table:
        rows = [("nu_rate", self.nu_rate), ("h1_seminorm_sq", self.h1_sq), ("A_nu", self.a_nu),
                ("B_nu", self.b_nu), ("anti_cfl_ratio", self.anti_cfl)]
        rows += [(f"rhs_p{p}", v) for p, v in sorted(self.rhs.items())]
        return Table(["quantity", "value"], rows)


def bound_terms(dx: float, dt: float, nu_rate: float, h1_sq: float) -> tuple[float, float]:
    log_dt = abs(math.log(dt))
    a = 1.0 + dx / (math.sqrt(nu_rate) * dt) + dx**2 / (nu_rate * dt**2) * (1.0 + log_dt)
    b = (nu_rate + dx**2 / dt) * h1_sq
    return a, b


def error_bound_report(cfg: HeatConfig, u0, p_values=(0, 1, 2)) -> BoundReport:
    """Evaluate B_nu * A_nu^p * (dt/N + 1/N^{p+1}) for each p, plus the anti-CFL ratio."""
    u = u0 if isinstance(u0, GridFunction1D) else project(u0, cfg.grid)
    h1_sq = seminorm_h1(u) ** 2
    nu_rate = 2.0 * cfg.nu
    a, b = bound_terms(cfg.grid.dx, cfg.dt, nu_rate, h1_sq)
    n_mc = cfg.n_mc
    rhs = {p: b * a**p * (cfg.dt / n_mc + 1.0 / n_mc ** (p + 1)) for p in p_values}
    return BoundReport(nu_rate, h1_sq, a, b, rhs, anti_cfl_ratio(cfg.grid.dx, cfg.dt))
