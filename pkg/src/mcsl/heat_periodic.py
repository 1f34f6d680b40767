"""Monte-Carlo semi-Lagrangian stepping for the periodic heat equation u_t = nu u_xx.

One step maps nodal values u^n to

    u_j^{n+1} = (1/N) sum_m (I u^n)(x_j + sqrt(2 nu dt) N^{n,m,j})

with keyed standard normals N^{n,m,j}. The deterministic counterpart is
v^{n+1} = Q v^n with the exact expectation kernel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .grid_interp import GridFunction1D, PeriodicGrid1D, interp_values, norm_l2, project
from .transition import CirculantKernel, q_apply_values, q_kernel

# Nodes are processed in fixed-size chunks so the floating-point work per node
# is identical whatever the thread count.
NODE_CHUNK = 256


@dataclass(frozen=True)
class HeatConfig:
    nu: float
    dt: float
    grid: PeriodicGrid1D
    n_mc: int
    t_final: float
    seed: int = 0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_mc < 1:
            raise ValueError("n_mc must be >= 1")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        m_t = round(self.t_final / self.dt)
        if m_t < 1 or abs(m_t * self.dt - self.t_final) > 1e-12 * self.t_final:
            raise ValueError(
                f"t_final={self.t_final} is not an integer multiple of dt={self.dt}"
            )

    @property
    def m_t(self) -> int:
        return round(self.t_final / self.dt)

    @property
    def sigma_step(self) -> float:
        return math.sqrt(2.0 * self.nu * self.dt)

    @property
    def anti_cfl_ratio(self) -> float:
        return anti_cfl_ratio(self.grid.dx, self.dt)

    def with_seed(self, seed: int) -> "HeatConfig":
        return HeatConfig(self.nu, self.dt, self.grid, self.n_mc, self.t_final, seed)


def anti_cfl_ratio(dx: float, dt: float) -> float:
    """dx / dt * max(1, sqrt|log dt|); diagnostic only."""
    return dx / dt * max(1.0, math.sqrt(abs(math.log(dt))))


@dataclass
class TrajectoryRecord:
    times: list[float] = field(default_factory=list)
    states: list[GridFunction1D] = field(default_factory=list)
    record_every: int = 0


def node_chunks(n_nodes: int, chunk: int = NODE_CHUNK) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, n_nodes)) for lo in range(0, n_nodes, chunk)]


def map_chunks(fn, chunks, threads: int = 1):
    """Apply ``fn`` to each chunk, in order; in a thread pool when ``threads > 1``."""
    if threads <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def realization_mean(samples: np.ndarray) -> np.ndarray:
    """Mean over axis 0, summed strictly in realization order."""
    acc = samples[0].copy()
    for row in samples[1:]:
        acc += row
    return acc / samples.shape[0]


def mc_step_values(values: np.ndarray, cfg: HeatConfig, n: int, threads: int = 1) -> np.ndarray:
    grid = cfg.grid
    dx = grid.dx
    sigma = cfg.sigma_step
    base = rng.stream_base(cfg.seed, n)
    m = np.arange(cfg.n_mc)[:, None]

    def chunk_update(bounds):
        lo, hi = bounds
        j = np.arange(lo, hi)
        xs = j * dx + sigma * rng.normals(base, m, j)
        return realization_mean(interp_values(values, dx, xs))

    return np.concatenate(map_chunks(chunk_update, node_chunks(grid.m_s), threads))


def mc_step(u: GridFunction1D, cfg: HeatConfig, n: int, threads: int = 1) -> GridFunction1D:
    """One Monte-Carlo semi-Lagrangian step (step index ``n`` selects the noise)."""
    if n < 0:
        raise ValueError("step index must be >= 0")
    return GridFunction1D(u.grid, mc_step_values(u.values, cfg, n, threads))


def step_kernel(cfg: HeatConfig) -> CirculantKernel:
    return q_kernel(cfg.grid, cfg.sigma_step)


def deterministic_evolve(u0: GridFunction1D, cfg: HeatConfig, n_steps: int) -> GridFunction1D:
    """``Q^n u0`` with the exact one-step kernel."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    kernel = step_kernel(cfg)
    v = u0.values.copy()
    for _ in range(n_steps):
        v = q_apply_values(kernel, v)
    return GridFunction1D(u0.grid, v)


def exact_heat(t, x, nu, mode: int = 1, phase: str = "sin"):
    """Exact periodic solution exp(-(2 pi mode)^2 nu t) * sin|cos(2 pi mode x)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    w = 2.0 * math.pi * mode
    if phase == "sin":
        shape = np.sin(w * np.asarray(x))
    elif phase == "cos":
        shape = np.cos(w * np.asarray(x))
    else:
        raise ValueError(f"phase must be 'sin' or 'cos', got {phase!r}")
    return np.exp(-(w**2) * nu * np.asarray(t)) * shape


@dataclass(frozen=True)
class Mode:
    """Initial datum sin|cos(2 pi mode x)."""

    mode: int = 1
    phase: str = "sin"

    def __call__(self, x):
        return exact_heat(0.0, x, 1.0, self.mode, self.phase)

    def exact(self, t, x, nu):
        return exact_heat(t, x, nu, self.mode, self.phase)

    def sup_second_derivative(self) -> float:
        return (2.0 * math.pi * self.mode) ** 2


def initial_values(cfg: HeatConfig, u0: Mode) -> GridFunction1D:
    return project(u0, cfg.grid)


def run_heat(cfg: HeatConfig, u0: Mode | GridFunction1D, record_every: int = 0, threads: int = 1):
    """Iterate :func:`mc_step` up to ``t_final``.

    Returns ``(record, final)``. States are stored every ``record_every`` steps;
    0 records the final state only.
    """
    u = u0 if isinstance(u0, GridFunction1D) else initial_values(cfg, u0)
    record = TrajectoryRecord(record_every=record_every)
    values = u.values
    for n in range(cfg.m_t):
        values = mc_step_values(values, cfg, n, threads)
        step = n + 1
        if record_every and step % record_every == 0:
            record.times.append(step * cfg.dt)
            record.states.append(GridFunction1D(cfg.grid, values))
    final = GridFunction1D(cfg.grid, values)
    if not record_every:
        record.times.append(cfg.m_t * cfg.dt)
        record.states.append(final)
    return record, final


def error_vs_exact(final: GridFunction1D, t: float, cfg: HeatConfig, u0: Mode) -> tuple[float, float]:
    """(l2 error, sup error) of nodal values against the exact solution at time ``t``."""
    exact = u0.exact(t, cfg.grid.nodes, cfg.nu)
    diff = GridFunction1D(cfg.grid, final.values - exact)
    return norm_l2(diff), float(np.max(np.abs(diff.values)))
