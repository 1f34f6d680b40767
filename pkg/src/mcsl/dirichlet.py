"""Killed-diffusion variant of the scheme on a bounded interval, u = 0 at both ends.

Nodes within ``boundary_margin`` of an endpoint take ``dt / tau`` sub-steps of
size ``tau`` with ``n_boundary`` realizations and a Brownian-bridge exit test
after each sub-step; the remaining nodes take one step of size ``dt`` with
``n_interior`` realizations and only an endpoint exit check. A killed
realization contributes 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .heat_periodic import map_chunks, node_chunks, realization_mean

INTERIOR = "interior"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class DirichletConfig:
    nu: float = 0.1
    dt: float = 0.01
    dx: float = 0.01
    n_interior: int = 10
    n_boundary: int = 100
    tau: float = 0.001
    boundary_margin: float = 0.1
    t_final: float = 0.1
    seed: int = 0
    domain: tuple[float, float] = (-1.0, 1.0)
    bridge_test: bool = True

    def __post_init__(self):
        a, b = self.domain
        if not b > a:
            raise ValueError("domain must satisfy a < b")
        for name in ("nu", "dt", "dx", "tau", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.boundary_margin < 0:
            raise ValueError("boundary_margin must be >= 0")
        if not 1 <= self.n_interior <= self.n_boundary:
            raise ValueError("need 1 <= n_interior <= n_boundary")
        if self.tau > self.dt * (1 + 1e-12):
            raise ValueError("tau must not exceed dt")
        k = round(self.dt / self.tau)
        if abs(k * self.tau - self.dt) > 1e-9 * self.dt:
            raise ValueError(f"dt={self.dt} is not an integer multiple of tau={self.tau}")
        m = round((b - a) / self.dx)
        if m < 2 or abs(m * self.dx - (b - a)) > 1e-9 * (b - a):
            raise ValueError(f"dx={self.dx} does not divide the domain length {b - a}")
        m_t = round(self.t_final / self.dt)
        if m_t < 1 or abs(m_t * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError("t_final must be an integer multiple of dt")

    @classmethod
    def reference_setup(cls, n: int, n_interior: int, seed: int = 0) -> "DirichletConfig":
        """dt = dx = 1/n on (-1, 1), nu = 0.1, margin 0.1, tau = dt/10, N_b = 10 N_i, T = 0.1."""
        return cls(
            nu=0.1, dt=1.0 / n, dx=1.0 / n, n_interior=n_interior,
            n_boundary=10 * n_interior, tau=0.1 / n, boundary_margin=0.1,
            t_final=0.1, seed=seed,
        )

    def with_seed(self, seed: int) -> "DirichletConfig":
        return replace(self, seed=seed)

    @property
    def n_cells(self) -> int:
        a, b = self.domain
        return round((b - a) / self.dx)

    @property
    def n_substeps(self) -> int:
        return round(self.dt / self.tau)

    @property
    def m_t(self) -> int:
        return round(self.t_final / self.dt)

    @property
    def nodes(self) -> np.ndarray:
        return self.domain[0] + np.arange(self.n_cells + 1) * self.dx

    def zones(self) -> np.ndarray:
        """Zone label per node, decided from the node's distance to the nearer endpoint."""
        j = np.arange(self.n_cells + 1)
        dist = np.minimum(j, self.n_cells - j) * self.dx
        # tolerance keeps the split symmetric under rounding of j * dx
        in_boundary = dist < self.boundary_margin - 1e-9 * self.dx
        return np.where(in_boundary, BOUNDARY, INTERIOR)


@dataclass(frozen=True, eq=False)
class BoundedGridFunction:
    """Nodal values on ``a + j dx``, ``j = 0..M``, with zero end values."""

    a: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("need at least 3 nodes")
        v[0] = 0.0
        v[-1] = 0.0
        object.__setattr__(self, "values", v)

    @property
    def nodes(self) -> np.ndarray:
        return self.a + np.arange(self.values.size) * self.dx

    def norm_l2(self) -> float:
        return float(math.sqrt(self.dx * np.dot(self.values, self.values)))


def bridge_exit_probability(x0, x1, barrier: float, variance: float):
    """Probability that a Brownian bridge from ``x0`` to ``x1`` touches ``barrier``.

    ``variance`` is that of the increment over the sub-step. Both ends must lie
    on the same side of the barrier (or on it).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    d0 = barrier - x0
    d1 = barrier - x1
    if np.any(d0 * d1 < 0):
        raise ValueError("x0 and x1 must be on the same side of the barrier")
    if not variance > 0:
        raise ValueError("variance must be positive")
    p = np.exp(-2.0 * d0 * d1 / variance)
    return float(p) if p.ndim == 0 else p


def _bridge_kill(x0, x1, alive, a, b, variance, uniform_draw):
    """Mask of live realizations killed by the nearest-barrier bridge test."""
    barrier = np.where(x0 + x1 > a + b, b, a)
    prod = (barrier - x0) * (barrier - x1)
    p = np.where(alive, np.exp(-2.0 * np.maximum(prod, 0.0) / variance), 0.0)
    killed = np.zeros(x0.shape, dtype=bool)
    # uniforms are only drawn where a kill is possible; keyed draws make this free
    cand = np.flatnonzero(p > 0.0)
    if cand.size:
        killed.flat[cand] = uniform_draw(cand) < p.flat[cand]
    return killed


def _interp_bounded(values, a, dx, x):
    s = (x - a) / dx
    j = np.clip(np.floor(s).astype(np.intp), 0, values.size - 2)
    frac = s - j
    left = values[j]
    return left + (values[j + 1] - left) * frac


def mc_step_dirichlet(u: BoundedGridFunction, cfg: DirichletConfig, n: int, threads: int = 1) -> BoundedGridFunction:
    values = u.values
    a, b = cfg.domain
    dx = cfg.dx
    n_sub = cfg.n_substeps
    zones = cfg.zones()
    out = np.zeros_like(values)

    def advance(j, n_mc, n_steps, h, bridge):
        x0 = a + j * dx
        m = np.arange(n_mc)[:, None]
        x = np.broadcast_to(x0, (n_mc, j.size)).copy()
        alive = np.ones(x.shape, dtype=bool)
        scale = math.sqrt(2.0 * cfg.nu * h)
        for s in range(n_steps):
            noise = rng.normals(rng.stream_base(cfg.seed, n, s), m, j)
            x_new = x + scale * noise
            alive &= (x_new >= a) & (x_new <= b)
            if bridge:
                kill_base = rng.stream_base(cfg.seed, n, s, stream=rng.KILL)
                mm, jj = np.broadcast_arrays(m, j)

                def draw(idx, mm=mm, jj=jj, kill_base=kill_base):
                    return rng.uniforms(kill_base, mm.flat[idx], jj.flat[idx])

                alive &= ~_bridge_kill(x, x_new, alive, a, b, scale**2, draw)
            x = np.where(alive, x_new, x0)
        contrib = np.where(alive, _interp_bounded(values, a, dx, np.clip(x, a, b)), 0.0)
        return realization_mean(contrib)

    inner = np.arange(1, cfg.n_cells)
    for zone, n_mc, n_steps, h, bridge in (
        (INTERIOR, cfg.n_interior, 1, cfg.dt, False),
        (BOUNDARY, cfg.n_boundary, n_sub, cfg.tau, cfg.bridge_test),
    ):
        idx = inner[zones[inner] == zone]
        if idx.size == 0:
            continue
        parts = map_chunks(
            lambda c: advance(idx[c[0]:c[1]], n_mc, n_steps, h, bridge),
            node_chunks(idx.size),
            threads,
        )
        out[idx] = np.concatenate(parts)
    return BoundedGridFunction(a, dx, out)


def exact_dirichlet_eigen(t, x, nu, domain=(-1.0, 1.0)):
    """First Dirichlet eigenmode on ``domain`` decayed to time ``t``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    a, b = domain
    k = math.pi / (b - a)
    return np.exp(-nu * k * k * np.asarray(t)) * np.sin(k * (np.asarray(x) - a))


def initial_condition(cfg: DirichletConfig) -> BoundedGridFunction:
    a = cfg.domain[0]
    return BoundedGridFunction(a, cfg.dx, exact_dirichlet_eigen(0.0, cfg.nodes, cfg.nu, cfg.domain))


@dataclass
class DirichletResult:
    final: BoundedGridFunction
    exact: np.ndarray
    l2_error: float
    sup_error: float
    t: float


def run_dirichlet(cfg: DirichletConfig, u0: BoundedGridFunction | None = None, threads: int = 1) -> DirichletResult:
    u = initial_condition(cfg) if u0 is None else u0
    for n in range(cfg.m_t):
        u = mc_step_dirichlet(u, cfg, n, threads)
    t = cfg.m_t * cfg.dt
    exact = exact_dirichlet_eigen(t, cfg.nodes, cfg.nu, cfg.domain)
    diff = u.values - exact
    return DirichletResult(
        final=u,
        exact=exact,
        l2_error=float(math.sqrt(cfg.dx * np.dot(diff, diff))),
        sup_error=float(np.max(np.abs(diff))),
        t=t,
    )
