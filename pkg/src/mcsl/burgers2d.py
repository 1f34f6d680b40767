"""Semi-implicit Monte-Carlo semi-Lagrangian solver for 2D viscous Burgers on (-1, 1)^2.

Each step freezes the velocity u^n and the forcing f(n dt, .) and represents

    v(x) = E[ u^n(X_end) 1{survived} + int_0^{dt ^ exit} f^n(X_s) ds ],
    dX = -u^n(X) dt + sqrt(2 nu) dB,  X_0 = node,

with Euler-Maruyama sub-steps. Both velocity components share the particle
paths of a node. Boundary values are held at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import rng
from .heat_periodic import map_chunks, node_chunks, realization_mean

LO, HI = -1.0, 1.0
_SNAP = 4 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class Grid2D:
    """``m`` nodes per axis on [-1, 1]; node (i, j) sits at (-1 + i dx, -1 + j dx)."""

    m: int

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("need at least 3 nodes per axis")

    @property
    def dx(self) -> float:
        return (HI - LO) / (self.m - 1)

    @property
    def axis(self) -> np.ndarray:
        return LO + np.arange(self.m) * self.dx

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays indexed ``[i, j]`` (i along x)."""
        return np.meshgrid(self.axis, self.axis, indexing="ij")


@dataclass(frozen=True, eq=False)
class VectorField2D:
    grid: Grid2D
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        shape = (self.grid.m, self.grid.m)
        for name in ("u1", "u2"):
            v = np.array(getattr(self, name), dtype=np.float64)
            if v.shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
            v[0, :] = v[-1, :] = v[:, 0] = v[:, -1] = 0.0
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField2D":
        z = np.zeros((grid.m, grid.m))
        return cls(grid, z, z)


def sine_forcing(t, x, y):
    """(-sin(pi t) sin(pi x) sin(pi y)^2, -sin(pi t) sin(pi x)^2 sin(pi y))."""
    st = math.sin(math.pi * t)
    sx = np.sin(np.pi * x)
    sy = np.sin(np.pi * y)
    return -st * sx * sy * sy, -st * sx * sx * sy


def zero_forcing(t, x, y):
    z = np.zeros(np.broadcast(x, y).shape)
    return z, z


FORCINGS: dict[str, Callable] = {"sine": sine_forcing, "zero": zero_forcing}


def forcing(t, p, descriptor: str | Callable = "sine"):
    """Evaluate a forcing at time ``t`` and point(s) ``p = (x, y)``."""
    fn = FORCINGS[descriptor] if isinstance(descriptor, str) else descriptor
    x, y = p
    f1, f2 = fn(t, np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    if np.ndim(f1) == 0:
        return float(f1), float(f2)
    return f1, f2


@dataclass(frozen=True)
class BurgersConfig:
    nu: float = 0.001
    dt: float = 0.02
    dx: float = 0.04
    n_interior: int = 10
    n_boundary: int = 100
    tau: float = 0.002
    interior_zone: tuple[tuple[float, float], tuple[float, float]] = ((-0.8, 0.8), (-0.8, 0.8))
    t_final: float = 2.0
    seed: int = 0
    forcing: str = "sine"
    bridge_test: bool = True

    def __post_init__(self):
        for name in ("dt", "dx", "tau", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if not 1 <= self.n_interior <= self.n_boundary:
            raise ValueError("need 1 <= n_interior <= n_boundary")
        k = round(self.dt / self.tau)
        if k < 1 or abs(k * self.tau - self.dt) > 1e-9 * self.dt:
            raise ValueError(f"dt={self.dt} is not an integer multiple of tau={self.tau}")
        m = round((HI - LO) / self.dx)
        if abs(m * self.dx - (HI - LO)) > 1e-9:
            raise ValueError(f"dx={self.dx} does not divide the domain length 2")
        m_t = round(self.t_final / self.dt)
        if m_t < 1 or abs(m_t * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError("t_final must be an integer multiple of dt")
        if self.forcing not in FORCINGS:
            raise ValueError(f"unknown forcing {self.forcing!r}")

    def with_seed(self, seed: int) -> "BurgersConfig":
        return replace(self, seed=seed)

    @property
    def grid(self) -> Grid2D:
        return Grid2D(round((HI - LO) / self.dx) + 1)

    @property
    def m_t(self) -> int:
        return round(self.t_final / self.dt)

    @property
    def n_substeps(self) -> int:
        return round(self.dt / self.tau)

    def interior_mask(self) -> np.ndarray:
        """True for nodes whose position lies in the open interior rectangle."""
        g = self.grid
        eps = 1e-9 * g.dx
        (x0, x1), (y0, y1) = self.interior_zone
        ax = g.axis
        in_x = (ax > x0 + eps) & (ax < x1 - eps)
        in_y = (ax > y0 + eps) & (ax < y1 - eps)
        return in_x[:, None] & in_y[None, :]


def _snap(s):
    # node positions may land an ulp off; snap so nodal values are returned exactly
    r = np.rint(s)
    return np.where(np.abs(s - r) <= _SNAP * np.maximum(r, 1.0), r, s)


def _bilinear(field_: np.ndarray, dx: float, px, py):
    m = field_.shape[0]
    sx = _snap((px - LO) / dx)
    sy = _snap((py - LO) / dx)
    i = np.clip(np.floor(sx).astype(np.intp), 0, m - 2)
    j = np.clip(np.floor(sy).astype(np.intp), 0, m - 2)
    fx = sx - i
    fy = sy - j
    f00 = field_[i, j]
    f10 = field_[i + 1, j]
    f01 = field_[i, j + 1]
    f11 = field_[i + 1, j + 1]
    return (f00 * (1 - fx) + f10 * fx) * (1 - fy) + (f01 * (1 - fx) + f11 * fx) * fy


def bilinear_interp(field_: np.ndarray, grid: Grid2D, p) -> float:
    """Tensor-product linear interpolation of nodal ``field_`` at ``p = (x, y)``."""
    x, y = p
    if not (LO <= x <= HI and LO <= y <= HI):
        raise ValueError(f"point {p} outside the domain [-1, 1]^2")
    return float(_bilinear(field_, grid.dx, np.float64(x), np.float64(y)))


def _nearest_face_kill(x0, x1, alive, variance, draw):
    face = np.where(x0 + x1 > 0.0, HI, LO)
    prod = np.maximum((face - x0) * (face - x1), 0.0)
    p = np.where(alive, np.exp(-2.0 * prod / variance), 0.0)
    killed = np.zeros(x0.shape, dtype=bool)
    cand = np.flatnonzero(p > 0.0)
    if cand.size:
        killed.flat[cand] = draw(cand) < p.flat[cand]
    return killed


def burgers_step(u: VectorField2D, cfg: BurgersConfig, n: int, threads: int = 1) -> VectorField2D:
    grid = u.grid
    m_nodes = grid.m
    dx = grid.dx
    t_n = n * cfg.dt
    f_fn = FORCINGS[cfg.forcing]
    u1, u2 = u.u1, u.u2
    out1 = np.zeros_like(u1)
    out2 = np.zeros_like(u2)

    def advance(flat, n_mc, n_steps, h, bridge):
        i, j = np.divmod(flat, m_nodes)
        m = np.arange(n_mc)[:, None]
        mm, jj = np.broadcast_arrays(m, flat)
        shape = mm.shape
        x = np.broadcast_to(LO + i * dx, shape).copy()
        y = np.broadcast_to(LO + j * dx, shape).copy()
        alive = np.ones(shape, dtype=bool)
        acc1 = np.zeros(shape)
        acc2 = np.zeros(shape)
        scale = math.sqrt(2.0 * cfg.nu * h)
        for s in range(n_steps):
            f1, f2 = f_fn(t_n, x, y)
            acc1 += np.where(alive, h * f1, 0.0)
            acc2 += np.where(alive, h * f2, 0.0)
            d1 = _bilinear(u1, dx, x, y)
            d2 = _bilinear(u2, dx, x, y)
            gx = rng.normals(rng.stream_base(cfg.seed, n, s, axis=0), m, flat)
            gy = rng.normals(rng.stream_base(cfg.seed, n, s, axis=1), m, flat)
            x_new = x - d1 * h + scale * gx
            y_new = y - d2 * h + scale * gy
            alive &= (x_new >= LO) & (x_new <= HI) & (y_new >= LO) & (y_new <= HI)
            if bridge and scale > 0:
                for ax, (p0, p1) in enumerate(((x, x_new), (y, y_new))):
                    base = rng.stream_base(cfg.seed, n, s, axis=ax, stream=rng.KILL)

                    def draw(idx, base=base):
                        return rng.uniforms(base, mm.flat[idx], jj.flat[idx])

                    alive &= ~_nearest_face_kill(p0, p1, alive, scale**2, draw)
            x = np.where(alive, x_new, x)
            y = np.where(alive, y_new, y)
        v1 = np.where(alive, _bilinear(u1, dx, x, y), 0.0) + acc1
        v2 = np.where(alive, _bilinear(u2, dx, x, y), 0.0) + acc2
        return realization_mean(v1), realization_mean(v2)

    interior = cfg.interior_mask()
    inner = np.zeros((m_nodes, m_nodes), dtype=bool)
    inner[1:-1, 1:-1] = True
    zones = (
        (np.flatnonzero(inner & interior), cfg.n_interior, 1, cfg.dt, False),
        (np.flatnonzero(inner & ~interior), cfg.n_boundary, cfg.n_substeps, cfg.tau, cfg.bridge_test),
    )
    for idx, n_mc, n_steps, h, bridge in zones:
        if idx.size == 0:
            continue
        parts = map_chunks(
            lambda c: advance(idx[c[0]:c[1]], n_mc, n_steps, h, bridge),
            node_chunks(idx.size),
            threads,
        )
        out1.flat[idx] = np.concatenate([p[0] for p in parts])
        out2.flat[idx] = np.concatenate([p[1] for p in parts])
    return VectorField2D(grid, out1, out2)


@dataclass
class BurgersRun:
    times: list[float] = field(default_factory=list)
    snapshots: list[VectorField2D] = field(default_factory=list)
    sup_norm: float = 0.0
    boundary_always_zero: bool = True
    all_finite: bool = True


def _boundary_zero(f: VectorField2D) -> bool:
    for v in (f.u1, f.u2):
        if np.any(v[0, :] != 0) or np.any(v[-1, :] != 0) or np.any(v[:, 0] != 0) or np.any(v[:, -1] != 0):
            return False
    return True


def run_burgers(
    cfg: BurgersConfig,
    snapshot_times=(0.5, 1.0, 1.5, 2.0),
    u0: VectorField2D | None = None,
    threads: int = 1,
) -> BurgersRun:
    """Iterate :func:`burgers_step` from zero (or ``u0``) and keep the requested snapshots.

    Snapshot times are rounded to the nearest step; the final state is always kept.
    """
    grid = cfg.grid
    u = VectorField2D.zeros(grid) if u0 is None else u0
    wanted = {round(t / cfg.dt) for t in snapshot_times if 0 < t <= cfg.t_final + 1e-12}
    wanted.add(cfg.m_t)
    run = BurgersRun()
    for n in range(cfg.m_t):
        u = burgers_step(u, cfg, n, threads)
        run.sup_norm = max(run.sup_norm, float(np.max(np.abs(u.u1))), float(np.max(np.abs(u.u2))))
        run.all_finite &= bool(np.all(np.isfinite(u.u1)) and np.all(np.isfinite(u.u2)))
        run.boundary_always_zero &= _boundary_zero(u)
        if n + 1 in wanted:
            run.times.append((n + 1) * cfg.dt)
            run.snapshots.append(u)
    return run
