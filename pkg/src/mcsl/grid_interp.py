"""Uniform periodic 1D grid, P1 hat basis, projection/interpolation and discrete norms.

The grid covers the unit period (0, 1) with nodes ``x_j = j * dx``,
``j = 0, ..., m_s - 1``. Nodal vectors are extended periodically
(``u[m_s] = u[0]``, ``u[-1] = u[m_s - 1]``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_SNAP = 4 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class PeriodicGrid1D:
    """Uniform grid of ``m_s`` nodes on the unit period."""

    m_s: int

    def __post_init__(self):
        if int(self.m_s) != self.m_s or self.m_s < 2:
            raise ValueError(f"m_s must be an integer >= 2, got {self.m_s!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.m_s

    @property
    def nodes(self) -> np.ndarray:
        # j * dx, never accumulated
        return np.arange(self.m_s) * self.dx

    def node(self, j: int) -> float:
        return j * self.dx


@dataclass(frozen=True, eq=False)
class GridFunction1D:
    """Nodal values ``u_j`` on a :class:`PeriodicGrid1D`."""

    grid: PeriodicGrid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.m_s,):
            raise ValueError(
                f"values must have shape ({self.grid.m_s},), got {values.shape}"
            )
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.m_s


def wrap_unit(x):
    """Reduce ``x`` modulo 1 into [0, 1), also for negative inputs."""
    x = np.asarray(x, dtype=np.float64)
    r = x - np.floor(x)
    # x - floor(x) can round up to exactly 1.0 for tiny negative x
    return np.where(r >= 1.0, 0.0, r)


def hat_eval(grid: PeriodicGrid1D, k: int, x) -> float | np.ndarray:
    """Periodic hat function ``phi_k`` evaluated at ``x`` (scalar or array)."""
    if not 0 <= k < grid.m_s:
        raise IndexError(f"node index {k} out of range [0, {grid.m_s})")
    # signed distance to the nearest periodic image of x_k, in cells
    d = wrap_unit(np.asarray(x, dtype=np.float64) - grid.node(k) + 0.5) - 0.5
    out = np.maximum(0.0, 1.0 - np.abs(d) * grid.m_s)
    return float(out) if out.ndim == 0 else out


def interp_values(values: np.ndarray, dx: float, x) -> np.ndarray:
    """Batched linear interpolation of periodic nodal ``values`` at points ``x``.

    This is the hot path of the solver; it works on raw arrays so callers can
    skip constructing :class:`GridFunction1D` objects.
    """
    m_s = values.shape[0]
    s = wrap_unit(x) / dx
    # snap points within a few ulps of a node so nodal values come back exactly
    r = np.rint(s)
    s = np.where(np.abs(s - r) <= _SNAP * np.maximum(r, 1.0), r, s)
    j = np.floor(s).astype(np.intp)
    # s may round to m_s for x just below 1
    j = np.minimum(j, m_s - 1)
    frac = s - j
    jp = j + 1
    jp[jp == m_s] = 0
    left = values[j]
    return left + (values[jp] - left) * frac


def interpolate(u: GridFunction1D, x):
    """Evaluate the P1 interpolant ``(I u)(x)``; ``x`` may be a scalar or an array."""
    out = interp_values(u.values, u.grid.dx, np.atleast_1d(np.asarray(x, dtype=np.float64)))
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def project(f: Callable, grid: PeriodicGrid1D) -> GridFunction1D:
    """Nodal projection ``(f(x_j))_j``. ``f`` is called once on the node array."""
    values = np.asarray(f(grid.nodes), dtype=np.float64)
    if values.shape != (grid.m_s,):
        # scalar-only callables
        values = np.array([f(x) for x in grid.nodes], dtype=np.float64)
    return GridFunction1D(grid, values)


def norm_l2(u: GridFunction1D) -> float:
    return float(np.sqrt(u.grid.dx * np.dot(u.values, u.values)))


def seminorm_h1(u: GridFunction1D) -> float:
    dx = u.grid.dx
    du = np.roll(u.values, -1) - u.values
    return float(np.sqrt(dx * np.dot(du, du)) / dx)


def l2_norm_of_interpolant_sq(u: GridFunction1D) -> float:
    """Squared L2 norm of ``I u`` from the tridiagonal Gram matrix of the hat basis.

    Uses <phi_k, phi_k> = 2 dx / 3 and <phi_k, phi_{k+-1}> = dx / 6.
    """
    dx = u.grid.dx
    v = u.values
    gram_off = np.dot(v, np.roll(v, -1)) + np.dot(v, np.roll(v, 1))
    return float(2.0 * dx / 3.0 * np.dot(v, v) + dx / 6.0 * gram_off)
