"""Expectation kernel Q of one Monte-Carlo step and sampled transition matrices.

``Q[j, k] = E phi_k(x_j + sigma Z)`` depends only on ``k - j`` (mod m_s), so it
is stored as one kernel row ``q``. Sampled matrices are dense and exist for
verification only; the solvers never build them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import rng
from .grid_interp import GridFunction1D, PeriodicGrid1D, hat_eval, interp_values

SUPPORT_CUTOFF = 1e-16
MAX_SAMPLE_NODES = 4096
# above this sigma / dx ratio the image sum loses digits to cancellation
_IMAGE_SUM_MAX_RATIO = 10.0


@dataclass(frozen=True, eq=False)
class CirculantKernel:
    grid: PeriodicGrid1D
    q: np.ndarray
    sigma: float

    @property
    def support(self) -> np.ndarray:
        """Offsets ``d`` with ``q[d] > 1e-16``."""
        return np.flatnonzero(self.q > SUPPORT_CUTOFF)

    def matrix(self) -> np.ndarray:
        m_s = self.grid.m_s
        j = np.arange(m_s)
        return self.q[(j[None, :] - j[:, None]) % m_s]


@dataclass(frozen=True, eq=False)
class TransitionSample:
    grid: PeriodicGrid1D
    entries: np.ndarray
    kind: str  # "realization" or "average"


def _ramp_expectation(s, sigma):
    """E[(s + sigma Z)_+] for standard normal Z."""
    t = s / sigma
    return s * ndtr(t) + sigma * np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


def _q_images(grid: PeriodicGrid1D, sigma: float) -> np.ndarray:
    dx = grid.dx
    x = grid.nodes
    # excluded images sit >= 8.5 sigma away: Gaussian tail mass < 1e-16
    n_img = math.ceil(8.5 * sigma) + 1
    q = np.zeros(grid.m_s)
    # hat(y / dx) is the second difference of ramps at -dx, 0, dx
    for k in range(-n_img, n_img + 1):
        c = x - k
        q += (
            _ramp_expectation(c + dx, sigma)
            - 2.0 * _ramp_expectation(c, sigma)
            + _ramp_expectation(c - dx, sigma)
        )
    return q / dx


def _q_fourier(grid: PeriodicGrid1D, sigma: float) -> np.ndarray:
    m_s = grid.m_s
    dx = grid.dx
    n_modes = math.ceil(math.sqrt(42.0 / (2.0 * math.pi**2)) / sigma) + 1
    k = np.arange(1, n_modes + 1)
    damp = np.exp(-2.0 * math.pi**2 * sigma**2 * k**2) * np.sinc(k * dx) ** 2
    d = np.arange(m_s)
    phase = (np.outer(d, k) % m_s) * (2.0 * math.pi / m_s)
    return dx * (1.0 + 2.0 * np.cos(phase) @ damp)


def q_kernel(grid: PeriodicGrid1D, sigma: float) -> CirculantKernel:
    """Exact kernel of ``u -> E[(I u)(x_j + sigma Z)]``.

    Small ``sigma / dx`` sums the closed-form hat/Gaussian integral over periodic
    images; wide kernels use the equivalent Fourier series, which has no
    cancellation and converges in O(1 / sigma) modes.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma!r}")
    if sigma == 0:
        q = np.zeros(grid.m_s)
        q[0] = 1.0
    elif sigma <= _IMAGE_SUM_MAX_RATIO * grid.dx:
        q = _q_images(grid, sigma)
    else:
        q = _q_fourier(grid, sigma)
    q = np.maximum(q, 0.0)
    return CirculantKernel(grid, q, float(sigma))


def q_apply_values(kernel: CirculantKernel, values: np.ndarray) -> np.ndarray:
    m_s = kernel.grid.m_s
    d = kernel.support
    j = np.arange(m_s)
    return values[(j[:, None] + d[None, :]) % m_s] @ kernel.q[d]


def q_apply(kernel: CirculantKernel, u: GridFunction1D) -> GridFunction1D:
    if u.grid != kernel.grid:
        raise ValueError("kernel and grid function live on different grids")
    return GridFunction1D(u.grid, q_apply_values(kernel, u.values))


def _hat_rows(grid: PeriodicGrid1D, points: np.ndarray) -> np.ndarray:
    """Row-wise matrices ``phi_k(points[..., j])`` of shape ``points.shape + (m_s,)``."""
    m_s = grid.m_s
    eye = np.eye(m_s)
    # interpolating the unit vectors gives phi_k at the points, column by column
    flat = points.reshape(-1)
    rows = np.stack([interp_values(eye[k], grid.dx, flat) for k in range(m_s)], axis=-1)
    return rows.reshape(points.shape + (m_s,))


def _shifted_points(grid, sigma, n, m, seed):
    base = rng.stream_base(seed, n)
    m = np.asarray(m)
    j = np.arange(grid.m_s)
    z = rng.normals(base, m[..., None], j)
    return grid.nodes + sigma * z


def sample_p_matrix(grid: PeriodicGrid1D, sigma: float, n: int, m: int, seed: int) -> TransitionSample:
    """One realization matrix ``P[j, k] = phi_k(x_j + sigma N^{n,m,j})``."""
    if grid.m_s > MAX_SAMPLE_NODES:
        raise ValueError(f"dense sampling limited to m_s <= {MAX_SAMPLE_NODES}")
    pts = _shifted_points(grid, sigma, n, m, seed)
    return TransitionSample(grid, _hat_rows(grid, pts), "realization")


def sample_p_stack(grid: PeriodicGrid1D, sigma: float, n: int, n_mc: int, seed: int) -> np.ndarray:
    """All realization matrices of step ``n`` as an array ``(n_mc, m_s, m_s)``."""
    if grid.m_s > MAX_SAMPLE_NODES:
        raise ValueError(f"dense sampling limited to m_s <= {MAX_SAMPLE_NODES}")
    pts = _shifted_points(grid, sigma, n, np.arange(n_mc), seed)
    return _hat_rows(grid, pts)


def average_p_matrix(grid: PeriodicGrid1D, sigma: float, n: int, n_mc: int, seed: int) -> TransitionSample:
    """The step matrix ``P^{(n)}``: mean of ``n_mc`` realization matrices."""
    stack = sample_p_stack(grid, sigma, n, n_mc, seed)
    return TransitionSample(grid, stack.mean(axis=0), "average")


@dataclass
class QPropertyReport:
    nonnegative: bool
    row_stochastic: bool
    symmetric: bool
    min_entry: float
    max_row_sum_deviation: float
    max_symmetry_deviation: float
    tol: float = field(default=1e-12)

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.row_stochastic and self.symmetric

    def lines(self) -> list[str]:
        mark = {True: "PASS", False: "FAIL"}
        return [
            f"nonnegative,{mark[self.nonnegative]},{self.min_entry:.3e}",
            f"row_sum,{mark[self.row_stochastic]},{self.max_row_sum_deviation:.3e}",
            f"symmetric,{mark[self.symmetric]},{self.max_symmetry_deviation:.3e}",
        ]


def verify_q_properties(kernel: CirculantKernel, tol: float = 1e-12) -> QPropertyReport:
    q = kernel.q
    row_dev = abs(float(np.sum(q)) - 1.0)
    sym_dev = float(np.max(np.abs(q[1:] - q[:0:-1]))) if q.size > 1 else 0.0
    min_entry = float(np.min(q))
    return QPropertyReport(
        nonnegative=min_entry >= 0.0,
        row_stochastic=row_dev <= tol,
        symmetric=sym_dev <= tol,
        min_entry=min_entry,
        max_row_sum_deviation=row_dev,
        max_symmetry_deviation=sym_dev,
        tol=tol,
    )


def verify_sample(sample: TransitionSample, tol: float = 1e-12) -> tuple[bool, float]:
    """Row-stochasticity of a sampled matrix: (passed, max row-sum deviation)."""
    p = sample.entries
    dev = float(np.max(np.abs(p.sum(axis=1) - 1.0)))
    ok = bool(np.all(p >= 0.0)) and dev <= tol
    if sample.kind == "realization":
        ok = ok and bool(np.all(np.count_nonzero(p, axis=1) <= 2))
    return ok, dev


def kernel_diag_decay(grid: PeriodicGrid1D, sigma_step: float, ell_max: int) -> np.ndarray:
    """Diagonal ``E phi_j(x_j + B)`` of the exact Gaussian kernel after ``2 ell`` steps, ell = 1..ell_max."""
    if not sigma_step > 0:
        raise ValueError(f"sigma_step must be positive, got {sigma_step!r}")
    ells = np.arange(1, ell_max + 1)
    return np.array([q_kernel(grid, sigma_step * math.sqrt(2 * ell)).q[0] for ell in ells])


def hat_matrix(grid: PeriodicGrid1D, points) -> np.ndarray:
    """Dense ``phi_k(points[j])`` via :func:`hat_eval`; slow reference for tests."""
    points = np.asarray(points, dtype=np.float64)
    return np.stack([hat_eval(grid, k, points) for k in range(grid.m_s)], axis=-1)
