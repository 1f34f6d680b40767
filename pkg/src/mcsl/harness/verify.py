"""Structural and statistical property checks behind the ``verify`` subcommand."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..grid_interp import GridFunction1D, PeriodicGrid1D, l2_norm_of_interpolant_sq, norm_l2, seminorm_h1
from ..transition import q_apply, q_kernel, sample_p_matrix, sample_p_stack, verify_q_properties, verify_sample
from .config import VerifySection

CLT_SIGMAS = 4.0
IDENTITY_SIZES = (4, 17, 256)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float


def quadrature_q(grid: PeriodicGrid1D, sigma: float) -> np.ndarray:
    """Kernel row ``E phi_d(sigma Z)`` by adaptive quadrature of hat x periodized Gaussian.

    Independent of the closed form: integrates numerically, splitting at the
    hat's kinks.
    """
    dx = grid.dx
    n_img = math.ceil(10 * sigma) + 2
    shifts = np.arange(-n_img, n_img + 1, dtype=float)

    def density(y):
        return float(np.sum(np.exp(-0.5 * ((y + shifts) / sigma) ** 2))) / (sigma * math.sqrt(2 * math.pi))

    q = np.empty(grid.m_s)
    for d in range(grid.m_s):
        c = d * dx
        left, _ = integrate.quad(lambda y: (1 - (c - y) / dx) * density(y), c - dx, c, epsabs=1e-15, epsrel=1e-13)
        right, _ = integrate.quad(lambda y: (1 - (y - c) / dx) * density(y), c, c + dx, epsabs=1e-15, epsrel=1e-13)
        q[d] = left + right
    return q


MIN_HITS = 30


def unbiasedness_z(grid: PeriodicGrid1D, sigma: float, n_samples: int, seed: int) -> float:
    """Largest |mean(P) - Q| in units of its standard error, over all entries.

    Entries hit by fewer than ``MIN_HITS`` draws have an unreliable sample
    variance and a skewed mean; for those the bound Var <= E[P^2] <= q is used
    (entries lie in [0, 1]). The variance is floored at q / n_samples.
    """
    q = q_kernel(grid, sigma).matrix()
    stack = sample_p_stack(grid, sigma, 0, n_samples, seed)
    mean = stack.mean(axis=0)
    var = stack.var(axis=0, ddof=1)
    sparse = np.count_nonzero(stack, axis=0) < MIN_HITS
    var = np.where(sparse, np.maximum(var, q), var)
    se = np.sqrt(np.maximum(var, q / n_samples) / n_samples)
    return float(np.max(np.abs(mean - q) / se))


def _random_functions(rng, m_s: int, count: int):
    grid = PeriodicGrid1D(m_s)
    return [GridFunction1D(grid, rng.standard_normal(m_s)) for _ in range(count)]


def run_verification(sec: VerifySection, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(2 * sec.nu * sec.dt)
    out: list[CheckResult] = []

    kernel = q_kernel(PeriodicGrid1D(sec.m_s), sigma)
    rep = verify_q_properties(kernel)
    out += [
        CheckResult("q_nonnegative", rep.nonnegative, max(0.0, -rep.min_entry)),
        CheckResult("q_row_sum", rep.row_stochastic, rep.max_row_sum_deviation),
        CheckResult("q_symmetric", rep.symmetric, rep.max_symmetry_deviation),
    ]

    sgrid = PeriodicGrid1D(sec.sample_m_s)
    ok, worst = True, 0.0
    for n, m, s in rng.integers(0, 2**31, size=(sec.n_samples, 3)):
        good, dev = verify_sample(sample_p_matrix(sgrid, sigma, int(n), int(m), int(s)))
        ok &= good
        worst = max(worst, dev)
    out.append(CheckResult("p_row_stochastic", ok, worst))

    worst = 0.0
    for m_s in IDENTITY_SIZES:
        dx = 1.0 / m_s
        for u in _random_functions(rng, m_s, sec.n_random):
            lhs = norm_l2(u) ** 2 - l2_norm_of_interpolant_sq(u)
            rhs = dx**2 * seminorm_h1(u) ** 2 / 6.0
            worst = max(worst, abs(lhs - rhs) / rhs)
    out.append(CheckResult("interpolation_identity", worst <= 1e-12, worst))

    l2_worst = h1_worst = 0.0
    for u in _random_functions(rng, sec.m_s, sec.n_random):
        qu = q_apply(kernel, u)
        l2_worst = max(l2_worst, norm_l2(qu) / norm_l2(u) - 1.0)
        h1_worst = max(h1_worst, seminorm_h1(qu) / seminorm_h1(u) - 1.0)
    out.append(CheckResult("q_l2_contraction", l2_worst <= 1e-12, max(l2_worst, 0.0)))
    out.append(CheckResult("q_h1_contraction", h1_worst <= 1e-12, max(h1_worst, 0.0)))

    ugrid = PeriodicGrid1D(sec.unbiased_m_s)
    z = unbiasedness_z(ugrid, sigma, sec.unbiased_samples, seed)
    out.append(CheckResult("p_unbiased_max_z", z <= CLT_SIGMAS, z))
    quad_dev = float(np.max(np.abs(q_kernel(ugrid, sigma).q - quadrature_q(ugrid, sigma))))
    out.append(CheckResult("q_vs_quadrature", quad_dev <= 1e-10, quad_dev))
    return out
