"""End-to-end acceptance suite; each criterion prints one PASS/FAIL line."""

import math

import numpy as np
import pytest
import yaml

from mcsl.burgers2d import BurgersConfig, run_burgers
from mcsl.dirichlet import DirichletConfig
from mcsl.grid_interp import GridFunction1D, PeriodicGrid1D, l2_norm_of_interpolant_sq, project, seminorm_h1
from mcsl.harness.cli import main
from mcsl.harness.config import ConvergenceSection
from mcsl.harness.studies import convergence_study, estimate_mc_error
from mcsl.harness.verify import quadrature_q, unbiasedness_z
from mcsl.heat_periodic import HeatConfig, Mode, deterministic_evolve, error_vs_exact
from mcsl.rng import derive_seed
from mcsl.transition import q_apply, q_kernel, sample_p_matrix, verify_q_properties, verify_sample

SIGMA = math.sqrt(2 * 0.1 * 0.01)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")
        assert ok, detail

    return emit


def random_functions(m_s, count, seed):
    gen = np.random.default_rng(seed)
    grid = PeriodicGrid1D(m_s)
    return [GridFunction1D(grid, gen.standard_normal(m_s)) for _ in range(count)]


class TestAcceptance:
    def test_1_structure(self, report):
        rep = verify_q_properties(q_kernel(PeriodicGrid1D(64), SIGMA), tol=1e-12)
        g32 = PeriodicGrid1D(32)
        devs = [verify_sample(sample_p_matrix(g32, SIGMA, n, m, seed=1)) for n in range(10) for m in range(10)]
        ok = rep.passed and all(d[0] for d in devs)
        worst = max(d[1] for d in devs)
        report(1, "Q stochastic and symmetric, sampled P stochastic", ok,
               f"row-sum dev {rep.max_row_sum_deviation:.1e}, sym dev {rep.max_symmetry_deviation:.1e}, "
               f"P dev {worst:.1e}")

    def test_2_interpolation_identity(self, report):
        worst = 0.0
        for m_s in (4, 17, 256):
            for u in random_functions(m_s, 100, seed=m_s):
                lhs = u.grid.dx * np.dot(u.values, u.values) - l2_norm_of_interpolant_sq(u)
                rhs = u.grid.dx**2 * seminorm_h1(u) ** 2 / 6
                worst = max(worst, abs(lhs - rhs) / abs(rhs))
        report(2, "norm identity for the interpolant", worst <= 1e-12, f"max rel dev {worst:.1e}")

    def test_3_contraction(self, report):
        kernel = q_kernel(PeriodicGrid1D(64), SIGMA)
        worst = -math.inf
        for u in random_functions(64, 100, seed=3):
            qu = q_apply(kernel, u)
            l2 = np.linalg.norm(qu.values) - np.linalg.norm(u.values)
            h1 = seminorm_h1(qu) - seminorm_h1(u)
            worst = max(worst, l2, h1)
        report(3, "Q contracts l2 and h1", worst <= 1e-12, f"max growth {worst:.1e}")

    def test_4_unbiasedness(self, report):
        g8 = PeriodicGrid1D(8)
        z = unbiasedness_z(g8, SIGMA, 100_000, seed=4)
        quad_dev = max(
            float(np.max(np.abs(q_kernel(g, s).q - quadrature_q(g, s))))
            for g, s in [(g8, SIGMA), (PeriodicGrid1D(64), SIGMA)]
        )
        report(4, "mean of sampled P equals Q; Q equals quadrature", z <= 4 and quad_dev <= 1e-10,
               f"max z {z:.2f}, quadrature dev {quad_dev:.1e}")

    def test_5_convergence_sweep(self, report):
        sec = ConvergenceSection(nu=0.1, t_final=0.1, mode=1, phase="cos",
                                 n_values=[50, 100, 200, 400], n_mc_values=[10, 20, 40, 80])
        table = convergence_study(sec, reps=20, seed=2025)
        slopes = {n_mc: s for n_mc, (s, _) in table.slopes.items()}
        ratios = [table.rms(n, 10) / table.rms(n, 40) for n in sec.n_values]
        ok = all(-0.65 <= s <= -0.35 for s in slopes.values()) and all(1.4 <= r <= 2.8 for r in ratios)
        report(5, "error slope -1/2 in n and 1/sqrt(N) in N", ok,
               "slopes " + ", ".join(f"N={k}: {v:.3f}" for k, v in sorted(slopes.items()))
               + "; N10/N40 ratios " + ", ".join(f"{r:.2f}" for r in ratios))

    def test_6_deterministic_bound(self, report):
        n = 200
        cfg = HeatConfig(0.1, 1.0 / n, PeriodicGrid1D(n), 1, 0.1)
        u0 = Mode(1, "cos")
        v = deterministic_evolve(project(u0, cfg.grid), cfg, cfg.m_t)
        _, sup = error_vs_exact(v, cfg.m_t * cfg.dt, cfg, u0)
        bound = 5 * cfg.grid.dx**2 / cfg.dt * u0.sup_second_derivative()
        report(6, "deterministic error below C dx^2/dt sup|u0''|", sup <= bound,
               f"sup error {sup:.3e}, bound {bound:.3e}")

    def test_7_dirichlet(self, report):
        e10 = estimate_mc_error(DirichletConfig.reference_setup(100, 10, seed=7), 20)
        e40 = estimate_mc_error(DirichletConfig.reference_setup(100, 40, seed=7), 20)
        first = math.sqrt(e10.errors[0])
        ratio = e10.rms / e40.rms
        report(7, "Dirichlet decay error and N_i scaling", first < 0.1 and 1.4 <= ratio <= 2.8,
               f"l2 error {first:.4f}, rms N_i=10 {e10.rms:.4f}, N_i=40 {e40.rms:.4f}, ratio {ratio:.2f}")

    def test_8_burgers(self, report):
        runs = [run_burgers(BurgersConfig(dx=0.08, t_final=1.0, seed=derive_seed(2024, r)), (1.0,))
                for r in range(20)]
        finite = all(run.all_finite for run in runs)
        wall = all(run.boundary_always_zero for run in runs)
        d = np.array([run.snapshots[-1].u2 - run.snapshots[-1].u1.T for run in runs])
        sd = d.std(axis=0, ddof=1)
        mean = d.mean(axis=0)
        live = sd > 0
        z = np.abs(mean[live]) / (sd[live] / math.sqrt(len(runs)))
        exact_rest = bool(np.all(mean[~live] == 0.0))
        zmax = float(z.max())
        report(8, "Burgers run stays finite and swap symmetric", finite and wall and exact_rest and zmax <= 4,
               f"finite={finite}, wall zero={wall}, max swap z {zmax:.2f} over {int(live.sum())} nodes")

    def test_9_threads(self, report, tmp_path):
        configs = {
            "heat-periodic": {"heat": {"m_s": 100, "n_mc": 100}},
            "heat-dirichlet": {},
            "burgers2d": {"burgers": {"dx": 0.1, "t_final": 0.2, "snapshot_times": [0.1, 0.2]}},
            "convergence": {"repetitions": 3,
                            "convergence": {"n_values": [20, 40, 80], "n_mc_values": [5, 10]}},
        }
        mismatched, compared = [], 0
        for command, data in configs.items():
            path = tmp_path / f"{command}.yaml"
            path.write_text(yaml.safe_dump(data))
            for threads in ("1", "3"):
                code = main([command, "--config", str(path), "--seed", "99", "--threads", threads,
                             "--out", str(tmp_path / f"{command}-{threads}")])
                assert code == 0
            for a in sorted((tmp_path / f"{command}-1").glob("*.csv")):
                if a.name == "convergence_timings.csv":
                    continue
                compared += 1
                if a.read_bytes() != (tmp_path / f"{command}-3" / a.name).read_bytes():
                    mismatched.append(a.name)
        report(9, "bit-identical CSV across thread counts", not mismatched and compared >= 6,
               f"{compared} files compared, mismatched {mismatched or 'none'}")
