"""Batch command line: ``mcsl <subcommand> [--config F] [--seed S] [--out D] [--threads K]``.

Exit codes: 0 success, 1 validation failure (bad config or failed checks), 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..burgers2d import BurgersConfig, run_burgers
from ..dirichlet import DirichletConfig, run_dirichlet
from ..grid_interp import PeriodicGrid1D
from ..heat_periodic import HeatConfig, Mode, error_vs_exact, run_heat
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .output import Table, emit_csv, emit_svg_plot
from .studies import convergence_study, error_bound_report
from .verify import run_verification

log = logging.getLogger("mcsl")

COMMANDS = {
    "heat-periodic": "heat_periodic",
    "heat-dirichlet": "heat_dirichlet",
    "burgers2d": "burgers2d",
    "convergence": "convergence",
    "verify": "verify",
}


def _add_common(p: argparse.ArgumentParser):
    # SUPPRESS lets the flags appear before or after the subcommand
    p.add_argument("--config", default=argparse.SUPPRESS, help="YAML/JSON experiment file")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (u64)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
    p.add_argument("--record-every", type=int, default=argparse.SUPPRESS, dest="record_every",
                   help="snapshot stride in steps (heat runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcsl", description=__doc__.splitlines()[0])
    _add_common(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common(sub.add_parser(name))
    return parser


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if hasattr(args, "config") else config_from_dict({})
    kind = COMMANDS[args.command]
    if hasattr(args, "config") and cfg.kind != kind and _kind_given(args.config):
        raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand {args.command!r}")
    cfg.kind = kind
    if hasattr(args, "seed"):
        cfg.seed = args.seed
    if hasattr(args, "out"):
        cfg.output_dir = args.out
    return cfg.validate()


def _kind_given(path) -> bool:
    import yaml

    data = yaml.safe_load(Path(path).read_text()) or {}
    return "kind" in data


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    return {"seed": cfg.seed, "config_hash": cfg.config_hash(), "kind": cfg.kind, **extra}


def _heat(cfg: ExperimentConfig, out: Path, threads: int, record_every: int) -> int:
    h = cfg.heat
    hc = HeatConfig(h.nu, h.dt, PeriodicGrid1D(h.m_s), h.n_mc, h.t_final, cfg.seed)
    u0 = Mode(h.mode, h.phase)
    record, final = run_heat(hc, u0, record_every=record_every, threads=threads)
    x = hc.grid.nodes
    for t, state in zip(record.times, record.states):
        step = round(t / hc.dt)
        name = "heat_periodic_final.csv" if step == hc.m_t else f"heat_periodic_step{step:06d}.csv"
        ex = u0.exact(t, x, hc.nu)
        rows = list(zip(x, state.values, ex, np.abs(state.values - ex)))
        emit_csv(Table(["x", "u_numeric", "u_exact", "abs_error"], rows), out / name, _meta(cfg, t=t))
    if record_every and hc.m_t % record_every:
        ex = u0.exact(hc.m_t * hc.dt, x, hc.nu)
        rows = list(zip(x, final.values, ex, np.abs(final.values - ex)))
        emit_csv(Table(["x", "u_numeric", "u_exact", "abs_error"], rows), out / "heat_periodic_final.csv",
                 _meta(cfg, t=hc.m_t * hc.dt))
    l2, sup = error_vs_exact(final, hc.m_t * hc.dt, hc, u0)
    summary = error_bound_report(hc, u0).table()
    summary.rows += [("l2_error", l2), ("sup_error", sup)]
    emit_csv(summary, out / "heat_periodic_summary.csv", _meta(cfg))
    log.info("heat-periodic: l2 error %.4e, sup error %.4e", l2, sup)
    return 0


def _dirichlet(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    d = cfg.dirichlet
    dc = DirichletConfig(
        nu=d.nu, dt=d.dt, dx=d.dx, n_interior=d.n_interior, n_boundary=d.n_boundary, tau=d.tau,
        boundary_margin=d.boundary_margin, t_final=d.t_final, seed=cfg.seed,
        domain=tuple(d.domain), bridge_test=d.bridge_test,
    )
    res = run_dirichlet(dc, threads=threads)
    v = res.final.values
    rows = list(zip(dc.nodes, v, res.exact, np.abs(v - res.exact), dc.zones()))
    emit_csv(Table(["x", "u_numeric", "u_exact", "abs_error", "zone"], rows),
             out / "heat_dirichlet_final.csv", _meta(cfg, t=res.t))
    emit_csv(Table(["quantity", "value"], [("l2_error", res.l2_error), ("sup_error", res.sup_error)]),
             out / "heat_dirichlet_summary.csv", _meta(cfg))
    log.info("heat-dirichlet: l2 error %.4e", res.l2_error)
    return 0


def _burgers(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    b = cfg.burgers
    bc = BurgersConfig(
        nu=b.nu, dt=b.dt, dx=b.dx, n_interior=b.n_interior, n_boundary=b.n_boundary, tau=b.tau,
        interior_zone=tuple(tuple(r) for r in b.interior_zone), t_final=b.t_final, seed=cfg.seed,
        forcing=b.forcing, bridge_test=b.bridge_test,
    )
    run = run_burgers(bc, b.snapshot_times, threads=threads)
    xx, yy = bc.grid.mesh()
    for t, snap in zip(run.times, run.snapshots):
        tag = f"t{t:.4f}".replace(".", "p")
        rows = list(zip(xx.ravel(), yy.ravel(), snap.u1.ravel(), snap.u2.ravel()))
        emit_csv(Table(["x", "y", "u1", "u2"], rows), out / f"burgers2d_{tag}.csv", _meta(cfg, t=t))
        emit_svg_plot(snap.u1, "heatmap", out / f"burgers2d_u1_{tag}.svg", title=f"u1, t={t:g}")
        emit_svg_plot(snap.u2, "heatmap", out / f"burgers2d_u2_{tag}.svg", title=f"u2, t={t:g}")
    ok = run.all_finite and run.boundary_always_zero
    log.info("burgers2d: sup|u| = %.4f, finite=%s", run.sup_norm, run.all_finite)
    return 0 if ok else 1


def _convergence(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    table = convergence_study(cfg.convergence, cfg.repetitions, cfg.seed, cfg.dirichlet, threads=threads)
    meta = _meta(cfg, problem=cfg.convergence.problem)
    emit_csv(table.to_table(), out / "convergence.csv", meta)
    emit_csv(table.slope_table(), out / "convergence_slopes.csv", meta)
    # wall-clock times vary between runs; kept out of the reproducible tables
    emit_csv(table.timing_table(), out / "convergence_timings.csv", meta)
    emit_svg_plot(table, "loglog-lines", out / "convergence.svg",
                  title=f"{cfg.convergence.problem}: RMS l2 error, dt = dx = 1/n")
    for n_mc, (slope, resid) in sorted(table.slopes.items()):
        log.info("N=%d slope %.3f (residual %.3f)", n_mc, slope, resid)
    return 0


def _verify(cfg: ExperimentConfig, out: Path) -> int:
    results = run_verification(cfg.verify, cfg.seed)
    lines = [f"# seed={cfg.seed} config_hash={cfg.config_hash()}", "check,status,max_deviation"]
    lines += [f"{r.name},{'PASS' if r.passed else 'FAIL'},{r.deviation:.6e}" for r in results]
    (out / "verify_report.txt").write_text("\n".join(lines) + "\n")
    for line in lines[2:]:
        print(line)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    threads = getattr(args, "threads", 1)
    record_every = getattr(args, "record_every", 0)
    try:
        cfg = _resolve(args)
        if threads < 1 or record_every < 0:
            raise ConfigError("--threads must be >= 1 and --record-every >= 0")
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return 2
    try:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.kind == "heat_periodic":
            return _heat(cfg, out, threads, record_every)
        if cfg.kind == "heat_dirichlet":
            return _dirichlet(cfg, out, threads)
        if cfg.kind == "burgers2d":
            return _burgers(cfg, out, threads)
        if cfg.kind == "convergence":
            return _convergence(cfg, out, threads)
        return _verify(cfg, out)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 2
    except ValueError as exc:
        log.error("invalid parameters: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
