"""``deltaprop CONFIG``: simulate, verify, converge or compare frames.

Exit status: 0 success, 2 configuration error, 3 numeric failure,
4 at least one diagnostic FAIL.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import plotting
from .config import MODES, RunConfig, load_run_config
from .diagnostics import DiagnosticsReport, Record, convergence_study, frame_consistency
from .export import sha256_of, write_state, write_table
from .hamiltonians import MovingFamily, SafeRegionError, StaticFamily
from .numkit import NumericalError, OracleCapError
from .propagator import evolve_bidirectional
from .specfile import ConfigError
from .suite import verify_moving, verify_static
from .transforms import BoundaryMassError

log = logging.getLogger("deltaprop")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FAIL = 0, 2, 3, 4


def _meta(cfg: RunConfig):
    g, sc = cfg.grid, cfg.schedule
    meta = {
        "mode": cfg.mode,
        "config_sha256": sha256_of(cfg.source) if cfg.source.is_file() else "-",
        "spec": Path(cfg.problem.source).name,
        "spec_sha256": sha256_of(cfg.problem.source),
        "grid": f"half_width={g.half_width!r} nodes={g.n} h={g.h!r}",
        "schedule": (f"start={sc.s!r} end={sc.t!r} slices={sc.n_slices} substeps={sc.substeps} "
                     f"sampling={sc.sampling}"),
        "seed": cfg.seed,
    }
    if cfg.overrides:
        meta["overrides"] = " ".join(cfg.overrides)
    return meta


def _family(cfg: RunConfig, grid=None):
    grid = cfg.grid if grid is None else grid
    if cfg.problem.kind == "static":
        return StaticFamily(cfg.problem.spec, grid)
    return MovingFamily(cfg.problem.spec, grid)


def _write_report(out: Path, meta, report: DiagnosticsReport, figures):
    (out / "report.txt").write_text(
        "".join(f"# {k}: {v}\n" for k, v in meta.items()) + report.to_text(), encoding="utf-8")
    write_table(out / "report.csv", meta, list(Record.FIELDS),
                [[getattr(r, f) if getattr(r, f) is not None else "" for f in Record.FIELDS]
                 for r in report.sorted()])
    if figures:
        plotting.plot_report(out / "report.png", report.sorted())


def run_simulate(cfg: RunConfig, meta, figures):
    out = cfg.output_dir
    psi0 = cfg.initial.on(cfg.grid)
    sc = cfg.schedule
    run = evolve_bidirectional(_family(cfg), psi0, sc.s, sc.t, sc.n_slices, sc.substeps,
                               sc.sampling, cfg.tolerances, snapshot_stride=cfg.snapshot_stride)
    n0 = psi0.norm()
    rows = [(0, sc.s, n0, 0.0)] + [(r.index + 1, r.end_time, r.norm, r.norm - n0) for r in run.records]
    write_table(out / "norms.csv", meta, ["slice", "t", "norm", "drift"], rows)
    x = cfg.grid.interior
    times = [t for t, _ in run.snapshots]
    dens = np.array([p.density() for _, p in run.snapshots])
    write_table(out / "density.csv", {**meta, "snapshot_stride": cfg.snapshot_stride},
                ["t", "x", "density"],
                ((t, xi, d) for t, row in zip(times, dens) for xi, d in zip(x, row)))
    write_state(out / "final_state.csv", meta, run.final)
    if figures:
        plotting.plot_norms(out / "norms.png", [r[1] for r in rows], [r[2] for r in rows])
        pts = cfg.problem.spec.points if cfg.problem.kind == "static" else ()
        if len(times) > 1:
            plotting.plot_density(out / "density.png", x, times, dens, pts)
    drift = max(abs(r[3]) for r in rows)
    log.info("max norm drift %.3e over %d slices", drift, sc.n_slices)
    return EXIT_OK


def run_verify(cfg: RunConfig, meta, figures):
    rng = np.random.default_rng(cfg.seed)
    psi0 = cfg.initial.on(cfg.grid)
    fn = verify_static if cfg.problem.kind == "static" else verify_moving
    report = fn(cfg.problem.spec, cfg.grid, psi0, cfg.schedule, cfg.verify, rng)
    _write_report(cfg.output_dir, meta, report, figures)
    for r in report.failed:
        log.warning("FAIL %s: %s", r.check, r.inputs)
    return EXIT_OK if report.ok else EXIT_FAIL


def run_converge(cfg: RunConfig, meta, figures):
    psi0 = cfg.initial.on(cfg.grid)
    sc, cv = cfg.schedule, cfg.converge
    table = convergence_study(_family(cfg), psi0, sc.s, sc.t, cv.slices, cv.reference_slices,
                              sc.substeps, sc.sampling, cfg.tolerances)
    write_table(cfg.output_dir / "convergence.csv", {**meta, "reference_slices": cv.reference_slices},
                ["slices", "error", "order"], table.rows())
    if figures:
        plotting.plot_convergence(cfg.output_dir / "convergence.png", table.n_slices, table.errors)
    return EXIT_OK


def run_frames(cfg: RunConfig, meta, figures):
    if cfg.initial.packet is None:
        raise ConfigError("initial: frames mode needs packet parameters, not a state file")
    sc, fr = cfg.schedule, cfg.frames
    res = frame_consistency(cfg.problem.spec, cfg.initial.packet, sc.s, sc.t, fr.levels, cfg.grid,
                            sc.n_slices, sc.substeps, sc.sampling, fr.quad_step,
                            cfg.verify.checks.frame_ratio, fr.comoving_slices_factor)
    cols = ["level", "nodes", "h", "slices", "quad_step", "distance", "direct_selfconv",
            "comoving_selfconv", "direct_norm", "comoving_norm", "direct_boundary_mass",
            "comoving_boundary_mass"]
    rows = [[k, lv.nodes, lv.h, lv.n_slices, lv.quad_step, lv.distance, lv.direct_selfconv,
             lv.comoving_selfconv, lv.direct_norm, lv.comoving_norm, lv.direct_boundary_mass,
             lv.comoving_boundary_mass] for k, lv in enumerate(res.levels)]
    write_table(cfg.output_dir / "frames.csv", meta, cols, rows)
    _write_report(cfg.output_dir, meta, res.report, figures)
    if figures:
        plotting.plot_frames(cfg.output_dir / "frames.png", res.levels)
    return EXIT_OK if res.report.ok else EXIT_FAIL


RUNNERS = {"simulate": run_simulate, "verify": run_verify, "converge": run_converge,
           "frames": run_frames}


def run(cfg: RunConfig, figures=True):
    """Execute one configured run; returns the exit status."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    meta = _meta(cfg)
    t0 = time.perf_counter()
    try:
        status = RUNNERS[cfg.mode](cfg, meta, figures)
    except (NumericalError, BoundaryMassError, SafeRegionError, OracleCapError) as exc:
        rep = DiagnosticsReport()
        rep.add("numeric failure", type(exc).__name__, float("nan"), None, "FAIL", str(exc))
        (cfg.output_dir / "error.txt").write_text(
            "".join(f"# {k}: {v}\n" for k, v in meta.items()) + rep.to_text(), encoding="utf-8")
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_NUMERIC
    log.info("%s finished in %.2f s, status %d", cfg.mode, time.perf_counter() - t0, status)
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="deltaprop", description=__doc__.splitlines()[0])
    p.add_argument("config", help="run configuration (TOML)")
    p.add_argument("--mode", choices=MODES, help="override the configured mode")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                   help="tolerance override, e.g. checks.unitarity=1e-9 or tolerances.oracle_cap=1024")
    p.add_argument("--no-figures", action="store_true", help="skip PNG output")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        cfg = load_run_config(args.config, mode=args.mode, seed=args.seed, output_dir=args.out,
                              overrides=tuple(args.tol))
        return run(cfg, figures=not args.no_figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
