"""Command-line driver: `run` (single simulation), `converge` (wall-error
convergence harness), and `mesh-info`.  Exit codes: 0 success, 2 config
error, 3 solver abort.
"""

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import cases, mesh as meshmod, refops, timeloop, vtk
from .config import RunConfig, format_config, parse_config
from .discretization import SemiDiscretization
from .errors import ConfigError, EsdgError
from .timeloop import IntegratorConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _add_config_flags(parser):
    for f in dataclasses.fields(RunConfig):
        parser.add_argument(f"--{f.name}", default=None, metavar="V")


def _collect_overrides(args):
    return [(f.name, getattr(args, f.name))
            for f in dataclasses.fields(RunConfig)
            if getattr(args, f.name) is not None]


def build_discretization(cfg):
    setup = cases.preset_case(cfg)
    ops = refops.build_operators(cfg.N)
    disc = SemiDiscretization(
        ops, setup.mesh, setup.gas, setup.boundary_specs,
        interface_dissipation=cfg.interface_dissipation,
        viscous_penalty=cfg.viscous_penalty,
        lf_per_face=cfg.lf_per_face)
    return setup, disc


def integrator_config(cfg):
    return IntegratorConfig(
        t_final=cfg.t_final, abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol,
        dt_init=cfg.dt_init or None,
        dt_max=cfg.dt_max if cfg.dt_max > 0 else np.inf,
        safety=cfg.safety, diagnostics_stride=cfg.diagnostics_stride)


def run_from_config(cfg, echo=True):
    """Execute one simulation, writing all outputs under cfg.outdir."""
    setup, disc = build_discretization(cfg)
    os.makedirs(cfg.outdir, exist_ok=True)
    if echo:
        with open(os.path.join(cfg.outdir, "config_echo.cfg"), "w") as fh:
            fh.write(format_config(cfg))
    meshmod.write_trimesh2d(setup.mesh, os.path.join(cfg.outdir, "mesh.tri"))
    coeffs0 = disc.project_initial_condition(setup.initial_prim)

    def writer(t, y):
        name = f"snapshot_t{t:.6g}.vtk".replace("-", "m")
        vtk.write_snapshot(y, t, disc.ops, disc.mesh, disc.gas,
                           os.path.join(cfg.outdir, name))

    out = None
    status = "finished"
    try:
        out = timeloop.run_simulation(
            disc, coeffs0, integrator_config(cfg),
            wall_tags=setup.wall_tags,
            snapshot_times=cfg.snapshot_times, snapshot_writer=writer,
            assert_identity_tol=cfg.assert_identity_tol or None)
    except EsdgError as exc:
        status = f"aborted: {exc}"
    if out is not None:
        timeloop.write_diagnostics_csv(
            out.records, os.path.join(cfg.outdir, "diagnostics.csv"))
        vtk.write_snapshot(out.final_state, out.t_final, disc.ops, disc.mesh,
                           disc.gas, os.path.join(cfg.outdir, "final.vtk"))
    else:
        timeloop.write_diagnostics_csv(
            [], os.path.join(cfg.outdir, "diagnostics.csv"))
    return out, status, disc


def cmd_run(args):
    overrides = _collect_overrides(args)
    cfg = parse_config(args.config, overrides)
    if args.dump_operators:
        refops.dump_operators_csv(refops.build_operators(cfg.N), args.dump_operators)
    out, status, _ = run_from_config(cfg)
    if status != "finished":
        print(f"run {status}", file=sys.stderr)
        print(f"partial outputs in {cfg.outdir}", file=sys.stderr)
        return EXIT_SOLVER
    last = out.records[-1] if out.records else None
    print(f"finished t={out.t_final:.6g} steps={out.steps} "
          f"rejections={out.rejections}")
    if last is not None:
        print(f"final r(t)={last.r:.6e} boundary_term={last.boundary_term:.6e} "
              f"e_wall={last.e_wall:.6e}")
    print(f"outputs in {cfg.outdir}")
    return EXIT_OK


def convergence_harness(base_cfg, degrees, K1Ds, outdir=None):
    """Run the (N, K1D) matrix, collect final-time wall errors and rates.

    Returns rows of dicts; failures are recorded and the sweep continues.
    Rates compare consecutive meshes at fixed N.
    """
    if base_cfg.case != "converge_channel":
        raise ConfigError("convergence harness requires case=converge_channel")
    rows = []
    for N in degrees:
        prev_err = None
        for K1D in K1Ds:
            cfg = dataclasses.replace(
                base_cfg, N=N, K1D=K1D,
                outdir=os.path.join(outdir or base_cfg.outdir, f"N{N}_K{K1D}"))
            row = {"N": N, "K1D": K1D, "e_wall": np.nan, "rate": np.nan,
                   "status": "ok"}
            try:
                out, status, disc = run_from_config(cfg)
                if status != "finished":
                    row["status"] = status
                else:
                    row["e_wall"] = disc.wall_error(out.final_state,
                                                    ("bottom", "top"))
                    if prev_err is not None and row["e_wall"] > 0:
                        row["rate"] = float(np.log2(prev_err / row["e_wall"]))
                    prev_err = row["e_wall"]
            except EsdgError as exc:
                row["status"] = f"failed: {exc}"
                prev_err = None
            rows.append(row)
    return rows


def write_rate_table(rows, path):
    with open(path, "w") as fh:
        fh.write("N,K1D,e_wall,rate,status\n")
        for r in rows:
            e = "" if np.isnan(r["e_wall"]) else f"{r['e_wall']:.17g}"
            rate = "" if np.isnan(r["rate"]) else f"{r['rate']:.17g}"
            fh.write(f"{r['N']},{r['K1D']},{e},{rate},{r['status']}\n")


def cmd_converge(args):
    overrides = _collect_overrides(args)
    base = dataclasses.replace(RunConfig(), case="converge_channel",
                               t_final=0.5, Re=50.0, Ma=0.1,
                               abs_tol=1e-9, rel_tol=1e-9)
    cfg = parse_config(args.config, overrides, base=base)
    degrees = [int(tok) for tok in args.degrees.split(",")]
    K1Ds = [int(tok) for tok in args.K1Ds.split(",")]
    rows = convergence_harness(cfg, degrees, K1Ds, outdir=cfg.outdir)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, "rates.csv")
    write_rate_table(rows, path)
    for r in rows:
        rate = "" if np.isnan(r["rate"]) else f" rate={r['rate']:.2f}"
        err = "" if np.isnan(r["e_wall"]) else f" e_wall={r['e_wall']:.3e}"
        print(f"N={r['N']} K1D={r['K1D']}{err}{rate} [{r['status']}]")
    print(f"rate table: {path}")
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_SOLVER


def cmd_mesh_info(args):
    if args.mesh:
        m = meshmod.read_trimesh2d(args.mesh)
    else:
        overrides = _collect_overrides(args)
        cfg = parse_config(args.config, overrides + [("t_final", "1")])
        m = cases.preset_case(cfg).mesh
    info = meshmod.mesh_info(m)
    for key, val in info.items():
        print(f"{key}: {val}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="esdg",
        description="Entropy-stable modal DG solver for 2D compressible "
                    "Navier-Stokes on triangles")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation")
    p_run.add_argument("config", nargs="?", default=None,
                       help="key=value config file")
    p_run.add_argument("--dump-operators", default=None, metavar="DIR",
                       help="dump reference operator matrices as CSV")
    _add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("converge", help="wall-error convergence study")
    p_conv.add_argument("config", nargs="?", default=None)
    p_conv.add_argument("--degrees", default="2,3", help="comma list of N")
    p_conv.add_argument("--K1Ds", default="2,4,8", help="comma list of K1D")
    _add_config_flags(p_conv)
    p_conv.set_defaults(func=cmd_converge)

    p_info = sub.add_parser("mesh-info", help="print mesh statistics")
    p_info.add_argument("--mesh", default=None, help="TRIMESH2D file")
    p_info.add_argument("config", nargs="?", default=None)
    _add_config_flags(p_info)
    p_info.set_defaults(func=cmd_mesh_info)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EsdgError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
