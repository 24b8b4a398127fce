# src/pipeline.py
import argparse
import math
import os
import sys

import numpy as np

# === Local imports ===
from src.config import DEFAULT_SEED, load_config
from src.errors import PotentialError
from src.helpers import append_csv, export_field, read_field_csv, save_json, write_manifest
from src.kkt import kkt_report
from src.optimizer import (
    gradient_check,
    initial_potential,
    optimize,
    random_instance,
    sweep_M,
)
from src.pde import assemble, energy, solve, solve_adjoint
from src.physics import cost, material_area, material_centroid, weighted_norm
from src.radial_oracle import radial_table
from src.utils.run_log import IterationLog, print_sink

GRADCHECK_TOL = 1e-5
DEFAULT_ORACLE_M = (1.0, 2.0, 2.0 * math.pi, 10.0, 20.0)


# === Output ===
def _export_pair(grid, field, out_dir, name, files):
    """Write `field` as CSV and VTK under out_dir, recording the file names."""
    for fmt in ("csv", "vtk"):
        path = os.path.join(out_dir, f"{name}.{fmt}")
        export_field(grid, field, path, fmt=fmt, name=name)
        files.append(os.path.basename(path))


def _load_mu(grid, spec, mu_path):
    if mu_path:
        return read_field_csv(grid, mu_path, kind="cell")
    return initial_potential(grid, spec)


# === Subcommands ===
def cmd_solve(args):
    cfg = load_config(args.config)
    out_dir = args.out or cfg.output_dir
    grid = cfg.build_grid()
    spec, f, g = cfg.build_problem(grid)
    mu = _load_mu(grid, spec, args.mu)
    opt = cfg.optimizer

    print(f"⚙️ Solving state on n={grid.n}, M={grid.M:g} ...")
    u, report = solve(assemble(grid, mu), f, opt.solver_tol, opt.solver_method)
    J = cost(grid, g, u)
    files = []
    _export_pair(grid, u, out_dir, "u", files)
    summary = {
        "cost": J,
        "energy": energy(grid, mu, u),
        "weighted_norm": weighted_norm(grid, u),
        "solver": {"method": report.method, "iterations": report.iterations,
                   "relative_residual": report.relative_residual},
    }
    save_json(summary, os.path.join(out_dir, "solve_summary.json"))
    files.append("solve_summary.json")
    write_manifest(out_dir, cfg.resolved(), files)
    print(f"✅ cost = {J:.10e} ({report.method}, {report.iterations} steps, residual {report.relative_residual:.2e})")
    return 0


def cmd_optimize(args):
    cfg = load_config(args.config)
    out_dir = args.out or cfg.output_dir
    grid = cfg.build_grid()
    spec, f, g = cfg.build_problem(grid)
    opt = cfg.optimizer

    print(f"⚙️ Optimizing ({opt.strategy}) on n={grid.n}, M={grid.M:g}, h={grid.h:g} ...")
    mu0 = initial_potential(grid, spec)
    log = IterationLog(os.path.join(out_dir, "cost_log.csv"), every=args.every, quiet=args.quiet)
    res = optimize(grid, spec, f, g, mu0, opt, log_sink=log)

    files = ["cost_log.csv"] if log.records else []
    _export_pair(grid, res.mu, out_dir, "mu", files)
    _export_pair(grid, res.u, out_dir, "u", files)
    _export_pair(grid, res.p, out_dir, "p", files)

    report = kkt_report(grid, spec, res.mu, res.u, res.p)
    with open(os.path.join(out_dir, "kkt.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_record())
    files.append("kkt.txt")

    area = material_area(grid, res.mu, spec.mu_max)
    summary = {
        "cost": res.cost,
        "psi": res.psi_history[-1],
        "iterations": res.iterations,
        "reason": res.reason,
        "material_area": area,
        "material_centroid": material_centroid(grid, res.mu, spec.mu_max),
        "multiplier": report.multiplier,
    }
    save_json(summary, os.path.join(out_dir, "summary.json"))
    files.append("summary.json")
    write_manifest(out_dir, cfg.resolved(), files)

    print(f"✅ {res.reason} after {res.iterations} iterations: cost = {res.cost:.10e}, "
          f"Psi = {res.psi_history[-1]:.6f}, material area = {area:.4f}")
    print(f"📊 Results written to {out_dir}")
    return 0


def cmd_kkt(args):
    cfg = load_config(args.config)
    grid = cfg.build_grid()
    spec, f, g = cfg.build_problem(grid)
    mu = read_field_csv(grid, args.mu, kind="cell")
    opt = cfg.optimizer

    u, _ = solve(assemble(grid, mu), f, opt.solver_tol, opt.solver_method)
    p = solve_adjoint(grid, mu, g, opt.solver_tol, opt.solver_method)
    record = kkt_report(grid, spec, mu, u, p).to_record()
    sys.stdout.write(record)
    if args.out:
        path = os.path.join(args.out, "kkt.txt")
        os.makedirs(args.out, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(record)
        print(f"✅ KKT report written to {path}")
    return 0


def cmd_sweep_m(args):
    cfg = load_config(args.config)
    h = args.h or 2.0 * cfg.M / cfg.n
    print(f"⚙️ Sweeping M over {args.M} at h={h:g} ...")
    table = sweep_M(cfg.build_problem, args.M, cfg.optimizer, h=h,
                    log_sink=None if args.quiet else print_sink(args.every))
    print("📊 M-independence table")
    print(table.to_string(index=False))
    if len(table) > 1:
        costs = table["window_cost"].to_numpy()
        spread = float((costs.max() - costs.min()) / np.abs(costs).max())
        print(f"📊 relative spread of the cost inside (-{min(args.M):g},{min(args.M):g})^2 = {spread:.3e}")
    out_dir = args.out or cfg.output_dir
    path = os.path.join(out_dir, "sweep_m.csv")
    if os.path.exists(path):
        os.remove(path)
    append_csv(table.to_dict("records"), path)
    write_manifest(out_dir, {**cfg.resolved(), "sweep": {"M": list(args.M), "h": h}}, ["sweep_m.csv"])
    return 0


def cmd_oracle(args):
    table = radial_table(args.m, n_r=args.n_r)
    for row in table.to_dict("records"):
        print(
            f"m={row['m']:.6f} R={row['R']:.8f} R_scan={row['R_scan']:.8f} "
            f"resolution={row['resolution']:.2e} area={row['area']:.6f} "
            f"J={row['J']:.8f} saturated={row['saturated']}"
        )
    if args.out:
        path = os.path.join(args.out, "oracle.csv")
        if os.path.exists(path):
            os.remove(path)
        append_csv(table.to_dict("records"), path)
        print(f"✅ Oracle table written to {path}")
    return 0


def cmd_gradcheck(args):
    seed = args.seed
    if seed is None:
        seed = load_config(args.config).seed if args.config else DEFAULT_SEED
    grid, mu, f, g = random_instance(n=args.n, seed=seed)
    errors = gradient_check(grid, mu, f, g, directions=args.directions, seed=seed)
    worst = float(errors.max())
    ok = worst < GRADCHECK_TOL
    marker = "✅" if ok else "❌"
    print(f"{marker} max relative error = {worst:.3e} over {args.directions} directions (n={args.n}, seed={seed})")
    return 0 if ok else 1


# === Entry Point ===
def build_parser():
    parser = argparse.ArgumentParser(prog="potential", description="Optimal Schrodinger potentials on a truncated plane")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="State solve for a given potential")
    p.add_argument("--config", required=True)
    p.add_argument("--mu", help="cell field CSV; default is the initial potential")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("optimize", help="Run a full experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--every", type=int, default=10, help="status line interval")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("kkt", help="First-order optimality report for a given potential")
    p.add_argument("--config", required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kkt)

    p = sub.add_parser("sweep-m", help="Optimize over several half-widths at fixed cell size")
    p.add_argument("--config", required=True)
    p.add_argument("--M", type=float, nargs="+", default=[5.0, 10.0, 20.0])
    p.add_argument("--h", type=float)
    p.add_argument("--out")
    p.add_argument("--every", type=int, default=25)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep_m)

    p = sub.add_parser("oracle", help="Radial limit-shape table")
    p.add_argument("--m", type=float, nargs="+", default=list(DEFAULT_ORACLE_M))
    p.add_argument("--n-r", dest="n_r", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gradcheck", help="Finite-difference audit of the adjoint gradient")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--seed", type=int, help="default: the config seed, else 7")
    p.add_argument("--config", help="take the seed from this experiment config")
    p.add_argument("--directions", type=int, default=20)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PotentialError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
    except FileNotFoundError as e:
        print(f"not-found: {e}", file=sys.stderr)
    except OSError as e:
        print(f"io-error: {e}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
