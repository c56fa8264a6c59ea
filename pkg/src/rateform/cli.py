"""Command-line front end: audit | stiffness | verify-rate | solve | evolve | reconstruct.

Every subcommand writes CSV tables (17-significant-digit floats, header row)
plus companion PNG figures into --out; exit code 0 means every asserted
property passed. Outputs are byte-identical for a fixed (config, seed)
regardless of --threads.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import kinematics as kin
from .audit import run_audit
from .config import RunConfig, make_law, parse_config
from .errors import RateFormError
from .evolution import evolve
from .grid import initial_compatibility
from .laws import MaterialParams
from .rates import consistency_certificate
from .reports import write_csv, write_vtk_structured_points
from .subproblem import assemble_operator, assemble_rhs, solve_subproblem
from .tangent import h_zj_mooney, symmetry_report
from .tensors import from_mandel

MOTION_TABLE = (
    ("simple-shear", lambda: kin.simple_shear(1.0), 1.0),
    ("triaxial", lambda: kin.triaxial_stretch(2.0), 0.3),
    ("rigid-rotation", lambda: kin.rigid_rotation(1.0, pre_strain=np.diag([1.5, 1.0, 0.7])), 0.5),
    ("dilation", lambda: kin.dilation(0.6), 0.4),
)


def _load_config(args) -> RunConfig:
    if args.config is not None:
        return parse_config(Path(args.config).read_text())
    # defaults-only configuration
    return parse_config("")


def _resolve_material(args, cfg: RunConfig):
    law_tag = getattr(args, "law", None) or cfg.law.tag
    mu = args.mu if getattr(args, "mu", None) is not None else cfg.params.mu
    lam = args.lam if getattr(args, "lam", None) is not None else cfg.params.lam
    kappa = args.kappa if getattr(args, "kappa", None) is not None else cfg.params.kappa
    if law_tag.startswith("neo_hooke") and kappa is None:
        kappa = 1.0
    params = MaterialParams(mu=mu, lam=lam, kappa=kappa)
    return make_law(law_tag, params), params


def _write_run_info(out_dir, command, seed, cfg: RunConfig, passed, extra=()):
    rows = [("tool", "version", __version__), ("run", "command", command),
            ("run", "seed", seed), ("run", "passed", "true" if passed else "false")]
    rows += [(s, k, v) for s, k, v in cfg.echo]
    rows += list(extra)
    write_csv(out_dir / "run_info.csv", ("section", "key", "value"), rows)


def cmd_audit(args):
    cfg = _load_config(args)
    law, params = _resolve_material(args, cfg)
    report = run_audit(law, seed=args.seed, samples=args.samples, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "audit_report.csv",
        ("check", "samples", "violations", "worst_value", "passed", "note", "witness"),
        [(r.name, r.samples, r.violations, r.worst_value, r.passed, r.note, r.witness)
         for r in report.results],
    )
    _write_run_info(out, "audit", args.seed, cfg, report.overall_pass,
                    extra=[("audit", "law", law.tag), ("audit", "samples", args.samples)])
    if not args.no_plots:
        from .plots import save_audit_bars

        save_audit_bars(out / "audit_margins.png", report)
    for r in report.results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: worst={r.worst_value:.6g} "
              f"violations={r.violations} {r.note}")
    return 0 if report.overall_pass else 1


def cmd_stiffness(args):
    cfg = _load_config(args)
    _, params = _resolve_material(args, cfg)
    b_parts = [float(x) for x in args.b.replace(",", " ").split()]
    if len(b_parts) != 6:
        raise ValueError("--b expects six Mandel components b11,b22,b33,b12,b23,b31")
    B = from_mandel(np.asarray(b_parts))
    H = h_zj_mooney(B, params)
    rep = symmetry_report(H)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "stiffness_matrix.csv",
              tuple(f"c{j + 1}" for j in range(6)),
              [tuple(row) for row in H.matrix])
    write_csv(out / "stiffness_summary.csv",
              ("quantity", "value"),
              [("major_defect", rep.major_defect), ("min_eig", rep.min_eig),
               ("mu", params.mu), ("lambda", params.lam)])
    _write_run_info(out, "stiffness", args.seed, cfg, True,
                    extra=[("stiffness", "b", args.b)])
    if not args.no_plots:
        from .plots import save_matrix_heatmap

        save_matrix_heatmap(out / "stiffness_matrix.png", H.matrix,
                            "tangent stiffness (Mandel 6x6)")
    print(f"PASS stiffness: major_defect={rep.major_defect:.3e} min_eig={rep.min_eig:.6g}")
    return 0


def cmd_verify_rate(args):
    cfg = _load_config(args)
    law, _ = _resolve_material(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows_csv = []
    rows_by_motion = {}
    ok = True
    for name, make_motion, t in MOTION_TABLE:
        rows, verdict = consistency_certificate(law, make_motion(), t,
                                                h0=args.h0, levels=args.levels)
        rows_by_motion[name] = rows
        for h, resid, order in rows:
            rows_csv.append((name, t, h, resid, order if np.isfinite(order) else "", verdict))
        ok = ok and verdict in ("order", "exact", "tangent_floor")
        print(f"{'PASS' if verdict in ('order', 'exact', 'tangent_floor') else 'FAIL'} "
              f"{name}: verdict={verdict} residuals=" +
              " ".join(f"{r:.3e}" for _, r, _ in rows))
    write_csv(out / "rate_convergence.csv",
              ("motion", "t", "h", "residual", "observed_order", "verdict"), rows_csv)
    _write_run_info(out, "verify-rate", args.seed, cfg, ok)
    if not args.no_plots:
        from .plots import save_convergence_plot

        save_convergence_plot(out / "rate_convergence.png", rows_by_motion)
    return 0 if ok else 1


def _require_principal_law(cfg: RunConfig):
    if cfg.solver.mode == "induced" and cfg.law.tag != "mooney_log":
        raise ValueError("the induced-tangent solver needs material.law = mooney_log")


def cmd_solve(args):
    cfg = _load_config(args)
    _require_principal_law(cfg)
    fields = initial_compatibility(cfg.grid, cfg.phi0, cfg.law, forcing=cfg.forcing)
    op = assemble_operator(cfg.grid, fields.sigma, cfg.params, mode=cfg.solver.mode,
                           threads=args.threads)
    r = assemble_rhs(cfg.grid, fields.sigma, fields.v, cfg.forcing, t=0.0,
                     threads=args.threads)
    v, iters = solve_subproblem(op, r, cg_tol=cfg.solver.cg_tol,
                                cg_max_factor=cfg.solver.cg_max_factor)
    fields.v = v
    fields.clamp_boundary()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    max_v = float(np.max(np.linalg.norm(v.reshape(-1, 3), axis=1)))
    write_csv(out / "solve_summary.csv", ("quantity", "value"),
              [("cg_iterations", iters), ("max_velocity", max_v),
               ("unknowns", op.n_unknowns)])
    write_vtk_structured_points(out / "solution.vtk", cfg.grid,
                                vectors={"velocity": fields.v},
                                tensors={"stress": fields.sigma})
    _write_run_info(out, "solve", args.seed, cfg, True)
    if not args.no_plots:
        from .plots import save_velocity_slice

        save_velocity_slice(out / "velocity_slice.png", cfg.grid, fields.v)
    print(f"PASS solve: cg_iterations={iters} max_velocity={max_v:.6g}")
    return 0


def cmd_evolve(args):
    cfg = _load_config(args)
    _require_principal_law(cfg)
    fields = initial_compatibility(cfg.grid, cfg.phi0, cfg.law, forcing=cfg.forcing)
    result = evolve(fields, cfg.solver, cfg.params, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "evolve_series.csv",
        ("t", "max_v", "cg_iters", "min_tangent_eig", "equilibrium_residual"),
        [(s.t, s.max_v, s.cg_iters, s.min_tangent_eig, s.equilibrium_residual)
         for s in result.steps],
    )
    for k, (t, sigma, v) in enumerate(result.snapshots):
        write_vtk_structured_points(out / f"snapshot_{k:04d}.vtk", cfg.grid,
                                    vectors={"velocity": v}, tensors={"stress": sigma})
    write_vtk_structured_points(out / "final.vtk", cfg.grid,
                                vectors={"velocity": fields.v},
                                tensors={"stress": fields.sigma})

    passed = result.completed
    checks = [("evolve", "completed", "true" if result.completed else "false"),
              ("evolve", "initial_equilibrium_residual",
               f"{result.initial_equilibrium_residual:.17g}")]
    # an equilibrium start must stay at rest (discrete fixed point)
    if cfg.forcing.label == "zero" and result.initial_equilibrium_residual <= 1e-8:
        max_v = max((s.max_v for s in result.steps), default=0.0)
        held = max_v <= 1e-8
        passed = passed and held
        checks.append(("evolve", "equilibrium_preserved", "true" if held else "false"))
    if result.error:
        checks.append(("evolve", "error", result.error))
    _write_run_info(out, "evolve", args.seed, cfg, passed, extra=checks)
    if not args.no_plots and result.steps:
        from .plots import save_series_plot

        save_series_plot(out / "evolve_series.png", result.steps)
    status = "PASS" if passed else "FAIL"
    print(f"{status} evolve: steps={len(result.steps)} "
          f"max_v={max((s.max_v for s in result.steps), default=0.0):.3e} "
          f"{result.error}")
    return 0 if passed else 1


def _velocity_preset(scenario, grid):
    center = np.asarray(grid.origin) + 0.5 * np.asarray(grid.extent)
    c = scenario["coeff"]
    kind = scenario["field"]
    if kind == "constant":
        vec = np.array([c, 0.0, 0.0])
        return (lambda p, t: np.broadcast_to(vec, p.shape).copy(),
                lambda p, t: np.zeros(p.shape[:-1]))
    if kind == "linear":
        return (lambda p, t: c * (p - center),
                lambda p, t: np.full(p.shape[:-1], 3.0 * c))
    if kind == "rotation":
        omega = np.array([0.0, 0.0, c])
        return (lambda p, t: np.cross(np.broadcast_to(omega, p.shape), p - center),
                lambda p, t: np.zeros(p.shape[:-1]))
    raise ValueError(f"unknown velocity field preset {kind!r}")


def cmd_reconstruct(args):
    cfg = _load_config(args)
    sc = cfg.scenario
    v, div_v = _velocity_preset(sc, cfg.grid)
    s = sc["seeds_per_axis"]
    fracs = (np.arange(s) + 1.0) / (s + 1.0)
    o = np.asarray(cfg.grid.origin)
    L = np.asarray(cfg.grid.extent)
    seeds = np.stack(np.meshgrid(*[o[k] + fracs * L[k] for k in range(3)],
                                 indexing="ij"), axis=-1).reshape(-1, 3)
    traj = kin.reconstruct_deformation(
        v, seeds, T=sc["t_final"], dt=sc["dt"], bounds=cfg.grid.bounds, div_v=div_v
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "trajectory.csv", ("t", "x0_id", "xi1", "xi2", "xi3", "J"),
              list(traj.rows()))
    ok = bool(np.all(traj.jacobians > 0.0))
    _write_run_info(out, "reconstruct", args.seed, cfg, ok,
                    extra=[("reconstruct", "seeds", seeds.shape[0])])
    if not args.no_plots:
        from .plots import save_trajectory_plot

        save_trajectory_plot(out / "trajectory.png", traj)
    print(f"{'PASS' if ok else 'FAIL'} reconstruct: seeds={seeds.shape[0]} "
          f"J_range=[{traj.jacobians.min():.6g}, {traj.jacobians.max():.6g}]")
    return 0 if ok else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="path to a key = value config file")
    common.add_argument("--out", default=".", help="output directory for CSV/VTK/PNG artifacts")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; 0 = auto, results identical regardless")
    common.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    material = argparse.ArgumentParser(add_help=False)
    material.add_argument("--law", default=None)
    material.add_argument("--mu", type=float, default=None)
    material.add_argument("--lambda", dest="lam", type=float, default=None)
    material.add_argument("--kappa", type=float, default=None)

    p = argparse.ArgumentParser(prog="rateform", description=__doc__)
    p.add_argument("--version", action="version", version=f"rateform {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("audit", parents=[common, material],
                        help="run the constitutive-inequality battery")
    pa.add_argument("--samples", type=int, default=10_000)
    pa.set_defaults(fn=cmd_audit)

    ps = sub.add_parser("stiffness", parents=[common, material],
                        help="dump the Mandel tangent matrix at a given B")
    ps.add_argument("--b", default="1,1,1,0,0,0",
                    help="six Mandel components of B: b11,b22,b33,b12,b23,b31")
    ps.set_defaults(fn=cmd_stiffness)

    pv = sub.add_parser("verify-rate", parents=[common, material],
                        help="rate-consistency convergence table over canonical motions")
    pv.add_argument("--h0", type=float, default=None,
                    help="coarsest FD step; default picked per law")
    pv.add_argument("--levels", type=int, default=3)
    pv.set_defaults(fn=cmd_verify_rate)

    for name, fn, help_text in (
        ("solve", cmd_solve, "one elliptic velocity solve at the initial state"),
        ("evolve", cmd_evolve, "staggered stress-velocity evolution"),
        ("reconstruct", cmd_reconstruct, "characteristic reconstruction of the motion"),
    ):
        pc = sub.add_parser(name, parents=[common], help=help_text)
        pc.set_defaults(fn=fn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (RateFormError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
