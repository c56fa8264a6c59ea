"""Acceptance gate: one test per criterion, each printing a pass/fail line
with its measured quantities and elapsed time (run with -s to see them all)."""

import time

import numpy as np

from rateform import audit, kinematics as kin, laws, rates, tangent, tensors
from rateform import grid as gridmod
from rateform.audit import run_audit, sample_spd
from rateform.evolution import SolverConfig, evolve
from rateform.grid import StructuredGrid, initial_compatibility
from rateform.laws import MaterialParams
from rateform.subproblem import SHAPE_N, assemble_operator, solve_subproblem
from rateform.tangent import c_iso_mandel, h_zj_generic, h_zj_mooney

PARAMS = MaterialParams(mu=1.0, lam=2.0)
LAW = laws.mooney_log(PARAMS)


class _Timer:
    def __init__(self, budget):
        self.budget = budget

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False


def _report(number, name, ok, detail, timer):
    status = "PASS" if ok else "FAIL"
    print(f"{status} criterion {number} ({name}): {detail} [{timer.elapsed:.2f}s "
          f"< {timer.budget:.0f}s budget]")
    assert ok, f"criterion {number} ({name}): {detail}"
    assert timer.elapsed < timer.budget, f"criterion {number} over runtime budget"


def test_criterion_01_linearization():
    rng = np.random.default_rng(101)
    with _Timer(1.0) as tm:
        worst = 0.0
        for _ in range(20):
            mu = rng.uniform(0.1, 5.0)
            lam = rng.uniform(-2.0 * mu / 3.0 + 1e-3, 5.0)
            p = MaterialParams(mu=mu, lam=lam)
            diff = np.linalg.norm(h_zj_mooney(np.eye(3), p).matrix - c_iso_mandel(p))
            worst = max(worst, diff)
    _report(1, "linearization at the reference", worst <= 1e-13,
            f"worst ||H(1) - C_iso|| = {worst:.3e} <= 1e-13", tm)


def test_criterion_02_symmetry_definiteness():
    with _Timer(10.0) as tm:
        ok = True
        detail = []
        for p in (PARAMS, MaterialParams(mu=1.0, lam=-0.3)):
            rng = np.random.default_rng(102)
            B = sample_spd(rng, 10_000)  # eigenvalues log-uniform in [e^-2, e^2]
            M = h_zj_mooney(B, p).matrix
            Mt = np.swapaxes(M, -2, -1)
            defect = np.linalg.norm(M - Mt, axis=(-2, -1)) / np.maximum(
                1.0, np.linalg.norm(M, axis=(-2, -1)))
            min_eig = np.linalg.eigvalsh(0.5 * (M + Mt))[..., 0]
            floor = 2.0 * p.mu + 3.0 * min(p.lam, 0.0)
            ok = ok and np.max(defect) <= 1e-11 and np.min(min_eig) >= floor - 1e-9
            detail.append(f"lam={p.lam}: defect={np.max(defect):.2e}, "
                          f"min_eig={np.min(min_eig):.6f} >= {floor - 1e-9:.6f}")
    _report(2, "major symmetry + uniform definiteness", ok, "; ".join(detail), tm)


def test_criterion_03_fd_vs_analytic_tangent():
    rng = np.random.default_rng(2024)
    with _Timer(5.0) as tm:
        B = sample_spd(rng, 10)
        orders = []
        for i in range(10):
            exact = h_zj_mooney(B[i], PARAMS).matrix
            errs = [np.linalg.norm(h_zj_generic(LAW, B[i], h_fd=h).matrix - exact)
                    for h in (1e-4, 5e-5, 2.5e-5)]
            orders.extend(np.log2(np.array(errs[:-1]) / np.array(errs[1:])))
        orders = np.asarray(orders)
        ok = np.all(np.abs(orders - 2.0) <= 0.3)
    _report(3, "analytic-vs-FD tangent order", ok,
            f"orders in [{orders.min():.2f}, {orders.max():.2f}] (2.0 +/- 0.3)", tm)


def test_criterion_04_inverse_round_trip():
    rng = np.random.default_rng(104)
    with _Timer(10.0) as tm:
        B = sample_spd(rng, 10_000)
        sigma = laws.stress(LAW, B)
        back, iters = laws.inverse_law(sigma, PARAMS, return_iterations=True)
        rel = tensors.frobenius(back - B) / tensors.frobenius(B)
        ok = np.all(rel <= 1e-10) and iters <= 30
    _report(4, "inverse constitutive round trip", ok,
            f"max rel err {np.max(rel):.3e} <= 1e-10, Newton sweeps {iters} <= 30", tm)


def test_criterion_05_rate_consistency():
    with _Timer(5.0) as tm:
        motions = (
            ("simple-shear", kin.simple_shear(1.0), 1.0),
            ("triaxial", kin.triaxial_stretch(2.0), 0.3),
            ("rigid-rotation", kin.rigid_rotation(1.0, pre_strain=np.diag([1.5, 1.0, 0.7])), 0.5),
        )
        details, ok = [], True
        for name, motion, t in motions:
            rows, verdict = rates.consistency_certificate(LAW, motion, t, h0=1e-4, levels=3)
            good = verdict in ("order", "exact")
            ok = ok and good
            details.append(f"{name}={verdict}")
        # rigid rotation keeps D = 0: the production term must vanish
        st = kin.motion_state(motions[2][1], 0.5)
        hd = float(tensors.frobenius(h_zj_mooney(st.B, PARAMS).apply(st.D)))
        ok = ok and hd <= 1e-12
        details.append(f"rigid ||H.D||={hd:.2e} <= 1e-12")
    _report(5, "rate consistency along canonical motions", ok, ", ".join(details), tm)


def test_criterion_06_inequality_battery():
    with _Timer(60.0) as tm:
        rep = run_audit(LAW, seed=42, samples=10_000)
        battery = {r.name: r for r in rep.results}
        strict = ("baker_ericksen", "tension_extension", "pressure_compression",
                  "empirical_inequalities", "tsts_monotonicity", "csp_positive")
        zero_violations = all(battery[n].violations == 0 for n in strict)
        witness = battery["b_monotonicity_counterexample"]
        witness_ok = witness.passed and witness.worst_value < -1e-8
        neo = run_audit(laws.neo_hooke_exp(MaterialParams(1.0, 2.0, kappa=1.0)),
                        seed=42, samples=2_000)
        neo_def = next(r for r in neo.results if r.name == "tangent_definiteness")
        neo_ok = neo_def.worst_value < 0.0
        ok = zero_violations and witness_ok and neo_ok
    _report(6, "inequality battery", ok,
            f"strict checks clean={zero_violations}, witness ip={witness.worst_value:.3e} "
            f"< -1e-8, neo-Hooke min_eig={neo_def.worst_value:.3e} < 0", tm)


def test_criterion_07_weak_form_equivalence():
    rng = np.random.default_rng(107)
    with _Timer(1.0) as tm:
        worst_ratio = 0.0
        for _ in range(1000):
            X = rng.normal(size=(3, 3))
            sigma = 0.5 * (X + X.T)
            L = rng.normal(size=(3, 3))
            Y = rng.normal(size=(3, 3))
            sdot = 0.5 * (Y + Y.T)
            resid = rates.divergence_argument_identity(sigma, L, sdot, variant="all")
            worst_ratio = max(worst_ratio, resid / rates.weak_form_scale(sigma, L, sdot))
        ok = worst_ratio <= 1e-13
    _report(7, "weak-form equivalence", ok,
            f"worst residual/scale = {worst_ratio:.3e} <= 1e-13", tm)


def test_criterion_08_subproblem_solver():
    with _Timer(60.0) as tm:
        # discrete symmetry probe on a strained state
        g6 = StructuredGrid((0, 0, 0), (1, 1, 1), (6, 6, 6))
        f = initial_compatibility(g6, gridmod.sine_bump_map(0.03, g6.origin, g6.extent), LAW)
        op = assemble_operator(g6, f.sigma, PARAMS)
        rng = np.random.default_rng(108)
        u = rng.normal(size=op.n_unknowns)
        w = rng.normal(size=op.n_unknowns)
        au_w, aw_u = np.dot(op.matvec(u), w), np.dot(op.matvec(w), u)
        sym_probe = abs(au_w - aw_u) / max(abs(au_w), abs(aw_u), 1.0)

        # manufactured solution v* = sin sin sin e1 against the continuous load
        mu, lam = PARAMS.mu, PARAMS.lam

        def v_star(x):
            out = np.zeros(x.shape[:-1] + (3,))
            out[..., 0] = np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1]) * np.sin(
                np.pi * x[..., 2])
            return out

        def g_star(x):
            sx, sy, sz = (np.sin(np.pi * x[..., k]) for k in range(3))
            cx, cy, cz = (np.cos(np.pi * x[..., k]) for k in range(3))
            out = np.zeros(x.shape[:-1] + (3,))
            out[..., 0] = (mu * 3 + (mu + lam)) * np.pi**2 * sx * sy * sz
            out[..., 1] = -(mu + lam) * np.pi**2 * cx * cy * sz
            out[..., 2] = -(mu + lam) * np.pi**2 * cx * sy * cz
            return out

        errs, iters_used = [], []
        for n in (8, 16):
            g = StructuredGrid((0, 0, 0), (1, 1, 1), (n, n, n))
            op_n = assemble_operator(g, np.zeros(g.shape + (3, 3)), PARAMS)
            coords = g.nodes().reshape(-1, 3)
            x_qp = np.einsum("qa,eai->eqi", SHAPE_N, coords[op_n.conn])
            r_el = op_n.detJ * np.einsum("eqi,qa->eai", g_star(x_qp), SHAPE_N)
            r = np.zeros((g.n_nodes, 3))
            np.add.at(r, op_n.conn, r_el)
            v, iters = solve_subproblem(op_n, -r, cg_tol=1e-12)
            iters_used.append(iters)
            err2 = np.sum((v.reshape(-1, 3) - v_star(coords)) ** 2) * np.prod(g.spacing)
            errs.append(float(np.sqrt(err2)))
        ratio = errs[0] / errs[1]
        budget_ok = all(i <= 10 * op_n.n_unknowns for i in iters_used)
        ok = sym_probe <= 1e-11 and ratio >= 3.0 and budget_ok
    _report(8, "elliptic subproblem", ok,
            f"symmetry probe {sym_probe:.2e} <= 1e-11, L2 ratio {ratio:.2f} >= 3, "
            f"CG iters {iters_used} within budget", tm)


def test_criterion_09_equilibrium_preservation():
    with _Timer(30.0) as tm:
        g = StructuredGrid((0, 0, 0), (1, 1, 1), (8, 8, 8))
        fields = initial_compatibility(g, gridmod.affine_map(np.diag([1.3, 1.0, 0.8])), LAW)
        cfg = SolverConfig(dt=1e-3, steps=100)
        res = evolve(fields, cfg, PARAMS)
        max_v = max((s.max_v for s in res.steps), default=np.inf)
        ok = res.completed and max_v <= 1e-8
    _report(9, "discrete equilibrium preservation", ok,
            f"max ||v|| over 100 steps = {max_v:.3e} <= 1e-8", tm)


def test_criterion_10_reconstruction():
    with _Timer(5.0) as tm:
        a = 0.8
        seeds = np.array([[1.0, -0.5, 2.0], [0.3, 0.4, -0.2]])
        exact_final = np.exp(a) * seeds
        errs, j_errs = [], []
        for dt in (0.2, 0.1, 0.05):
            traj = kin.reconstruct_deformation(
                lambda p, t: a * p, seeds, T=1.0, dt=dt,
                div_v=lambda p, t: np.full(p.shape[:-1], 3.0 * a),
            )
            errs.append(np.max(np.linalg.norm(traj.points[:, -1] - exact_final, axis=1)))
            j_exact = np.exp(3.0 * a * traj.times)
            j_errs.append(np.max(np.abs(traj.jacobians - j_exact) / j_exact))
            positive = np.all(traj.jacobians > 0.0)
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        order_ok = np.all(np.abs(orders - 4.0) <= 0.5)
        # tr D is spatially constant here, so the Simpson accumulation is
        # exact and the J error sits at rounding level, i.e. within any
        # O(dt^4) envelope
        j_ok = max(j_errs) <= 1e-12
        ok = order_ok and j_ok and positive
    _report(10, "characteristic reconstruction", ok,
            f"RK4 orders {np.round(orders, 2).tolist()} (4.0 +/- 0.5), "
            f"max J rel err {max(j_errs):.2e}, J > 0 throughout", tm)


def test_criterion_11_determinism(tmp_path):
    from rateform.cli import main as cli_main

    cfg_text = (
        "[grid]\nnx = 6\nny = 6\nnz = 6\n"
        "[material]\nlaw = mooney_log\nmu = 1.0\nlambda = 2.0\n"
        "[solver]\ndt = 0.001\nsteps = 5\n"
        "[forcing]\npreset = ramp\namplitude = 0.2 0 0\n"
    )
    cfg = tmp_path / "d.cfg"
    cfg.write_text(cfg_text)
    with _Timer(90.0) as tm:
        pairs = []
        for tag, argv_extra in (("audit", ["audit", "--samples", "600", "--seed", "5"]),
                                ("evolve", ["evolve", "--config", str(cfg)])):
            outs = []
            for threads in ("1", "4"):
                out = tmp_path / f"{tag}_{threads}"
                code = cli_main(argv_extra + ["--out", str(out), "--threads", threads,
                                              "--no-plots"])
                assert code == 0
                outs.append(out)
            csvs = sorted(p.name for p in outs[0].glob("*.csv"))
            same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in csvs)
            pairs.append((tag, csvs, same))
        ok = all(same for _, _, same in pairs)
    _report(11, "byte-identical outputs across threads", ok,
            "; ".join(f"{tag}: {csvs} identical={same}" for tag, csvs, same in pairs), tm)
