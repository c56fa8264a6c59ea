"""Matrix-free elliptic velocity subproblem on trilinear hexahedral elements.

The operator is the weak form of -Div[H(sigma) . sym grad v] with v = 0 on
the whole boundary; major symmetry of the tangent makes it symmetric and
Korn coercivity makes it positive definite, so preconditioned conjugate
gradient applies. The element loops run over a fixed number of shards with
an ordered reduction, so results are bit-identical for any worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import os

import numpy as np
import scipy.sparse.linalg as spla

from .errors import CgNonConvergence, NewtonDivergence
from .grid import BodyForce, StructuredGrid
from .laws import MaterialParams, inverse_law
from .tangent import c_iso_mandel, h_zj_mooney
from .tensors import from_mandel, to_mandel

# The assembled r is the weak form of Eq-style "Div G + load" appearing on
# the right of the rate-form system; the elliptic solve is K v = -r because
# the operator carries the opposite sign (-Div[H . sym grad v]).
SUBPROBLEM_RHS_SIGN = -1.0

N_SHARDS = 8

_CORNERS = np.array([(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)])
_G = 1.0 / np.sqrt(3.0)
_QP = np.array([(x, y, z) for x in (-_G, _G) for y in (-_G, _G) for z in (-_G, _G)])


def _shape_values():
    # N[q, a], dN[q, a, m] on the [-1, 1]^3 reference cube
    ref = 2.0 * _CORNERS - 1.0
    N = np.empty((8, 8))
    dN = np.empty((8, 8, 3))
    for q, xi in enumerate(_QP):
        for a, s in enumerate(ref):
            terms = 0.5 * (1.0 + s * xi)
            N[q, a] = np.prod(terms)
            for m in range(3):
                grad = 0.5 * s[m]
                for o in range(3):
                    if o != m:
                        grad *= 0.5 * (1.0 + s[o] * xi[o])
                dN[q, a, m] = grad
    return N, dN


SHAPE_N, SHAPE_DN = _shape_values()


def element_connectivity(shape):
    nx, ny, nz = shape
    ii, jj, kk = np.meshgrid(
        np.arange(nx - 1), np.arange(ny - 1), np.arange(nz - 1), indexing="ij"
    )
    base = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=-1)  # (E, 3)
    conn = np.empty((base.shape[0], 8), dtype=np.int64)
    for a, c in enumerate(_CORNERS):
        idx = base + c
        conn[:, a] = np.ravel_multi_index((idx[:, 0], idx[:, 1], idx[:, 2]), shape)
    return conn


def _shards(n_elements):
    edges = np.linspace(0, n_elements, N_SHARDS + 1).astype(int)
    return [(int(edges[s]), int(edges[s + 1])) for s in range(N_SHARDS) if edges[s + 1] > edges[s]]


def _map_ordered(fn, items, threads):
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads == 1 or len(items) == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class SubproblemOperator:
    """Matrix-free SPD operator on interior velocity unknowns."""

    grid: StructuredGrid
    conn: np.ndarray       # (E, 8)
    H_qp: np.ndarray       # (E, 8, 6, 6) tangent at quadrature points
    gradN: np.ndarray      # (8, 8, 3) physical shape gradients
    detJ: float
    interior: np.ndarray   # flat indices of interior nodes
    threads: int = 1

    @property
    def n_unknowns(self):
        return 3 * self.interior.size

    def apply_field(self, v_flat):
        """Apply the operator to a full nodal field (boundary rows included)."""
        out_shards = _map_ordered(
            lambda rng: self._apply_range(v_flat, rng), _shards(self.conn.shape[0]), self.threads
        )
        out = np.zeros_like(v_flat)
        for o in out_shards:
            out += o
        return out

    def _apply_range(self, v_flat, rng):
        lo, hi = rng
        conn = self.conn[lo:hi]
        v_el = v_flat[conn]                                   # (e, 8, 3)
        grad = np.einsum("eai,qaj->eqij", v_el, self.gradN)   # (e, q, 3, 3)
        D = 0.5 * (grad + np.swapaxes(grad, -2, -1))
        t = np.einsum("eqxy,eqy->eqx", self.H_qp[lo:hi], to_mandel(D))
        T = from_mandel(t)
        f_el = self.detJ * np.einsum("eqij,qaj->eai", T, self.gradN)
        out = np.zeros_like(v_flat)
        np.add.at(out, conn, f_el)
        return out

    def matvec(self, x):
        v_flat = np.zeros((self.grid.n_nodes, 3))
        v_flat[self.interior] = x.reshape(-1, 3)
        return self.apply_field(v_flat)[self.interior].ravel()

    def diagonal(self):
        # sym(e_i x gradN_a) in Mandel components, per (q, a, i)
        S = np.zeros((8, 8, 3, 3, 3))
        for i in range(3):
            S[:, :, i, i, :] += 0.5 * self.gradN
            S[:, :, i, :, i] += 0.5 * self.gradN
        SM = to_mandel(S)  # (q, a, i, 6)
        diag_shards = _map_ordered(
            lambda rng: self._diag_range(SM, rng), _shards(self.conn.shape[0]), self.threads
        )
        diag = np.zeros((self.grid.n_nodes, 3))
        for d in diag_shards:
            diag += d
        return diag[self.interior].ravel()

    def _diag_range(self, SM, rng):
        lo, hi = rng
        d_el = self.detJ * np.einsum("qaix,eqxy,qaiy->eai", SM, self.H_qp[lo:hi], SM)
        diag = np.zeros((self.grid.n_nodes, 3))
        np.add.at(diag, self.conn[lo:hi], d_el)
        return diag


def interpolate_to_qp(node_field_flat, conn):
    """Trilinear interpolation of a nodal field to the element Gauss points."""
    gathered = node_field_flat[conn]  # (E, 8, ...)
    return np.einsum("qa,ea...->eq...", SHAPE_N, gathered)


def quadrature_tangents(grid: StructuredGrid, sigma, params: MaterialParams,
                        mode="induced"):
    """Tangent 6x6 blocks at every Gauss point of every element."""
    conn = element_connectivity(grid.shape)
    if mode == "zero_grade":
        H = np.broadcast_to(c_iso_mandel(params), (conn.shape[0], 8, 6, 6)).copy()
        return conn, H
    sigma_flat = sigma.reshape(-1, 3, 3)
    sigma_qp = interpolate_to_qp(sigma_flat, conn)
    try:
        B_qp = inverse_law(sigma_qp.reshape(-1, 3, 3), params)
    except NewtonDivergence as exc:
        raise NewtonDivergence(f"inverse law failed at a quadrature point: {exc}") from exc
    H = h_zj_mooney(B_qp, params).matrix.reshape(conn.shape[0], 8, 6, 6)
    return conn, H


def assemble_operator(grid: StructuredGrid, sigma, params: MaterialParams,
                      mode="induced", threads=1):
    """Build the matrix-free operator for -Div[H(sigma) . sym grad v], v|bd = 0."""
    conn, H_qp = quadrature_tangents(grid, sigma, params, mode)
    h = grid.spacing
    gradN = SHAPE_DN * (2.0 / h)        # physical gradients, uniform rectilinear map
    detJ = float(np.prod(h)) / 8.0
    interior = np.flatnonzero(~grid.boundary_mask().ravel())
    return SubproblemOperator(
        grid=grid, conn=conn, H_qp=H_qp, gradN=gradN, detJ=detJ,
        interior=interior, threads=threads,
    )


def assemble_rhs(grid: StructuredGrid, sigma, v, forcing: BodyForce, t, threads=1):
    """Weak form of Div[sigma (grad v)^T - (div v) sigma + sigma W - W sigma]
    plus (div v) f + (grad f) v + df/dt, integrated against interior test
    functions (the divergence term by parts, so no derivatives of sigma)."""
    conn = element_connectivity(grid.shape)
    h = grid.spacing
    gradN = SHAPE_DN * (2.0 / h)
    detJ = float(np.prod(h)) / 8.0

    sigma_flat = sigma.reshape(-1, 3, 3)
    v_flat = v.reshape(-1, 3)
    coords_flat = grid.nodes().reshape(-1, 3)

    def rhs_range(rng):
        lo, hi = rng
        c = conn[lo:hi]
        s_qp = np.einsum("qa,eaij->eqij", SHAPE_N, sigma_flat[c])
        v_qp = np.einsum("qa,eai->eqi", SHAPE_N, v_flat[c])
        x_qp = np.einsum("qa,eai->eqi", SHAPE_N, coords_flat[c])
        grad_v = np.einsum("eai,qaj->eqij", v_flat[c], gradN)
        W = 0.5 * (grad_v - np.swapaxes(grad_v, -2, -1))
        div_v = np.trace(grad_v, axis1=-2, axis2=-1)

        G = (
            np.einsum("eqij,eqkj->eqik", s_qp, grad_v)
            - div_v[..., None, None] * s_qp
            + s_qp @ W
            - W @ s_qp
        )
        load = (
            div_v[..., None] * forcing.f(x_qp, t)
            + np.einsum("eqij,eqj->eqi", forcing.grad(x_qp, t), v_qp)
            + forcing.dfdt(x_qp, t)
        )
        r_el = detJ * (
            -np.einsum("eqij,qaj->eai", G, gradN)
            + np.einsum("eqi,qa->eai", load, SHAPE_N)
        )
        out = np.zeros((grid.n_nodes, 3))
        np.add.at(out, c, r_el)
        return out

    shards = _map_ordered(rhs_range, _shards(conn.shape[0]), threads)
    r = np.zeros((grid.n_nodes, 3))
    for s in shards:
        r += s
    return r


def solve_subproblem(op: SubproblemOperator, r_full, cg_tol=1e-10, cg_max_factor=10):
    """PCG solve of K v = -r on interior unknowns; returns (v field, iterations)."""
    b = SUBPROBLEM_RHS_SIGN * r_full.reshape(-1, 3)[op.interior].ravel()
    v = np.zeros((op.grid.n_nodes, 3))
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return v.reshape(op.grid.shape + (3,)), 0

    n = op.n_unknowns
    A = spla.LinearOperator((n, n), matvec=op.matvec)
    d = op.diagonal()
    M = spla.LinearOperator((n, n), matvec=lambda x: x / d)
    count = {"iters": 0}

    def cb(_):
        count["iters"] += 1

    x, info = spla.cg(A, b, rtol=cg_tol, atol=0.0, maxiter=cg_max_factor * n, M=M, callback=cb)
    if info != 0:
        resid = np.linalg.norm(b - A.matvec(x)) / bnorm
        raise CgNonConvergence(
            f"CG stopped with info={info}, relative residual {resid:.3e}"
        )
    v[op.interior] = x.reshape(-1, 3)
    return v.reshape(op.grid.shape + (3,)), count["iters"]
