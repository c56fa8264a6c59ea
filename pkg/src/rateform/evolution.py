"""Staggered stress-velocity time stepping for the rate-form system.

Each step solves the elliptic subproblem for the new velocity (lagged Picard
sweeps, since the right-hand side contains v itself), then advances the
stress with explicit Euler: first-order upwind advection, the spin terms,
and the tangent-times-stretching production term.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CflViolation, RateFormError
from .grid import GridFields, StructuredGrid
from .laws import MaterialParams, inverse_law
from .subproblem import assemble_operator, assemble_rhs, solve_subproblem
from .tangent import c_iso_mandel, h_zj_mooney
from .tensors import apply4


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the staggered scheme; all positive, CFL factor <= 1."""

    dt: float = 1e-3
    steps: int = 100
    cfl: float = 0.5
    picard_sweeps: int = 2
    cg_tol: float = 1e-10
    cg_max_factor: int = 10
    mode: str = "induced"  # induced | zero_grade
    snapshot_every: int = 0

    def __post_init__(self):
        if min(self.dt, self.cfl, self.cg_tol) <= 0 or self.steps < 1:
            raise ValueError("solver config values must be positive")
        if self.cfl > 1.0:
            raise ValueError("CFL factor must be <= 1")
        if self.picard_sweeps < 1 or self.cg_max_factor < 1:
            raise ValueError("picard_sweeps and cg_max_factor must be >= 1")
        if self.mode not in ("induced", "zero_grade"):
            raise ValueError(f"unknown solver mode {self.mode!r}")


def velocity_gradient_field(grid: StructuredGrid, v):
    """L[..., i, j] = d v_i / d xi_j; second-order central differences inside,
    second-order one-sided at the faces."""
    h = grid.spacing
    L = np.empty(grid.shape + (3, 3))
    for i in range(3):
        for j in range(3):
            L[..., i, j] = np.gradient(v[..., i], h[j], axis=j, edge_order=2)
    return L


def upwind_advection(grid: StructuredGrid, sigma, v):
    """Component-wise first-order upwind evaluation of (grad sigma) . v.

    Boundary nodes carry v = 0, so the wrapped neighbor from np.roll is
    multiplied by zero and never enters; interior stencils only ever read
    existing nodes.
    """
    h = grid.spacing
    adv = np.zeros_like(sigma)
    for k in range(3):
        vk = v[..., k][..., None, None]
        fwd = (np.roll(sigma, -1, axis=k) - sigma) / h[k]
        bwd = (sigma - np.roll(sigma, 1, axis=k)) / h[k]
        adv += vk * np.where(vk > 0.0, bwd, fwd)
    return adv


def cfl_limit(grid: StructuredGrid, v):
    vmax = np.max(np.abs(v), axis=tuple(range(v.ndim - 1)))
    with np.errstate(divide="ignore"):
        limits = grid.spacing / vmax
    return float(np.min(limits))


def node_tangents(sigma, params: MaterialParams, mode="induced"):
    """Mandel tangent blocks at every node, (..., 6, 6)."""
    if mode == "zero_grade":
        return np.broadcast_to(c_iso_mandel(params), sigma.shape[:-2] + (6, 6)).copy()
    B = inverse_law(sigma.reshape(-1, 3, 3), params).reshape(sigma.shape)
    return h_zj_mooney(B, params).matrix


def step_stress(grid: StructuredGrid, sigma, v, dt, params: MaterialParams,
                cfl=0.5, mode="induced", tangents=None):
    """Explicit Euler update of the stress transport-production balance:

        d sigma/dt = -(grad sigma).v - sigma W + W sigma + H(sigma).D
    """
    if not np.allclose(v[grid.boundary_mask()], 0.0):
        raise ValueError("boundary velocity must vanish before advecting stress")
    limit = cfl * cfl_limit(grid, v)
    if dt > limit:
        raise CflViolation(f"dt = {dt:.3e} exceeds CFL limit {limit:.3e}")

    L = velocity_gradient_field(grid, v)
    D = 0.5 * (L + np.swapaxes(L, -2, -1))
    W = L - D
    if tangents is None:
        tangents = node_tangents(sigma, params, mode)
    production = apply4(tangents, D)
    rate = -upwind_advection(grid, sigma, v) - sigma @ W + W @ sigma + production
    return sigma + dt * rate


def divergence_residual(grid: StructuredGrid, sigma, forcing, t):
    """max-norm of Div sigma - f over the nodes (row-wise divergence)."""
    h = grid.spacing
    div = np.zeros(grid.shape + (3,))
    for j in range(3):
        div += np.gradient(sigma[..., :, j], h[j], axis=j, edge_order=2)
    return float(np.max(np.abs(div - forcing.f(grid.nodes(), t))))


@dataclass
class EvolveStep:
    t: float
    max_v: float
    cg_iters: int
    min_tangent_eig: float
    equilibrium_residual: float


@dataclass
class EvolveResult:
    steps: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, sigma, v)
    error: str = ""
    initial_equilibrium_residual: float = float("nan")

    @property
    def completed(self):
        return self.error == ""


def evolve(fields: GridFields, config: SolverConfig, params: MaterialParams,
           threads=1):
    """March the staggered scheme for config.steps; on failure the partial
    series is returned with the error recorded."""
    grid = fields.grid
    sigma = fields.sigma.copy()
    v = fields.v.copy()
    result = EvolveResult()
    result.initial_equilibrium_residual = divergence_residual(grid, sigma, fields.forcing, 0.0)

    for n in range(config.steps):
        t = n * config.dt
        try:
            op = assemble_operator(grid, sigma, params, mode=config.mode, threads=threads)
            cg_total = 0
            v_new = v
            for _ in range(config.picard_sweeps):
                r = assemble_rhs(grid, sigma, v_new, fields.forcing, t, threads=threads)
                v_new, iters = solve_subproblem(
                    op, r, cg_tol=config.cg_tol, cg_max_factor=config.cg_max_factor
                )
                cg_total += iters

            tangents = node_tangents(sigma, params, config.mode)
            sigma = step_stress(
                grid, sigma, v_new, config.dt, params,
                cfl=config.cfl, mode=config.mode, tangents=tangents,
            )
            v = v_new
        except RateFormError as exc:
            result.error = f"step {n}: {exc}"
            break

        t_next = t + config.dt
        min_eig = float(np.min(np.linalg.eigvalsh(tangents)[..., 0]))
        result.steps.append(
            EvolveStep(
                t=t_next,
                max_v=float(np.max(np.linalg.norm(v.reshape(-1, 3), axis=1))),
                cg_iters=cg_total,
                min_tangent_eig=min_eig,
                equilibrium_residual=divergence_residual(grid, sigma, fields.forcing, t_next),
            )
        )
        if config.snapshot_every and (n + 1) % config.snapshot_every == 0:
            result.snapshots.append((t_next, sigma.copy(), v.copy()))

    fields.sigma = sigma
    fields.v = v
    fields.clamp_boundary()
    return result
