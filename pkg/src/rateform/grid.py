"""Uniform hexahedral grid, node-collocated fields and body-force presets."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SingularF
from .laws import IsotropicLaw, stress


@dataclass(frozen=True)
class StructuredGrid:
    """Axis-aligned box sampled by a uniform node lattice, at least 3^3 nodes."""

    origin: tuple
    extent: tuple
    shape: tuple  # node counts (nx, ny, nz)

    def __post_init__(self):
        if len(self.shape) != 3 or any(n < 3 for n in self.shape):
            raise ValueError("grid needs at least 3 nodes per axis")
        if any(e <= 0 for e in self.extent):
            raise ValueError("grid extents must be positive")

    @property
    def spacing(self):
        return np.asarray(self.extent, dtype=float) / (np.asarray(self.shape) - 1)

    @property
    def n_nodes(self):
        return int(np.prod(self.shape))

    def nodes(self):
        axes = [
            np.asarray(self.origin[k], dtype=float)
            + np.linspace(0.0, self.extent[k], self.shape[k])
            for k in range(3)
        ]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        m[0, :, :] = m[-1, :, :] = True
        m[:, 0, :] = m[:, -1, :] = True
        m[:, :, 0] = m[:, :, -1] = True
        return m

    @property
    def bounds(self):
        o = np.asarray(self.origin, dtype=float)
        return o, o + np.asarray(self.extent, dtype=float)


@dataclass(frozen=True)
class BodyForce:
    """Spatial body force with its analytic time derivative and Jacobian."""

    label: str
    f: Callable          # (xi (...,3), t) -> (...,3)
    dfdt: Callable       # same signature
    grad: Callable       # (xi, t) -> (...,3,3), grad[i,j] = d f_i / d xi_j


def _zeros_vec(xi, t):
    return np.zeros(np.shape(xi))


def _zeros_mat(xi, t):
    return np.zeros(np.shape(xi)[:-1] + (3, 3))


def zero_forcing():
    return BodyForce("zero", _zeros_vec, _zeros_vec, _zeros_mat)


def constant_forcing(vec):
    vec = np.asarray(vec, dtype=float)
    return BodyForce(
        "constant",
        lambda xi, t: np.broadcast_to(vec, np.shape(xi)).copy(),
        _zeros_vec,
        _zeros_mat,
    )


def ramp_forcing(vec):
    """f(xi, t) = t * vec: spatially uniform, linear in time."""
    vec = np.asarray(vec, dtype=float)
    return BodyForce(
        "ramp",
        lambda xi, t: t * np.broadcast_to(vec, np.shape(xi)).copy(),
        lambda xi, t: np.broadcast_to(vec, np.shape(xi)).copy(),
        _zeros_mat,
    )


def pulse_forcing(vec, period):
    """f(xi, t) = vec sin^2(pi t / period): a closed loading path over one period."""
    vec = np.asarray(vec, dtype=float)
    w = np.pi / period

    def f(xi, t):
        return np.sin(w * t) ** 2 * np.broadcast_to(vec, np.shape(xi)).copy()

    def dfdt(xi, t):
        return w * np.sin(2.0 * w * t) * np.broadcast_to(vec, np.shape(xi)).copy()

    return BodyForce("pulse", f, dfdt, _zeros_mat)


def sine_forcing(vec, origin, extent):
    """Spatially varying force f_i = vec_i sin(pi (xi_i - o_i)/L_i), static in t."""
    vec = np.asarray(vec, dtype=float)
    o = np.asarray(origin, dtype=float)
    L = np.asarray(extent, dtype=float)

    def f(xi, t):
        return vec * np.sin(np.pi * (np.asarray(xi) - o) / L)

    def grad(xi, t):
        xi = np.asarray(xi)
        g = np.zeros(xi.shape[:-1] + (3, 3))
        c = vec * np.pi / L * np.cos(np.pi * (xi - o) / L)
        for i in range(3):
            g[..., i, i] = c[..., i]
        return g

    return BodyForce("sine", f, _zeros_vec, grad)


@dataclass
class GridFields:
    """Node-collocated stress and velocity with v = 0 on the boundary."""

    grid: StructuredGrid
    sigma: np.ndarray  # (nx, ny, nz, 3, 3)
    v: np.ndarray      # (nx, ny, nz, 3)
    forcing: BodyForce = field(default_factory=zero_forcing)

    def __post_init__(self):
        self.clamp_boundary()

    def clamp_boundary(self):
        self.v[self.grid.boundary_mask()] = 0.0

    def copy(self):
        return GridFields(self.grid, self.sigma.copy(), self.v.copy(), self.forcing)


def trilinear_sampler(grid: StructuredGrid, field):
    """Callback (points, t) -> trilinear interpolation of a nodal field.

    Points are clamped to the box, so it pairs with a bounds check in the
    caller rather than extrapolating. Linear fields are reproduced exactly.
    """
    field = np.asarray(field, dtype=float)
    o = np.asarray(grid.origin, dtype=float)
    h = grid.spacing
    nmax = np.asarray(grid.shape) - 2

    def sample(points, t=0.0):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = (pts - o) / h
        i0 = np.clip(np.floor(u).astype(int), 0, nmax)
        f = u - i0
        out = 0.0
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    w = (
                        (f[:, 0] if di else 1.0 - f[:, 0])
                        * (f[:, 1] if dj else 1.0 - f[:, 1])
                        * (f[:, 2] if dk else 1.0 - f[:, 2])
                    )
                    vals = field[i0[:, 0] + di, i0[:, 1] + dj, i0[:, 2] + dk]
                    out = out + w.reshape(w.shape + (1,) * (vals.ndim - 1)) * vals
        return out.reshape(np.shape(points)[:-1] + field.shape[3:])

    return sample


# --- initial deformation presets -------------------------------------------


def identity_map():
    return lambda x: np.asarray(x, dtype=float)


def affine_map(F0):
    F0 = np.asarray(F0, dtype=float)
    return lambda x: np.einsum("ij,...j->...i", F0, np.asarray(x, dtype=float))


def sine_bump_map(amplitude, origin, extent):
    """x + a sin(2 pi (x - o)/L) applied per axis; a diffeomorphism for small a."""
    o = np.asarray(origin, dtype=float)
    L = np.asarray(extent, dtype=float)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return x + amplitude * np.sin(2.0 * np.pi * (x - o) / L)

    return phi


def deformation_gradient_fd(phi, points, h):
    """Central-difference gradient of a deformation map at the given points."""
    points = np.asarray(points, dtype=float)
    F = np.empty(points.shape[:-1] + (3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        F[..., :, j] = (np.asarray(phi(points + e)) - np.asarray(phi(points - e))) / (2.0 * h)
    return F


def initial_compatibility(grid: StructuredGrid, phi0, law: IsotropicLaw,
                          forcing: BodyForce = None, fd_step=None):
    """Build sigma_0 = sigma(B_0) with B_0 = Dphi0 Dphi0^T sampled at the nodes.

    The gradient of phi0 is finite-differenced at every node; a non-positive
    determinant anywhere raises SingularF. The initial velocity is zero.
    """
    if fd_step is None:
        fd_step = float(np.min(grid.spacing)) / 8.0
    pts = grid.nodes()
    F0 = deformation_gradient_fd(phi0, pts, fd_step)
    det = np.linalg.det(F0)
    if np.any(det <= 0.0):
        bad = np.unravel_index(int(np.argmin(det)), det.shape)
        raise SingularF(f"det Dphi0 = {float(det[bad]):.3e} at node {bad}")
    B0 = np.einsum("...ij,...kj->...ik", F0, F0)
    sigma0 = stress(law, B0)
    v0 = np.zeros(grid.shape + (3,))
    return GridFields(grid, sigma0, v0, forcing if forcing is not None else zero_forcing())
