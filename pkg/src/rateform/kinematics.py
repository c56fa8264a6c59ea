"""Deformation-gradient bookkeeping, Piola transforms and characteristic
reconstruction of the motion from a velocity field."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import LeftDomain, NonFiniteVelocity, SingularF
from .tensors import frobenius, sym_skew_split, trace

DET_F_FLOOR = 1e-14  # relative to ||F||^3


def _check_det(F):
    J = np.linalg.det(F)
    if np.any(np.abs(J) <= DET_F_FLOOR * frobenius(F) ** 3):
        raise SingularF(f"det F = {float(np.min(np.abs(J))):.3e} below scale-aware floor")
    return J


def cofactor(F):
    """Cof F = det(F) F^-T."""
    J = _check_det(F)
    return J[..., None, None] * np.swapaxes(np.linalg.inv(F), -2, -1)


def velocity_gradient(F, Fdot):
    """Spatial velocity gradient L = Fdot F^-1."""
    F = np.asarray(F, dtype=float)
    _check_det(F)
    return np.einsum("...ij,...jk->...ik", np.asarray(Fdot, dtype=float), np.linalg.inv(F))


def finger(F):
    """Left Cauchy-Green tensor B = F F^T."""
    F = np.asarray(F, dtype=float)
    _check_det(F)
    return np.einsum("...ij,...kj->...ik", F, F)


def first_piola(sigma, F):
    """First Piola-Kirchhoff stress S1 = sigma Cof F."""
    return np.einsum("...ij,...jk->...ik", np.asarray(sigma, dtype=float), cofactor(F))


def referential_body_force(f, F):
    """Pull a spatial body force back to the reference: f_ref = det F * f."""
    J = _check_det(np.asarray(F, dtype=float))
    return J[..., None] * np.asarray(f, dtype=float)


@dataclass(frozen=True)
class MotionPath:
    """Analytic homogeneous motion t -> F(t) with det F > 0 and its rate."""

    label: str
    F: Callable[[float], np.ndarray]
    Fdot: Callable[[float], np.ndarray]


@dataclass(frozen=True)
class DeformationState:
    """Kinematic bundle at one material point and time."""

    F: np.ndarray
    B: np.ndarray
    J: float
    L: np.ndarray
    D: np.ndarray
    W: np.ndarray


def motion_state(motion: MotionPath, t) -> DeformationState:
    F = np.asarray(motion.F(t), dtype=float)
    J = float(_check_det(F))
    L = velocity_gradient(F, motion.Fdot(t))
    D, W = sym_skew_split(L)
    return DeformationState(F=F, B=finger(F), J=J, L=L, D=D, W=W)


def simple_shear(rate=1.0):
    E12 = np.zeros((3, 3))
    E12[0, 1] = 1.0
    return MotionPath(
        label="simple-shear",
        F=lambda t: np.eye(3) + rate * t * E12,
        Fdot=lambda t: rate * E12,
    )


def triaxial_stretch(rate=1.0):
    def F(t):
        return np.diag([np.exp(rate * t), 1.0, np.exp(-rate * t)])

    def Fdot(t):
        return np.diag([rate * np.exp(rate * t), 0.0, -rate * np.exp(-rate * t)])

    return MotionPath(label="triaxial", F=F, Fdot=Fdot)


def dilation(rate=1.0):
    return MotionPath(
        label="dilation",
        F=lambda t: np.exp(rate * t) * np.eye(3),
        Fdot=lambda t: rate * np.exp(rate * t) * np.eye(3),
    )


def spin_matrix(axis):
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    return np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


def rigid_rotation(rate=1.0, axis=(0.0, 0.0, 1.0), pre_strain=None):
    """Rotation about a fixed axis, optionally composed with a constant pre-strain."""
    K = spin_matrix(axis)
    F0 = np.eye(3) if pre_strain is None else np.asarray(pre_strain, dtype=float)

    def Q(t):
        th = rate * t
        return np.eye(3) + np.sin(th) * K + (1.0 - np.cos(th)) * (K @ K)

    return MotionPath(
        label="rigid-rotation",
        F=lambda t: Q(t) @ F0,
        Fdot=lambda t: rate * K @ Q(t) @ F0,
    )


def compose(first: MotionPath, second: MotionPath):
    return MotionPath(
        label="composite",
        F=lambda t: first.F(t) @ second.F(t),
        Fdot=lambda t: first.Fdot(t) @ second.F(t) + first.F(t) @ second.Fdot(t),
    )


def first_piola_rate(state: DeformationState, sigma, sigma_dot_material):
    """Rate of S1: (tr(D) sigma + Dsigma/Dt - sigma L^T) Cof F.

    Serves as the oracle side of the Piola-rate identity in tests.
    """
    sigma = np.asarray(sigma, dtype=float)
    inner = (
        trace(state.D) * sigma
        + np.asarray(sigma_dot_material, dtype=float)
        - sigma @ state.L.T
    )
    return inner @ cofactor(state.F)


def piola_identity_residual(S_field, phi, h, x0=(0.0, 0.0, 0.0)):
    """Finite-difference residual of Div_x(S Cof F) - det F Div_xi S at x0.

    S_field maps spatial points xi to 3x3 tensors; phi is the sampled
    diffeomorphism. Central differences with step h on both sides, so the
    residual of the exact identity decays at second order.
    """
    x0 = np.asarray(x0, dtype=float)

    def grad_phi(x):
        F = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            F[:, j] = (np.asarray(phi(x + e)) - np.asarray(phi(x - e))) / (2.0 * h)
        return F

    def referential_stress(x):
        return np.asarray(S_field(np.asarray(phi(x)))) @ cofactor(grad_phi(x))

    div_x = np.zeros(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        div_x += (referential_stress(x0 + e)[:, j] - referential_stress(x0 - e)[:, j]) / (2.0 * h)

    xi0 = np.asarray(phi(x0))
    div_xi = np.zeros(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        div_xi += (np.asarray(S_field(xi0 + e))[:, j] - np.asarray(S_field(xi0 - e))[:, j]) / (
            2.0 * h
        )

    F0 = grad_phi(x0)
    return float(np.linalg.norm(div_x - np.linalg.det(F0) * div_xi))


def simpson_integral(g, t, n=64):
    """Composite Simpson quadrature of a callable on [0, t] with n even intervals."""
    if n % 2:
        n += 1
    s = np.linspace(0.0, t, n + 1)
    vals = np.asarray([g(si) for si in s], dtype=float)
    h = t / n
    return h / 3.0 * (vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum())


def jacobian_evolution(tr_d, t, j0=1.0, n=64):
    """J(t) = J(0) exp(integral of tr D), always positive for J(0) > 0."""
    if not j0 > 0.0:
        raise ValueError("initial Jacobian must be positive")
    return j0 * np.exp(simpson_integral(tr_d, t, n=n))


@dataclass
class Trajectory:
    """Characteristic trajectories of seed points with per-step Jacobians."""

    times: np.ndarray      # (m,)
    points: np.ndarray     # (n_seeds, m, 3)
    jacobians: np.ndarray  # (n_seeds, m)

    def rows(self):
        """Iterate CSV rows (t, x0_id, xi1, xi2, xi3, J)."""
        for k, t in enumerate(self.times):
            for i in range(self.points.shape[0]):
                p = self.points[i, k]
                yield (t, i, p[0], p[1], p[2], self.jacobians[i, k])


def _divergence(v, x, t, h):
    d = np.zeros(x.shape[:-1])
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        d += (np.asarray(v(x + e, t))[..., k] - np.asarray(v(x - e, t))[..., k]) / (2.0 * h)
    return d


def reconstruct_deformation(
    v,
    seeds,
    T,
    dt,
    j0=1.0,
    bounds: Optional[tuple] = None,
    div_v: Optional[Callable] = None,
    h_fd=1e-4,
):
    """Integrate the characteristic system d(phi)/dt = v(phi, t) with classic RK4.

    The per-point Jacobian rides along as J(t) = J(0) exp(int tr D), with
    tr D = div v sampled analytically when div_v is given, otherwise by
    central differences with step h_fd. The per-step quadrature is Simpson
    with a cubic-Hermite midpoint, matching the RK4 order.
    Raises LeftDomain if a trajectory exits the bounding box (lo, hi), and
    NonFiniteVelocity on NaN/Inf velocities.
    """
    x = np.atleast_2d(np.asarray(seeds, dtype=float)).copy()
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps
    trd = div_v if div_v is not None else (lambda p, t: _divergence(v, p, t, h_fd))

    def vel(p, t):
        out = np.asarray(v(p, t), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteVelocity(f"velocity not finite at t = {t:.6g}")
        return out

    def check_bounds(p, t):
        if bounds is None:
            return
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
        if np.any(p < lo) or np.any(p > hi):
            raise LeftDomain(f"trajectory left the domain box at t = {t:.6g}")

    m = x.shape[0]
    times = np.empty(n_steps + 1)
    points = np.empty((m, n_steps + 1, 3))
    jac = np.empty((m, n_steps + 1))
    times[0] = 0.0
    points[:, 0] = x
    jac[:, 0] = j0

    g_left = trd(x, 0.0)
    for k in range(n_steps):
        t = k * dt
        k1 = vel(x, t)
        k2 = vel(x + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = vel(x + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = vel(x + dt * k3, t + dt)
        x_new = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        check_bounds(x_new, t + dt)

        # Cubic-Hermite midpoint keeps the Simpson rule at RK4 order.
        f_new = vel(x_new, t + dt)
        x_mid = 0.5 * (x + x_new) + dt / 8.0 * (k1 - f_new)
        g_mid = trd(x_mid, t + 0.5 * dt)
        g_right = trd(x_new, t + dt)
        jac[:, k + 1] = jac[:, k] * np.exp(dt / 6.0 * (g_left + 4.0 * g_mid + g_right))

        x = x_new
        g_left = g_right
        times[k + 1] = t + dt
        points[:, k + 1] = x

    return Trajectory(times=times, points=points, jacobians=jac)
