"""Zaremba-Jaumann tangent stiffness tensors in Mandel 6x6 form.

For the principal law the tangent is available in closed form,

    H(B).D = mu/2 {B D + D B + B^-1 D + D B^-1} + lam tr(D) * 1,

and generic laws get the induced construction H(B).D = D_B sigma(B).[B D + D B]
by central Frechet differencing.
"""

from dataclasses import dataclass

import numpy as np

from . import tensors
from .errors import NearSingular, NotPositiveDefinite
from .laws import IsotropicLaw, MaterialParams, inverse_law, stress
from .tensors import MANDEL_BASIS, EYE3, to_mandel

FD_STEP_DEFAULT = 1e-5
CONDITION_LIMIT = 1e12

def definiteness_floor(params: MaterialParams):
    """Uniform lower bound on the tangent spectrum of the principal law.

    The quadratic form satisfies <H.D, D> >= 2 mu ||D||^2 + lam tr(D)^2 and
    tr(D)^2 <= 3 ||D||^2, giving the floor 2 mu + 3 min(lam, 0).
    """
    return 2.0 * params.mu + 3.0 * min(params.lam, 0.0)


@dataclass(frozen=True)
class TangentStiffness:
    """6x6 Mandel matrix of a minor-symmetric tangent, with its source B."""

    matrix: np.ndarray  # (..., 6, 6)
    source: str         # "analytic" | "fd_generic" | "zero_grade"
    b: np.ndarray       # (..., 3, 3) evaluation point

    def apply(self, D):
        return tensors.apply4(self.matrix, D)


@dataclass(frozen=True)
class ComplianceTensor:
    matrix: np.ndarray


@dataclass(frozen=True)
class SymmetryReport:
    minor: bool
    major_defect: float
    min_eig: float


def c_iso_mandel(params: MaterialParams):
    """Mandel matrix of the isotropic elasticity tensor 2 mu D + lam tr(D) 1."""
    H = np.zeros((6, 6))
    H[:3, :3] = params.lam
    H[np.arange(6), np.arange(6)] += 2.0 * params.mu
    return H


def _mandel_of_symmetric_product(B, Binv, mu, lam):
    """Columns H e_k = vec(mu/2 (B E_k + E_k B + Binv E_k + E_k Binv) + lam tr(E_k) 1)."""
    lead = B.shape[:-2]
    H = np.empty(lead + (6, 6))
    A = B + Binv
    for k, E in enumerate(MANDEL_BASIS):
        T = 0.5 * mu * (np.einsum("...ij,jk->...ik", A, E) + np.einsum("ij,...jk->...ik", E, A))
        if k < 3:  # tr(E_k) = 1 on the diagonal basis tensors
            T = T + lam * EYE3
        H[..., :, k] = to_mandel(T)
    return H


def h_zj_mooney(B, params: MaterialParams):
    """Analytic tangent of the principal law at SPD B."""
    B = np.asarray(B, dtype=float)
    Binv = tensors.mat_func(B, "inv")
    H = _mandel_of_symmetric_product(B, Binv, params.mu, params.lam)
    return TangentStiffness(matrix=H, source="analytic", b=B)


def h_zj_of_sigma(sigma, params: MaterialParams):
    """Tangent as a function of stress, through the smooth inverse B = F^-1(sigma)."""
    return h_zj_mooney(inverse_law(sigma, params), params)


def h_zj_generic(law: IsotropicLaw, B, h_fd=None):
    """Induced tangent by central differencing of sigma along B E_k + E_k B.

    Retries once with h_fd/10 if a perturbed argument leaves the SPD cone.
    """
    B = np.asarray(B, dtype=float)
    if h_fd is None:
        h_fd = FD_STEP_DEFAULT * max(1.0, float(np.max(tensors.frobenius(B))))
    for h in (h_fd, 0.1 * h_fd):
        try:
            return _h_zj_fd(law, B, h)
        except NotPositiveDefinite:
            last = h
            continue
    raise NotPositiveDefinite(
        f"FD tangent leaves the SPD cone even at step {last:.3e}; reduce h_fd"
    )


def _h_zj_fd(law, B, h):
    lead = B.shape[:-2]
    H = np.empty(lead + (6, 6))
    for k, E in enumerate(MANDEL_BASIS):
        P = np.einsum("...ij,jk->...ik", B, E) + np.einsum("ij,...jk->...ik", E, B)
        col = (stress(law, B + h * P) - stress(law, B - h * P)) / (2.0 * h)
        H[..., :, k] = to_mandel(col)
    return TangentStiffness(matrix=H, source="fd_generic", b=B)


def compliance(H: TangentStiffness):
    """6x6 inverse of the tangent; errors out above condition 1e12."""
    M = np.asarray(H.matrix, dtype=float)
    cond = np.linalg.cond(M)
    if not np.all(np.isfinite(cond)) or np.any(cond > CONDITION_LIMIT):
        raise NearSingular(f"tangent condition estimate {float(np.max(cond)):.3e}")
    return ComplianceTensor(matrix=np.linalg.inv(M))


def symmetry_report(H: TangentStiffness):
    """Major-symmetry defect and smallest eigenvalue of the symmetrized matrix.

    Minor symmetry is structural in Mandel storage, so it is reported as a
    constant True.
    """
    M = np.asarray(H.matrix, dtype=float)
    defect = np.linalg.norm(M - np.swapaxes(M, -2, -1), axis=(-2, -1))
    scale = np.maximum(1.0, np.linalg.norm(M, axis=(-2, -1)))
    me = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -2, -1)))[..., 0]
    return SymmetryReport(
        minor=True, major_defect=float(np.max(defect / scale)), min_eig=float(np.min(me))
    )
