"""Small-tensor algebra: symmetric 3x3 spectral calculus and the Mandel embedding.

All routines accept stacked inputs of shape (..., 3, 3) and operate on the
trailing axes, so a single material point and a whole grid field go through
the same code path.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, NotPositiveDefinite

log = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)

# Cyclic Jacobi budget and scale-aware stopping tolerance.
JACOBI_MAX_SWEEPS = 50
JACOBI_TOL = 1e-14

# Eigenvalues below 1e-12 * max(1, a_max) count as non-positive for log/inv/sqrt.
SPD_GATE = 1e-12

EYE3 = np.eye(3)


def identity(shape=()):
    """Identity tensor broadcast to leading shape."""
    return np.broadcast_to(EYE3, tuple(shape) + (3, 3)).copy()


def trace(A):
    return np.trace(A, axis1=-2, axis2=-1)


def frobenius(A):
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


def inner(A, B):
    """Frobenius inner product <A, B> = tr(A B^T)."""
    return np.sum(A * B, axis=(-2, -1))


def sym_skew_split(X):
    """Split X into (sym X, skew X) with sym + skew = X."""
    s = 0.5 * (X + np.swapaxes(X, -2, -1))
    return s, X - s


def deviator(A):
    """dev_3 A = A - tr(A)/3 * identity."""
    return A - (trace(A) / 3.0)[..., None, None] * EYE3


@dataclass
class Spectral3:
    """Eigen-decomposition S = Q diag(a) Q^T with a sorted descending, det Q = +1."""

    rotation: np.ndarray     # (..., 3, 3)
    eigenvalues: np.ndarray  # (..., 3), descending

    def reconstruct(self):
        q = self.rotation
        return np.einsum("...ij,...j,...kj->...ik", q, self.eigenvalues, q)


def _offdiag_norm(A):
    return np.sqrt(2.0 * (A[..., 0, 1] ** 2 + A[..., 0, 2] ** 2 + A[..., 1, 2] ** 2))


def spectral_decompose(S):
    """Diagonalize a symmetric 3x3 tensor by cyclic Jacobi sweeps.

    Raises NonConvergence if the off-diagonal norm has not dropped below
    1e-14 * ||S|| after 50 sweeps (pathological input).
    """
    S = np.asarray(S, dtype=float)
    A = 0.5 * (S + np.swapaxes(S, -2, -1)).copy()
    lead = A.shape[:-2]
    V = identity(lead)
    tol = JACOBI_TOL * np.maximum(frobenius(A), np.finfo(float).tiny)

    for _ in range(JACOBI_MAX_SWEEPS):
        if np.all(_offdiag_norm(A) <= tol):
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = A[..., p, q]
            # Stable rotation: t = sign(tau) / (|tau| + sqrt(1 + tau^2)),
            # with the 45-degree rotation t = 1 on equal diagonal entries.
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                tau = (A[..., q, q] - A[..., p, p]) / (2.0 * apq)
                t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(tau == 0.0, 1.0, t)
            t = np.where(apq == 0.0, 0.0, t)
            t = np.where(np.isfinite(t), t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            rp = A[..., p, :].copy()
            rq = A[..., q, :].copy()
            A[..., p, :] = c[..., None] * rp - s[..., None] * rq
            A[..., q, :] = s[..., None] * rp + c[..., None] * rq
            cp = A[..., :, p].copy()
            cq = A[..., :, q].copy()
            A[..., :, p] = c[..., None] * cp - s[..., None] * cq
            A[..., :, q] = s[..., None] * cp + c[..., None] * cq

            vp = V[..., :, p].copy()
            vq = V[..., :, q].copy()
            V[..., :, p] = c[..., None] * vp - s[..., None] * vq
            V[..., :, q] = s[..., None] * vp + c[..., None] * vq
    else:
        raise NonConvergence(
            f"Jacobi sweeps exhausted ({JACOBI_MAX_SWEEPS}); worst off-diagonal "
            f"{float(np.max(_offdiag_norm(A))):.3e}"
        )

    eig = np.stack([A[..., 0, 0], A[..., 1, 1], A[..., 2, 2]], axis=-1)
    order = np.argsort(-eig, axis=-1, kind="stable")
    eig = np.take_along_axis(eig, order, axis=-1)
    V = np.take_along_axis(V, order[..., None, :], axis=-1)
    # Flip one column where needed so the rotation is proper.
    neg = np.linalg.det(V) < 0.0
    V[neg, :, 2] *= -1.0
    return Spectral3(rotation=V, eigenvalues=eig)


_MAT_FUNCS = {
    "log": (np.log, True),
    "exp": (np.exp, False),
    "sinh": (np.sinh, False),
    "inv": (lambda a: 1.0 / a, True),
    "sqrt": (np.sqrt, True),
}


def mat_func(S, kind):
    """Primary matrix function Q diag(f(a)) Q^T of a symmetric tensor.

    kind is one of log | exp | sinh | inv | sqrt. The SPD gate applies to
    log, inv and sqrt; exp and sinh accept any symmetric input.
    """
    try:
        f, needs_spd = _MAT_FUNCS[kind]
    except KeyError:
        raise ValueError(f"unknown matrix function {kind!r}") from None
    dec = spectral_decompose(S)
    a = dec.eigenvalues
    if needs_spd:
        gate = SPD_GATE * np.maximum(1.0, a[..., 0])
        if np.any(a[..., -1] <= gate):
            raise NotPositiveDefinite(
                f"eigenvalue {float(np.min(a[..., -1])):.3e} at or below SPD gate "
                f"for matrix {kind}"
            )
    q = dec.rotation
    return np.einsum("...ij,...j,...kj->...ik", q, f(a), q)


def is_spd(S, gate=SPD_GATE):
    """True where all eigenvalues exceed the scale-aware SPD gate."""
    a = spectral_decompose(S).eigenvalues
    return a[..., -1] > gate * np.maximum(1.0, a[..., 0])


# --- Mandel 6-vector / 6x6 convention -------------------------------------
#
# vec(S) = (S11, S22, S33, sqrt(2) S12, sqrt(2) S23, sqrt(2) S31); the sqrt(2)
# factors make the embedding an isometry, so major symmetry of a fourth-order
# map is plain matrix symmetry of its 6x6 representation.

_MANDEL_IJ = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0))


def to_mandel(S):
    S = np.asarray(S, dtype=float)
    out = np.empty(S.shape[:-2] + (6,))
    out[..., 0] = S[..., 0, 0]
    out[..., 1] = S[..., 1, 1]
    out[..., 2] = S[..., 2, 2]
    out[..., 3] = SQRT2 * 0.5 * (S[..., 0, 1] + S[..., 1, 0])
    out[..., 4] = SQRT2 * 0.5 * (S[..., 1, 2] + S[..., 2, 1])
    out[..., 5] = SQRT2 * 0.5 * (S[..., 2, 0] + S[..., 0, 2])
    return out


def from_mandel(v):
    v = np.asarray(v, dtype=float)
    S = np.empty(v.shape[:-1] + (3, 3))
    S[..., 0, 0] = v[..., 0]
    S[..., 1, 1] = v[..., 1]
    S[..., 2, 2] = v[..., 2]
    S[..., 0, 1] = S[..., 1, 0] = v[..., 3] / SQRT2
    S[..., 1, 2] = S[..., 2, 1] = v[..., 4] / SQRT2
    S[..., 2, 0] = S[..., 0, 2] = v[..., 5] / SQRT2
    return S


MANDEL_BASIS = from_mandel(np.eye(6))  # (6, 3, 3)


def apply4(H, D):
    """Apply a fourth-order map stored as a 6x6 Mandel matrix to symmetric D."""
    return from_mandel(np.einsum("...ij,...j->...i", np.asarray(H, dtype=float), to_mandel(D)))


def mandel_rotation(Q):
    """6x6 Mandel representation of S -> Q^T S Q."""
    cols = [to_mandel(np.einsum("...ji,...jk,...kl->...il", Q, E, Q)) for E in MANDEL_BASIS]
    return np.stack(cols, axis=-1)


def min_eig_66(H):
    """Smallest eigenvalue of the symmetrized 6x6 matrix.

    Inputs are expected symmetric to 1e-10; larger defects are symmetrized
    anyway and logged.
    """
    H = np.asarray(H, dtype=float)
    Ht = np.swapaxes(H, -2, -1)
    defect = np.sqrt(np.sum((H - Ht) ** 2, axis=(-2, -1)))
    scale = np.maximum(1.0, np.sqrt(np.sum(H * H, axis=(-2, -1))))
    if np.any(defect > 1e-10 * scale):
        log.warning(
            "min_eig_66 called on a matrix with major-symmetry defect %.3e; symmetrizing",
            float(np.max(defect / scale)),
        )
    return np.linalg.eigvalsh(0.5 * (H + Ht))[..., 0]
