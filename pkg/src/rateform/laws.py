"""Isotropic Cauchy stress laws and the smooth inverse of the principal one.

The principal law is

    sigma(B) = mu/2 (B - B^-1) + lam/2 log(det B) * 1
             = mu sinh(log B) + lam/2 tr(log B) * 1,

with the slightly compressible Neo-Hooke variants, a Richter-coefficient
custom law and a deliberately non-self-adjoint example law as contrast cases.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import tensors
from .errors import NewtonDivergence, NoRichterForm, NotPositiveDefinite
from .tensors import EYE3, deviator, spectral_decompose, trace

LAW_TAGS = (
    "mooney_log",
    "neo_hooke_exp",
    "neo_hooke_quad",
    "richter_custom",
    "det_normalized_example",
)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
NEWTON_MAX_HALVINGS = 30
NEWTON_GUESS_CLIP = 8.0


@dataclass(frozen=True)
class MaterialParams:
    """Lame-type moduli; mu > 0 and 3 lam + 2 mu > 0, kappa > 0 when present."""

    mu: float
    lam: float
    kappa: Optional[float] = None

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not 3.0 * self.lam + 2.0 * self.mu > 0.0:
            raise ValueError(f"3*lam + 2*mu must be positive, got lam={self.lam}, mu={self.mu}")
        if self.kappa is not None and not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    def require_kappa(self):
        if self.kappa is None:
            raise ValueError("this law needs the bulk-like modulus kappa")
        return self.kappa


@dataclass(frozen=True)
class Invariants3:
    """Principal invariants I1 = tr B, I2 = tr Cof B, I3 = det B."""

    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray


def invariants(B):
    B = np.asarray(B, dtype=float)
    i1 = trace(B)
    i2 = 0.5 * (i1 * i1 - trace(np.einsum("...ij,...jk->...ik", B, B)))
    i3 = np.linalg.det(B)
    return Invariants3(i1=i1, i2=i2, i3=i3)


def _spd_eigen(B):
    dec = spectral_decompose(B)
    a = dec.eigenvalues
    gate = tensors.SPD_GATE * np.maximum(1.0, a[..., 0])
    if np.any(a[..., -1] <= gate):
        raise NotPositiveDefinite(
            f"stress evaluation needs SPD B; smallest eigenvalue {float(np.min(a[..., -1])):.3e}"
        )
    return dec


def _vol_exp(i3, kappa):
    # kappa/2 * I3^(-1/2) * log(I3) * exp(log(I3)^2 / 4)
    u = np.log(i3)
    return 0.5 * kappa * np.exp(-0.5 * u) * u * np.exp(0.25 * u * u)


@dataclass(frozen=True)
class IsotropicLaw:
    """A constitutive map B -> sigma(B) selected by tag.

    richter_custom takes the three coefficient callbacks beta0, beta1,
    beta_m1, each a function of the invariants (I1, I2, I3).
    """

    tag: str
    params: MaterialParams
    beta0: Optional[Callable] = field(default=None, repr=False)
    beta1: Optional[Callable] = field(default=None, repr=False)
    beta_m1: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.tag not in LAW_TAGS:
            raise ValueError(f"unknown law tag {self.tag!r}; expected one of {LAW_TAGS}")
        if self.tag == "richter_custom" and None in (self.beta0, self.beta1, self.beta_m1):
            raise ValueError("richter_custom needs beta0, beta1 and beta_m1 callbacks")

    @property
    def has_analytic_tangent(self):
        return self.tag == "mooney_log"

    def stress(self, B):
        return stress(self, B)

    def richter_coefficients(self, inv: Invariants3):
        """Richter coefficients (beta0, beta1, beta_m1) at the given invariants."""
        mu, lam = self.params.mu, self.params.lam
        i1, i3 = inv.i1, inv.i3
        if self.tag == "mooney_log":
            return 0.5 * lam * np.log(i3), 0.5 * mu * np.ones_like(i3), -0.5 * mu * np.ones_like(i3)
        if self.tag == "neo_hooke_exp":
            b1 = mu * i3 ** (-5.0 / 6.0)
            return -b1 * i1 / 3.0 + _vol_exp(i3, self.params.require_kappa()), b1, np.zeros_like(i3)
        if self.tag == "neo_hooke_quad":
            b1 = mu * i3 ** (-5.0 / 6.0)
            kappa = self.params.require_kappa()
            return -b1 * i1 / 3.0 + kappa * (np.sqrt(i3) - 1.0), b1, np.zeros_like(i3)
        if self.tag == "det_normalized_example":
            return -np.ones_like(i3), i3 ** (-1.0 / 3.0), np.zeros_like(i3)
        if self.tag == "richter_custom":
            args = (inv.i1, inv.i2, inv.i3)
            return (
                np.asarray(self.beta0(*args), dtype=float),
                np.asarray(self.beta1(*args), dtype=float),
                np.asarray(self.beta_m1(*args), dtype=float),
            )
        raise NoRichterForm(self.tag)


def mooney_log(params):
    return IsotropicLaw("mooney_log", params)


def neo_hooke_exp(params):
    params.require_kappa()
    return IsotropicLaw("neo_hooke_exp", params)


def neo_hooke_quad(params):
    params.require_kappa()
    return IsotropicLaw("neo_hooke_quad", params)


def det_normalized_example(params):
    return IsotropicLaw("det_normalized_example", params)


def richter_custom(params, beta0, beta1, beta_m1):
    return IsotropicLaw("richter_custom", params, beta0=beta0, beta1=beta1, beta_m1=beta_m1)


def stress(law: IsotropicLaw, B):
    """Cauchy stress sigma(B) for an SPD left Cauchy-Green tensor."""
    B = np.asarray(B, dtype=float)
    mu, lam = law.params.mu, law.params.lam
    dec = _spd_eigen(B)
    a, q = dec.eigenvalues, dec.rotation

    if law.tag == "mooney_log":
        logdet = np.sum(np.log(a), axis=-1)
        s = 0.5 * mu * (a - 1.0 / a) + 0.5 * lam * logdet[..., None]
        return np.einsum("...ij,...j,...kj->...ik", q, s, q)

    i3 = np.prod(a, axis=-1)
    if law.tag == "neo_hooke_exp":
        dev_term = mu * i3[..., None, None] ** (-5.0 / 6.0) * deviator(B)
        return dev_term + _vol_exp(i3, law.params.require_kappa())[..., None, None] * EYE3
    if law.tag == "neo_hooke_quad":
        dev_term = mu * i3[..., None, None] ** (-5.0 / 6.0) * deviator(B)
        kappa = law.params.require_kappa()
        return dev_term + (kappa * (np.sqrt(i3) - 1.0))[..., None, None] * EYE3
    if law.tag == "det_normalized_example":
        return i3[..., None, None] ** (-1.0 / 3.0) * B - EYE3
    if law.tag == "richter_custom":
        b0, b1, bm1 = law.richter_coefficients(invariants(B))
        Binv = np.einsum("...ij,...j,...kj->...ik", q, 1.0 / a, q)
        return b0[..., None, None] * EYE3 + b1[..., None, None] * B + bm1[..., None, None] * Binv
    raise AssertionError(law.tag)


def stress_from_log(H, params: MaterialParams):
    """sigma_hat(H) = mu sinh(H) + lam/2 tr(H) * 1 with H playing log B."""
    H = np.asarray(H, dtype=float)
    return params.mu * tensors.mat_func(H, "sinh") + (
        0.5 * params.lam * trace(H)
    )[..., None, None] * EYE3


def principal_stresses(law: IsotropicLaw, stretches):
    """Principal Cauchy stresses for principal stretches (diagonal evaluation)."""
    lam2 = np.asarray(stretches, dtype=float) ** 2
    if np.any(lam2 <= 0.0):
        raise ValueError("stretches must be positive")
    B = np.zeros(lam2.shape[:-1] + (3, 3))
    for i in range(3):
        B[..., i, i] = lam2[..., i]
    s = stress(law, B)
    return np.stack([s[..., 0, 0], s[..., 1, 1], s[..., 2, 2]], axis=-1)


def inverse_law(sigma, params: MaterialParams, return_iterations=False):
    """Invert the principal law: find SPD B with sigma(B) = sigma.

    Coaxiality reduces the problem to three coupled scalars in the eigenbasis
    of sigma; Newton runs in log-eigenvalue coordinates u_i = ln b_i, where
    the residual is the gradient of the strictly convex potential

        mu * sum cosh(u_i) + lam/4 (sum u_i)^2 - <sigma_i, u_i>,

    so damped steps converge globally for mu > 0, 3 lam + 2 mu > 0.
    """
    sigma = np.asarray(sigma, dtype=float)
    mu, lam = params.mu, params.lam
    dec = spectral_decompose(sigma)
    s, q = dec.eigenvalues, dec.rotation

    u = np.clip(s / (mu + lam), -NEWTON_GUESS_CLIP, NEWTON_GUESS_CLIP)
    tol = NEWTON_TOL * np.maximum(1.0, np.linalg.norm(s, axis=-1))

    def residual(u):
        return mu * np.sinh(u) + 0.5 * lam * np.sum(u, axis=-1, keepdims=True) - s

    r = residual(u)
    rnorm = np.linalg.norm(r, axis=-1)
    iters = 0
    while np.any(rnorm > tol):
        if iters >= NEWTON_MAX_ITER:
            raise NewtonDivergence(
                f"inverse law stalled at ||r|| = {float(np.max(rnorm)):.3e} "
                f"after {NEWTON_MAX_ITER} iterations"
            )
        # J = mu diag(cosh u) + lam/2 * ones; solve via Sherman-Morrison.
        d = mu * np.cosh(u)
        y = r / d
        if lam != 0.0:
            denom = 1.0 + 0.5 * lam * np.sum(1.0 / d, axis=-1, keepdims=True)
            y = y - (0.5 * lam * np.sum(y, axis=-1, keepdims=True) / denom) / d
        step = np.ones_like(rnorm)
        for _ in range(NEWTON_MAX_HALVINGS):
            trial = u - step[..., None] * y
            rt = residual(trial)
            rtnorm = np.linalg.norm(rt, axis=-1)
            worse = (rtnorm >= rnorm) & (rnorm > tol)
            if not np.any(worse):
                break
            step = np.where(worse, 0.5 * step, step)
        u = np.where((rnorm > tol)[..., None], trial, u)
        r = residual(u)
        rnorm = np.linalg.norm(r, axis=-1)
        iters += 1

    B = np.einsum("...ij,...j,...kj->...ik", q, np.exp(u), q)
    if return_iterations:
        return B, iters
    return B
