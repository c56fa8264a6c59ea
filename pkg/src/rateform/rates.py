"""Objective-rate evaluation and consistency checks for the rate-form law.

The constitutive rate equation under test is

    D_ZJ[sigma] = sigma_dot + sigma W - W sigma = H(B) . D,

checked along analytic motions with finite-difference material derivatives.
The module also carries the algebraic equivalence of the published weak-form
divergence arguments, which all reduce to sigma_dot + tr(D) sigma - sigma L^T.
"""

from dataclasses import dataclass

import numpy as np

from .kinematics import MotionPath, motion_state
from .laws import IsotropicLaw, stress
from .tangent import FD_STEP_DEFAULT as TANGENT_FD_STEP
from .tangent import h_zj_generic, h_zj_mooney
from .tensors import apply4, frobenius, sym_skew_split, trace

FD_STEP_DEFAULT = 1e-4

WEAK_FORM_VARIANTS = ("ji", "aubram", "korobeynikov")


@dataclass(frozen=True)
class StressRateSample:
    """Stress, its material rate, and the stretching/spin at one instant."""

    sigma: np.ndarray
    sigma_dot: np.ndarray
    D: np.ndarray
    W: np.ndarray
    t: float = 0.0


def zaremba_jaumann(sample: StressRateSample):
    """Corotational rate sigma_dot + sigma W - W sigma (symmetric output)."""
    s, w = sample.sigma, sample.W
    return sample.sigma_dot + s @ w - w @ s


def material_derivative_fd(sigma_of_t, t, h):
    """Central-difference material derivative of a stress path at fixed point."""
    return (np.asarray(sigma_of_t(t + h)) - np.asarray(sigma_of_t(t - h))) / (2.0 * h)


def rate_consistency_residual(law: IsotropicLaw, motion: MotionPath, t, h=FD_STEP_DEFAULT):
    """|| D_ZJ[sigma] - H . D || along a motion, with sigma_dot differenced.

    For the principal law this decays at second order in h.
    """
    st = motion_state(motion, t)
    sigma_dot = material_derivative_fd(lambda s: stress(law, motion_state(motion, s).B), t, h)
    sample = StressRateSample(
        sigma=stress(law, st.B), sigma_dot=sigma_dot, D=st.D, W=st.W, t=t
    )
    if law.has_analytic_tangent:
        H = h_zj_mooney(st.B, law.params)
    else:
        H = h_zj_generic(law, st.B)
    return float(frobenius(zaremba_jaumann(sample) - H.apply(st.D)))


def _canonical_argument(sigma, L, sigma_dot):
    return sigma_dot + trace(L)[..., None, None] * sigma - np.einsum(
        "...ij,...kj->...ik", sigma, L
    )


def _ji_argument(sigma, L, sigma_dot):
    # ZJ rate minus (D sigma + sigma D) plus L sigma plus tr(D) sigma,
    # with L expanded into D + W term by term.
    D, W = sym_skew_split(L)
    return (
        sigma_dot
        + sigma @ W
        - W @ sigma
        - (D @ sigma + sigma @ D)
        + D @ sigma
        + W @ sigma
        + trace(D)[..., None, None] * sigma
    )


def _aubram_argument(sigma, L, sigma_dot):
    # sym(ZJ - 2 D sigma + tr(D) sigma) + L sigma
    D, W = sym_skew_split(L)
    zj = sigma_dot + sigma @ W - W @ sigma
    inner = zj - 2.0 * (D @ sigma) + trace(D)[..., None, None] * sigma
    return 0.5 * (inner + np.swapaxes(inner, -2, -1)) + L @ sigma


def _korobeynikov_argument(sigma, L, sigma_dot):
    # transpose of: ZJ + tr(D) sigma + sigma L^T - (D sigma + sigma D)
    D, W = sym_skew_split(L)
    inner = (
        sigma_dot
        + sigma @ W
        - W @ sigma
        + trace(D)[..., None, None] * sigma
        + np.einsum("...ij,...kj->...ik", sigma, L)
        - (D @ sigma + sigma @ D)
    )
    return np.swapaxes(inner, -2, -1)


_VARIANT_FUNCS = {
    "ji": _ji_argument,
    "aubram": _aubram_argument,
    "korobeynikov": _korobeynikov_argument,
}


def divergence_argument_identity(sigma, L, sigma_dot, variant="all"):
    """Residual of a published weak-form divergence argument against the
    canonical sigma_dot + tr(D) sigma - sigma L^T. Pure algebra: the result
    is rounding noise, bounded by ~1e-13 times the term scale."""
    sigma = np.asarray(sigma, dtype=float)
    L = np.asarray(L, dtype=float)
    sigma_dot = np.asarray(sigma_dot, dtype=float)
    names = WEAK_FORM_VARIANTS if variant == "all" else (variant,)
    ref = _canonical_argument(sigma, L, sigma_dot)
    worst = 0.0
    for name in names:
        worst = max(worst, float(np.max(frobenius(_VARIANT_FUNCS[name](sigma, L, sigma_dot) - ref))))
    return worst


def weak_form_scale(sigma, L, sigma_dot):
    """Magnitude of the terms entering the divergence-argument identity."""
    return float(
        np.max(frobenius(sigma_dot) + frobenius(sigma) * (1.0 + frobenius(L)))
    )


def consistency_order(law, motion, t, h0=FD_STEP_DEFAULT, levels=3):
    """Residuals and observed orders under step halving, as (h, residual) rows."""
    hs = [h0 / 2**k for k in range(levels)]
    res = [rate_consistency_residual(law, motion, t, h) for h in hs]
    rows = []
    for k, (h, r) in enumerate(zip(hs, res)):
        order = np.log2(res[k - 1] / r) if k > 0 and r > 0 else np.nan
        rows.append((h, r, order))
    return rows


# Safety factors on the floor model: a residual counts as "at the floor"
# below AT_FLOOR_SAFETY times the noise estimate, and an order pair is only
# measured when both residuals clear MEASURABLE_SAFETY times it.
AT_FLOOR_SAFETY = 25.0
MEASURABLE_SAFETY = 10.0


def rounding_floor(law, motion, t, h):
    """Estimated rounding noise of the differenced residual at step h."""
    st = motion_state(motion, t)
    sigma = stress(law, st.B)
    scale = float(frobenius(sigma)) + float(frobenius(st.D)) * float(frobenius(st.B)) + 1.0
    return 2.0 * np.finfo(float).eps * scale / h


def tangent_floor(law, motion, t):
    """Estimated error of the FD tangent itself, which caps how far the
    residual can drop for laws without an analytic tangent."""
    if law.has_analytic_tangent:
        return 0.0
    st = motion_state(motion, t)
    h_fd = TANGENT_FD_STEP * max(1.0, float(frobenius(st.B)))
    coarse = h_zj_generic(law, st.B, h_fd=h_fd)
    fine = h_zj_generic(law, st.B, h_fd=0.5 * h_fd)
    diff = apply4(coarse.matrix - fine.matrix, st.D)
    # second-order steps: err(h) ~ (4/3) |H_h - H_{h/2}|, doubled for safety
    return 8.0 / 3.0 * float(frobenius(diff))


def consistency_certificate(law, motion, t, h0=None, levels=3):
    """Classify the consistency residual as measured FD order 2 or at a floor.

    Stress paths that are polynomial in t of degree <= 2 (simple shear with a
    linear profile under the principal law, where det B = 1 kills the
    volumetric term) make the central difference exact, so the residual sits
    at the rounding floor for every h and no order is measurable; that case
    certifies "exact". Laws without an analytic tangent carry the FD-tangent
    error as an additional floor; residuals pinned there certify
    "tangent_floor". Otherwise the order is measured from step-halving pairs
    that sit clearly above the floor, giving "order" within 2.0 +/- 0.3 or
    "inconclusive".
    """
    if h0 is None:
        h0 = FD_STEP_DEFAULT if law.has_analytic_tangent else 3e-2
    rows = consistency_order(law, motion, t, h0=h0, levels=levels)
    t_floor = tangent_floor(law, motion, t)
    noise = [rounding_floor(law, motion, t, h) for h, _, _ in rows]
    measurable = [
        r > max(MEASURABLE_SAFETY * nf, 3.0 * t_floor)
        for (_, r, _), nf in zip(rows, noise)
    ]
    at_floor = all(
        r <= AT_FLOOR_SAFETY * nf + t_floor for (_, r, _), nf in zip(rows, noise)
    )

    orders = [
        rows[k][2]
        for k in range(1, len(rows))
        if measurable[k - 1] and measurable[k]
    ]
    if orders:
        verdict = "order" if np.all(np.abs(np.asarray(orders) - 2.0) <= 0.3) else "inconclusive"
        return rows, verdict
    if at_floor or (not any(measurable) and not law.has_analytic_tangent):
        return rows, "exact" if law.has_analytic_tangent else "tangent_floor"
    return rows, "inconclusive"
