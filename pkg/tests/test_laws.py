import numpy as np
import pytest
from scipy.optimize import brentq

from rateform import laws, tensors
from rateform.errors import NotPositiveDefinite
from rateform.laws import MaterialParams

from .test_tensors import random_rotation


def sample_spd(rng, n=None, lo=-2.0, hi=2.0):
    single = n is None
    m = 1 if single else n
    Q = random_rotation(rng, n=m)
    a = np.exp(rng.uniform(lo, hi, size=(m, 3)))
    B = np.einsum("nij,nj,nkj->nik", Q, a, Q)
    return B[0] if single else B


class TestMaterialParams:
    def test_valid(self):
        MaterialParams(mu=1.0, lam=-0.5)

    def test_mu_positive(self):
        with pytest.raises(ValueError):
            MaterialParams(mu=-1.0, lam=1.0)

    def test_bulk_combination(self):
        with pytest.raises(ValueError):
            MaterialParams(mu=1.0, lam=-0.7)

    def test_kappa_positive(self):
        with pytest.raises(ValueError):
            MaterialParams(mu=1.0, lam=1.0, kappa=-2.0)


class TestInvariants:
    def test_identity(self):
        inv = laws.invariants(np.eye(3))
        assert (inv.i1, inv.i2, inv.i3) == (3.0, 3.0, 1.0)

    def test_diagonal(self):
        inv = laws.invariants(np.diag([4.0, 1.0, 1.0]))
        assert np.isclose(inv.i1, 6.0)
        assert np.isclose(inv.i2, 9.0)
        assert np.isclose(inv.i3, 4.0)

    def test_symmetric_function_formulas(self):
        # brute force through eigenvalues
        rng = np.random.default_rng(11)
        lam2 = np.exp(rng.uniform(-2, 2, size=(200, 3)))
        B = np.zeros((200, 3, 3))
        for i in range(3):
            B[:, i, i] = lam2[:, i]
        inv = laws.invariants(B)
        assert np.allclose(inv.i1, lam2.sum(axis=1))
        e2 = (
            lam2[:, 0] * lam2[:, 1] + lam2[:, 1] * lam2[:, 2] + lam2[:, 2] * lam2[:, 0]
        )
        assert np.allclose(inv.i2, e2)
        assert np.allclose(inv.i3, lam2.prod(axis=1))


class TestStress:
    def test_mooney_stress_free_reference(self):
        law = laws.mooney_log(MaterialParams(mu=2.0, lam=1.0))
        assert np.allclose(laws.stress(law, np.eye(3)), 0.0)

    def test_mooney_diagonal_value(self):
        # mu/2 (b - 1/b) + lam/2 ln det B on each axis
        law = laws.mooney_log(MaterialParams(mu=2.0, lam=1.0))
        s = laws.stress(law, np.diag([4.0, 1.0, 1.0]))
        expect = np.diag([4.443147180559945, 0.6931471805599453, 0.6931471805599453])
        assert np.allclose(s, expect, atol=1e-12)

    def test_det_normalized_stress_free(self):
        law = laws.det_normalized_example(MaterialParams(mu=1.0, lam=1.0))
        assert np.allclose(laws.stress(law, np.eye(3)), 0.0)

    def test_spd_required(self):
        law = laws.mooney_log(MaterialParams(mu=1.0, lam=1.0))
        with pytest.raises(NotPositiveDefinite):
            laws.stress(law, np.diag([1.0, 1.0, -1.0]))

    def test_mooney_matches_sinh_log_form(self):
        params = MaterialParams(mu=1.3, lam=0.7)
        law = laws.mooney_log(params)
        rng = np.random.default_rng(12)
        B = sample_spd(rng, n=100)
        direct = laws.stress(law, B)
        via_log = laws.stress_from_log(tensors.mat_func(B, "log"), params)
        assert np.allclose(direct, via_log, atol=1e-12)


class TestStressFromLog:
    def test_zero(self):
        assert np.allclose(laws.stress_from_log(np.zeros((3, 3)), MaterialParams(1.0, 1.0)), 0.0)

    def test_diagonal_sinh(self):
        H = np.diag([2.0, 0.0, -2.0])
        s = laws.stress_from_log(H, MaterialParams(mu=1.0, lam=0.0))
        assert np.allclose(s, np.diag([np.sinh(2.0), 0.0, -np.sinh(2.0)]))

    def test_tension_compression_oddness(self):
        rng = np.random.default_rng(13)
        params = MaterialParams(mu=0.9, lam=1.4)
        X = rng.normal(size=(50, 3, 3))
        H = 0.5 * (X + np.swapaxes(X, -2, -1))
        assert np.allclose(
            laws.stress_from_log(-H, params), -laws.stress_from_log(H, params), atol=1e-12
        )

    def test_agrees_with_stress_at_exp(self):
        rng = np.random.default_rng(14)
        params = MaterialParams(mu=1.0, lam=2.0)
        law = laws.mooney_log(params)
        X = rng.uniform(-1.5, 1.5, size=(50, 3, 3))
        H = 0.5 * (X + np.swapaxes(X, -2, -1))
        lhs = laws.stress_from_log(H, params)
        rhs = laws.stress(law, tensors.mat_func(H, "exp"))
        rel = tensors.frobenius(lhs - rhs) / np.maximum(tensors.frobenius(rhs), 1e-12)
        assert np.all(rel <= 1e-10)


class TestPrincipalStresses:
    def test_reference(self):
        law = laws.mooney_log(MaterialParams(mu=1.0, lam=1.0))
        assert np.allclose(laws.principal_stresses(law, (1.0, 1.0, 1.0)), 0.0)

    def test_equitriaxial(self):
        # 0.5 (4 - 0.25) + 3 ln 2 per axis
        law = laws.mooney_log(MaterialParams(mu=1.0, lam=1.0))
        s = laws.principal_stresses(law, (2.0, 2.0, 2.0))
        assert np.allclose(s, 1.875 + 3.0 * np.log(2.0))

    def test_uniaxial_no_volumetric(self):
        law = laws.mooney_log(MaterialParams(mu=1.0, lam=0.0))
        s = laws.principal_stresses(law, (2.0, 1.0, 1.0))
        assert np.allclose(s, [1.875, 0.0, 0.0])

    def test_agrees_with_tensor_eigenvalues(self):
        rng = np.random.default_rng(15)
        law = laws.mooney_log(MaterialParams(mu=2.0, lam=0.5))
        for _ in range(20):
            stretches = np.exp(rng.uniform(-1, 1, size=3))
            s = laws.principal_stresses(law, stretches)
            full = laws.stress(law, np.diag(stretches**2))
            assert np.allclose(np.sort(s), np.sort(np.linalg.eigvalsh(full)), atol=1e-12)


class TestLawSymmetries:
    LAWS = [
        laws.mooney_log(MaterialParams(1.0, 2.0)),
        laws.neo_hooke_exp(MaterialParams(1.0, 2.0, kappa=1.0)),
        laws.neo_hooke_quad(MaterialParams(1.0, 2.0, kappa=1.0)),
        laws.det_normalized_example(MaterialParams(1.0, 2.0)),
        laws.richter_custom(
            MaterialParams(1.0, 2.0),
            beta0=lambda i1, i2, i3: np.log(i3),
            beta1=lambda i1, i2, i3: 0.5 + 0.0 * i1,
            beta_m1=lambda i1, i2, i3: -0.5 + 0.0 * i1,
        ),
    ]

    @pytest.mark.parametrize("law", LAWS, ids=lambda l: l.tag)
    def test_isotropy(self, law):
        rng = np.random.default_rng(16)
        B = sample_spd(rng, n=1000)
        Q = random_rotation(rng, n=1000)
        s = laws.stress(law, B)
        rotated_b = np.einsum("nji,njk,nkl->nil", Q, B, Q)
        lhs = laws.stress(law, rotated_b)
        rhs = np.einsum("nji,njk,nkl->nil", Q, s, Q)
        bound = 1e-11 * np.maximum(tensors.frobenius(s), 1e-8)
        assert np.all(tensors.frobenius(lhs - rhs) <= bound)

    @pytest.mark.parametrize("law", LAWS, ids=lambda l: l.tag)
    def test_coaxiality(self, law):
        rng = np.random.default_rng(17)
        B = sample_spd(rng, n=1000)
        s = laws.stress(law, B)
        comm = np.einsum("nij,njk->nik", s, B) - np.einsum("nij,njk->nik", B, s)
        bound = 1e-11 * np.maximum(tensors.frobenius(s) * tensors.frobenius(B), 1e-8)
        assert np.all(tensors.frobenius(comm) <= bound)

    def test_tension_compression_symmetry(self):
        law = laws.mooney_log(MaterialParams(1.3, 0.8))
        rng = np.random.default_rng(18)
        B = sample_spd(rng, n=500)
        Binv = tensors.mat_func(B, "inv")
        assert np.allclose(laws.stress(law, Binv), -laws.stress(law, B), atol=1e-10)

    def test_richter_reproduces_mooney(self):
        # beta0 = lam/2 ln I3, beta1 = mu/2, beta_m1 = -mu/2
        mu, lam = 1.7, 0.6
        params = MaterialParams(mu, lam)
        custom = laws.richter_custom(
            params,
            beta0=lambda i1, i2, i3: 0.5 * lam * np.log(i3),
            beta1=lambda i1, i2, i3: 0.5 * mu + 0.0 * i1,
            beta_m1=lambda i1, i2, i3: -0.5 * mu + 0.0 * i1,
        )
        reference = laws.mooney_log(params)
        rng = np.random.default_rng(19)
        B = sample_spd(rng, n=200)
        assert np.allclose(laws.stress(custom, B), laws.stress(reference, B), atol=1e-12)

    def test_ray_norm_monotone(self):
        # ||sigma_hat(s H)|| increases along rays in log-strain space
        rng = np.random.default_rng(20)
        params = MaterialParams(1.0, 2.0)
        for _ in range(20):
            X = rng.normal(size=(3, 3))
            H = 0.5 * (X + X.T)
            H /= np.linalg.norm(H)
            s_grid = np.linspace(0.0, 4.0, 41)
            norms = [np.linalg.norm(laws.stress_from_log(s * H, params)) for s in s_grid]
            assert np.all(np.diff(norms) > -1e-12)


class TestInverseLaw:
    def test_zero_stress(self):
        B = laws.inverse_law(np.zeros((3, 3)), MaterialParams(1.0, 1.0))
        assert np.allclose(B, np.eye(3), atol=1e-12)

    def test_diagonal_roundtrip_value(self):
        sigma = np.diag([4.443147180559945, 0.6931471805599453, 0.6931471805599453])
        B = laws.inverse_law(sigma, MaterialParams(mu=2.0, lam=1.0))
        assert np.allclose(B, np.diag([4.0, 1.0, 1.0]), atol=1e-10)

    def test_pure_pressure_scalar_oracle(self):
        # alpha solves 0.5 (a^2 - a^-2) + 3 ln a = 1 for mu = lam = 1
        params = MaterialParams(1.0, 1.0)
        alpha = brentq(lambda a: 0.5 * (a * a - a**-2) + 3.0 * np.log(a) - 1.0, 0.5, 2.0)
        B = laws.inverse_law(np.eye(3), params)
        assert np.allclose(B, alpha**2 * np.eye(3), atol=1e-10)

    def test_bulk_roundtrip(self):
        rng = np.random.default_rng(21)
        params = MaterialParams(mu=1.0, lam=2.0)
        law = laws.mooney_log(params)
        B = sample_spd(rng, n=2000)
        sigma = laws.stress(law, B)
        back, iters = laws.inverse_law(sigma, params, return_iterations=True)
        rel = tensors.frobenius(back - B) / tensors.frobenius(B)
        assert np.all(rel <= 1e-10)
        assert iters <= 30

    def test_negative_lam_roundtrip(self):
        rng = np.random.default_rng(22)
        params = MaterialParams(mu=1.0, lam=-0.5)
        law = laws.mooney_log(params)
        B = sample_spd(rng, n=200)
        sigma = laws.stress(law, B)
        back = laws.inverse_law(sigma, params)
        assert np.all(tensors.frobenius(back - B) / tensors.frobenius(B) <= 1e-10)
