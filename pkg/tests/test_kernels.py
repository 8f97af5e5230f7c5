import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import FAMILY_NAMES, pairwise_matrix, random_model, random_points
from stmix.exceptions import InvalidParameterError
from stmix.kernels import (
    Anisotropy,
    CHBase,
    CovarianceModel,
    GLParams,
    LCHParams,
    LGaussParams,
    LGHParams,
    LMaternParams,
    MaternBase,
    ch_corr,
    evaluate,
    mahalanobis_lag,
    matern_corr,
)
from stmix.oracles import tail_slope

# quadrature of the inverted-beta scale mixture (oracles.oracle_ch_corr at
# epsrel 1e-12), confirmed with mpmath hyperu
CH_3_05_02_1 = 0.4652721932324333
CH_2_15_1_1 = 0.24283279969879334


class TestAnisotropy:
    def test_polar_constructor(self):
        a = Anisotropy.from_polar(2.0, math.pi / 2, 0.0, 1.0, 3.0)
        assert np.allclose(a.lambda_vec, [0.0, 2.0], atol=1e-15)
        assert np.allclose(a.Lambda, np.diag([1.0, 3.0]))
        rot = Anisotropy.from_polar(0.0, 0.0, math.pi / 2, 1.0, 3.0)
        assert np.allclose(rot.Lambda, np.diag([3.0, 1.0]))

    def test_angle_wrap_leaves_kernel_unchanged(self):
        rng = np.random.default_rng(0)
        h, u = rng.normal(size=(50, 2)), rng.normal(size=50)
        a = Anisotropy.from_polar(0.7, 0.4, -0.3, 0.5, 1.2)
        b = Anisotropy.from_polar(0.7, 0.4 + 2 * math.pi, -0.3 - 2 * math.pi, 0.5, 1.2)
        ka = LMaternParams(1.0, 0.8, 0.5, a).log_cov(h, u)
        kb = LMaternParams(1.0, 0.8, 0.5, b).log_cov(h, u)
        assert np.allclose(ka, kb, rtol=1e-12, atol=0)

    @pytest.mark.parametrize(
        "lam,Lam",
        [([0, 0], [[1, 2], [2, 1]]), ([0, 0], [[1, 0.5], [0, 1]]), ([0], [[0.0]]), ([0, 0], [[1, 0], [0, 1.0], [0, 0]])],
    )
    def test_rejects_bad_lambda(self, lam, Lam):
        with pytest.raises(InvalidParameterError):
            Anisotropy(lam, Lam)

    def test_polar_with_vanishing_eigenvalue(self):
        # the assembled matrix fails a Cholesky check; the known factorization is used
        a = Anisotropy.from_polar(0.0, 0.0, 1.3, 1e-20, 0.1)
        np.testing.assert_array_equal(a._eigval, [1e-20, 0.1])
        _, logdet = mahalanobis_lag([0.1, 0.2], 2.0, a)
        assert logdet == pytest.approx(math.log1p(0.4), rel=1e-14)
        m = LGaussParams.from_anisotropy(1.0, 0.5, a)
        assert m.D_v is a.Lambda
        assert m._aniso._eigval.tolist() == [4e-20, 0.4]

    def test_rejects_negative_speed(self):
        with pytest.raises(InvalidParameterError):
            Anisotropy.from_polar(-0.1, 0, 0, 1, 1)


class TestMahalanobisLag:
    def test_zero_time_lag(self):
        a = Anisotropy([0.3, -0.2], [[2.0, 0.3], [0.3, 1.0]])
        h_u, logdet = mahalanobis_lag([3.0, 4.0], 0.0, a)
        assert h_u == 5.0 and logdet == 0.0

    def test_centred_lag(self):
        for d in (1, 2, 3):
            lam = np.linspace(0.2, 0.9, d)
            h_u, logdet = mahalanobis_lag(lam, 1.0, Anisotropy(lam, np.eye(d)))
            assert h_u == 0.0
            assert logdet == pytest.approx(d * math.log(2), rel=1e-14)

    def test_hand_example(self):
        # r = (0.5, 0), (I + Lambda)^{-1} = diag(1/2, 1/5): h_u^2 = 0.125, |I + Lambda| = 10
        h_u, logdet = mahalanobis_lag([1.0, 0.0], 1.0, Anisotropy([0.5, 0.0], np.diag([1.0, 4.0])))
        assert h_u == pytest.approx(math.sqrt(0.125), rel=1e-15)
        assert logdet == pytest.approx(math.log(10.0), rel=1e-15)

    def test_against_direct_solve(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            A = rng.normal(size=(3, 3))
            a = Anisotropy(rng.normal(size=3), A @ A.T + 0.1 * np.eye(3))
            h, u = rng.normal(size=3), rng.normal()
            M = np.eye(3) + u * u * a.Lambda
            r = h - u * a.lambda_vec
            h_u, logdet = mahalanobis_lag(h, u, a)
            assert h_u**2 == pytest.approx(r @ np.linalg.solve(M, r), rel=1e-12)
            assert logdet == pytest.approx(np.linalg.slogdet(M)[1], rel=1e-12)

    def test_broadcasting(self):
        a = Anisotropy([0.1, 0.2], np.eye(2))
        h_u, logdet = mahalanobis_lag(np.zeros((4, 5, 2)), np.ones(5), a)
        assert h_u.shape == logdet.shape == (4, 5)


class TestCorrelations:
    def test_matern_examples(self):
        assert matern_corr(0.0, 0.5, 1.0) == 1.0
        assert matern_corr(1.0, 0.5, 1.0) == pytest.approx(math.exp(-1), rel=1e-13)
        assert matern_corr(2.0, 1.5, 1.0) == pytest.approx(3 * math.exp(-2), rel=1e-13)

    def test_ch_examples(self):
        assert ch_corr(0.0, 1.0, 2.0, 1.0) == 1.0
        assert ch_corr(3.0, 0.5, 0.2, 1.0) == pytest.approx(CH_3_05_02_1, rel=1e-9)
        assert ch_corr(2.0, 1.5, 1.0, 1.0) == pytest.approx(CH_2_15_1_1, rel=1e-9)

    def test_ch_table_path_matches_direct(self):
        h = np.linspace(0, 30, 5000)
        big = ch_corr(h, 0.7, 1.3, 0.9)
        small = np.array([ch_corr(x, 0.7, 1.3, 0.9) for x in h[::97]])
        assert np.allclose(big[::97], small, rtol=1e-9, atol=0)

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.0])
    def test_ch_tail_slope(self, alpha):
        slope = tail_slope(lambda h: ch_corr(h, 0.5, alpha, 1.0), 50, 500)
        assert abs(slope + 2 * alpha) < 0.05 * 2 * alpha

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 5.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
    def test_strictly_decreasing(self, nu, alpha, scale):
        h = np.geomspace(1e-3, 20, 60) * scale
        assert np.all(np.diff(matern_corr(h, nu, scale)) < 0)
        assert np.all(np.diff(ch_corr(h, nu, alpha, scale)) < 0)
        assert np.all(matern_corr(h, nu, scale) <= 1) and np.all(ch_corr(h, nu, alpha, scale) <= 1)


class TestEvaluate:
    def setup_method(self):
        self.aniso = Anisotropy.from_polar(0.4, 0.3, -0.6, 0.7, 0.2)

    def test_zero_lag_and_nugget(self):
        m = CovarianceModel(LMaternParams(1.7, 0.5, 0.4, self.aniso), tau2=0.0)
        assert evaluate(m, [0.0, 0.0], 0.0) == 1.7
        mn = CovarianceModel(LMaternParams(1.7, 0.5, 0.4, self.aniso), tau2=0.2)
        assert evaluate(mn, [0.0, 0.0], 0.0) == pytest.approx(1.7 * 1.2, rel=1e-15)
        # nugget only at the exact zero lag
        assert evaluate(mn, [1e-300, 0.0], 0.0) == evaluate(m, [1e-300, 0.0], 0.0)
        assert evaluate(mn, [0.0, 0.0], 1e-300) == evaluate(m, [0.0, 0.0], 1e-300)

    def test_spatial_margin_is_matern(self):
        m = CovarianceModel(LMaternParams(1.3, 1.1, 0.6, self.aniso))
        h = np.array([[0.3, 0.4], [1.0, -2.0]])
        expected = 1.3 * matern_corr(np.linalg.norm(h, axis=1), 1.1, 0.6)
        assert np.allclose(m(h, np.zeros(2)), expected, rtol=1e-14)

    def test_spatial_margin_is_ch(self):
        m = CovarianceModel(LCHParams(0.9, 0.7, 1.4, 0.5, self.aniso))
        assert m([0.6, 0.8], 0.0) == pytest.approx(0.9 * ch_corr(1.0, 0.7, 1.4, 0.5), rel=1e-14)

    def test_lgh_reduces_to_lmatern_as_beta_vanishes(self):
        rng = np.random.default_rng(2)
        h, u = rng.normal(size=(40, 2)), rng.normal(size=40)
        ref = LMaternParams(1.0, 1.4, 0.5, self.aniso).log_cov(h, u)
        errs = []
        for beta in (1e-1, 1e-2, 1e-3, 1e-4):
            gh = LGHParams(1.0, 1.4, 1 / 0.5, beta, self.aniso).log_cov(h, u)
            errs.append(np.max(np.abs(gh - ref)))
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-6

    def test_gl_with_a_equal_d_is_lmatern(self):
        rng = np.random.default_rng(5)
        for d in (1, 2, 3):
            A = rng.normal(size=(d, d))
            aniso = Anisotropy(rng.normal(size=d), A @ A.T + 0.1 * np.eye(d))
            h, u = rng.normal(size=(30, d)), rng.normal(size=30) * 3
            gl = GLParams(MaternBase(0.8, 0.7), float(d), 1.5, aniso).log_cov(h, u)
            lm = LMaternParams(1.5, 0.8, 0.7, aniso).log_cov(h, u)
            assert np.allclose(gl, lm, rtol=1e-13, atol=1e-15)

    def test_lgauss_zero_velocity_spread(self):
        # D_v -> 0 is a frozen field: K(h, u) -> sigma2 exp(-|h - u mu|^2 / rho^2)
        p = LGaussParams(1.0, 0.8, [0.5, -0.1], 1e-12 * np.eye(2))
        h, u = np.array([0.3, 0.7]), 1.5
        r = h - u * np.array([0.5, -0.1])
        assert np.exp(p.log_cov(h, u)) == pytest.approx(math.exp(-(r @ r) / 0.64), rel=1e-9)

    def test_d1_scalar_lags(self):
        m = CovarianceModel(LMaternParams(1.0, 0.5, 1.0, Anisotropy([0.2], [[0.5]])))
        assert m(np.array([0.0, 1.0]), 0.0) == pytest.approx([1.0, math.exp(-1)], rel=1e-13)

    @pytest.mark.parametrize(
        "factory",
        [
            lambda a: LMaternParams(-1.0, 0.5, 1.0, a),
            lambda a: LMaternParams(1.0, 0.0, 1.0, a),
            lambda a: LCHParams(1.0, 0.5, -1.0, 1.0, a),
            lambda a: LGHParams(1.0, math.nan, 1.0, 1.0, a),
            lambda a: GLParams(MaternBase(0.5, 1.0), 0.0, 1.0, a),
            lambda a: CHBase(0.5, 1.0, 0.0),
            lambda a: LGaussParams(1.0, 1.0, [0, 0], [[1, 3], [3, 1]]),
            lambda a: CovarianceModel(LMaternParams(1.0, 0.5, 1.0, a), tau2=-0.1),
        ],
    )
    def test_invalid_parameters(self, factory):
        with pytest.raises(InvalidParameterError):
            factory(self.aniso)

    def test_records_are_immutable(self):
        p = LMaternParams(1.0, 0.5, 1.0, self.aniso)
        with pytest.raises(AttributeError):
            p.nu = 2.0
        with pytest.raises(ValueError):
            self.aniso.Lambda[0, 0] = 5.0


@pytest.mark.parametrize("name", FAMILY_NAMES)
class TestFamilyProperties:
    def test_full_symmetry_without_drift(self, name):
        rng = np.random.default_rng(hash(name) % 2**32)
        for _ in range(5):
            m = random_model(name, rng, symmetric=True)
            h, u = rng.normal(size=(200, 2)), rng.normal(size=200)
            k = m(h, u)
            assert np.allclose(m(-h, u), k, rtol=1e-12, atol=0)
            assert np.allclose(m(h, -u), k, rtol=1e-12, atol=0)

    def test_zero_lag_is_maximum(self, name):
        rng = np.random.default_rng(7)
        for _ in range(5):
            m = random_model(name, rng)
            h, u = rng.normal(size=(300, 2)) * 2, rng.normal(size=300) * 2
            assert np.all(np.abs(m(h, u)) <= m([0, 0], 0) * (1 + 1e-14))

    def test_positive_definite(self, name):
        rng = np.random.default_rng(11)
        for _ in range(10):
            m = random_model(name, rng)
            K = pairwise_matrix(m, *random_points(rng, 40))
            eig = np.linalg.eigvalsh(K)
            assert eig[0] >= -1e-8 * eig[-1]

    def test_reflection_symmetry(self, name):
        # stationarity: K(h, u) = K(-h, -u) for any drift
        rng = np.random.default_rng(13)
        m = random_model(name, rng)
        h, u = rng.normal(size=(100, 2)), rng.normal(size=100)
        assert np.allclose(m(-h, -u), m(h, u), rtol=1e-12, atol=0)


@pytest.mark.parametrize("base", [MaternBase(2.5, 1.0), CHBase(2.5, 1.0, 1.0)])
def test_gl_below_dimension_is_not_positive_definite(base):
    # d = 1, lambda = 0: for a < d the spatial spectrum at low frequency is
    # (1 + u^2 Lambda)^{(1-a)/2} exp(-c u^2), which exceeds its value at u = 0
    x = np.linspace(0, 12, 25)
    X, T = np.meshgrid(x, x)
    c, t = X.ravel()[:, None], T.ravel()
    aniso = Anisotropy([0.0], [[1.0]])
    for a_exp, negative in [(0.5, True), (1.0, False), (1.5, False)]:
        m = CovarianceModel(GLParams(base, a_exp, 1.0, aniso))
        eig = np.linalg.eigvalsh(pairwise_matrix(m, c, t))
        assert (eig[0] < -1e-3 * eig[-1]) == negative


class TestTails:
    @pytest.mark.parametrize("d", [1, 2])
    def test_lmatern_time_tail(self, d):
        aniso = Anisotropy(np.full(d, 0.3), np.eye(d) * 0.7)
        m = CovarianceModel(LMaternParams(1.0, 0.5, 1.0, aniso))
        slope = tail_slope(lambda u: m(np.zeros(d), u), 1e2, 1e4)
        assert abs(slope + d) < 0.05 * d

    @pytest.mark.parametrize("base", [MaternBase(0.8, 0.5), CHBase(0.6, 1.2, 0.7)])
    def test_gl_time_tail_constant(self, base):
        aniso = Anisotropy.from_polar(0.5, 0.3, 0.9, 0.6, 0.3)
        a_exp = 1.7
        gl = GLParams(base, a_exp, 1.4, aniso)
        lam, Lam = aniso.lambda_vec, aniso.Lambda
        limit = 1.4 * np.linalg.det(Lam) ** (-a_exp / 4) * np.exp(base.log_corr(math.sqrt(lam @ np.linalg.solve(Lam, lam))))
        u = 1e4
        val = np.exp(gl.log_cov([0.2, -0.1], u)) * u**a_exp
        assert abs(val / limit - 1) < 0.02

    def test_lch_spatial_tail(self):
        aniso = Anisotropy.from_polar(0.5, 0.3, 0.9, 0.6, 0.3)
        for alpha in (0.3, 1.0, 2.0):
            m = CovarianceModel(LCHParams(1.0, 0.5, alpha, 1.0, aniso))
            slope = tail_slope(lambda r: m([r, 0.0], 0.7), 50, 500)
            assert abs(slope + 2 * alpha) < 0.05 * 2 * alpha


class TestSmoothness:
    def test_smooth_matern_has_finite_curvature(self):
        m = CovarianceModel(LMaternParams(1.0, 2.5, 0.5, Anisotropy.isotropic(2, 0.3)))
        curv = []
        for step in (1e-1, 1e-2, 1e-3):
            k = m(np.array([[step, 0], [0, 0], [-step, 0]]), np.zeros(3))
            curv.append((k[0] - 2 * k[1] + k[2]) / step**2)
        assert abs(curv[2] - curv[1]) < abs(curv[1] - curv[0])
        # -K''(0) = sigma2 / (phi^2 * 2 (nu - 1)) for the Matern with range phi
        assert curv[2] == pytest.approx(-1.0 / (0.25 * 3.0), rel=1e-3)

    def test_exponential_has_corner_at_origin(self):
        m = CovarianceModel(LMaternParams(1.0, 0.5, 0.5, Anisotropy.isotropic(2, 0.3)))
        slopes = [(m([0, 0], 0) - m([s, 0], 0)) / s for s in (1e-2, 1e-4, 1e-6)]
        assert slopes[-1] == pytest.approx(1 / 0.5, rel=1e-5)
