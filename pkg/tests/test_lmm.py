import math
import time

import numpy as np
import pytest
from scipy import stats

from netdep.covariance import (
    PolynomialCovarianceSpec,
    direct_t1_covariance,
    inverse_sqrt,
    polynomial_covariance,
)
from netdep.errors import ContractViolation, DefinitenessError, ParameterError
from netdep.graph import AdjacencyMatrix, eigendecompose, erdos_renyi_gnm
from netdep.lmm import LmmFit, fit_lmm, lmm_loglik_direct, lmm_loglik_spectral, marginal_fit_and_whiten
from netdep.transmission import (
    DirectProcessConfig,
    empirical_covariance,
    simulate_direct,
    simulate_direct_ensemble,
)

from oracles import random_symmetric, toy_network


def definite_spec(A, rng, d):
    higher = rng.uniform(0.0, 0.5, size=d)
    bound = np.abs(np.linalg.eigvalsh(A.as_float())).max()
    s0 = 0.1 + sum(c * bound ** (m + 1) for m, c in enumerate(higher))
    return PolynomialCovarianceSpec((s0, *higher))


@pytest.fixture(scope="module")
def net500():
    A = erdos_renyi_gnm(500, 500, 1)
    return A, eigendecompose(A)


class TestLoglik:
    def test_origin(self):
        A = AdjacencyMatrix(np.array([[0, 1], [1, 0]]))
        spec = PolynomialCovarianceSpec((1.0,))
        assert lmm_loglik_direct(np.zeros(2), np.ones(2), 0.0, spec, A) == pytest.approx(-math.log(2 * math.pi))

    def test_mvn_oracle(self, rng):
        A = random_symmetric(5, 0.5, rng)
        spec = definite_spec(A, rng, 2)
        y, x, beta = rng.normal(size=5), rng.normal(size=5), 0.7
        v = polynomial_covariance(A, spec)
        expected = stats.multivariate_normal(beta * x, v).logpdf(y)
        assert abs(lmm_loglik_direct(y, x, beta, spec, A) - expected) < 1e-10
        assert abs(lmm_loglik_spectral(y, x, beta, spec, eigendecompose(A)) - expected) < 1e-10

    def test_d0_is_iid(self, rng):
        A = random_symmetric(12, 0.3, rng)
        y = rng.normal(size=12)
        spec = PolynomialCovarianceSpec((2.5,))
        expected = np.sum(stats.norm(0, math.sqrt(2.5)).logpdf(y))
        assert lmm_loglik_spectral(y, None, 0.0, spec, eigendecompose(A)) == pytest.approx(expected, abs=1e-10)

    def test_spectral_rejects_indefinite(self):
        A = AdjacencyMatrix(np.array([[0, 1], [1, 0]]))
        with pytest.raises(DefinitenessError, match="lambda=-1"):
            lmm_loglik_spectral(np.ones(2), None, 0.0, PolynomialCovarianceSpec((0.5, 1.0)), eigendecompose(A))

    def test_spectral_cost_scales_linearly(self, net500, rng):
        A, D = net500
        spec = PolynomialCovarianceSpec((1.0, 0.1, 0.05))
        y = rng.normal(size=500)

        def clock(f, reps):
            t = time.perf_counter()
            for _ in range(reps):
                f()
            return (time.perf_counter() - t) / reps

        direct = clock(lambda: lmm_loglik_direct(y, None, 0.0, spec, A), 3)
        spectral = clock(lambda: lmm_loglik_spectral(y, None, 0.0, spec, D), 20)
        assert spectral * 5 < direct


class TestFit:
    def test_iid_null(self, net500, rng):
        A, D = net500
        fits = [fit_lmm(rng.normal(size=500), None, A, 2, D) for _ in range(20)]
        comps = np.array([f.variance_components for f in fits])
        assert abs(np.median(comps[:, 0]) - 1.0) < 0.1
        assert np.all(np.median(comps[:, 1:], axis=0) < 0.1)

    def test_direct_process_recovery(self):
        errors = []
        for r in range(50):
            A = erdos_renyi_gnm(500, 500, [7, r])
            D = eigendecompose(A)
            y = simulate_direct(A, DirectProcessConfig(0.8, 0.2, noise_sd=0.1), [8, r])
            fit = fit_lmm(y, None, A, 2, D)
            truth = direct_t1_covariance(A, 0.8, 0.2, 1.0, 0.01)
            estimate = polynomial_covariance(A, fit.spec, D)
            errors.append(np.linalg.norm(estimate - truth) / np.linalg.norm(truth))
        assert np.mean(errors) < 0.10

    def test_fit_invariants(self, net500, rng):
        A, D = net500
        x = simulate_direct(A, DirectProcessConfig(0.8, 0.2, noise_sd=0.1), 1)
        y = 0.5 * x + simulate_direct(A, DirectProcessConfig(0.8, 0.2, noise_sd=0.1), 2)
        f = fit_lmm(y, x, A, 2, D)
        assert f.converged
        spec = f.spec
        spec.check_definite(D.eigenvalues)
        assert abs(f.loglik - lmm_loglik_spectral(y, x, f.beta, spec, D)) < 1e-8
        for db in (1e-4, -1e-4):
            assert lmm_loglik_spectral(y, x, f.beta + db, spec, D) <= f.loglik
        assert all(f.loglik >= ll - 1e-9 for ll in f.start_logliks.values())
        assert set(f.start_logliks) == {"equal", "s0-dominant", "moments"}

    def test_gls_beta_equals_whitened_regression(self, net500):
        A, D = net500
        cfg = DirectProcessConfig(0.9, 0.1, noise_sd=0.1)
        x, y = simulate_direct(A, cfg, 3), simulate_direct(A, cfg, 4)
        f = fit_lmm(y, x, A, 2, D)
        s = f.spec.check_definite(D.eigenvalues)
        wx, wy = D.apply(s**-0.5, x), D.apply(s**-0.5, y)
        assert f.beta == pytest.approx((wx @ wy) / (wx @ wx), rel=1e-10)

    def test_not_converged_flag(self, net500, rng):
        A, D = net500
        f = fit_lmm(rng.normal(size=500), None, A, 2, D, maxiter=3)
        assert not f.converged and f.iterations <= 3

    def test_json(self, net500, rng):
        A, D = net500
        payload = fit_lmm(rng.normal(size=500), None, A, 1, D).to_json()
        assert set(payload) == {"beta", "variance_components", "loglik", "converged", "iterations", "d"}
        assert payload["d"] == 1 and len(payload["variance_components"]) == 2

    def test_validation(self, rng):
        with pytest.raises(ContractViolation):
            fit_lmm(np.ones(2), None, AdjacencyMatrix(np.array([[0, 1], [0, 0]])))
        A = random_symmetric(4, 0.5, rng)
        with pytest.raises(ParameterError):
            fit_lmm(rng.normal(size=4), None, A, d=2)
        with pytest.raises(ParameterError):
            fit_lmm(rng.normal(size=4), np.zeros(4), A, d=0)


class TestWhiten:
    def test_iid_input_scales(self, net500, rng):
        A, D = net500
        v = rng.normal(size=500)
        w, f = marginal_fit_and_whiten(v, A, 2, D)
        scaled = v / math.sqrt(f.variance_components[0])
        assert np.linalg.norm(w - scaled) / np.linalg.norm(scaled) < 0.05

    def test_uses_fitted_covariance(self, net500):
        A, D = net500
        v = simulate_direct(A, DirectProcessConfig(0.9, 0.1, noise_sd=0.1), 5)
        w, f = marginal_fit_and_whiten(v, A, 2, D)
        np.testing.assert_allclose(w, inverse_sqrt(polynomial_covariance(A, f.spec, D)) @ v, atol=1e-8)

    def test_returns_lmm_fit(self, net500, rng):
        A, D = net500
        _, f = marginal_fit_and_whiten(rng.normal(size=500), A, 2, D)
        assert isinstance(f, LmmFit) and f.beta == 0.0

    @pytest.mark.slow
    @pytest.mark.xfail(reason="1000 replicates cannot resolve 0.05 elementwise: diagonal SE is 0.045", strict=False)
    def test_fitted_whitening_small_network(self):
        A = toy_network()
        D = eigendecompose(A)
        samples = simulate_direct_ensemble(A, DirectProcessConfig(0.8, 0.2), 1000, 1)
        whitened = np.array([marginal_fit_and_whiten(s, A, 2, D)[0] for s in samples])
        assert np.max(np.abs(empirical_covariance(whitened) - np.eye(10))) < 0.05
