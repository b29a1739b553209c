"""Tests for ols.py: constants, the excess-loss bound and the OLS / vector-sum experiments."""

from __future__ import annotations

import math

import numpy as np
import pytest

from covtail.ensembles import (
    IndependentCoordsEnsemble,
    LinearModelSpec,
    ScalarLaw,
    batch_from_arrays,
    gaussian,
    sample_linear_model,
)
from covtail.errors import CalibrationError, InputError
from covtail.linalg import SymMatrix
from covtail.ols import (
    OlsBoundParams,
    c_eta,
    d_q,
    estimate_beta_min,
    excess_loss,
    noise_hstar,
    ols_bound,
    ols_experiment,
    ols_fit,
    ols_sample_condition,
    regression_fit,
    vector_sum_experiment,
)


# ======================================================================
# Constants and the bound
# ======================================================================
class TestConstants:
    @pytest.mark.parametrize("eta, expected", [(1.0, 5.25), (0.5, 6.875)])
    def test_c_eta(self, eta, expected):
        assert c_eta(eta) == pytest.approx(expected)

    def test_d_q(self):
        assert d_q(1.0, 2.0) == 36.0
        assert d_q(0.5, 3.0) == pytest.approx(6.25 * 9.0 / 0.25)

    def test_non_positive_eta(self):
        with pytest.raises(InputError):
            c_eta(0.0)
        with pytest.raises(InputError):
            d_q(-1.0, 2.0)


class TestOlsBound:
    def test_reference_value(self):
        params = OlsBoundParams(eta=1.0, epsilon=0.1, delta=0.1, lambda_matrix=SymMatrix.identity(10), n=1000)
        assert ols_bound(params) == pytest.approx((20.0 + 5.25 * math.log(30.0)) / 810.0, rel=1e-12)
        assert ols_bound(params) == pytest.approx(0.046736, abs=1e-6)

    def test_zero_lambda(self):
        params = OlsBoundParams(eta=0.5, epsilon=0.2, delta=0.1, lambda_matrix=SymMatrix(np.zeros((3, 3))), n=10)
        assert ols_bound(params) == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eta": 0.0},
            {"eta": 1.5},
            {"epsilon": 1.0},
            {"delta": 0.0},
            {"q": 1.0},
            {"n": 0},
            {"lambda_matrix": SymMatrix.diagonal([1.0, -1.0])},
        ],
    )
    def test_invalid(self, kwargs):
        base = {"eta": 0.5, "epsilon": 0.1, "delta": 0.1, "lambda_matrix": SymMatrix.identity(2), "n": 100}
        with pytest.raises(InputError):
            OlsBoundParams(**{**base, **kwargs})


class TestSampleCondition:
    def test_moment_term_dominates(self):
        condition = ols_sample_condition(p=10, delta=0.1, epsilon=0.1, eta=1.0, q=2.0, h=2.0, h_star=3.0)
        expected = 19_600.0 * (10.0 + 2.0 * math.log(60.0))
        assert condition.moment_term == pytest.approx(expected, rel=1e-12)
        assert condition.moment_term == pytest.approx(356_498, rel=1e-5)
        assert condition.tail_term == pytest.approx(8640.0)
        assert condition.n == math.ceil(expected)
        assert condition.literal_moment_term == pytest.approx(expected / 16.0)

    def test_tail_term_dominates(self):
        condition = ols_sample_condition(p=1, delta=0.9, epsilon=0.99, eta=0.5, q=2.0, h=1.01, h_star=3.0)
        assert condition.tail_term > condition.moment_term
        assert condition.tail_term == pytest.approx(6.0 * 6.25 * 4.0 * 4.0 / (0.9 * 0.25))
        assert condition.n == math.ceil(condition.tail_term)


# ======================================================================
# Fitting
# ======================================================================
class TestFit:
    def test_exact_recovery(self, rng):
        x = rng.standard_normal((20, 3))
        beta = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(ols_fit(batch_from_arrays(x, x @ beta)), beta, atol=1e-12)

    def test_needs_responses(self):
        with pytest.raises(InputError):
            ols_fit(batch_from_arrays([[1.0]]))

    def test_minimal_norm_when_rank_deficient(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0]])
        np.testing.assert_allclose(ols_fit(batch_from_arrays(x, [2.0, 4.0])), [1.0, 1.0], atol=1e-12)

    def test_excess_loss(self):
        assert excess_loss([1.0, 1.0], [0.0, 0.0], np.diag([2.0, 3.0])) == 5.0
        with pytest.raises(InputError):
            excess_loss([1.0], [0.0, 0.0], np.eye(2))

    def test_noise_vectors(self, rng):
        x = rng.standard_normal((5, 2))
        y = x @ np.array([1.0, 1.0]) + np.arange(5.0)
        fit = regression_fit(batch_from_arrays(x, y), [1.0, 1.0], SymMatrix.diagonal([4.0, 4.0]))
        np.testing.assert_allclose(fit.z, np.arange(5.0)[:, None] * x / 2.0, atol=1e-12)

    def test_estimate_beta_min(self):
        model = LinearModelSpec(gaussian(SymMatrix.identity(3)), np.array([1.0, 0.0, -1.0]), 1.0)
        beta = estimate_beta_min(lambda n, seed: sample_linear_model(model, n, seed), samples=100_000, seed=3)
        np.testing.assert_allclose(beta, model.beta_min, atol=0.02)

    def test_noise_hstar(self):
        design = gaussian(SymMatrix.identity(2))
        assert noise_hstar(LinearModelSpec(design, np.zeros(2), 0.0), 2.0) == 1.0
        assert noise_hstar(LinearModelSpec(design, np.zeros(2), 1.0), 2.0) == pytest.approx(3.0)


# ======================================================================
# Experiments
# ======================================================================
class TestOlsExperiment:
    def test_gaussian_design(self):
        model = LinearModelSpec(gaussian(SymMatrix.identity(10)), np.ones(10), 1.0)
        report = ols_experiment(model, 1000, eta=1.0, epsilon=0.1, delta=0.1, trials=500, seed=1)
        # E excess = σ²p/(n − p − 1) for Gaussian design
        assert 0.008 <= report.extras["mean_excess"] <= 0.0125
        assert report.bound_value == pytest.approx(0.046736, abs=1e-6)
        assert report.passed is True
        assert "out_of_regime" in report.flags
        assert report.extras["h_star"] == pytest.approx(3.0)

    def test_noiseless_model_has_no_violations(self):
        model = LinearModelSpec(gaussian(SymMatrix.identity(3)), np.ones(3), 0.0)
        report = ols_experiment(model, 50, eta=0.5, epsilon=0.5, delta=0.1, trials=20, seed=2)
        assert report.bound_value == 0.0
        assert report.violations == 0
        assert report.passed is True
        assert report.extras["ratio_to_benchmark"] is None

    def test_unknown_constants_must_be_given(self):
        design = IndependentCoordsEnsemble.iid(ScalarLaw.exponential(), 2)
        model = LinearModelSpec(design, np.ones(2), 1.0)
        with pytest.raises(InputError):
            ols_experiment(model, 100, eta=0.5, epsilon=0.5, delta=0.1, trials=2)

    def test_deterministic_across_workers(self):
        model = LinearModelSpec(gaussian(SymMatrix.identity(2)), np.ones(2), 1.0)
        serial = ols_experiment(model, 100, eta=0.5, epsilon=0.5, delta=0.1, trials=12, seed=5, workers=1)
        parallel = ols_experiment(model, 100, eta=0.5, epsilon=0.5, delta=0.1, trials=12, seed=5, workers=3)
        assert [r.statistic for r in serial.rows] == [r.statistic for r in parallel.rows]


class TestVectorSumExperiment:
    def test_gaussian_vectors(self):
        report = vector_sum_experiment(gaussian(SymMatrix.identity(4)), 1000, 1.0, 2.0, trials=500, seed=1)
        assert report.bound_value == pytest.approx(math.sqrt(8.0 + 10.5))
        assert report.passed is True
        assert report.flags == []
        assert report.extras["square_sums"]["squares_frequency"] == 0.0

    def test_zero_vectors(self):
        report = vector_sum_experiment(gaussian(np.zeros((3, 3))), 50, 0.5, 1.0, trials=10, seed=0)
        assert report.violations == 0
        assert report.flags == []
        assert report.bound_value == 0.0

    def test_understated_lambda_is_a_calibration_error(self):
        with pytest.raises(CalibrationError):
            vector_sum_experiment(
                gaussian(SymMatrix.identity(4)), 200, 1.0, 2.0, lambda_matrix=SymMatrix.identity(4).scaled(0.5),
                trials=20, seed=0,
            )

    def test_unknown_hstar(self):
        with pytest.raises(InputError):
            vector_sum_experiment(IndependentCoordsEnsemble.iid(ScalarLaw.exponential(), 2), 10, 1.0, 1.0, trials=2)

    def test_argument_checks(self):
        with pytest.raises(InputError):
            vector_sum_experiment(gaussian(SymMatrix.identity(2)), 10, 1.0, -1.0, trials=2)
        with pytest.raises(InputError):
            vector_sum_experiment(gaussian(SymMatrix.identity(2)), 10, 2.0, 1.0, trials=2)


@pytest.mark.slow
def test_vector_sum_reference_run():
    report = vector_sum_experiment(gaussian(SymMatrix.identity(4)), 1000, 1.0, 2.0, trials=10_000, seed=0, workers=2)
    assert report.passed is True
    assert report.frequency <= report.extras["probability_bound"]
