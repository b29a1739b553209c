"""Tests for the ensembles package: scalar laws, ensemble specs, sampling and four-wise vectors."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from covtail.ensembles import (
    AffineEnsemble,
    FourwiseRademacherEnsemble,
    GaussianEnsemble,
    IndependentCoordsEnsemble,
    LinearModelSpec,
    ScalarLaw,
    ScalarMixedEnsemble,
    batch_from_arrays,
    ensemble_from_config,
    fourwise_rademacher_batch,
    fourwise_rademacher_sample,
    gaussian,
    population_covariance,
    sample_batch,
    sample_linear_model,
    scalar_mixed_sample,
    seed_bit_count,
    trial_seed,
)
from covtail.errors import InputError, NotPSDError
from covtail.linalg import SymMatrix


# ======================================================================
# Scalar laws
# ======================================================================
class TestScalarLaw:
    @pytest.mark.parametrize(
        "law, q, expected",
        [
            (ScalarLaw.gaussian(), 4, 3.0),
            (ScalarLaw.gaussian(2.0), 2, 4.0),
            (ScalarLaw.exponential(1.0), 3, 6.0),
            (ScalarLaw.rademacher(), 7, 1.0),
            (ScalarLaw.two_point(3.0, 0.0, 1.0 / 9.0), 4, 9.0),
            (ScalarLaw.uniform(-1.0, 1.0), 2, 1.0 / 3.0),
            (ScalarLaw.constant(-2.0), 3, 8.0),
            (ScalarLaw.student_t(5.0), 2, 5.0 / 3.0),
        ],
    )
    def test_abs_moments(self, law, q, expected):
        assert law.abs_moment(q) == pytest.approx(expected, rel=1e-12)

    def test_missing_moment_is_infinite(self):
        assert math.isinf(ScalarLaw.student_t(3.0).abs_moment(4))

    def test_means(self):
        assert ScalarLaw.exponential(2.0).mean == 0.5
        assert ScalarLaw.two_point(3.0, 0.0, 1.0 / 9.0).mean == pytest.approx(1.0 / 3.0)
        assert ScalarLaw.rademacher().mean == 0.0

    def test_nonnegativity(self):
        assert ScalarLaw.exponential().is_nonnegative
        assert ScalarLaw.uniform(0.0, 2.0).is_nonnegative
        assert not ScalarLaw.rademacher().is_nonnegative

    @pytest.mark.parametrize(
        "kind, params",
        [("gaussian", (-1.0,)), ("exponential", (0.0,)), ("two_point", (1.0, 0.0, 2.0)), ("uniform", (1.0, 0.0)),
         ("poisson", (1.0,)), ("rademacher", (1.0,))],
    )
    def test_invalid_parameters(self, kind, params):
        with pytest.raises(InputError):
            ScalarLaw(kind, params)

    def test_config_shape(self):
        law = ScalarLaw.from_config({"kind": "two_point", "params": [3, 0, 0.5]})
        assert law == ScalarLaw.two_point(3.0, 0.0, 0.5)
        assert law.to_config() == {"kind": "two_point", "params": [3.0, 0.0, 0.5]}


# ======================================================================
# Ensemble specs and sampling
# ======================================================================
class TestEnsembles:
    def test_same_seed_same_batch(self):
        spec = gaussian(SymMatrix.identity(2))
        first = sample_batch(spec, 3, 7)
        second = sample_batch(spec, 3, 7)
        np.testing.assert_array_equal(first.vectors, second.vectors)
        assert first.vectors.shape == (3, 2)

    def test_different_seeds_differ(self):
        spec = gaussian(SymMatrix.identity(2))
        assert not np.array_equal(sample_batch(spec, 3, 7).vectors, sample_batch(spec, 3, 8).vectors)

    def test_degenerate_affine_is_constant(self):
        v = np.array([1.0, -2.0, 0.5])
        spec = AffineEnsemble(gaussian(SymMatrix.identity(2)), np.zeros((3, 2)), v)
        rows = sample_batch(spec, 5, 0).vectors
        np.testing.assert_array_equal(rows, np.tile(v, (5, 1)))

    def test_affine_second_moment(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        b = np.array([1.0, -1.0])
        spec = AffineEnsemble(gaussian(SymMatrix.identity(2)), a, b)
        np.testing.assert_allclose(np.asarray(population_covariance(spec)), a @ a.T + np.outer(b, b))

    def test_affine_covariance_matches_samples(self):
        a = np.array([[2.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.5, -1.0, 1.5]])
        spec = AffineEnsemble(gaussian(SymMatrix.identity(3)), a)
        x = sample_batch(spec, 100_000, 3).vectors
        products = np.einsum("ni,nj->nij", x, x)
        estimate = products.mean(axis=0)
        se = products.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
        assert np.all(np.abs(estimate - a @ a.T) <= 5 * se)

    def test_constant_mixer_reproduces_base(self):
        base = gaussian(SymMatrix.identity(3))
        mixed = sample_batch(ScalarMixedEnsemble(base, ScalarLaw.constant(1.0)), 5, 7).vectors
        base_rows = base.draw(5, np.random.SeedSequence(7).spawn(2)[0])
        np.testing.assert_array_equal(mixed, base_rows)

    def test_rademacher_mixer_symmetrizes(self):
        spec = ScalarMixedEnsemble(gaussian(SymMatrix.identity(2)), ScalarLaw.rademacher())
        x = sample_batch(spec, 100_000, 5).vectors
        for power in (1, 3):
            moments = x**power
            se = moments.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
            assert np.all(np.abs(moments.mean(axis=0)) <= 5 * se)

    def test_scalar_mixed_sample_matches_ensemble(self):
        base, mixer = gaussian(SymMatrix.identity(2)), ScalarLaw.two_point(3.0, 0.0, 0.25)
        direct = scalar_mixed_sample(base, mixer, 20, 3).vectors
        np.testing.assert_array_equal(direct, sample_batch(ScalarMixedEnsemble(base, mixer), 20, 3).vectors)

    def test_mixed_second_moment_scales(self):
        spec = ScalarMixedEnsemble(gaussian(SymMatrix.identity(2)), ScalarLaw.two_point(2.0, -2.0, 0.5))
        np.testing.assert_allclose(np.asarray(spec.second_moment()), 4.0 * np.eye(2))

    @pytest.mark.parametrize("mixer", [ScalarLaw.gaussian(), ScalarLaw.exponential(), ScalarLaw.uniform(-1.0, 1.0)])
    def test_unsupported_mixer_rejected(self, mixer):
        with pytest.raises(InputError, match="unsupported mixer tag"):
            scalar_mixed_sample(gaussian(SymMatrix.identity(2)), mixer, 5, 0)

    def test_student_t_mixer_needs_finite_fourth_moment(self):
        ScalarMixedEnsemble(gaussian(SymMatrix.identity(2)), ScalarLaw.student_t(6.0))
        with pytest.raises(InputError):
            ScalarMixedEnsemble(gaussian(SymMatrix.identity(2)), ScalarLaw.student_t(4.0))

    def test_independent_coords_second_moment(self):
        spec = IndependentCoordsEnsemble((ScalarLaw.exponential(1.0), ScalarLaw.rademacher()))
        # E X X^T = diag(var) + mean mean^T
        np.testing.assert_allclose(np.asarray(spec.second_moment()), [[2.0, 0.0], [0.0, 1.0]])

    def test_heavy_tailed_coordinates_rejected(self):
        with pytest.raises(InputError):
            IndependentCoordsEnsemble.iid(ScalarLaw.student_t(3.0), 2)

    def test_non_psd_gaussian_rejected(self):
        with pytest.raises(NotPSDError):
            GaussianEnsemble(SymMatrix.diagonal([1.0, -1.0]))

    def test_zero_samples_rejected(self):
        with pytest.raises(InputError):
            sample_batch(gaussian(SymMatrix.identity(2)), 0, 1)


class TestLinearModel:
    def test_noiseless_responses(self):
        model = LinearModelSpec(gaussian(SymMatrix.identity(3)), np.array([1.0, -2.0, 0.5]), 0.0)
        batch = sample_linear_model(model, 50, 4)
        np.testing.assert_array_equal(batch.responses, batch.vectors @ model.beta_min)

    def test_pure_noise_variance(self):
        model = LinearModelSpec(gaussian(SymMatrix.identity(2)), np.zeros(2), 2.0)
        y = sample_linear_model(model, 100_000, 9).responses
        # SE of the sample second moment of N(0, σ²) is σ²√(2/n)
        assert abs(np.mean(y**2) - 4.0) <= 5 * 4.0 * math.sqrt(2.0 / 100_000)

    def test_beta_dimension_checked(self):
        with pytest.raises(InputError):
            LinearModelSpec(gaussian(SymMatrix.identity(3)), np.zeros(2))

    def test_negative_noise_rejected(self):
        with pytest.raises(InputError):
            LinearModelSpec(gaussian(SymMatrix.identity(1)), np.zeros(1), -1.0)


class TestSampleBatch:
    def test_csv_layout(self, tmp_path):
        batch = batch_from_arrays([[1.0, 2.0], [3.0, 4.0]], [0.5, 1.5])
        path = tmp_path / "batch.csv"
        batch.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x1,x2,y"
        assert lines[1] == "1,2,0.5"
        assert len(lines) == 3

    def test_response_count_checked(self):
        with pytest.raises(InputError):
            batch_from_arrays([[1.0], [2.0]], [1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            batch_from_arrays([[np.nan]])


# ======================================================================
# Config shapes
# ======================================================================
class TestEnsembleFromConfig:
    @pytest.mark.parametrize(
        "raw, kind, dim",
        [
            ({"kind": "gaussian", "dim": 4}, GaussianEnsemble, 4),
            ({"kind": "gaussian", "covariance": [[2, 0], [0, 1]]}, GaussianEnsemble, 2),
            ({"kind": "independent_coords", "law": {"kind": "rademacher"}, "dim": 3}, IndependentCoordsEnsemble, 3),
            ({"kind": "fourwise_rademacher", "dim": 16}, FourwiseRademacherEnsemble, 16),
            (
                {"kind": "scalar_mixed", "base": {"kind": "gaussian", "dim": 2}, "mixer": {"kind": "rademacher"}},
                ScalarMixedEnsemble,
                2,
            ),
            (
                {"kind": "affine", "base": {"kind": "gaussian", "dim": 2}, "matrix": [[1, 0], [0, 1], [1, 1]]},
                AffineEnsemble,
                3,
            ),
        ],
    )
    def test_builds(self, raw, kind, dim):
        spec = ensemble_from_config(raw)
        assert isinstance(spec, kind)
        assert spec.dim == dim

    def test_unknown_kind(self):
        with pytest.raises(InputError, match="Unknown ensemble kind"):
            ensemble_from_config({"kind": "cauchy", "dim": 2})

    def test_missing_key(self):
        with pytest.raises(InputError, match="missing key"):
            ensemble_from_config({"kind": "gaussian"})


# ======================================================================
# Seeds
# ======================================================================
class TestTrialSeed:
    def test_deterministic_and_distinct(self):
        assert trial_seed(42, 3) == trial_seed(42, 3)
        assert len({trial_seed(42, t) for t in range(1000)}) == 1000
        assert trial_seed(42, 0) != trial_seed(43, 0)

    def test_full_seed_range(self):
        assert 0 <= trial_seed(2**64 - 1, 5) < 2**64

    @pytest.mark.parametrize("master, trial", [(-1, 0), (2**64, 0), (0, -1)])
    def test_out_of_range(self, master, trial):
        with pytest.raises(InputError):
            trial_seed(master, trial)


# ======================================================================
# Four-wise independent ±1 vectors
# ======================================================================
class TestFourwise:
    def test_seed_bit_count(self):
        assert seed_bit_count(1) == 4
        assert seed_bit_count(8) == 12
        assert seed_bit_count(9) == 16
        assert seed_bit_count(16) == 16

    def test_zero_polynomial_gives_all_plus(self):
        np.testing.assert_array_equal(fourwise_rademacher_sample(8, np.zeros(12, dtype=int)), np.ones(8))

    def test_golden_vector(self):
        # leading coefficient 1, all others 0: coordinate j is (-1)^Tr(x_j^3) over GF(8) mod x^3 + x + 1
        bits = np.array([0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0])
        expected = np.array([1, -1, -1, 1, -1, 1, -1, 1], dtype=float)
        np.testing.assert_array_equal(fourwise_rademacher_sample(8, bits), expected)

    def test_exhaustive_fourwise_uniformity(self):
        seeds = np.array(list(itertools.product([0, 1], repeat=12)))
        vectors = fourwise_rademacher_batch(8, seeds)
        assert vectors.shape == (4096, 8)
        weights = np.array([1, 2, 4, 8])
        for subset in itertools.combinations(range(8), 4):
            codes = (vectors[:, subset] < 0).astype(int) @ weights
            np.testing.assert_array_equal(np.bincount(codes, minlength=16), np.full(16, 256))

    def test_ensemble_has_unit_diagonal(self):
        x = sample_batch(FourwiseRademacherEnsemble(16), 10, 0).vectors
        np.testing.assert_array_equal(x**2, np.ones((10, 16)))

    def test_bad_seed_bits(self):
        with pytest.raises(InputError):
            fourwise_rademacher_sample(8, np.zeros(11, dtype=int))
        with pytest.raises(InputError):
            fourwise_rademacher_sample(8, np.full(12, 2))
