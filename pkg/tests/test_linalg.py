"""Tests for linalg/symmetric.py: eigendecomposition, PSD powers and CSV interchange."""

from __future__ import annotations

import numpy as np
import pytest

from covtail.errors import InputError, NotPSDError
from covtail.linalg import (
    SymMatrix,
    is_psd,
    load_matrix_csv,
    op_norm,
    op_norm_and_min_eig,
    psd_pseudoinverse,
    psd_sqrt,
    psd_sqrt_pseudoinverse,
    range_projector,
    save_matrix_csv,
    sym_eigendecomposition,
)


# ======================================================================
# SymMatrix
# ======================================================================
class TestSymMatrix:
    def test_lower_triangle_is_mirrored(self):
        a = SymMatrix(np.array([[1.0, 5.0], [2.0, 3.0]]))
        np.testing.assert_array_equal(np.asarray(a), [[1.0, 2.0], [2.0, 3.0]])

    def test_entries_are_read_only(self):
        a = SymMatrix.identity(2)
        with pytest.raises(ValueError):
            a.entries[0, 0] = 5.0

    @pytest.mark.parametrize("bad", [[[np.nan, 0.0], [0.0, 1.0]], [[np.inf]]])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(InputError):
            SymMatrix(np.array(bad))

    def test_non_square_rejected(self):
        with pytest.raises(InputError):
            SymMatrix(np.ones((2, 3)))

    def test_helpers(self):
        a = SymMatrix.diagonal([4.0, 1.0])
        assert a.trace() == 5.0
        assert a.quadratic_form([1.0, 1.0]) == 5.0
        assert a.dim == 2
        np.testing.assert_array_equal(a.submatrix([1]).entries, [[1.0]])
        np.testing.assert_array_equal((a - a).entries, np.zeros((2, 2)))


# ======================================================================
# Eigendecomposition
# ======================================================================
@pytest.mark.parametrize("method", ["eigh", "jacobi"])
class TestEigendecomposition:
    def test_identity(self, method):
        values, _ = sym_eigendecomposition(SymMatrix.identity(3), method)
        np.testing.assert_allclose(values, [1.0, 1.0, 1.0])

    def test_diagonal(self, method):
        values, vectors = sym_eigendecomposition(SymMatrix.diagonal([3.0, 1.0]), method)
        np.testing.assert_allclose(values, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(vectors), np.eye(2), atol=1e-12)

    def test_two_by_two(self, method):
        values, _ = sym_eigendecomposition([[2.0, 1.0], [1.0, 2.0]], method)
        np.testing.assert_allclose(values, [3.0, 1.0], atol=1e-12)

    def test_zero_matrix(self, method):
        values, vectors = sym_eigendecomposition(np.zeros((3, 3)), method)
        np.testing.assert_array_equal(values, np.zeros(3))
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(3))

    def test_random_reconstruction(self, method, rng):
        for _ in range(40):
            p = int(rng.integers(1, 13))
            m = rng.standard_normal((p, p))
            a = (m + m.T) / 2.0
            values, vectors = sym_eigendecomposition(a, method)
            assert np.all(np.diff(values) <= 0)
            rebuilt = (vectors * values) @ vectors.T
            assert np.linalg.norm(rebuilt - a, 2) <= 1e-9 * np.linalg.norm(a, 2)
            np.testing.assert_allclose(vectors.T @ vectors, np.eye(p), atol=1e-10)

    def test_unknown_method(self, method):
        with pytest.raises(InputError):
            sym_eigendecomposition(SymMatrix.identity(2), "power")


@pytest.mark.slow
def test_jacobi_reconstruction_thousand_matrices(rng):
    for _ in range(1000):
        p = int(rng.integers(1, 21))
        m = rng.standard_normal((p, p))
        a = (m + m.T) / 2.0
        values, vectors = sym_eigendecomposition(a, "jacobi")
        rebuilt = (vectors * values) @ vectors.T
        assert np.linalg.norm(rebuilt - a, 2) <= 1e-9 * np.linalg.norm(a, 2)
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(p), atol=1e-10)


# ======================================================================
# Norms and extreme eigenvalues
# ======================================================================
class TestOpNorm:
    def test_identity(self):
        assert op_norm_and_min_eig(SymMatrix.identity(4)) == pytest.approx((1.0, 1.0))

    def test_indefinite_diagonal(self):
        a = SymMatrix.diagonal([5.0, 2.0, -1.0])
        assert op_norm_and_min_eig(a) == pytest.approx((5.0, -1.0))
        assert op_norm(a) == pytest.approx(5.0)

    def test_two_by_two(self):
        assert op_norm_and_min_eig([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx((3.0, 1.0))

    def test_inverse_norm_is_reciprocal_min_eigenvalue(self, random_psd):
        a = random_psd(6)
        _, lam_min = op_norm_and_min_eig(a)
        assert op_norm(np.linalg.inv(np.asarray(a))) == pytest.approx(1.0 / lam_min, rel=1e-10)


# ======================================================================
# PSD powers and pseudoinverses
# ======================================================================
class TestPsdPowers:
    def test_identity_fixed_point(self):
        np.testing.assert_allclose(np.asarray(psd_sqrt_pseudoinverse(SymMatrix.identity(3))), np.eye(3))

    def test_rank_deficient_diagonal(self):
        result = psd_sqrt_pseudoinverse(SymMatrix.diagonal([4.0, 0.0]))
        np.testing.assert_allclose(np.asarray(result), np.diag([0.5, 0.0]), atol=1e-15)

    def test_zero_maps_to_zero(self):
        np.testing.assert_array_equal(np.asarray(psd_pseudoinverse(np.zeros((2, 2)))), np.zeros((2, 2)))

    def test_whitening_gives_range_projector(self, rng):
        b = rng.standard_normal((5, 3))
        a = SymMatrix(b @ b.T)
        root_inv = np.asarray(psd_sqrt_pseudoinverse(a))
        projector = root_inv @ np.asarray(a) @ root_inv
        np.testing.assert_allclose(projector, projector @ projector, atol=1e-8)
        np.testing.assert_allclose(projector, np.asarray(range_projector(a)), atol=1e-8)
        assert np.trace(projector) == pytest.approx(3.0, abs=1e-8)
        assert is_psd(root_inv)

    def test_squared_pseudoinverse_acts_as_identity_on_range(self, rng):
        b = rng.standard_normal((4, 2))
        a = SymMatrix(b @ b.T)
        root_inv = np.asarray(psd_sqrt_pseudoinverse(a))
        v = np.asarray(a) @ rng.standard_normal(4)
        np.testing.assert_allclose(root_inv @ root_inv @ np.asarray(a) @ v, v, atol=1e-8 * np.linalg.norm(v))

    def test_sqrt_squares_back(self, random_psd):
        a = random_psd(5)
        root = np.asarray(psd_sqrt(a))
        np.testing.assert_allclose(root @ root, np.asarray(a), atol=1e-10)

    def test_not_psd_rejected(self):
        with pytest.raises(NotPSDError):
            psd_sqrt_pseudoinverse(SymMatrix.diagonal([1.0, -1.0]))

    def test_kernel_vectors_are_annihilated(self, rng):
        b = rng.standard_normal((6, 3))
        a = b @ b.T
        _, vectors = sym_eigendecomposition(a)
        for v in vectors[:, 3:].T:
            assert np.linalg.norm(a @ v) <= 1e-8

    def test_is_psd_tolerates_roundoff(self):
        assert is_psd(SymMatrix.diagonal([1.0, -1e-14]))
        assert not is_psd(SymMatrix.diagonal([1.0, -1e-6]))


# ======================================================================
# CSV interchange
# ======================================================================
class TestMatrixCsv:
    def test_save_then_load(self, tmp_path, random_psd):
        a = random_psd(4)
        path = tmp_path / "m.csv"
        save_matrix_csv(a, path)
        np.testing.assert_array_equal(np.asarray(load_matrix_csv(path)), np.asarray(a))

    def test_small_asymmetry_is_averaged(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,0.5\n0.5000000001,2\n")
        loaded = np.asarray(load_matrix_csv(path))
        assert loaded[0, 1] == loaded[1, 0] == pytest.approx(0.50000000005)

    def test_asymmetric_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,0\n1,1\n")
        with pytest.raises(InputError, match="not symmetric"):
            load_matrix_csv(path)

    def test_non_square_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2,3\n4,5,6\n")
        with pytest.raises(InputError, match="not square"):
            load_matrix_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_matrix_csv(tmp_path / "absent.csv")
