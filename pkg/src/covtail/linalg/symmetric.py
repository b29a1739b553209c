"""Dense symmetric matrices and the spectral kernels built on them."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.errors import InputError, NotPSDError
from covtail.settings import get_settings

logger = logging.getLogger(__name__)

EigenMethod = Literal["eigh", "jacobi"]


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A dense p×p real symmetric matrix.

    Symmetry is exact: the lower triangle of the input is mirrored into the
    upper triangle on construction, and the stored array is read-only.
    """

    entries: NDArray[np.float64]

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InputError(f"SymMatrix needs a non-empty square array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("SymMatrix entries must be finite")
        lower = np.tril(a)
        mirrored = lower + np.tril(a, -1).T
        mirrored.setflags(write=False)
        object.__setattr__(self, "entries", mirrored)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None) -> NDArray[np.float64]:
        if dtype is None:
            return self.entries.copy() if copy else self.entries
        return self.entries.astype(dtype)

    def __repr__(self) -> str:
        return f"SymMatrix(dim={self.dim})"

    @classmethod
    def identity(cls, p: int) -> SymMatrix:
        return cls(np.eye(p))

    @classmethod
    def diagonal(cls, values: ArrayLike) -> SymMatrix:
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @classmethod
    def outer(cls, x: ArrayLike) -> SymMatrix:
        x = np.asarray(x, dtype=np.float64)
        return cls(np.outer(x, x))

    def quadratic_form(self, v: ArrayLike) -> float:
        v = np.asarray(v, dtype=np.float64)
        return float(v @ self.entries @ v)

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def diag(self) -> NDArray[np.float64]:
        return np.diag(self.entries).copy()

    def scaled(self, c: float) -> SymMatrix:
        return SymMatrix(c * self.entries)

    def congruence(self, m: ArrayLike) -> SymMatrix:
        """Return M^T A M."""
        m = np.asarray(m, dtype=np.float64)
        return SymMatrix(m.T @ self.entries @ m)

    def submatrix(self, index: ArrayLike) -> SymMatrix:
        idx = np.asarray(index, dtype=np.intp)
        return SymMatrix(self.entries[np.ix_(idx, idx)])

    def __add__(self, other: SymMatrix) -> SymMatrix:
        return SymMatrix(self.entries + other.entries)

    def __sub__(self, other: SymMatrix) -> SymMatrix:
        return SymMatrix(self.entries - other.entries)


class Eigendecomposition(NamedTuple):
    values: NDArray[np.float64]  # descending
    vectors: NDArray[np.float64]  # orthonormal columns


def as_sym(a: SymMatrix | ArrayLike) -> SymMatrix:
    return a if isinstance(a, SymMatrix) else SymMatrix(np.asarray(a, dtype=np.float64))


def _cyclic_jacobi(
    a: NDArray[np.float64], tol: float = 1e-15, max_sweeps: int = 100
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Cyclic Jacobi rotations; returns (unsorted eigenvalues, eigenvectors)."""
    a = a.copy()
    p = a.shape[0]
    v = np.eye(p)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(p), v

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a**2) - np.sum(np.diag(a) ** 2))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if abs(aij) <= 1e-300:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_i, col_j = a[:, i].copy(), a[:, j].copy()
                a[:, i] = c * col_i - s * col_j
                a[:, j] = s * col_i + c * col_j
                row_i, row_j = a[i, :].copy(), a[j, :].copy()
                a[i, :] = c * row_i - s * row_j
                a[j, :] = s * row_i + c * row_j
                vec_i, vec_j = v[:, i].copy(), v[:, j].copy()
                v[:, i] = c * vec_i - s * vec_j
                v[:, j] = s * vec_i + c * vec_j
    else:
        logger.warning("Jacobi sweeps exhausted (p=%d); off-diagonal mass %.3e", p, off)

    return np.diag(a).copy(), v


def sym_eigendecomposition(
    a: SymMatrix | ArrayLike, method: EigenMethod = "eigh"
) -> Eigendecomposition:
    """Eigenvalues in descending order with orthonormal eigenvectors.

    ``method="eigh"`` uses LAPACK through numpy; ``method="jacobi"`` runs
    deterministic cyclic Jacobi rotations (intended for p up to a few hundred).
    """
    sym = as_sym(a)
    if method == "eigh":
        values, vectors = np.linalg.eigh(sym.entries)
    elif method == "jacobi":
        values, vectors = _cyclic_jacobi(np.array(sym.entries))
    else:
        raise InputError(f"Unknown eigendecomposition method: {method!r}")

    order = np.argsort(values)[::-1]
    return Eigendecomposition(values[order], vectors[:, order])


def op_norm_and_min_eig(a: SymMatrix | ArrayLike) -> tuple[float, float]:
    """Return (λ_max, λ_min). For PSD input λ_max is the operator norm."""
    values = np.linalg.eigvalsh(as_sym(a).entries)
    return float(values[-1]), float(values[0])


def op_norm(a: SymMatrix | ArrayLike) -> float:
    values = np.linalg.eigvalsh(as_sym(a).entries)
    return float(max(abs(values[0]), abs(values[-1])))


def _check_psd(values: NDArray[np.float64], tol: float) -> float:
    lam_max = float(max(values.max(), 0.0))
    lam_min = float(values.min())
    if lam_min < -tol * max(lam_max, np.finfo(float).tiny):
        raise NotPSDError(
            f"Matrix is not positive semidefinite: λ_min={lam_min:.3e}, λ_max={lam_max:.3e}"
        )
    return lam_max


def is_psd(a: SymMatrix | ArrayLike, tol: float | None = None) -> bool:
    tol = get_settings().PSD_TOL if tol is None else tol
    try:
        _check_psd(np.linalg.eigvalsh(as_sym(a).entries), tol)
    except NotPSDError:
        return False
    return True


def psd_power(
    a: SymMatrix | ArrayLike,
    power: float,
    rank_tol: float | None = None,
) -> SymMatrix:
    """V diag(λ^power) V^T over the range of A (eigenvalues above rank_tol·λ_max).

    Directions below the threshold are annihilated, so negative powers give
    Moore-Penrose pseudoinverse powers. The zero matrix maps to zero.
    """
    settings = get_settings()
    rank_tol = settings.RANK_TOL if rank_tol is None else rank_tol
    values, vectors = sym_eigendecomposition(a)
    lam_max = _check_psd(values, settings.PSD_TOL)

    keep = values > rank_tol * lam_max if lam_max > 0 else np.zeros_like(values, dtype=bool)
    powered = np.zeros_like(values)
    powered[keep] = values[keep] ** power
    return SymMatrix((vectors * powered) @ vectors.T)


def psd_sqrt(a: SymMatrix | ArrayLike, rank_tol: float | None = None) -> SymMatrix:
    return psd_power(a, 0.5, rank_tol)


def psd_sqrt_pseudoinverse(a: SymMatrix | ArrayLike, rank_tol: float | None = None) -> SymMatrix:
    """Σ^{-1/2}: pseudoinverse of the PSD square root."""
    return psd_power(a, -0.5, rank_tol)


def psd_pseudoinverse(a: SymMatrix | ArrayLike, rank_tol: float | None = None) -> SymMatrix:
    return psd_power(a, -1.0, rank_tol)


def range_basis(
    a: SymMatrix | ArrayLike, rank_tol: float | None = None
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigenvalues and orthonormal eigenvectors spanning range(A) (PSD A)."""
    settings = get_settings()
    rank_tol = settings.RANK_TOL if rank_tol is None else rank_tol
    values, vectors = sym_eigendecomposition(a)
    lam_max = _check_psd(values, settings.PSD_TOL)
    if lam_max <= 0:
        return values[:0], vectors[:, :0]
    keep = values > rank_tol * lam_max
    return values[keep], vectors[:, keep]


def range_projector(a: SymMatrix | ArrayLike, rank_tol: float | None = None) -> SymMatrix:
    _, basis = range_basis(a, rank_tol)
    return SymMatrix(basis @ basis.T)


# ----------------------------------------------------------------------
# CSV interchange
# ----------------------------------------------------------------------


def load_matrix_csv(path: str | Path) -> SymMatrix:
    """Load p rows of p comma-separated numbers.

    Mirrored entries are averaged; asymmetry above SYMMETRY_TOL relative to
    the largest entry is rejected.
    """
    path = Path(path)
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError) as e:
        raise InputError(f"Cannot read matrix CSV {path}: {e}") from e

    if a.shape[0] != a.shape[1]:
        raise InputError(f"Matrix CSV {path} is not square: shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"Matrix CSV {path} contains non-finite entries")

    scale = float(np.max(np.abs(a))) or 1.0
    asymmetry = float(np.max(np.abs(a - a.T))) / scale
    if asymmetry > get_settings().SYMMETRY_TOL:
        raise InputError(f"Matrix CSV {path} is not symmetric (relative asymmetry {asymmetry:.3e})")
    return SymMatrix((a + a.T) / 2.0)


def save_matrix_csv(a: SymMatrix, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, a.entries, delimiter=",", fmt="%.17g")
