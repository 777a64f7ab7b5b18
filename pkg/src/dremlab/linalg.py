"""Dense linear algebra on small symmetric matrices.

Eigendecomposition by cyclic Jacobi rotations, cofactor determinant and
adjugate, and spectral recomposition. Everything here is a pure function of
its inputs.
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from dremlab.errors import DimensionError, NonFiniteError, SymmetryError

FloatArray = npt.NDArray[np.float64]
EigMethod = Literal["jacobi", "lapack"]

SYMMETRY_TOL = 1e-9
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SIGN_TIE_TOL = 1e-12
COFACTOR_MAX_N = 4


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix.

    Attributes:
        V: Orthogonal matrix whose columns are eigenvectors
        eigenvalues: Eigenvalues sorted descending
        r_eff: Number of eigenvalues at or above eps_bar
        eps_bar: Rank threshold used for r_eff
    """

    V: FloatArray
    eigenvalues: FloatArray
    r_eff: int
    eps_bar: float

    @property
    def n(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def V2(self) -> FloatArray:
        """Eigenvectors whose eigenvalues fall below eps_bar (nullspace basis)."""
        return self.V[:, self.r_eff :]

    @property
    def lambda_min_nonzero(self) -> float:
        """Smallest eigenvalue at or above eps_bar, 0 when there is none."""
        if self.r_eff == 0:
            return 0.0
        return float(self.eigenvalues[self.r_eff - 1])


def inf_norm(x: FloatArray) -> float:
    """Infinity norm: max abs entry for vectors, max row sum for matrices."""
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, np.inf))


def _as_square(A: npt.ArrayLike) -> FloatArray:
    a = np.array(A, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix contains non-finite entries")
    return a


def eig_sym(
    A: npt.ArrayLike,
    eps_bar: float = 0.0,
    method: EigMethod = "jacobi",
) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come out sorted descending. Each eigenvector is flipped so
    that its largest-magnitude component is positive (lowest index wins a
    tie). Equal eigenvalues are ordered by their eigenvectors, compared
    component-wise from the first entry, larger first.

    Args:
        A: Symmetric square matrix
        eps_bar: Threshold for the effective rank
        method: "jacobi" (cyclic rotations) or "lapack" (numpy eigh)

    Returns:
        EigenDecomposition with V, eigenvalues and r_eff

    Raises:
        SymmetryError: If A deviates from symmetry beyond 1e-9 * max(1, |A|)
        NonFiniteError: If A has NaN or infinite entries
    """
    a = _as_square(A)
    scale = max(1.0, inf_norm(a))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise SymmetryError(f"matrix is not symmetric (|A - A^T| = {np.max(np.abs(a - a.T)):.3g})")
    a = 0.5 * (a + a.T)

    if method == "jacobi":
        w, v = _jacobi(a)
    elif method == "lapack":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigen method: {method!r}")

    w, v = _normalize_eigenpairs(w, v)
    r_eff = int(np.count_nonzero(w >= eps_bar))
    return EigenDecomposition(V=v, eigenvalues=w, r_eff=r_eff, eps_bar=eps_bar)


def _jacobi(a: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Cyclic Jacobi sweeps until the off-diagonal mass is negligible."""
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    target = JACOBI_TOL * float(np.linalg.norm(a))

    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(2.0 * float(np.sum(np.tril(a, -1) ** 2)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                _rotate(a, v, p, q, c, s)

    return np.diag(a).copy(), v


def _rotate(a: FloatArray, v: FloatArray, p: int, q: int, c: float, s: float) -> None:
    # a <- J^T a J, v <- v J with J = [[c, s], [-s, c]] in the (p, q) plane
    ap = a[:, p].copy()
    aq = a[:, q].copy()
    a[:, p] = c * ap - s * aq
    a[:, q] = s * ap + c * aq
    rp = a[p, :].copy()
    rq = a[q, :].copy()
    a[p, :] = c * rp - s * rq
    a[q, :] = s * rp + c * rq
    a[p, q] = 0.0
    a[q, p] = 0.0
    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - s * vq
    v[:, q] = s * vp + c * vq


def _normalize_eigenpairs(w: FloatArray, v: FloatArray) -> tuple[FloatArray, FloatArray]:
    v = v.copy()
    n = w.shape[0]
    for j in range(n):
        mags = np.abs(v[:, j])
        lead = int(np.flatnonzero(mags >= mags.max() - SIGN_TIE_TOL)[0])
        if v[lead, j] < 0.0:
            v[:, j] = -v[:, j]

    order = sorted(range(n), key=lambda j: (-w[j], tuple(-v[:, j])))
    return np.array(w[order], dtype=np.float64), np.array(v[:, order], dtype=np.float64)


def determinant(A: npt.ArrayLike) -> float:
    """Determinant by cofactor expansion (n <= 4) or LU factorization.

    Raises:
        NonFiniteError: If A has NaN or infinite entries
    """
    a = _as_square(A)
    if a.shape[0] <= COFACTOR_MAX_N:
        return _cofactor_det(a.tolist())
    return float(np.linalg.det(a))


def _cofactor_det(a: list[list[float]]) -> float:
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in a[1:]]
        sign = 1.0 if j % 2 == 0 else -1.0
        total += sign * a[0][j] * _cofactor_det(minor)
    return total


def adjugate(A: npt.ArrayLike) -> FloatArray:
    """Adjugate (transposed cofactor matrix), so that adj(A) A = det(A) I.

    Uses cofactors up to n = 4. Larger matrices must be symmetric and are
    handled spectrally.
    """
    a = _as_square(A)
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n > COFACTOR_MAX_N:
        eig = eig_sym(a)
        return adjugate_spectral(eig.V, eig.eigenvalues)

    rows = a.tolist()
    adj = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(rows) if k != i]
            sign = 1.0 if (i + j) % 2 == 0 else -1.0
            adj[j, i] = sign * _cofactor_det(minor)
    return adj


def complementary_products(lam: FloatArray) -> FloatArray:
    """Products of all eigenvalues except the i-th, for each i."""
    n = lam.shape[0]
    return np.array([np.prod(np.delete(lam, i)) for i in range(n)], dtype=np.float64)


def adjugate_spectral(V: FloatArray, lam: FloatArray) -> FloatArray:
    """Adjugate of V diag(lam) V^T from its eigenstructure."""
    _check_spectral_shapes(V, lam)
    return recompose(V, complementary_products(lam))


def recompose(V: npt.ArrayLike, lam: npt.ArrayLike) -> FloatArray:
    """Build V diag(lam) V^T, symmetrized.

    Raises:
        DimensionError: If V is not n x n for n = len(lam)
    """
    v = np.asarray(V, dtype=np.float64)
    w = np.asarray(lam, dtype=np.float64)
    _check_spectral_shapes(v, w)
    m = (v * w) @ v.T
    return 0.5 * (m + m.T)


def _check_spectral_shapes(V: FloatArray, lam: FloatArray) -> None:
    if lam.ndim != 1 or V.shape != (lam.shape[0], lam.shape[0]):
        raise DimensionError(
            f"eigenvector matrix {V.shape} does not match {lam.shape[0]} eigenvalues"
        )
