"""Eigenvalue substitution and mixing.

Eigenvalues of the extended regressor below eps_bar are replaced by eps,
which keeps the scalar regressor omega = det(Phi) away from zero when the
regressor is only partially exciting. The price is that the law then
identifies Theta = theta - d instead of theta, where d is the projection of
theta onto the regressor nullspace.
"""

from dataclasses import dataclass

import numpy as np

from dremlab.errors import DimensionError
from dremlab.linalg import EigenDecomposition, FloatArray, complementary_products, recompose

DEFAULT_ROW_TOL = 1e-6


@dataclass(frozen=True)
class RegularizedRegression:
    """Mixed scalar regressions Upsilon = omega * Theta built from Phi."""

    lambda_bar: FloatArray
    xi: FloatArray
    Phi: FloatArray
    omega: float
    Upsilon: FloatArray
    V2: FloatArray
    eps: float
    eps_bar: float

    @property
    def substituted(self) -> int:
        """Number of eigenvalues that were replaced."""
        return int(self.V2.shape[1])


@dataclass(frozen=True)
class OracleDecomposition:
    """Split of theta into the identifiable part Theta and disturbance d."""

    d: FloatArray
    Theta: FloatArray
    identifiable: frozenset[int]

    def mask(self, n: int) -> list[int]:
        return [1 if i in self.identifiable else 0 for i in range(n)]


def regularize(
    eig: EigenDecomposition, eps: float, eps_bar: float
) -> tuple[FloatArray, FloatArray]:
    """Substitute eigenvalues below eps_bar with eps.

    When every eigenvalue is substituted the result is the zero vector
    instead of eps in every slot.

    Returns:
        Tuple (lambda_bar, xi) with xi = lambda_bar - lambda

    Raises:
        ValueError: If eps <= 0 or eps_bar < 0
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps_bar < 0:
        raise ValueError(f"eps_bar must be non-negative, got {eps_bar}")
    lam = eig.eigenvalues
    keep = lam >= eps_bar
    if not keep.any():
        lambda_bar = np.zeros_like(lam)
    else:
        lambda_bar = np.where(keep, lam, eps)
    return lambda_bar, lambda_bar - lam


def mix(
    eig: EigenDecomposition, lambda_bar: FloatArray, y: FloatArray, eps: float = 0.0
) -> RegularizedRegression:
    """Form Phi, omega = prod(lambda_bar) and Upsilon = adj(Phi) y.

    The adjugate is taken from the eigenstructure, V diag(c) V^T with
    c_i the product of the other eigenvalues.

    Raises:
        DimensionError: If y or lambda_bar do not match the decomposition
    """
    n = eig.n
    lambda_bar = np.asarray(lambda_bar, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lambda_bar.shape != (n,) or y.shape != (n,):
        raise DimensionError(
            f"expected {n} eigenvalues and a {n}-vector, got {lambda_bar.shape} and {y.shape}"
        )

    V = eig.V
    Phi = recompose(V, lambda_bar)
    omega = float(np.prod(lambda_bar))
    if omega == 0.0 and not lambda_bar.any():
        Upsilon = np.zeros(n)
    else:
        Upsilon = V @ (complementary_products(lambda_bar) * (V.T @ y))
    return RegularizedRegression(
        lambda_bar=lambda_bar,
        xi=lambda_bar - eig.eigenvalues,
        Phi=Phi,
        omega=omega,
        Upsilon=Upsilon,
        V2=eig.V2,
        eps=eps,
        eps_bar=eig.eps_bar,
    )


def oracle_decompose(
    eig: EigenDecomposition, theta_true: FloatArray, row_tol: float = DEFAULT_ROW_TOL
) -> OracleDecomposition:
    """Compute d = V2 V2^T theta, Theta = theta - d and the zero rows of V2.

    Needs the true parameters, so it is only usable in simulation.
    """
    theta = np.asarray(theta_true, dtype=np.float64)
    V2 = eig.V2
    if V2.shape[1] == 0:
        return OracleDecomposition(
            d=np.zeros_like(theta), Theta=theta.copy(), identifiable=frozenset(range(eig.n))
        )
    d = V2 @ (V2.T @ theta)
    row_max = np.max(np.abs(V2), axis=1)
    identifiable = frozenset(int(i) for i in np.flatnonzero(row_max <= row_tol))
    return OracleDecomposition(d=d, Theta=theta - d, identifiable=identifiable)
