"""Tests for eigenvalue substitution, mixing and the oracle split."""

from dataclasses import replace

import numpy as np
import pytest

from dremlab.errors import DimensionError
from dremlab.linalg import adjugate, eig_sym
from dremlab.regularization import mix, oracle_decompose, regularize

THETA = np.array([4.0, -8.0, 12.0])


@pytest.fixture
def rank_two_phi():
    """Extended regressor with nullspace (1, 2, 0)/sqrt(5), as in exp-a."""
    a, b, c = 0.02, 0.013, 0.05
    return np.array([[4 * a, -2 * a, -2 * b], [-2 * a, a, b], [-2 * b, b, c]])


def test_substitution_below_threshold(rank_two_phi):
    """Test that only eigenvalues below eps_bar are replaced by eps."""
    eig = eig_sym(rank_two_phi, eps_bar=1e-10)
    lambda_bar, xi = regularize(eig, eps=0.4, eps_bar=1e-10)
    assert eig.r_eff == 2
    assert np.array_equal(lambda_bar[:2], eig.eigenvalues[:2])
    assert lambda_bar[2] == 0.4
    assert np.allclose(xi, lambda_bar - eig.eigenvalues)


def test_all_substituted_gives_zero():
    """Test that a fully unexcited regressor stays zero."""
    eig = eig_sym(np.zeros((3, 3)), eps_bar=1e-10)
    lambda_bar, _ = regularize(eig, eps=0.4, eps_bar=1e-10)
    assert np.array_equal(lambda_bar, np.zeros(3))
    reg = mix(eig, lambda_bar, np.zeros(3), eps=0.4)
    assert reg.omega == 0.0
    assert np.array_equal(reg.Upsilon, np.zeros(3))


def test_full_rank_leaves_eigenvalues():
    """Test that nothing is substituted at full rank."""
    eig = eig_sym(np.diag([3.0, 2.0, 1.0]), eps_bar=1e-10)
    lambda_bar, xi = regularize(eig, eps=0.4, eps_bar=1e-10)
    assert np.array_equal(lambda_bar, [3.0, 2.0, 1.0])
    assert not xi.any()


def test_regularize_rejects_bad_thresholds():
    """Test ValueError for eps <= 0 and eps_bar < 0."""
    eig = eig_sym(np.eye(2))
    with pytest.raises(ValueError):
        regularize(eig, eps=0.0, eps_bar=1e-10)
    with pytest.raises(ValueError):
        regularize(eig, eps=0.4, eps_bar=-1.0)


def test_mixing_identifies_projected_parameters(rank_two_phi):
    """Test Upsilon = omega * Theta with Theta = theta - d."""
    eig = eig_sym(rank_two_phi, eps_bar=1e-10)
    lambda_bar, _ = regularize(eig, 0.4, 1e-10)
    reg = mix(eig, lambda_bar, rank_two_phi @ THETA, eps=0.4)
    oracle = oracle_decompose(eig, THETA)
    assert reg.omega == pytest.approx(np.prod(lambda_bar))
    assert np.allclose(reg.Upsilon, reg.omega * oracle.Theta, rtol=1e-9, atol=1e-15)
    assert reg.substituted == 1


def test_mixed_adjugate_identity(rank_two_phi):
    """Test adj(Phi) Phi = omega I for the regularized regressor."""
    eig = eig_sym(rank_two_phi, eps_bar=1e-10)
    lambda_bar, _ = regularize(eig, 0.4, 1e-10)
    reg = mix(eig, lambda_bar, np.zeros(3), eps=0.4)
    assert np.allclose(adjugate(reg.Phi) @ reg.Phi, reg.omega * np.eye(3), atol=1e-14)


def test_oracle_split_on_exp_a_nullspace(rank_two_phi):
    """Test d = (-2.4, -4.8, 0) and Theta = (6.4, -3.2, 12)."""
    oracle = oracle_decompose(eig_sym(rank_two_phi, eps_bar=1e-10), THETA)
    assert oracle.d == pytest.approx([-2.4, -4.8, 0.0], abs=1e-9)
    assert oracle.Theta == pytest.approx([6.4, -3.2, 12.0], abs=1e-9)
    assert oracle.identifiable == frozenset({2})
    assert oracle.mask(3) == [0, 0, 1]


def test_oracle_full_rank_identifies_everything():
    """Test that d = 0 and every index is identifiable at full rank."""
    oracle = oracle_decompose(eig_sym(np.eye(3), eps_bar=1e-10), THETA)
    assert not oracle.d.any()
    assert np.array_equal(oracle.Theta, THETA)
    assert oracle.identifiable == frozenset({0, 1, 2})


def test_mix_dimension_mismatch():
    """Test DimensionError for a wrong-sized regressand."""
    eig = eig_sym(np.eye(3))
    with pytest.raises(DimensionError):
        mix(eig, np.ones(3), np.ones(2))


@pytest.mark.parametrize("flip", [[0], [1], [0, 1]])
def test_disturbance_ignores_nullspace_signs(flip):
    """Test that negating nullspace columns leaves d and Theta unchanged."""
    u = np.array([1.0, -2.0, 0.5])
    eig = eig_sym(0.03 * np.outer(u, u), eps_bar=1e-10)
    assert eig.V2.shape[1] == 2
    V = eig.V.copy()
    for j in flip:
        V[:, eig.r_eff + j] *= -1.0
    flipped = replace(eig, V=V)
    a = oracle_decompose(eig, THETA)
    b = oracle_decompose(flipped, THETA)
    assert np.max(np.abs(a.d - b.d)) <= 1e-12
    assert np.max(np.abs(a.Theta - b.Theta)) <= 1e-12
    assert a.identifiable == b.identifiable
