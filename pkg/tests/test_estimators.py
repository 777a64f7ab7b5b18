"""Tests for the gradient, DREM and regularized DREM steps."""

import numpy as np
import pytest

from dremlab.errors import DimensionError
from dremlab.estimators import (
    drem_step,
    dremr_step,
    gain_schedule,
    gradient_step,
    new_state,
)
from dremlab.linalg import eig_sym
from dremlab.models import GainMode, Law
from dremlab.regularization import mix, regularize
from dremlab.signals import RegressorSample

THETA = np.array([4.0, -8.0, 12.0])


@pytest.fixture
def sample():
    """Single regressor sample."""
    phibar = np.array([1.0, 0.5, -1.0])
    return RegressorSample(t=0.0, phibar=phibar, z=float(phibar @ THETA))


def test_gradient_step_descends(sample):
    """Test that one gradient step reduces the prediction error."""
    st = new_state(Law.GRADIENT, np.zeros(3), Gamma=5.0 * np.eye(3))
    after = gradient_step(st, sample, 1e-3)
    before_err = abs(float(sample.phibar @ st.theta_hat) - sample.z)
    after_err = abs(float(sample.phibar @ after.theta_hat) - sample.z)
    assert after_err < before_err
    assert np.array_equal(st.theta_hat, np.zeros(3))


def test_gradient_needs_gamma():
    """Test that the gradient law refuses a missing or indefinite Gamma."""
    with pytest.raises(ValueError):
        new_state(Law.GRADIENT, np.zeros(3))
    with pytest.raises(ValueError):
        new_state(Law.GRADIENT, np.zeros(3), Gamma=-np.eye(3))


def test_new_state_rejects_bad_gains():
    """Test ValueError for non-positive gains."""
    with pytest.raises(ValueError):
        new_state(Law.DREM, np.zeros(3), gamma_i=[1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        new_state(Law.DREM_REGULARIZED, np.zeros(3), gamma0=0.0)


def test_gain_schedule_switch():
    """Test gamma1 below min(lambda_min^n, eps^n) and gamma0/omega^2 above."""
    assert gain_schedule(1e-4, 0.1, 3, 0.4, 5.0, 1.0) == 1.0
    assert gain_schedule(1e-3, 0.1, 3, 0.4, 5.0, 1.0) == 1.0
    assert gain_schedule(0.5, 0.1, 3, 0.4, 5.0, 1.0) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        gain_schedule(0.5, 0.1, 3, 0.0, 5.0, 1.0)


def test_drem_zero_omega_is_inert():
    """Test that plain DREM does not move when det(phi) = 0."""
    st = new_state(Law.DREM, np.array([1.0, 2.0, 3.0]))
    after = drem_step(st, 0.0, np.zeros(3), 1e-4, GainMode.NORMALIZED, 0.1)
    assert np.array_equal(after.theta_hat, st.theta_hat)


def test_drem_per_element_gains():
    """Test the element-wise update with individual gains."""
    st = new_state(Law.DREM, np.zeros(3), gamma_i=[1.0, 2.0, 4.0])
    omega, Y = 2.0, 2.0 * THETA
    after = drem_step(st, omega, Y, 1e-3, GainMode.PER_ELEMENT)
    expected = 1e-3 * np.array([1.0, 2.0, 4.0]) * omega * Y
    assert after.theta_hat == pytest.approx(expected)


def test_drem_per_element_needs_gains():
    """Test ValueError without gamma_i in per-element mode."""
    st = new_state(Law.DREM, np.zeros(3))
    with pytest.raises(ValueError):
        drem_step(st, 1.0, THETA, 1e-3, GainMode.PER_ELEMENT)


def test_mixed_update_dimension_check():
    """Test DimensionError for a wrong-sized Y."""
    st = new_state(Law.DREM, np.zeros(3))
    with pytest.raises(DimensionError):
        drem_step(st, 1.0, np.ones(2), 1e-3)


def test_normalized_gain_converges_at_gamma0():
    """Test that each component approaches Y/omega at rate gamma0."""
    st = new_state(Law.DREM_REGULARIZED, np.zeros(3), gamma0=5.0)
    omega, Y = 0.5, 0.5 * THETA
    tau_s = 1e-4
    for _ in range(10000):
        st = drem_step(st, omega, Y, tau_s, GainMode.NORMALIZED, 0.9)
    ratio = np.abs(st.theta_hat - THETA) / np.abs(THETA)
    assert ratio == pytest.approx(np.full(3, np.exp(-5.0)), rel=1e-2)


def test_overshoot_guard_clamps_to_fixed_point(caplog):
    """Test the guard when tau_s gamma omega^2 > 1."""
    st = new_state(Law.DREM, np.zeros(3), gamma_i=[1e6, 1.0, 1.0])
    after = drem_step(st, 1.0, THETA, 1e-3, GainMode.PER_ELEMENT)
    assert after.theta_hat[0] == THETA[0]
    assert after.theta_hat[1] == pytest.approx(1e-3 * THETA[1])
    assert after.guard_hits == 1
    assert "fixed point" in caplog.text


def test_dremr_matches_drem_on_same_inputs():
    """Test that both mixed laws share one update."""
    phi = np.diag([0.5, 0.2, 1e-14])
    eig = eig_sym(phi, eps_bar=1e-10)
    lambda_bar, _ = regularize(eig, 0.4, 1e-10)
    reg = mix(eig, lambda_bar, phi @ THETA, 0.4)
    a = new_state(Law.DREM_REGULARIZED, np.zeros(3))
    b = new_state(Law.DREM, np.zeros(3))
    ra = dremr_step(a, reg, eig, 1e-4)
    rb = drem_step(b, reg.omega, reg.Upsilon, 1e-4, GainMode.NORMALIZED, eig.lambda_min_nonzero)
    assert np.array_equal(ra.theta_hat, rb.theta_hat)
    assert ra.last_gamma == rb.last_gamma


def test_dremr_identifies_only_excited_components():
    """Test that the unexcited component converges to Theta_3 = 0 of the projection."""
    phi = np.diag([0.5, 0.2, 0.0])
    eig = eig_sym(phi, eps_bar=1e-10)
    lambda_bar, _ = regularize(eig, 0.4, 1e-10)
    reg = mix(eig, lambda_bar, phi @ THETA, 0.4)
    st = new_state(Law.DREM_REGULARIZED, np.array([0.0, 0.0, 7.0]))
    for _ in range(20000):
        st = dremr_step(st, reg, eig, 1e-4)
    assert st.theta_hat == pytest.approx([4.0, -8.0, 0.0], abs=1e-3)
