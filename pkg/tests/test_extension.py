"""Tests for the Kreisselmeier extension filter."""

import numpy as np
import pytest

from dremlab import extension
from dremlab.errors import DimensionError, StabilityError, TimeMismatchError
from dremlab.signals import RegressorSample

THETA = np.array([4.0, -8.0, 12.0])
PHIBAR = np.array([1.0, -0.5, 2.0])


def _integrate(l, tau_s, t_end, phibar=PHIBAR):
    state = extension.init(phibar.shape[0], l, tau_s)
    for _ in range(int(round(t_end / tau_s))):
        s = RegressorSample(t=state.t, phibar=phibar, z=float(phibar @ THETA))
        state = extension.step(state, s, tau_s)
    return state


def _closed_form_error(l, tau_s, t_end=0.05):
    state = _integrate(l, tau_s, t_end)
    exact = (1.0 - np.exp(-l * t_end)) / l * np.outer(PHIBAR, PHIBAR)
    return float(np.max(np.abs(state.phi - exact)) / np.max(np.abs(exact)))


def test_init_zero_state():
    """Test zero initial conditions."""
    state = extension.init(3, 100.0)
    assert np.array_equal(state.phi, np.zeros((3, 3)))
    assert np.array_equal(state.y, np.zeros(3))
    assert state.t == 0.0


def test_init_rejects_bad_arguments():
    """Test ValueError on n < 1 and l <= 0."""
    with pytest.raises(ValueError):
        extension.init(0, 100.0)
    with pytest.raises(ValueError):
        extension.init(3, 0.0)


def test_constant_regressor_matches_closed_form():
    """Test Euler against (1 - e^{-lt})/l phibar phibar^T within 2 l tau_s."""
    l, tau_s = 100.0, 1e-4
    assert _closed_form_error(l, tau_s) <= 2.0 * l * tau_s


def test_first_order_convergence():
    """Test that halving tau_s halves the error within 20%."""
    coarse = _closed_form_error(100.0, 1e-4)
    fine = _closed_form_error(100.0, 5e-5)
    assert coarse / fine == pytest.approx(2.0, rel=0.2)


def test_consistency_residual_stays_at_rounding_level():
    """Test y = phi theta in the noise-free setting."""
    state = _integrate(100.0, 1e-4, 0.2)
    assert extension.consistency_residual(state, THETA) <= 1e-12


def test_phi_stays_symmetric_psd():
    """Test symmetry and non-negative eigenvalues after many steps."""
    state = _integrate(100.0, 1e-4, 0.1)
    assert np.array_equal(state.phi, state.phi.T)
    assert np.min(np.linalg.eigvalsh(state.phi)) >= -1e-15


def test_time_is_step_count():
    """Test that t is steps * tau_s."""
    state = _integrate(100.0, 1e-4, 0.05)
    assert state.steps == 500
    assert state.t == 500 * 1e-4


def test_unstable_step_rejected():
    """Test StabilityError when l * tau_s >= 1."""
    state = extension.init(3, 100.0)
    s = RegressorSample(t=0.0, phibar=PHIBAR, z=0.0)
    with pytest.raises(StabilityError):
        extension.step(state, s, 0.01)


def test_dimension_mismatch_rejected():
    """Test DimensionError for a sample of the wrong size."""
    state = extension.init(2, 100.0)
    with pytest.raises(DimensionError):
        extension.step(state, RegressorSample(t=0.0, phibar=PHIBAR, z=0.0), 1e-4)


def test_time_mismatch_rejected():
    """Test TimeMismatchError for stale samples and a changed step."""
    state = extension.init(3, 100.0, 1e-4)
    with pytest.raises(TimeMismatchError):
        extension.step(state, RegressorSample(t=0.5, phibar=PHIBAR, z=0.0), 1e-4)
    state = extension.step(state, RegressorSample(t=0.0, phibar=PHIBAR, z=0.0), 1e-4)
    with pytest.raises(TimeMismatchError):
        extension.step(state, RegressorSample(t=state.t, phibar=PHIBAR, z=0.0), 2e-4)
