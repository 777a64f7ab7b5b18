"""Identification laws stepped by explicit Euler.

- gradient: theta_hat' = -Gamma phibar (phibar^T theta_hat - z)
- drem: element-wise theta_hat_i' = -gamma omega (omega theta_hat_i - Y_i) with
  omega = det(phi), Y = adj(phi) y
- drem-regularized: the same mixed form on (omega, Upsilon) from the
  regularized regressor, with the switched gain gamma(t)
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from dremlab.errors import DimensionError
from dremlab.linalg import EigenDecomposition, FloatArray
from dremlab.models import GainMode, Law
from dremlab.regularization import RegularizedRegression
from dremlab.signals import RegressorSample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorState:
    """Estimate and gain configuration for one law.

    Attributes:
        theta_hat: Current estimate
        law: Which identification law this state belongs to
        Gamma: Gradient gain matrix
        gamma_i: Per-element plain DREM gains
        gamma0: Normalized gain of the switched schedule
        gamma1: Fallback gain of the switched schedule
        eps: Substitute eigenvalue used in the schedule threshold
        last_gamma: Gain applied on the latest step
        guard_hits: Steps where the no-overshoot guard fired
    """

    theta_hat: FloatArray
    law: Law
    Gamma: Optional[FloatArray] = None
    gamma_i: Optional[FloatArray] = None
    gamma0: float = 5.0
    gamma1: float = 1.0
    eps: float = 0.4
    last_gamma: float = 0.0
    guard_hits: int = 0


def new_state(
    law: Law,
    theta0: FloatArray,
    Gamma: Optional[FloatArray] = None,
    gamma_i: Optional[FloatArray] = None,
    gamma0: float = 5.0,
    gamma1: float = 1.0,
    eps: float = 0.4,
) -> EstimatorState:
    """Initial state theta_hat = theta0 for the given law.

    Raises:
        ValueError: If the law's gains are missing or not positive
    """
    theta0 = np.array(theta0, dtype=np.float64)
    n = theta0.shape[0]
    if law == Law.GRADIENT:
        if Gamma is None:
            raise ValueError("gradient law needs Gamma")
        Gamma = np.asarray(Gamma, dtype=np.float64)
        if Gamma.shape != (n, n) or np.min(np.linalg.eigvalsh(0.5 * (Gamma + Gamma.T))) <= 0:
            raise ValueError("Gamma must be a symmetric positive definite n x n matrix")
    if gamma_i is not None:
        gamma_i = np.asarray(gamma_i, dtype=np.float64)
        if gamma_i.shape != (n,) or np.any(gamma_i <= 0):
            raise ValueError(f"gamma_i must hold {n} positive gains")
    if gamma0 <= 0 or gamma1 <= 0 or eps <= 0:
        raise ValueError("gamma0, gamma1 and eps must be positive")
    return EstimatorState(
        theta_hat=theta0,
        law=law,
        Gamma=Gamma,
        gamma_i=gamma_i,
        gamma0=gamma0,
        gamma1=gamma1,
        eps=eps,
    )


def gradient_step(st: EstimatorState, s: RegressorSample, tau_s: float) -> EstimatorState:
    """One Euler step of the gradient law."""
    if st.Gamma is None:
        raise ValueError("gradient_step needs a state created for the gradient law")
    tilde_z = float(np.dot(s.phibar, st.theta_hat)) - s.z
    theta_hat = st.theta_hat - tau_s * (st.Gamma @ s.phibar) * tilde_z
    return replace(st, theta_hat=theta_hat)


def gain_schedule(
    omega: float,
    lambda_min_nonzero: float,
    n: int,
    eps: float,
    gamma0: float,
    gamma1: float,
) -> float:
    """Switched gain: gamma1 while omega <= min(lambda_min^n, eps^n), else gamma0/omega^2.

    Raises:
        ValueError: If eps <= 0
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    threshold = min(lambda_min_nonzero**n, eps**n)
    if omega <= threshold:
        return gamma1
    return gamma0 / (omega * omega)


def _mixed_update(
    st: EstimatorState,
    gamma: FloatArray | float,
    omega: float,
    Y: FloatArray,
    tau_s: float,
) -> EstimatorState:
    """theta_hat <- theta_hat - tau_s gamma omega (omega theta_hat - Y), guarded.

    Components with tau_s gamma omega^2 > 1 are set to the fixed point Y/omega.
    """
    if Y.shape != st.theta_hat.shape:
        raise DimensionError(
            f"mixed regressand has shape {Y.shape}, expected {st.theta_hat.shape}"
        )
    gain = tau_s * np.asarray(gamma) * omega * omega
    last_gamma = float(np.max(gamma))
    theta_hat = st.theta_hat - tau_s * gamma * omega * (omega * st.theta_hat - Y)
    if omega == 0.0 or not np.any(gain > 1.0):
        return replace(st, theta_hat=theta_hat, last_gamma=last_gamma)

    if st.guard_hits == 0:
        logger.warning(
            "%s: tau_s*gamma*omega^2 = %.3g > 1, clamping to the fixed point",
            st.law.value,
            float(np.max(gain)),
        )
    theta_hat = np.where(gain > 1.0, Y / omega, theta_hat)
    return replace(st, theta_hat=theta_hat, last_gamma=last_gamma, guard_hits=st.guard_hits + 1)


def drem_step(
    st: EstimatorState,
    omega: float,
    Y: FloatArray,
    tau_s: float,
    gain_mode: GainMode = GainMode.NORMALIZED,
    lambda_min_nonzero: float = 0.0,
) -> EstimatorState:
    """One Euler step of plain DREM on omega = det(phi), Y = adj(phi) y.

    In per-element mode each component uses its own gamma_i; in normalized
    mode all share the switched schedule, fed with the smallest eigenvalue
    of phi at or above eps_bar.
    """
    if gain_mode == GainMode.PER_ELEMENT:
        if st.gamma_i is None:
            raise ValueError("per-element DREM needs gamma_i")
        gamma: FloatArray | float = st.gamma_i
    else:
        n = st.theta_hat.shape[0]
        gamma = gain_schedule(omega, lambda_min_nonzero, n, st.eps, st.gamma0, st.gamma1)
    return _mixed_update(st, gamma, omega, np.asarray(Y, dtype=np.float64), tau_s)


def dremr_step(
    st: EstimatorState,
    reg: RegularizedRegression,
    eig: EigenDecomposition,
    tau_s: float,
) -> EstimatorState:
    """One Euler step of regularized DREM on (omega, Upsilon)."""
    gamma = gain_schedule(reg.omega, eig.lambda_min_nonzero, eig.n, st.eps, st.gamma0, st.gamma1)
    return _mixed_update(st, gamma, reg.omega, reg.Upsilon, tau_s)
