"""Kreisselmeier extension filter.

Turns the vector regression z = phibar^T theta into the matrix regression
y = phi theta by integrating

    phi' = -l phi + phibar phibar^T,   y' = -l y + phibar z,

from zero initial conditions with explicit Euler at a fixed step.
"""

from dataclasses import dataclass

import numpy as np

from dremlab.errors import DimensionError, StabilityError, TimeMismatchError
from dremlab.linalg import FloatArray, inf_norm
from dremlab.signals import RegressorSample

TIME_TOL = 1e-9


@dataclass(frozen=True)
class ExtensionState:
    """Filter state (phi, y) after `steps` Euler steps of size tau_s.

    Time is kept as the step count so that switch instants such as t = 5
    land on the grid exactly.
    """

    phi: FloatArray
    y: FloatArray
    l: float
    steps: int = 0
    tau_s: float = 0.0

    @property
    def t(self) -> float:
        return self.steps * self.tau_s

    @property
    def n(self) -> int:
        return int(self.y.shape[0])


def init(n: int, l: float, tau_s: float = 0.0) -> ExtensionState:
    """Zero filter state at t = 0.

    Raises:
        ValueError: If n < 1 or l <= 0
    """
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    if l <= 0:
        raise ValueError(f"filter gain l must be positive, got {l}")
    return ExtensionState(phi=np.zeros((n, n)), y=np.zeros(n), l=l, steps=0, tau_s=tau_s)


def step(state: ExtensionState, s: RegressorSample, tau_s: float) -> ExtensionState:
    """Advance the filter by one Euler step using the left-endpoint sample.

    Raises:
        StabilityError: If l * tau_s >= 1
        TimeMismatchError: If the sample time differs from the state time
        DimensionError: If the sample dimension differs from the state
    """
    decay = 1.0 - state.l * tau_s
    if decay <= 0.0:
        raise StabilityError(f"l * tau_s = {state.l * tau_s:.3g} must stay below 1")
    if s.phibar.shape != state.y.shape:
        raise DimensionError(f"sample has {s.phibar.shape[0]} components, state has {state.n}")
    if state.steps and state.tau_s != tau_s:
        raise TimeMismatchError(f"step changed from {state.tau_s} to {tau_s} mid-run")
    if abs(s.t - state.t) > TIME_TOL * max(1.0, abs(state.t)):
        raise TimeMismatchError(f"sample at t = {s.t} applied to state at t = {state.t}")

    phi = decay * state.phi + tau_s * np.outer(s.phibar, s.phibar)
    phi = 0.5 * (phi + phi.T)
    y = decay * state.y + tau_s * s.phibar * s.z
    return ExtensionState(phi=phi, y=y, l=state.l, steps=state.steps + 1, tau_s=tau_s)


def consistency_residual(state: ExtensionState, theta_true: FloatArray) -> float:
    """|y - phi theta|_inf; zero up to rounding in the noise-free setting."""
    return inf_norm(state.y - state.phi @ np.asarray(theta_true, dtype=np.float64))
