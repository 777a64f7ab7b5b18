"""Measurable regressor/regressand pairs for piecewise scenarios.

A scenario is compiled once into a ScenarioSignal; sampling it at time t
evaluates the active piece of every regressor component and forms
z = phibar^T theta_true.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from dremlab.errors import ConfigError, NonFiniteError, OutOfRangeError
from dremlab.linalg import FloatArray
from dremlab.models import ScenarioSpec, SignalKind, SignalPiece

logger = logging.getLogger(__name__)

HORIZON_TOL = 1e-9


@dataclass(frozen=True)
class RegressorSample:
    """One time instant of the measurable pair (phibar, z)."""

    t: float
    phibar: FloatArray
    z: float


def evaluate_piece(piece: SignalPiece, t: float) -> float:
    """Value of one elementary expression at time t."""
    kind = piece.kind
    if kind == SignalKind.SIN:
        return piece.c * math.sin(piece.a * t)
    if kind == SignalKind.EXP_COS:
        # coefficient applied last so collinear components differ by exact factors
        return piece.c * (math.exp(-t) * math.cos(piece.a * t))
    if kind == SignalKind.EXP:
        return piece.c * math.exp(-t)
    if kind == SignalKind.CONSTANT:
        return piece.c
    return piece.c * math.exp(-t) + piece.offset


class ScenarioSignal:
    """Compiled, immutable sampler for a scenario."""

    def __init__(self, spec: ScenarioSpec) -> None:
        self.spec = spec
        self.theta = np.array(spec.theta_true, dtype=np.float64)
        self._components = [comp.pieces for comp in spec.components]
        self._tol = HORIZON_TOL * max(1.0, spec.horizon)

    def _active(self, pieces: list[SignalPiece], t: float) -> SignalPiece:
        # left-closed pieces; the last one also owns its right endpoint
        for piece in pieces[:-1]:
            if piece.interval[0] <= t < piece.interval[1]:
                return piece
        return pieces[-1]

    def sample(self, t: float) -> RegressorSample:
        """Evaluate (phibar(t), z(t)).

        Raises:
            OutOfRangeError: If t lies outside [0, horizon]
        """
        if t < -self._tol or t > self.spec.horizon + self._tol:
            raise OutOfRangeError(f"t = {t} outside [0, {self.spec.horizon}]")
        phibar = np.array(
            [evaluate_piece(self._active(pieces, t), t) for pieces in self._components],
            dtype=np.float64,
        )
        if not np.all(np.isfinite(phibar)):
            raise NonFiniteError(f"regressor is not finite at t = {t}")
        z = float(np.dot(phibar, self.theta))
        return RegressorSample(t=t, phibar=phibar, z=z)


def sample(spec: ScenarioSpec, t: float) -> RegressorSample:
    """Sample a scenario at time t (compiles the scenario on every call)."""
    return ScenarioSignal(spec).sample(t)


def normalize(s: RegressorSample) -> RegressorSample:
    """Scale phibar and z by 1/(1 + |phibar|^2) so that |phibar| <= 1."""
    ns = 1.0 / (1.0 + float(np.dot(s.phibar, s.phibar)))
    return RegressorSample(t=s.t, phibar=s.phibar * ns, z=s.z * ns)


def load_scenario(path: Path | str) -> ScenarioSpec:
    """Read a scenario file.

    Raises:
        ConfigError: If the file is missing, unreadable or invalid
    """
    path = Path(path)
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read scenario file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"scenario file {path} does not hold a mapping")
    data.setdefault("name", path.stem)
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario file {path}: {e}") from e


def dump_scenario(spec: ScenarioSpec, path: Path | str) -> Path:
    """Write a scenario in the file format load_scenario reads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(spec.model_dump(mode="json", exclude_none=True), f, sort_keys=False)
    logger.debug("wrote scenario %s to %s", spec.name, path)
    return path
