"""Data models for scenarios, run configuration and reports."""

import math
from enum import Enum
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

PIECE_JOIN_TOL = 1e-12


class SignalKind(str, Enum):
    """Elementary expressions a regressor piece can take."""

    SIN = "sin"                  # c*sin(a*t)
    EXP_COS = "exp_cos"          # c*cos(a*t)*e^(-t)
    EXP = "exp"                  # c*e^(-t)
    CONSTANT = "constant"        # c
    EXP_OFFSET = "exp_offset"    # c*e^(-t) + offset


class Law(str, Enum):
    """Identification laws the harness can step."""

    GRADIENT = "gradient"
    DREM = "drem"
    DREM_REGULARIZED = "drem-regularized"


class GainMode(str, Enum):
    """Gain choice for the plain DREM law."""

    PER_ELEMENT = "per-element"
    NORMALIZED = "normalized"


class ExcitationClass(str, Enum):
    """Excitation classes, strongest first."""

    PE = "PE"
    FE = "FE"
    SPE = "s-PE"
    SFE = "s-FE"
    NONE = "none"


class CheckStatus(str, Enum):
    """Outcome of one acceptance check."""

    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


class SignalPiece(BaseModel):
    """One elementary expression on a time interval."""

    interval: tuple[float, float] = Field(description="[start, end] in seconds")
    kind: SignalKind = Field(description="Elementary expression kind")
    c: float = Field(default=1.0, description="Amplitude coefficient")
    a: float = Field(default=1.0, description="Angular frequency for sin/exp_cos")
    offset: float = Field(default=0.0, description="Additive constant for exp_offset")

    @field_validator("interval")
    @classmethod
    def _ordered(cls, v: tuple[float, float]) -> tuple[float, float]:
        if v[1] < v[0]:
            raise ValueError(f"interval end {v[1]} precedes start {v[0]}")
        return v


class ComponentSpec(BaseModel):
    """Piecewise definition of one regressor component."""

    pieces: list[SignalPiece] = Field(min_length=1)


class ScenarioSpec(BaseModel):
    """A noise-free linear regression z = phibar(t)^T theta over [0, horizon]."""

    name: str = Field(default="custom", description="Scenario identifier")
    description: Optional[str] = Field(default=None)
    n: int = Field(ge=1, description="Number of unknown parameters")
    theta_true: list[float] = Field(description="True parameter vector")
    theta_max: Optional[float] = Field(
        default=None, gt=0, description="Declared bound on |theta|; defaults to |theta_true|"
    )
    horizon: float = Field(ge=0, description="Simulation horizon in seconds")
    normalize: bool = Field(default=False, description="Scale samples by 1/(1 + |phibar|^2)")
    components: list[ComponentSpec]

    @model_validator(mode="after")
    def _check_structure(self) -> "ScenarioSpec":
        if len(self.theta_true) != self.n:
            raise ValueError(f"theta_true has {len(self.theta_true)} entries, expected {self.n}")
        if len(self.components) != self.n:
            raise ValueError(f"{len(self.components)} components given, expected {self.n}")
        if not all(math.isfinite(x) for x in self.theta_true):
            raise ValueError("theta_true must be finite")
        if self.theta_max is not None and self.theta_norm > self.theta_max * (1 + 1e-12):
            raise ValueError(f"|theta_true| = {self.theta_norm:.6g} exceeds theta_max")
        for idx, comp in enumerate(self.components, start=1):
            self._check_partition(idx, comp)
        return self

    def _check_partition(self, idx: int, comp: ComponentSpec) -> None:
        pieces = comp.pieces
        if abs(pieces[0].interval[0]) > PIECE_JOIN_TOL:
            raise ValueError(f"component {idx} does not start at t = 0")
        for left, right in zip(pieces, pieces[1:]):
            if abs(left.interval[1] - right.interval[0]) > PIECE_JOIN_TOL:
                raise ValueError(
                    f"component {idx}: pieces must join without gap or overlap "
                    f"({left.interval} then {right.interval})"
                )
        if abs(pieces[-1].interval[1] - self.horizon) > PIECE_JOIN_TOL:
            raise ValueError(f"component {idx} does not end at the horizon {self.horizon}")

    @property
    def theta_norm(self) -> float:
        return float(np.linalg.norm(self.theta_true))

    @property
    def theta_bound(self) -> float:
        """Declared theta_max, or |theta_true| when none is declared."""
        return self.theta_max if self.theta_max is not None else self.theta_norm


class ExcitationConfig(BaseModel):
    """Thresholds for runtime excitation classification."""

    mu: float = Field(default=1e-6, gt=0, description="Eigenvalue floor")
    window_T: float = Field(default=0.5, gt=0, description="Window length in seconds")
    k: float = Field(default=1.0, ge=1, description="Window multiplier")
    eps_bar: float = Field(default=1e-10, ge=0, description="Rank threshold")
    delta_min: float = Field(default=1e-3, gt=0, description="Minimal qualifying interval length")


class ExcitationReport(BaseModel):
    """Result of classifying an eigenvalue trajectory."""

    excitation_class: ExcitationClass
    pe: bool
    fe: bool
    spe: bool
    sfe: bool
    spe_rank: int = Field(default=0, description="Smallest count of eigenvalues above mu")
    rank_trace: list[tuple[float, int]] = Field(default_factory=list)
    qualifying_intervals: list[tuple[float, float]] = Field(
        default_factory=list, description="Intervals with all eigenvalues above mu"
    )
    partial_intervals: list[tuple[float, float]] = Field(
        default_factory=list, description="Intervals with at least one eigenvalue above mu"
    )
    switch_times: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _implication_chain(self) -> "ExcitationReport":
        if self.pe and not (self.fe and self.spe):
            raise ValueError("PE reported without FE and s-PE")
        if (self.fe or self.spe) and not self.sfe:
            raise ValueError("FE or s-PE reported without s-FE")
        return self


class CheckResult(BaseModel):
    """Outcome of one acceptance check."""

    name: str
    status: CheckStatus
    measured: Optional[float] = None
    bound: Optional[float] = None
    detail: str = ""
    data: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != CheckStatus.FAIL

    def line(self) -> str:
        """One-line structured rendering: name, status, measured, bound."""
        measured = "-" if self.measured is None else f"{self.measured:.6g}"
        bound = "-" if self.bound is None else f"{self.bound:.6g}"
        text = f"{self.name} {self.status.value} measured={measured} bound={bound}"
        return f"{text} {self.detail}".rstrip()


class RunConfig(BaseModel):
    """Everything needed to reproduce one simulation run."""

    scenario: ScenarioSpec
    laws: list[Law] = Field(default_factory=lambda: list(Law))
    tau_s: float = Field(default=1e-4, gt=0, description="Euler step in seconds")
    l: float = Field(default=100.0, gt=0, description="Extension filter gain")
    eps: float = Field(default=0.4, gt=0, description="Substitute eigenvalue")
    eps_bar: float = Field(default=1e-10, ge=0, description="Rank threshold")
    gamma0: float = Field(default=5.0, gt=0)
    gamma1: float = Field(default=1.0, gt=0)
    Gamma: float | list[list[float]] = Field(default=5.0, description="Gradient gain")
    gamma_i: Optional[list[float]] = Field(default=None, description="Plain DREM per-element gains")
    drem_gain_mode: GainMode = GainMode.NORMALIZED
    theta0: Optional[list[float]] = Field(
        default=None, description="Initial estimate; zeros if unset"
    )
    log_stride: int = Field(default=10, ge=1)
    row_tol: float = Field(default=1e-6, gt=0)
    eig_method: Literal["jacobi", "lapack"] = "jacobi"

    @field_validator("scenario", mode="before")
    @classmethod
    def _resolve_preset(cls, v: Any) -> Any:
        if isinstance(v, str):
            from dremlab.presets import get_preset

            return get_preset(v)
        return v

    @model_validator(mode="after")
    def _check_parameters(self) -> "RunConfig":
        n = self.scenario.n
        if self.l * self.tau_s >= 1.0:
            raise ValueError(f"l * tau_s = {self.l * self.tau_s:.3g} must stay below 1")
        if not self.laws:
            raise ValueError("at least one law must be selected")
        if self.theta0 is not None and len(self.theta0) != n:
            raise ValueError(f"theta0 has {len(self.theta0)} entries, expected {n}")
        if self.gamma_i is not None:
            if len(self.gamma_i) != n or min(self.gamma_i) <= 0:
                raise ValueError(f"gamma_i must hold {n} positive gains")
        elif self.drem_gain_mode == GainMode.PER_ELEMENT and Law.DREM in self.laws:
            raise ValueError("per-element DREM gains require gamma_i")
        gamma = self.gamma_matrix
        if gamma.shape != (n, n):
            raise ValueError(f"Gamma must be {n}x{n}")
        if np.max(np.abs(gamma - gamma.T)) > 1e-12 or np.min(np.linalg.eigvalsh(gamma)) <= 0:
            raise ValueError("Gamma must be symmetric positive definite")
        return self

    @property
    def gamma_matrix(self) -> np.ndarray:
        if isinstance(self.Gamma, (int, float)):
            return float(self.Gamma) * np.eye(self.scenario.n)
        return np.array(self.Gamma, dtype=np.float64)

    @property
    def initial_estimate(self) -> np.ndarray:
        if self.theta0 is None:
            return np.zeros(self.scenario.n)
        return np.array(self.theta0, dtype=np.float64)


class CheckSpec(BaseModel):
    """A check name with its parameters, as listed in a suite."""

    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class SuiteSpec(BaseModel):
    """Named selection of acceptance checks."""

    description: str = ""
    checks: list[CheckSpec] = Field(default_factory=list)


class AcceptanceReport(BaseModel):
    """Results of one acceptance run."""

    selection: str
    results: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]
