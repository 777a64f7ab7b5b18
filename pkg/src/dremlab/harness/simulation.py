"""Simulation orchestrator.

One run samples the scenario, advances the shared extension filter, and
feeds every selected law from the same per-step inputs. Ground truth is
used only for the logged diagnostics.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from dremlab import extension
from dremlab.diagnostics import ErrorRecord, nullspace_switches
from dremlab.estimators import EstimatorState, dremr_step, drem_step, gradient_step, new_state
from dremlab.linalg import (
    FloatArray,
    adjugate,
    complementary_products,
    determinant,
    eig_sym,
    inf_norm,
    recompose,
)
from dremlab.models import Law, RunConfig
from dremlab.regularization import mix, oracle_decompose, regularize
from dremlab.signals import ScenarioSignal, normalize

logger = logging.getLogger(__name__)

LAW_SUFFIX = {Law.GRADIENT: "grad", Law.DREM: "drem", Law.DREM_REGULARIZED: "dremr"}


@dataclass(frozen=True)
class TraceRecord:
    """Everything logged at one instant.

    theta_hat holds the estimates known for this record; traces read back
    from CSV only carry the regularized law's estimate.
    """

    t: float
    phibar: FloatArray
    z: float
    eigenvalues: FloatArray
    rank: int
    omega: float
    gamma: float
    theta_hat: dict[Law, FloatArray]
    tilde_z: dict[Law, float]
    d: FloatArray
    Theta: FloatArray
    identifiable: tuple[int, ...]
    V2: Optional[FloatArray] = None
    adjugate_residual: Optional[float] = None
    consistency_residual: Optional[float] = None


@dataclass
class TraceLog:
    """Logged records of one run plus the run's identity."""

    config: RunConfig
    records: list[TraceRecord] = field(default_factory=list)
    phibar_max: float = 0.0
    guard_hits: dict[str, int] = field(default_factory=dict)
    in_memory: bool = True

    @property
    def n(self) -> int:
        return self.config.scenario.n

    @property
    def theta(self) -> FloatArray:
        return np.array(self.config.scenario.theta_true, dtype=np.float64)

    @property
    def theta_max(self) -> float:
        return self.config.scenario.theta_bound

    @property
    def laws(self) -> list[Law]:
        return list(self.config.laws)

    @property
    def times(self) -> FloatArray:
        return np.array([r.t for r in self.records], dtype=np.float64)

    def series(self, attr: str) -> FloatArray:
        """One record attribute across the trace (records, or records x n)."""
        return np.array([getattr(r, attr) for r in self.records], dtype=np.float64)

    def has_estimate(self, law: Law) -> bool:
        return bool(self.records) and law in self.records[0].theta_hat

    def theta_hat(self, law: Law) -> FloatArray:
        return np.array([r.theta_hat[law] for r in self.records], dtype=np.float64)

    def tilde_theta(self, law: Law) -> FloatArray:
        return self.theta_hat(law) - self.theta

    def tilde_Theta(self) -> FloatArray:
        return self.theta_hat(Law.DREM_REGULARIZED) - self.series("Theta")

    def tilde_z(self, law: Law) -> FloatArray:
        return np.array([r.tilde_z.get(law, math.nan) for r in self.records], dtype=np.float64)

    def masks(self) -> FloatArray:
        n = self.n
        return np.array(
            [[1.0 if i in r.identifiable else 0.0 for i in range(n)] for r in self.records]
        )

    def error_records(self, law: Law = Law.DREM_REGULARIZED) -> list[ErrorRecord]:
        theta = self.theta
        return [
            ErrorRecord(
                t=r.t,
                tilde_theta=r.theta_hat[law] - theta,
                tilde_Theta=r.theta_hat[law] - r.Theta,
                tilde_z=r.tilde_z[law],
            )
            for r in self.records
        ]

    def switch_times(self) -> list[float]:
        """Rank or nullspace changes between consecutive records.

        Uses projector jumps when the bases are in memory; traces read back
        from CSV fall back to rank changes and jumps in d.
        """
        times = self.times
        row_tol = self.config.row_tol
        if self.records and all(r.V2 is not None for r in self.records):
            return nullspace_switches(times, [r.V2 for r in self.records], row_tol)
        d = self.series("d")
        ranks = [r.rank for r in self.records]
        limit = 10.0 * row_tol * max(1.0, self.theta_max)
        return [
            float(times[k])
            for k in range(1, len(self.records))
            if ranks[k] != ranks[k - 1] or inf_norm(d[k] - d[k - 1]) > limit
        ]


def _initial_states(cfg: RunConfig) -> dict[Law, EstimatorState]:
    theta0 = cfg.initial_estimate
    gamma_i = None if cfg.gamma_i is None else np.array(cfg.gamma_i, dtype=np.float64)
    return {
        law: new_state(
            law,
            theta0,
            Gamma=cfg.gamma_matrix if law == Law.GRADIENT else None,
            gamma_i=gamma_i,
            gamma0=cfg.gamma0,
            gamma1=cfg.gamma1,
            eps=cfg.eps,
        )
        for law in cfg.laws
    }


def run(cfg: RunConfig) -> TraceLog:
    """Simulate every selected law over the scenario horizon.

    Records are logged every `log_stride` steps starting at t = 0; the last
    step is at round(horizon / tau_s).

    Raises:
        StabilityError: From the extension filter when l * tau_s >= 1
    """
    spec = cfg.scenario
    signal = ScenarioSignal(spec)
    theta = signal.theta
    n = spec.n
    tau_s = cfg.tau_s
    n_steps = int(round(spec.horizon / tau_s))

    state = extension.init(n, cfg.l, tau_s)
    states = _initial_states(cfg)
    trace = TraceLog(config=cfg)
    last_rank = -1

    logger.info(
        "running %s: %d steps of %.3g s, laws %s",
        spec.name,
        n_steps,
        tau_s,
        ", ".join(law.value for law in cfg.laws),
    )

    for k in range(n_steps + 1):
        t = min(state.t, spec.horizon)
        s = signal.sample(t)
        if spec.normalize:
            s = normalize(s)
        trace.phibar_max = max(trace.phibar_max, float(np.linalg.norm(s.phibar)))

        eig = eig_sym(state.phi, cfg.eps_bar, cfg.eig_method)
        lambda_bar, _ = regularize(eig, cfg.eps, cfg.eps_bar)
        reg = mix(eig, lambda_bar, state.y, cfg.eps)

        updated = dict(states)
        if Law.GRADIENT in states:
            updated[Law.GRADIENT] = gradient_step(states[Law.GRADIENT], s, tau_s)
        if Law.DREM in states:
            updated[Law.DREM] = drem_step(
                states[Law.DREM],
                determinant(state.phi),
                adjugate(state.phi) @ state.y,
                tau_s,
                cfg.drem_gain_mode,
                eig.lambda_min_nonzero,
            )
        if Law.DREM_REGULARIZED in states:
            regularized = states[Law.DREM_REGULARIZED]
            updated[Law.DREM_REGULARIZED] = dremr_step(regularized, reg, eig, tau_s)

        if eig.r_eff != last_rank:
            logger.debug("t = %.4f: rank %d -> %d", t, max(last_rank, 0), eig.r_eff)
            last_rank = eig.r_eff

        if k % cfg.log_stride == 0:
            oracle = oracle_decompose(eig, theta, cfg.row_tol)
            adj_phi = recompose(eig.V, complementary_products(reg.lambda_bar))
            gamma = (
                updated[Law.DREM_REGULARIZED].last_gamma
                if Law.DREM_REGULARIZED in updated
                else math.nan
            )
            trace.records.append(
                TraceRecord(
                    t=t,
                    phibar=s.phibar,
                    z=s.z,
                    eigenvalues=eig.eigenvalues,
                    rank=eig.r_eff,
                    omega=reg.omega,
                    gamma=gamma,
                    theta_hat={law: st.theta_hat for law, st in states.items()},
                    tilde_z={
                        law: float(np.dot(s.phibar, st.theta_hat - theta))
                        for law, st in states.items()
                    },
                    d=oracle.d,
                    Theta=oracle.Theta,
                    identifiable=tuple(sorted(oracle.identifiable)),
                    V2=eig.V2.copy(),
                    adjugate_residual=inf_norm(adj_phi @ reg.Phi - reg.omega * np.eye(n)),
                    consistency_residual=extension.consistency_residual(state, theta),
                )
            )

        states = updated
        if k < n_steps:
            state = extension.step(state, s, tau_s)

    trace.guard_hits = {law.value: st.guard_hits for law, st in states.items() if st.guard_hits}
    for law_name, hits in trace.guard_hits.items():
        logger.warning("%s: no-overshoot guard fired on %d steps", law_name, hits)
    logger.info("finished %s: %d records", spec.name, len(trace.records))
    return trace


def run_summary(trace: TraceLog) -> dict[str, Any]:
    """Final errors per law, for console output."""
    summary: dict[str, Any] = {"records": len(trace.records), "phibar_max": trace.phibar_max}
    if not trace.records:
        return summary
    last = trace.records[-1]
    for law, theta_hat in last.theta_hat.items():
        summary[f"|tilde_theta_{LAW_SUFFIX[law]}|"] = float(np.linalg.norm(theta_hat - trace.theta))
    summary["rank"] = last.rank
    return summary
