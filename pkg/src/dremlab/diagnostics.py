"""Runtime verification of excitation, monotonicity and contraction.

All functions work on logged series (numpy arrays indexed by record) and
never touch simulation state.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from dremlab.errors import DimensionError, InsufficientDataError
from dremlab.linalg import EigenDecomposition, FloatArray
from dremlab.models import ExcitationClass, ExcitationConfig, ExcitationReport

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-9
SWITCH_FACTOR = 10.0
QUASI_TOL = 1e-12
RUN_TOL = 1e-12


@dataclass(frozen=True)
class ErrorRecord:
    """Estimation errors at one logged instant."""

    t: float
    tilde_theta: FloatArray
    tilde_Theta: FloatArray
    tilde_z: float

    @property
    def theta_norm(self) -> float:
        return float(np.linalg.norm(self.tilde_theta))

    @property
    def Theta_norm(self) -> float:
        return float(np.linalg.norm(self.tilde_Theta))


def error_record(
    t: float, phibar: FloatArray, theta_hat: FloatArray, theta: FloatArray, Theta: FloatArray
) -> ErrorRecord:
    """Build an ErrorRecord; tilde_z is phibar . tilde_theta by construction."""
    tilde_theta = theta_hat - theta
    return ErrorRecord(
        t=t,
        tilde_theta=tilde_theta,
        tilde_Theta=theta_hat - Theta,
        tilde_z=float(np.dot(phibar, tilde_theta)),
    )


@dataclass
class ContractionReport:
    """Outcome of the finite-interval contraction test."""

    t_start: float
    t_end: float
    beta1: float
    beta: float
    norm_start: float
    norm_end: float
    z_start: float
    z_end: float
    theta_holds: bool
    z_holds: bool
    mode: str
    sufficient: bool

    @property
    def holds(self) -> bool:
        return self.theta_holds and self.z_holds


@dataclass
class MonotonicityReport:
    """Violations of per-component non-increase between switches."""

    violations: list[tuple[int, float]] = field(default_factory=list)
    worst_increase: float = 0.0
    checked_steps: int = 0

    @property
    def holds(self) -> bool:
        return not self.violations


def rank_of(eig: EigenDecomposition, eps_bar: float) -> int:
    """Number of eigenvalues at or above eps_bar."""
    return int(np.count_nonzero(eig.eigenvalues >= eps_bar))


def _runs(times: FloatArray, mask: np.ndarray, min_length: float) -> list[tuple[float, float]]:
    """Maximal runs of consecutive True records lasting at least min_length."""
    runs = []
    start: Optional[int] = None
    for k, flag in enumerate(mask):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            runs.append((start, k - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return [
        (float(times[a]), float(times[b]))
        for a, b in runs
        if times[b] - times[a] >= min_length - RUN_TOL
    ]


def classify(
    times: Sequence[float] | FloatArray,
    lambda_trace: Sequence[Sequence[float]] | FloatArray,
    cfg: ExcitationConfig,
    V2_trace: Optional[Sequence[FloatArray]] = None,
    row_tol: float = 1e-6,
) -> ExcitationReport:
    """Classify an eigenvalue trajectory of the extended regressor.

    Args:
        times: Record times, increasing
        lambda_trace: Eigenvalues per record (m x n)
        cfg: Thresholds mu, window_T, k, eps_bar, delta_min
        V2_trace: Nullspace bases per record; switches fall back to rank
            changes when omitted
        row_tol: Row-zero tolerance used for projector-jump detection

    Returns:
        ExcitationReport with class, flags, rank trace, intervals and switches

    Raises:
        InsufficientDataError: If the trace is shorter than k * window_T
    """
    t = np.asarray(times, dtype=np.float64)
    lam = np.asarray(lambda_trace, dtype=np.float64)
    if lam.ndim != 2 or lam.shape[0] != t.shape[0]:
        raise DimensionError(f"eigenvalue trace {lam.shape} does not match {t.shape[0]} times")
    start = cfg.k * cfg.window_T
    if t.size == 0 or t[-1] - t[0] < cfg.window_T or t[-1] < start:
        covered = 0.0 if t.size == 0 else float(t[-1] - t[0])
        raise InsufficientDataError(
            f"trace covers {covered:.3g} s, need at least k*T = {start:.3g} s"
        )

    n = lam.shape[1]
    above = np.count_nonzero(lam > cfg.mu, axis=1)
    tail = above[t >= start]

    qualifying = _runs(t, above == n, cfg.delta_min)
    partial = _runs(t, above >= 1, cfg.delta_min)
    fe = bool(qualifying)
    sfe = bool(partial)
    pe = bool(np.all(tail == n)) and fe
    spe = bool(np.all(tail >= 1)) and sfe

    if pe:
        cls = ExcitationClass.PE
    elif fe:
        cls = ExcitationClass.FE
    elif spe:
        cls = ExcitationClass.SPE
    elif sfe:
        cls = ExcitationClass.SFE
    else:
        cls = ExcitationClass.NONE

    ranks = np.count_nonzero(lam >= cfg.eps_bar, axis=1)
    if V2_trace is not None:
        switches = nullspace_switches(t, V2_trace, row_tol)
    else:
        switches = [float(t[k]) for k in range(1, t.size) if ranks[k] != ranks[k - 1]]

    return ExcitationReport(
        excitation_class=cls,
        pe=pe,
        fe=fe,
        spe=spe,
        sfe=sfe,
        spe_rank=int(tail.min()) if tail.size else 0,
        rank_trace=[(float(a), int(b)) for a, b in zip(t, ranks)],
        qualifying_intervals=qualifying,
        partial_intervals=partial,
        switch_times=switches,
    )


def projector(V2: FloatArray, n: Optional[int] = None) -> FloatArray:
    """Orthogonal projector V2 V2^T onto the nullspace (zero when V2 is empty)."""
    V2 = np.asarray(V2, dtype=np.float64)
    size = V2.shape[0] if n is None else n
    if V2.size == 0:
        return np.zeros((size, size))
    return V2 @ V2.T


def nullspace_switches(
    times: Sequence[float] | FloatArray,
    V2_trace: Sequence[FloatArray],
    row_tol: float = 1e-6,
) -> list[float]:
    """Times where the nullspace projector jumps by more than 10 * row_tol."""
    t = np.asarray(times, dtype=np.float64)
    if len(V2_trace) != t.shape[0]:
        raise DimensionError(f"{len(V2_trace)} bases for {t.shape[0]} times")
    switches = []
    prev: Optional[FloatArray] = None
    for k, V2 in enumerate(V2_trace):
        P = projector(V2)
        if prev is not None and np.max(np.abs(P - prev)) > SWITCH_FACTOR * row_tol:
            switches.append(float(t[k]))
        prev = P
    return switches


def first_excitation_interval(
    times: FloatArray,
    lambda_trace: FloatArray,
    switch_times: Sequence[float],
    mu: float,
) -> Optional[tuple[float, float]]:
    """(t_r+, t_e) for the first excitation interval.

    t_r+ is the first record with an eigenvalue above mu. A switch shows up
    in the filter one step after the regressor changes, so the record just
    before a detected switch may already sample the next regressor piece;
    t_e is the record before that one.
    """
    t = np.asarray(times, dtype=np.float64)
    lam = np.asarray(lambda_trace, dtype=np.float64)
    excited = np.flatnonzero(np.any(lam > mu, axis=1))
    if excited.size == 0:
        return None
    k0 = int(excited[0])
    t_start = float(t[k0])
    later = [s for s in switch_times if s > t_start]
    if not later:
        return t_start, float(t[-1])
    k1 = int(np.searchsorted(t, later[0], side="left")) - 2
    return t_start, float(t[max(k1, k0)])


def contraction_check(
    errors: Sequence[ErrorRecord],
    interval: tuple[float, float],
    theta_max: float,
    gamma0: float,
    beta_target: float = 1.0,
    initial_estimate: Optional[FloatArray] = None,
) -> ContractionReport:
    """Finite-interval contraction test for the regularized law.

    Computes beta1 = |tilde_theta(t_r+)| / theta_max and the bound
    beta = exp(-0.5 gamma0 delta) + 1/beta1 with delta = t_e - t_r+, then
    tests |tilde_theta(t_e)| <= beta |tilde_theta(t_r+)| and the same for
    |tilde_z|. The sufficient condition is beta1 > 1 and beta < beta_target.

    The mode is convergent when the sufficient condition holds, and
    quasi-convergent when it does not but the estimate started at zero.
    initial_estimate is the value the law holds until excitation starts.
    """
    t_start, t_end = interval
    first = _record_at(errors, t_start)
    last = _record_at(errors, t_end)
    delta = last.t - first.t

    norm_start = first.theta_norm
    beta1 = norm_start / theta_max
    beta = math.exp(-0.5 * gamma0 * delta) + (1.0 / beta1 if beta1 > 0 else math.inf)

    sufficient = beta1 > 1.0 and beta < beta_target
    zero_start = (
        initial_estimate is not None
        and float(np.max(np.abs(initial_estimate), initial=0.0)) <= QUASI_TOL
    )
    if sufficient:
        mode = "convergent"
    elif zero_start:
        mode = "quasi-convergent"
    else:
        mode = "non-convergent"

    report = ContractionReport(
        t_start=first.t,
        t_end=last.t,
        beta1=beta1,
        beta=beta,
        norm_start=norm_start,
        norm_end=last.theta_norm,
        z_start=abs(first.tilde_z),
        z_end=abs(last.tilde_z),
        theta_holds=last.theta_norm <= beta * norm_start,
        z_holds=abs(last.tilde_z) <= beta * abs(first.tilde_z),
        mode=mode,
        sufficient=sufficient,
    )
    logger.debug("contraction on [%.4g, %.4g]: %s", report.t_start, report.t_end, report)
    return report


def _record_at(errors: Sequence[ErrorRecord], t: float) -> ErrorRecord:
    """Latest record at or before t (the first record if t precedes all)."""
    if not errors:
        raise InsufficientDataError("no error records")
    chosen = errors[0]
    for rec in errors:
        if rec.t <= t + RUN_TOL:
            chosen = rec
        else:
            break
    return chosen


def monotonicity_check(
    times: FloatArray,
    abs_errors: FloatArray,
    switch_times: Sequence[float],
    tol: float = MONOTONE_TOL,
    t_start: float = 0.0,
    floor: float = 0.0,
) -> MonotonicityReport:
    """Check that each |tilde_Theta_i| is non-increasing between switches.

    A step from record k-1 to k is skipped when a switch time falls in
    (t_{k-1}, t_k] or when t_{k-1} < t_start. Increases of a component
    that stays at or below `floor` are integration noise and not counted.
    """
    t = np.asarray(times, dtype=np.float64)
    e = np.abs(np.asarray(abs_errors, dtype=np.float64))
    switches = np.sort(np.asarray(switch_times, dtype=np.float64))
    report = MonotonicityReport()
    for k in range(1, t.size):
        if t[k - 1] < t_start - RUN_TOL:
            continue
        lo = np.searchsorted(switches, t[k - 1], side="right")
        hi = np.searchsorted(switches, t[k], side="right")
        if hi > lo:
            continue
        report.checked_steps += 1
        increase = np.where(e[k] > floor, e[k] - e[k - 1], -np.inf)
        report.worst_increase = max(report.worst_increase, float(np.max(increase)))
        for i in np.flatnonzero(increase > tol):
            report.violations.append((int(i), float(t[k])))
    return report


def envelope_check(
    times: FloatArray,
    norms: FloatArray,
    switch_times: Sequence[float],
    gamma0: float,
    settle: float = 0.05,
    min_interval: float = 0.5,
    floor: float = 1e-6,
) -> list[tuple[float, float, float]]:
    """Measured envelope constants between switches.

    On each inter-switch interval lasting at least min_interval, starting
    `settle` seconds after the switch, computes
    A = max |tilde_Theta(t)| / (exp(-gamma0 (t - t0)) |tilde_Theta(t0)|)
    over records whose envelope value stays above `floor`.

    Returns:
        List of (t0, t1, A) per measured interval
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(norms, dtype=np.float64)
    edges = [float(t[0])] + sorted(s for s in switch_times if t[0] < s <= t[-1]) + [float(t[-1])]
    results = []
    for a, b in zip(edges, edges[1:]):
        if b - a < min_interval:
            continue
        idx = np.flatnonzero((t >= a + settle - RUN_TOL) & (t < b))
        if idx.size < 2 or v[idx[0]] <= floor:
            continue
        t0 = t[idx[0]]
        envelope = np.exp(-gamma0 * (t[idx] - t0)) * v[idx[0]]
        keep = envelope >= floor
        ratio = float(np.max(v[idx][keep] / envelope[keep]))
        results.append((float(t0), float(t[idx[-1]]), ratio))
    return results


def set_bound(norms: FloatArray) -> tuple[float, float]:
    """(max over the series, final value) of a norm series."""
    v = np.asarray(norms, dtype=np.float64)
    return float(np.max(v)), float(v[-1])


def rank_windows(
    times: FloatArray, ranks: FloatArray, rank: int, min_length: float = 0.0
) -> list[tuple[float, float]]:
    """Maximal intervals during which the rank equals `rank`."""
    t = np.asarray(times, dtype=np.float64)
    return _runs(t, np.asarray(ranks) == rank, min_length)


def identifiability_windows(
    times: FloatArray, masks: FloatArray, min_length: float = 0.0
) -> dict[int, list[tuple[float, float]]]:
    """Maximal intervals during which each component stays identifiable."""
    t = np.asarray(times, dtype=np.float64)
    m = np.asarray(masks, dtype=bool)
    return {i: _runs(t, m[:, i], min_length) for i in range(m.shape[1])}


def partial_contraction(
    times: FloatArray,
    component_errors: FloatArray,
    window: tuple[float, float],
    gamma0: float,
) -> tuple[float, float]:
    """Measured |e(t_b)|/|e(t_a)| and the ideal factor exp(-gamma0 (t_b - t_a))."""
    t = np.asarray(times, dtype=np.float64)
    e = np.abs(np.asarray(component_errors, dtype=np.float64))
    ka = int(np.argmin(np.abs(t - window[0])))
    kb = int(np.argmin(np.abs(t - window[1])))
    ratio = float(e[kb] / e[ka]) if e[ka] > 0 else (0.0 if e[kb] == 0 else math.inf)
    return ratio, math.exp(-gamma0 * (t[kb] - t[ka]))
