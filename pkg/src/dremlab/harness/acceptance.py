"""Acceptance checks over a simulation trace.

Checks are selected by suite name (config/suites.yaml) or by a
comma-separated list of check names. Each check returns a CheckResult;
checks that need data a CSV trace does not carry are skipped.
"""

import logging
import math
from typing import Any, Callable, Optional, Sequence

import numpy as np

from dremlab.config import LabConfig
from dremlab.diagnostics import (
    ContractionReport,
    classify,
    contraction_check,
    envelope_check,
    first_excitation_interval,
    monotonicity_check,
    partial_contraction,
    rank_windows,
    set_bound,
)
from dremlab.errors import TraceDataError, UnknownCheckError
from dremlab.harness.simulation import TraceLog
from dremlab.models import (
    AcceptanceReport,
    CheckResult,
    CheckSpec,
    CheckStatus,
    ExcitationConfig,
    Law,
    SuiteSpec,
)

logger = logging.getLogger(__name__)

ADJUGATE_TOL = 1e-9
PROPOSITION_TOL = 1e-12
SET_TOL = 1e-6

CheckFn = Callable[[TraceLog, dict[str, Any]], CheckResult]


def _status(ok: bool) -> CheckStatus:
    return CheckStatus.PASS if ok else CheckStatus.FAIL


def _in_range(value: float, bounds: Optional[Sequence[float]]) -> bool:
    return bounds is None or bounds[0] <= value <= bounds[1]


class AcceptanceRunner:
    """Runs named checks against traces.

    Uses suites from config/suites.yaml and optional excitation threshold
    overrides from config/defaults.yaml.
    """

    def __init__(
        self,
        suites: Optional[dict[str, SuiteSpec]] = None,
        excitation: Optional[dict[str, Any]] = None,
    ) -> None:
        """Initialize the runner.

        Args:
            suites: Named check selections
            excitation: Overrides for ExcitationConfig fields
        """
        self.suites = suites or {}
        self.excitation = excitation or {}
        self.checks: dict[str, CheckFn] = {
            "adjugate_identity": self._check_adjugate_identity,
            "proposition_bound": self._check_proposition_bound,
            "monotonicity": self._check_monotonicity,
            "identifiability": self._check_identifiability,
            "contraction": self._check_contraction,
            "non_convergent": self._check_non_convergent,
            "set_convergence": self._check_set_convergence,
            "drem_inert": self._check_drem_inert,
            "gradient_norm": self._check_gradient_norm,
            "rank_window": self._check_rank_window,
            "envelope": self._check_envelope,
            "partial_contraction": self._check_partial_contraction,
            "excitation": self._check_excitation,
        }

    def resolve(self, selection: str | Sequence[str | CheckSpec]) -> list[CheckSpec]:
        """Turn a suite name or check list into CheckSpecs.

        Raises:
            UnknownCheckError: If a name matches neither a suite nor a check
        """
        if isinstance(selection, str):
            if selection in self.suites:
                specs = list(self.suites[selection].checks)
            else:
                names = [s.strip() for s in selection.split(",") if s.strip()]
                specs = [CheckSpec(name=name) for name in names]
        else:
            specs = [s if isinstance(s, CheckSpec) else CheckSpec(name=s) for s in selection]

        unknown = [s.name for s in specs if s.name not in self.checks]
        if unknown or not specs:
            known = ", ".join(sorted(self.suites) + sorted(self.checks))
            raise UnknownCheckError(
                f"unknown check or suite {unknown or selection!r}; known: {known}"
            )
        return specs

    def run(self, trace: TraceLog, selection: str | Sequence[str | CheckSpec]) -> AcceptanceReport:
        """Run the selected checks.

        Returns:
            AcceptanceReport whose exit_code is 0 iff no check failed
        """
        specs = self.resolve(selection)
        label = selection if isinstance(selection, str) else ",".join(
            s.name if isinstance(s, CheckSpec) else s for s in selection
        )
        report = AcceptanceReport(selection=label)
        for spec in specs:
            try:
                result = self.checks[spec.name](trace, spec.params)
            except TraceDataError as e:
                logger.warning("skipping %s: %s", spec.name, e)
                result = CheckResult(name=spec.name, status=CheckStatus.SKIP, detail=str(e))
            logger.info("%s", result.line())
            report.results.append(result)
        return report

    def excitation_config(self, trace: TraceLog) -> ExcitationConfig:
        cfg = trace.config
        base: dict[str, Any] = {"eps_bar": cfg.eps_bar, "delta_min": 10.0 * cfg.tau_s}
        return ExcitationConfig(**{**base, **self.excitation})

    def _require(self, trace: TraceLog, law: Law) -> None:
        if not trace.records:
            raise TraceDataError("trace has no records")
        if not trace.has_estimate(law):
            where = "in-process trace" if not trace.in_memory else f"the {law.value} law in the run"
            raise TraceDataError(f"needs the {law.value} estimate ({where})")

    def _check_adjugate_identity(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        if not trace.records or any(r.adjugate_residual is None for r in trace.records):
            raise TraceDataError("adjugate residuals are only kept in-process")
        tol = params.get("tol", ADJUGATE_TOL)
        worst = max(
            float(r.adjugate_residual or 0.0) / max(1.0, abs(r.omega)) for r in trace.records
        )
        return CheckResult(
            name="adjugate_identity", status=_status(worst <= tol), measured=worst, bound=tol
        )

    def _check_proposition_bound(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        cfg = trace.config
        n = trace.n
        tol = params.get("tol", PROPOSITION_TOL)
        worst = math.inf
        worst_t = None
        for r in trace.records:
            if r.rank < 1:
                continue
            lam = r.eigenvalues
            lam_min = float(np.min(lam[lam >= cfg.eps_bar]))
            margin = r.omega - min(lam_min**n, cfg.eps**n)
            if margin < worst:
                worst, worst_t = margin, r.t
        if worst_t is None:
            return CheckResult(
                name="proposition_bound", status=CheckStatus.FAIL, detail="no excited record"
            )
        return CheckResult(
            name="proposition_bound",
            status=_status(worst >= -tol),
            measured=worst,
            bound=-tol,
            detail=f"tightest at t={worst_t:.4g}",
        )

    def _check_monotonicity(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        self._require(trace, Law.DREM_REGULARIZED)
        tol = params.get("tol", 1e-9)
        rep = monotonicity_check(
            trace.times,
            np.abs(trace.tilde_Theta()),
            trace.switch_times(),
            tol=tol,
            t_start=params.get("t_start", 0.0),
            floor=params.get("floor", 0.0),
        )
        detail = f"{rep.checked_steps} steps checked"
        if rep.violations:
            i, t = rep.violations[0]
            detail += f"; {len(rep.violations)} violations, first i={i + 1} t={t:.4g}"
        return CheckResult(
            name="monotonicity",
            status=_status(rep.holds),
            measured=rep.worst_increase,
            bound=tol,
            detail=detail,
            data={"violations": rep.violations[:20]},
        )

    def _check_identifiability(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        self._require(trace, Law.DREM_REGULARIZED)
        i = int(params.get("index", trace.n)) - 1
        t_start = params.get("t_start", 0.0)
        d_tol = params.get("d_tol", 1e-6)
        problems = []
        for r in trace.records:
            if r.t < t_start:
                continue
            if i not in r.identifiable or abs(r.d[i]) > d_tol:
                problems.append(r.t)
        ratio, _ = partial_contraction(
            trace.times,
            trace.tilde_theta(Law.DREM_REGULARIZED)[:, i],
            tuple(params.get("window", (0.0, 1.0))),
            trace.config.gamma0,
        )
        factor = params.get("factor", 0.1)
        ok = not problems and ratio <= factor
        detail = f"component {i + 1}"
        if problems:
            detail += f"; not identifiable from t={problems[0]:.4g}"
        return CheckResult(
            name="identifiability", status=_status(ok), measured=ratio, bound=factor, detail=detail
        )

    def _contraction(self, trace: TraceLog) -> ContractionReport:
        self._require(trace, Law.DREM_REGULARIZED)
        excitation = self.excitation_config(trace)
        interval = first_excitation_interval(
            trace.times, trace.series("eigenvalues"), trace.switch_times(), excitation.mu
        )
        if interval is None:
            raise TraceDataError("no record with an eigenvalue above mu")
        return contraction_check(
            trace.error_records(Law.DREM_REGULARIZED),
            interval,
            trace.theta_max,
            trace.config.gamma0,
            initial_estimate=trace.config.initial_estimate,
        )

    def _check_contraction(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        rep = self._contraction(trace)
        ok = (
            rep.holds
            and _in_range(rep.beta1, params.get("beta1_range"))
            and _in_range(rep.beta, params.get("beta_range"))
        )
        return CheckResult(
            name="contraction",
            status=_status(ok),
            measured=rep.beta,
            bound=1.0,
            detail=(
                f"beta1={rep.beta1:.4g} on [{rep.t_start:.4g}, {rep.t_end:.4g}] "
                f"|e|: {rep.norm_start:.4g}->{rep.norm_end:.4g} mode={rep.mode}"
            ),
            data={
                "beta1": rep.beta1,
                "beta": rep.beta,
                "t_start": rep.t_start,
                "t_end": rep.t_end,
                "theta_holds": rep.theta_holds,
                "z_holds": rep.z_holds,
                "mode": rep.mode,
            },
        )

    def _check_non_convergent(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        rep = self._contraction(trace)
        norms = np.linalg.norm(trace.tilde_theta(Law.DREM_REGULARIZED), axis=1)
        peak, _ = set_bound(norms)
        bound = trace.theta_max + SET_TOL
        ok = not rep.sufficient and peak <= bound
        return CheckResult(
            name="non_convergent",
            status=_status(ok),
            measured=peak,
            bound=bound,
            detail=f"mode={rep.mode} beta1={rep.beta1:.4g}",
            data={"mode": rep.mode, "exceeds_initial": bool(peak > norms[0])},
        )

    def _check_set_convergence(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        law = Law(params.get("law", Law.DREM_REGULARIZED.value))
        self._require(trace, law)
        _, final = set_bound(np.linalg.norm(trace.tilde_theta(law), axis=1))
        bound = trace.theta_max + SET_TOL
        return CheckResult(
            name="set_convergence",
            status=_status(final <= bound),
            measured=final,
            bound=bound,
            detail=law.value,
        )

    def _check_drem_inert(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        self._require(trace, Law.DREM)
        drift = float(
            np.linalg.norm(trace.theta_hat(Law.DREM)[-1] - trace.config.initial_estimate)
        )
        bound = params.get("factor", 1e-3) * float(np.linalg.norm(trace.theta))
        return CheckResult(
            name="drem_inert", status=_status(drift <= bound), measured=drift, bound=bound
        )

    def _check_gradient_norm(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        self._require(trace, Law.GRADIENT)
        tol = params.get("tol", 1e-9)
        norms = np.linalg.norm(trace.tilde_theta(Law.GRADIENT), axis=1)
        worst = float(np.max(np.diff(norms))) if norms.size > 1 else 0.0
        return CheckResult(
            name="gradient_norm", status=_status(worst <= tol), measured=worst, bound=tol
        )

    def _check_rank_window(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        if not trace.records:
            raise TraceDataError("trace has no records")
        times = trace.times
        ranks = np.array([r.rank for r in trace.records])
        lo, hi = params.get("window", (10.0, 15.84))
        slack = params.get("tolerance", 0.5)
        min_length = params.get("min_length", 2.0)
        full = rank_windows(times, ranks, trace.n, min_length)
        overlapping = [w for w in full if w[1] >= lo - slack and w[0] <= hi + slack]
        after = ranks[times >= params.get("rank_from", 1e-3)]
        min_rank = int(after.min()) if after.size else 0
        longest = max((b - a for a, b in overlapping), default=0.0)
        return CheckResult(
            name="rank_window",
            status=_status(bool(overlapping) and min_rank >= 1),
            measured=longest,
            bound=min_length,
            detail=f"full-rank windows {full}; min rank {min_rank}",
        )

    def _check_envelope(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        self._require(trace, Law.DREM_REGULARIZED)
        a_max = params.get("a_max", 2.0)
        measured = envelope_check(
            trace.times,
            np.linalg.norm(trace.tilde_Theta(), axis=1),
            trace.switch_times(),
            trace.config.gamma0,
            settle=params.get("settle", 0.05),
            min_interval=params.get("min_interval", 0.5),
        )
        if not measured:
            return CheckResult(
                name="envelope", status=CheckStatus.FAIL, detail="no interval long enough"
            )
        worst = max(a for _, _, a in measured)
        return CheckResult(
            name="envelope",
            status=_status(worst <= a_max),
            measured=worst,
            bound=a_max,
            detail=f"{len(measured)} intervals",
            data={"intervals": measured},
        )

    def _check_partial_contraction(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        self._require(trace, Law.DREM_REGULARIZED)
        i = int(params.get("index", 1)) - 1
        window = tuple(params.get("window", (0.0, 1.0)))
        ratio, ideal = partial_contraction(
            trace.times,
            trace.tilde_theta(Law.DREM_REGULARIZED)[:, i],
            window,
            trace.config.gamma0,
        )
        bound = params.get("a_max", 2.0) * ideal
        # records strictly inside the window; the left end may still carry the previous basis
        lost = [
            r.t
            for r in trace.records
            if window[0] < r.t < window[1] and i not in r.identifiable
        ]
        detail = f"component {i + 1} over {window}"
        if lost:
            detail += f"; not identifiable on {len(lost)} records from t={lost[0]:.4g}"
        return CheckResult(
            name="partial_contraction",
            status=_status(ratio <= bound),
            measured=ratio,
            bound=bound,
            detail=detail,
            data={"index": i + 1, "window": list(window), "not_identifiable": lost},
        )

    def _check_excitation(self, trace: TraceLog, params: dict[str, Any]) -> CheckResult:
        rep = classify(trace.times, trace.series("eigenvalues"), self.excitation_config(trace))
        flags = {"pe": rep.pe, "fe": rep.fe, "spe": rep.spe, "sfe": rep.sfe}
        expected = params.get("expect", {})
        mismatched = [k for k, v in expected.items() if k != "class" and flags.get(k) != v]
        if "class" in expected and expected["class"] != rep.excitation_class.value:
            mismatched.append("class")
        return CheckResult(
            name="excitation",
            status=_status(not mismatched),
            detail=f"class={rep.excitation_class.value} flags={flags}"
            + (f" mismatched={mismatched}" if mismatched else ""),
            data={"class": rep.excitation_class.value, **flags},
        )


def acceptance(
    trace: TraceLog,
    selection: str | Sequence[str | CheckSpec],
    config_dir: Optional[str] = None,
) -> AcceptanceReport:
    """Run checks with suites and thresholds from the lab configuration."""
    lab = LabConfig.load(config_dir)
    return AcceptanceRunner(lab.suites, lab.excitation).run(trace, selection)
