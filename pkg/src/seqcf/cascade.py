"""Two-by-two cohort epidemiology: relative risks, the renal cascade, and
treatment-stratified prevalence comparisons.

All statistics are exact counts; fractions are reproducible from the
stored numerators and denominators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cohort import Cohort, Period
from .errors import CohortError

Outcome = str  # the literal "outcome" selects the patient outcome label y
Variable = tuple[str, Period]


@dataclass(frozen=True)
class CascadeStep:
    name: str
    exposure: str
    outcome: str
    n_exposed: int
    n_unexposed: int
    k_exposed: int
    k_unexposed: int

    @property
    def p_exposed(self) -> float:
        return self.k_exposed / self.n_exposed

    @property
    def p_unexposed(self) -> float:
        return self.k_unexposed / self.n_unexposed

    @property
    def relative_risk(self) -> float:
        return self.p_exposed / self.p_unexposed

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "exposure": self.exposure,
            "outcome": self.outcome,
            "n_exposed": self.n_exposed,
            "n_unexposed": self.n_unexposed,
            "k_exposed": self.k_exposed,
            "k_unexposed": self.k_unexposed,
            "p_exposed": self.p_exposed,
            "p_unexposed": self.p_unexposed,
            "relative_risk": self.relative_risk,
        }


def _column(cohort: Cohort, variable: Variable | Outcome) -> np.ndarray:
    if variable == "outcome":
        return cohort.y.astype(bool)
    code, period = variable
    return cohort.X[:, int(period), cohort.catalog.index_of(code)].astype(bool)


def _label(variable: Variable | Outcome) -> str:
    if variable == "outcome":
        return "outcome"
    code, period = variable
    return f"{code}@{period.suffix}"


def relative_risk(
    cohort: Cohort,
    exposure: Variable,
    outcome: Variable | Outcome,
    exclude: Variable | None = None,
    name: str | None = None,
) -> CascadeStep:
    """Direct-count relative risk, optionally excluding a patient stratum.

    ``exclude`` drops every patient with the given bit set before the
    2x2 table is formed (e.g. "among patients without a prior event").
    """
    mask = np.ones(cohort.n, dtype=bool)
    if exclude is not None:
        mask &= ~_column(cohort, exclude)
    exposed = _column(cohort, exposure) & mask
    unexposed = ~_column(cohort, exposure) & mask
    events = _column(cohort, outcome)

    n_exposed, n_unexposed = int(exposed.sum()), int(unexposed.sum())
    if n_exposed == 0:
        raise CohortError(f"empty stratum: no patients exposed to {_label(exposure)}")
    if n_unexposed == 0:
        raise CohortError(f"empty stratum: no patients unexposed to {_label(exposure)}")
    k_exposed = int((events & exposed).sum())
    k_unexposed = int((events & unexposed).sum())
    if k_unexposed == 0:
        raise CohortError(
            f"empty stratum: no {_label(outcome)} events among patients unexposed "
            f"to {_label(exposure)}"
        )
    return CascadeStep(
        name=name or f"{_label(exposure)} -> {_label(outcome)}",
        exposure=_label(exposure),
        outcome=_label(outcome),
        n_exposed=n_exposed,
        n_unexposed=n_unexposed,
        k_exposed=k_exposed,
        k_unexposed=k_unexposed,
    )


def cascade_report(cohort: Cohort) -> tuple[CascadeStep, CascadeStep]:
    """The two-step renal cascade: chronic kidney disease raises the acute
    kidney injury rate in the final period (among patients with no prior
    injury), and final-period injury raises the outcome rate."""
    step1 = relative_risk(
        cohort,
        ("N18", Period.HISTORY),
        ("N17", Period.LAST),
        exclude=("N17", Period.HISTORY),
        name="chronic kidney disease -> acute kidney injury",
    )
    step2 = relative_risk(
        cohort,
        ("N17", Period.LAST),
        "outcome",
        name="acute kidney injury -> outcome",
    )
    return step1, step2


@dataclass(frozen=True)
class StratifierComparison:
    stratifier: str
    p_treated: float
    p_untreated: float
    n_treated: int
    n_untreated: int

    @property
    def ratio(self) -> float:
        return self.p_treated / self.p_untreated

    def to_json(self) -> dict:
        return {
            "stratifier": self.stratifier,
            "p_treated": self.p_treated,
            "p_untreated": self.p_untreated,
            "n_treated": self.n_treated,
            "n_untreated": self.n_untreated,
            "ratio": self.ratio,
        }


def confounding_profile(
    cohort: Cohort,
    treatment: Variable,
    stratifiers: list[Variable | Outcome],
    restrict: Variable | None = None,
) -> list[StratifierComparison]:
    """Prevalence of each stratifier among treated vs untreated patients.

    ``restrict`` limits the comparison to patients with the given bit set
    (e.g. glucose control compared among diabetics only).
    """
    mask = np.ones(cohort.n, dtype=bool)
    if restrict is not None:
        mask &= _column(cohort, restrict)
    treated = _column(cohort, treatment) & mask
    untreated = ~_column(cohort, treatment) & mask
    if not treated.any():
        raise CohortError(f"empty treatment group: no patients on {_label(treatment)}")
    if not untreated.any():
        raise CohortError(f"empty comparison group: all patients on {_label(treatment)}")
    out = []
    for stratifier in stratifiers:
        col = _column(cohort, stratifier)
        out.append(
            StratifierComparison(
                stratifier=_label(stratifier),
                p_treated=float(col[treated].mean()),
                p_untreated=float(col[untreated].mean()),
                n_treated=int(treated.sum()),
                n_untreated=int(untreated.sum()),
            )
        )
    return out


def full_report(cohort: Cohort) -> dict:
    """Cascade steps plus the insulin confounding profile, JSON-ready."""
    step1, step2 = cascade_report(cohort)
    confounding = confounding_profile(
        cohort,
        ("Insulin", Period.HISTORY),
        [("N18", Period.HISTORY), ("N17", Period.HISTORY), ("I50", Period.HISTORY)],
    )
    glucose = confounding_profile(
        cohort,
        ("Insulin", Period.HISTORY),
        [("Glucose_H", Period.LAST)],
        restrict=("E11", Period.HISTORY),
    )
    return {
        "cascade": [step1.to_json(), step2.to_json()],
        "confounding": [c.to_json() for c in confounding],
        "glucose_among_diabetic": [c.to_json() for c in glucose],
    }


def render_text(report: dict) -> str:
    lines = ["Cascade steps"]
    for step in report["cascade"]:
        lines.append(
            f"  {step['name']}: "
            f"p_exposed {step['k_exposed']}/{step['n_exposed']} = {step['p_exposed']:.3f}, "
            f"p_unexposed {step['k_unexposed']}/{step['n_unexposed']} = {step['p_unexposed']:.3f}, "
            f"RR = {step['relative_risk']:.2f}"
        )
    lines.append("")
    lines.append("Treatment profile (insulin, History)")
    for row in report["confounding"]:
        lines.append(
            f"  {row['stratifier']:<14} treated {row['p_treated']:.3f} "
            f"vs untreated {row['p_untreated']:.3f} (ratio {row['ratio']:.2f})"
        )
    lines.append("")
    lines.append("Glucose control among diabetics")
    for row in report["glucose_among_diabetic"]:
        lines.append(
            f"  {row['stratifier']:<14} treated {row['p_treated']:.3f} "
            f"vs untreated {row['p_untreated']:.3f}"
        )
    return "\n".join(lines)


def report_to_json_text(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
