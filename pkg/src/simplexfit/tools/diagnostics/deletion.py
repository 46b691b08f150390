"""
Case deletion: refit without selected observations and report relative changes.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence

import numpy as np

from simplexfit.errors import DataError, NumericalError
from simplexfit.tools.diagnostics.envelope import map_replicates
from simplexfit.tools.estimation.fitting import FittedModel, fit, inference_table, require_converged

logger = logging.getLogger(__name__)


@dataclass
class ParameterChange:
    name: str
    estimate: float
    se: float
    estimate_change_pct: float
    se_change_pct: float
    p_value: float


@dataclass
class DeletionResult:
    cases: tuple
    converged: bool
    changes: List[ParameterChange] = field(default_factory=list)
    sigma2_max_before: float = float("nan")
    sigma2_max_after: float = float("nan")
    message: str = ""


def _pct(new: float, old: float) -> float:
    return float("nan") if old == 0.0 else 100.0 * (new - old) / abs(old)


def delete_and_refit(fitted: FittedModel, cases: Iterable[int]) -> DeletionResult:
    """
    Refit without the given 0-based cases.

    Returns:
        DeletionResult; an empty case set reports zero changes without refitting,
        and a refit that fails to converge is reported rather than raised

    Raises:
        NotConvergedError: The original fit did not converge
        DataError: Cases out of range, or too few observations remain
    """
    require_converged(fitted, "Case deletion")
    cases = tuple(sorted(set(int(c) for c in cases)))
    before = inference_table(fitted)
    sigma2_before = float(np.max(fitted.state.sigma2))

    if not cases:
        return DeletionResult(
            cases=cases,
            converged=True,
            changes=[ParameterChange(r.name, r.estimate, r.se, 0.0, 0.0, r.p_value) for r in before],
            sigma2_max_before=sigma2_before,
            sigma2_max_after=sigma2_before,
        )

    remaining = fitted.data.n - len(cases)
    if remaining <= fitted.spec.k + fitted.spec.q:
        raise DataError(
            f"Deleting {len(cases)} cases leaves {remaining} observations for "
            f"{fitted.spec.k + fitted.spec.q} parameters"
        )
    reduced = fitted.data.drop(cases)
    label = ", ".join(str(c + 1) for c in cases)
    try:
        refitted = fit(fitted.spec, reduced, fitted.options)
    except NumericalError as e:
        logger.warning(f"Refit without cases {label} failed: {e}")
        return DeletionResult(cases=cases, converged=False, sigma2_max_before=sigma2_before, message=str(e))
    if not refitted.converged:
        message = f"Refit without cases {label} did not converge"
        logger.warning(message)
        return DeletionResult(cases=cases, converged=False, sigma2_max_before=sigma2_before, message=message)

    after = inference_table(refitted)
    changes = [
        ParameterChange(
            name=new.name,
            estimate=new.estimate,
            se=new.se,
            estimate_change_pct=_pct(new.estimate, old.estimate),
            se_change_pct=_pct(new.se, old.se),
            p_value=new.p_value,
        )
        for old, new in zip(before, after)
    ]
    return DeletionResult(
        cases=cases,
        converged=True,
        changes=changes,
        sigma2_max_before=sigma2_before,
        sigma2_max_after=float(np.max(refitted.state.sigma2)),
    )


def delete_and_refit_many(
    fitted: FittedModel, case_sets: Sequence[Iterable[int]], workers: int = 1
) -> List[DeletionResult]:
    case_sets = [tuple(cases) for cases in case_sets]
    return map_replicates(lambda j: delete_and_refit(fitted, case_sets[j]), len(case_sets), workers)
