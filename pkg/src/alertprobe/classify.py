"""Final verdict mapping and validated-alert assembly.

Deliberately trivial: all domain judgment lives in the probe suite so
each classification criterion has exactly one home.
"""

from __future__ import annotations

from .model import (
    AlertCategory,
    NormalizedAlert,
    ProbeOutcome,
    ProbeResult,
    ValidatedAlert,
    ValidationError,
    Verdict,
    utc_now,
)

_VERDICTS = {
    ProbeOutcome.EXPLOITABLE: Verdict.TRUE_POSITIVE,
    ProbeOutcome.NON_EXPLOITABLE: Verdict.FALSE_POSITIVE,
    ProbeOutcome.INCONCLUSIVE: Verdict.INCONCLUSIVE,
}


def classify(category: AlertCategory, outcome: ProbeOutcome) -> Verdict:
    """Map a probe outcome to a verdict; uniform across categories."""
    return _VERDICTS[outcome]


def assemble(alert: NormalizedAlert, result: ProbeResult) -> ValidatedAlert:
    """Attach the probe result and verdict to the alert, payload preserved."""
    if result.alert_id != alert.alert_id:
        raise ValidationError(
            f"probe result for {result.alert_id} cannot be attached to alert {alert.alert_id}"
        )
    return ValidatedAlert(
        alert=alert,
        probe_results=(result,),
        verdict=classify(alert.category, result.outcome),
        validated_at=utc_now(),
    )
