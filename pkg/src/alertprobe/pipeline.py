"""End-to-end orchestration: parse, normalize, probe, classify.

The conservation contract: every finding in the input ends up exactly
once in validated alerts, unsupported-check skips, or record errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backend import TargetBackend
from .classify import assemble
from .engine import SafetyPolicy, execute_batch, plan_probes
from .ingest import CheckCatalog, RecordError, UnsupportedCheckError, normalize, parse_findings
from .model import NormalizedAlert, RawFinding, ValidatedAlert


@dataclass(frozen=True)
class SkippedFinding:
    resource_id: str
    check_id: str
    reason: str


@dataclass
class ValidationRun:
    validated: list[ValidatedAlert]
    skipped: list[SkippedFinding] = field(default_factory=list)
    record_errors: list[RecordError] = field(default_factory=list)

    @property
    def total_findings(self) -> int:
        return len(self.validated) + len(self.skipped) + len(self.record_errors)


def normalize_findings(
    findings: list[RawFinding], catalog: CheckCatalog
) -> tuple[list[NormalizedAlert], list[SkippedFinding]]:
    alerts: list[NormalizedAlert] = []
    skipped: list[SkippedFinding] = []
    for finding in findings:
        try:
            alerts.append(normalize(finding, catalog))
        except UnsupportedCheckError as exc:
            skipped.append(SkippedFinding(finding.resource_id, finding.check_id, str(exc)))
    return alerts, skipped


def validate_alerts(
    alerts: list[NormalizedAlert], backend: TargetBackend, policy: SafetyPolicy
) -> list[ValidatedAlert]:
    """Probe every alert and attach verdicts; output order matches input."""
    plans = [plan_probes(alert) for alert in alerts]
    results = execute_batch(plans, backend, policy)
    return [assemble(alert, result) for alert, result in zip(alerts, results)]


def run_validation(
    document: bytes | str,
    catalog: CheckCatalog,
    backend: TargetBackend,
    policy: SafetyPolicy,
    input_format: str = "generic_json",
) -> ValidationRun:
    """Full pipeline over a scanner document."""
    parsed = parse_findings(document, format=input_format)
    alerts, skipped = normalize_findings(parsed.findings, catalog)
    validated = validate_alerts(alerts, backend, policy)
    return ValidationRun(validated=validated, skipped=skipped, record_errors=parsed.errors)
