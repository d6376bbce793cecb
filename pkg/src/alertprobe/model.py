"""Vendor-agnostic alert schema shared by every stage of the pipeline.

Categories, findings, probe outcomes, evidence records, and verdicts.
All types are immutable after construction and safe to share between
concurrent workers.
"""

from __future__ import annotations

import base64
import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any


class AlertProbeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AlertProbeError):
    """Input failed a precondition (empty field, id mismatch, bad value)."""


class AlertCategory(str, Enum):
    """The four threat categories a finding can be validated against."""

    PUBLIC_STORAGE = "public_storage"
    PUBLIC_COMPUTE = "public_compute"
    EXPOSED_ACCESS_KEY = "exposed_access_key"
    SECRET_LEAK = "secret_leak"


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ProbeOutcome(str, Enum):
    """What active probing established about a flagged resource."""

    EXPLOITABLE = "exploitable"
    NON_EXPLOITABLE = "non_exploitable"
    INCONCLUSIVE = "inconclusive"


class Verdict(str, Enum):
    TRUE_POSITIVE = "true_positive"
    FALSE_POSITIVE = "false_positive"
    INCONCLUSIVE = "inconclusive"


class ExitStatus(str, Enum):
    """Mechanical result of a single probe action."""

    SUCCESS = "success"
    DENIED = "denied"
    TIMEOUT = "timeout"
    ERROR = "error"


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; 'Z' suffix accepted on Python 3.10."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValidationError(f"invalid timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def isoformat_z(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def make_alert_id(source_tool: str, check_id: str, resource_id: str) -> str:
    """Deterministic, collision-resistant alert identifier.

    A content digest rather than a random UUID, so re-running ingestion
    over the same findings is idempotent.
    """
    for name, value in (
        ("source_tool", source_tool),
        ("check_id", check_id),
        ("resource_id", resource_id),
    ):
        if not value:
            raise ValidationError(f"make_alert_id: {name} must be non-empty")
    digest = hashlib.sha256(
        "\x1f".join((source_tool, check_id, resource_id)).encode("utf-8")
    )
    return digest.hexdigest()[:32]


@dataclass(frozen=True)
class RawFinding:
    """One scanner finding, as parsed; raw_payload is carried through unmodified."""

    source_tool: str
    check_id: str
    resource_id: str
    resource_type: str
    region: str
    account_id: str
    severity: Severity
    status_text: str
    observed_at: datetime
    raw_payload: bytes

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_tool": self.source_tool,
            "check_id": self.check_id,
            "resource_id": self.resource_id,
            "resource_type": self.resource_type,
            "region": self.region,
            "account_id": self.account_id,
            "severity": self.severity.value,
            "status_text": self.status_text,
            "observed_at": isoformat_z(self.observed_at),
            "raw_payload_b64": base64.b64encode(self.raw_payload).decode("ascii"),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RawFinding":
        return cls(
            source_tool=d["source_tool"],
            check_id=d["check_id"],
            resource_id=d["resource_id"],
            resource_type=d["resource_type"],
            region=d["region"],
            account_id=d["account_id"],
            severity=Severity(d["severity"]),
            status_text=d["status_text"],
            observed_at=parse_rfc3339(d["observed_at"]),
            raw_payload=base64.b64decode(d["raw_payload_b64"]),
        )


@dataclass(frozen=True)
class NormalizedAlert:
    """Scanner-independent alert with category, enrichment, and the original finding."""

    alert_id: str
    category: AlertCategory
    resource_id: str
    resource_type: str
    region: str
    account_id: str
    severity: Severity
    observed_at: datetime
    enrichment: dict[str, str]
    source: RawFinding

    def to_dict(self) -> dict[str, Any]:
        return {
            "alert_id": self.alert_id,
            "category": self.category.value,
            "resource_id": self.resource_id,
            "resource_type": self.resource_type,
            "region": self.region,
            "account_id": self.account_id,
            "severity": self.severity.value,
            "observed_at": isoformat_z(self.observed_at),
            "enrichment": dict(self.enrichment),
            "source": self.source.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "NormalizedAlert":
        return cls(
            alert_id=d["alert_id"],
            category=AlertCategory(d["category"]),
            resource_id=d["resource_id"],
            resource_type=d["resource_type"],
            region=d["region"],
            account_id=d["account_id"],
            severity=Severity(d["severity"]),
            observed_at=parse_rfc3339(d["observed_at"]),
            enrichment=dict(d["enrichment"]),
            source=RawFinding.from_dict(d["source"]),
        )


@dataclass(frozen=True)
class EvidenceEntry:
    """One probe action and what it observed."""

    at: datetime
    action: str
    observed: str
    exit_status: ExitStatus

    def to_dict(self) -> dict[str, Any]:
        return {
            "at": isoformat_z(self.at),
            "action": self.action,
            "observed": self.observed,
            "exit_status": self.exit_status.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvidenceEntry":
        return cls(
            at=parse_rfc3339(d["at"]),
            action=d["action"],
            observed=d["observed"],
            exit_status=ExitStatus(d["exit_status"]),
        )


@dataclass(frozen=True)
class ProbeResult:
    """Outcome and evidence of executing one probe plan."""

    alert_id: str
    outcome: ProbeOutcome
    evidence: tuple[EvidenceEntry, ...]
    started_at: datetime
    finished_at: datetime
    duration_ms: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "alert_id": self.alert_id,
            "outcome": self.outcome.value,
            "evidence": [e.to_dict() for e in self.evidence],
            "started_at": isoformat_z(self.started_at),
            "finished_at": isoformat_z(self.finished_at),
            "duration_ms": self.duration_ms,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ProbeResult":
        return cls(
            alert_id=d["alert_id"],
            outcome=ProbeOutcome(d["outcome"]),
            evidence=tuple(EvidenceEntry.from_dict(e) for e in d["evidence"]),
            started_at=parse_rfc3339(d["started_at"]),
            finished_at=parse_rfc3339(d["finished_at"]),
            duration_ms=d["duration_ms"],
        )


@dataclass(frozen=True)
class ValidatedAlert:
    """Final classification attached to the alert, original payload preserved."""

    alert: NormalizedAlert
    probe_results: tuple[ProbeResult, ...]
    verdict: Verdict
    validated_at: datetime = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        if self.verdict is not Verdict.INCONCLUSIVE and not self.probe_results:
            raise ValidationError(
                "probe_results must be non-empty for a conclusive verdict"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "alert": self.alert.to_dict(),
            "probe_results": [r.to_dict() for r in self.probe_results],
            "verdict": self.verdict.value,
            "validated_at": isoformat_z(self.validated_at),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ValidatedAlert":
        return cls(
            alert=NormalizedAlert.from_dict(d["alert"]),
            probe_results=tuple(ProbeResult.from_dict(r) for r in d["probe_results"]),
            verdict=Verdict(d["verdict"]),
            validated_at=parse_rfc3339(d["validated_at"]),
        )
