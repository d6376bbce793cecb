"""Scanner output parsing, categorization, and normalization.

Two input dialects are supported, both UTF-8 JSON arrays of finding
objects: a Prowler-style document (PascalCase keys) and a generic
dialect (snake_case keys, optional string-valued ``metadata`` map).
Each finding's verbatim sub-document is preserved as its raw payload.
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

from .model import (
    AlertCategory,
    AlertProbeError,
    NormalizedAlert,
    RawFinding,
    Severity,
    ValidationError,
    isoformat_z,
    make_alert_id,
    parse_rfc3339,
)

FORMATS = ("generic_json", "prowler_json")

GENERIC_REQUIRED = (
    "check_id",
    "resource_id",
    "resource_type",
    "region",
    "account_id",
    "severity",
    "status",
    "observed_at",
)

# Prowler-style key -> generic key
_PROWLER_KEYS = {
    "CheckID": "check_id",
    "ResourceId": "resource_id",
    "ResourceType": "resource_type",
    "Region": "region",
    "AccountId": "account_id",
    "Severity": "severity",
    "Status": "status",
    "Timestamp": "observed_at",
}


class ParseError(AlertProbeError):
    """Document-level parse failure; byte_offset locates the problem."""

    def __init__(self, message: str, byte_offset: int = 0):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class UnsupportedCheckError(AlertProbeError):
    """check_id matched no catalog entry; the finding is skipped, not validated."""

    def __init__(self, check_id: str):
        super().__init__(f"no catalog entry matches check_id {check_id!r}")
        self.check_id = check_id


class CatalogError(AlertProbeError):
    """The check catalog is malformed or ambiguous."""


@dataclass(frozen=True)
class RecordError:
    """A single malformed finding record; parsing continued past it."""

    index: int
    reason: str


@dataclass
class ParsedFindings:
    findings: list[RawFinding]
    errors: list[RecordError] = field(default_factory=list)


class CheckCatalog:
    """Maps check-id glob patterns to alert categories.

    Patterns must be unambiguous: a check_id that matches two entries is
    a configuration error and raises CatalogError at match time.
    """

    def __init__(self, entries: list[tuple[str, AlertCategory]]):
        seen: set[str] = set()
        for pattern, _ in entries:
            if pattern in seen:
                raise CatalogError(f"duplicate catalog pattern {pattern!r}")
            seen.add(pattern)
        self._entries = list(entries)

    def __len__(self) -> int:
        return len(self._entries)

    def match(self, check_id: str) -> AlertCategory:
        hits = [
            (pattern, category)
            for pattern, category in self._entries
            if fnmatch.fnmatchcase(check_id, pattern)
        ]
        if not hits:
            raise UnsupportedCheckError(check_id)
        if len(hits) > 1:
            patterns = ", ".join(repr(p) for p, _ in hits)
            raise CatalogError(f"check_id {check_id!r} matches multiple patterns: {patterns}")
        return hits[0][1]


def load_catalog(path: str | Path) -> CheckCatalog:
    """Load a catalog file: one ``pattern = category`` entry per line, # comments."""
    entries: list[tuple[str, AlertCategory]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise CatalogError(f"{path}:{lineno}: expected 'pattern = category'")
        pattern, _, name = stripped.partition("=")
        pattern, name = pattern.strip(), name.strip()
        if not pattern:
            raise CatalogError(f"{path}:{lineno}: empty pattern")
        try:
            category = AlertCategory(name)
        except ValueError:
            valid = ", ".join(c.value for c in AlertCategory)
            raise CatalogError(
                f"{path}:{lineno}: unknown category {name!r} (valid: {valid})"
            ) from None
        entries.append((pattern, category))
    return CheckCatalog(entries)


def default_catalog() -> CheckCatalog:
    """The catalog shipped with the package (editable copy: data/default_catalog.cfg)."""
    ref = resources.files("alertprobe").joinpath("data/default_catalog.cfg")
    with resources.as_file(ref) as path:
        return load_catalog(path)


def _iter_array_elements(doc: str) -> Iterator[tuple[object, str]]:
    """Yield (value, verbatim_source) for each element of a top-level JSON array."""
    decoder = json.JSONDecoder()
    idx = len(doc) - len(doc.lstrip())
    if idx >= len(doc) or doc[idx] != "[":
        raise ParseError("expected top-level JSON array", _byte_offset(doc, idx))
    idx += 1
    first = True
    while True:
        while idx < len(doc) and doc[idx] in " \t\r\n":
            idx += 1
        if idx >= len(doc):
            raise ParseError("unterminated array", _byte_offset(doc, idx))
        if doc[idx] == "]":
            return
        if not first:
            if doc[idx] != ",":
                raise ParseError("expected ',' between elements", _byte_offset(doc, idx))
            idx += 1
            while idx < len(doc) and doc[idx] in " \t\r\n":
                idx += 1
        try:
            value, end = decoder.raw_decode(doc, idx)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, _byte_offset(doc, exc.pos)) from None
        yield value, doc[idx:end]
        idx = end
        first = False


def _byte_offset(doc: str, char_pos: int) -> int:
    return len(doc[:char_pos].encode("utf-8"))


def _coerce_severity(text: str) -> Severity:
    try:
        return Severity(text.strip().lower())
    except ValueError:
        # Unknown vocabularies downgrade to medium; normalize() notes this.
        return Severity.MEDIUM


def _record_to_finding(record: dict, source: str, default_tool: str) -> RawFinding:
    missing = [k for k in GENERIC_REQUIRED if not isinstance(record.get(k), str) or not record[k]]
    if missing:
        raise ValidationError(f"missing or non-string fields: {', '.join(missing)}")
    return RawFinding(
        source_tool=str(record.get("source_tool") or default_tool),
        check_id=record["check_id"],
        resource_id=record["resource_id"],
        resource_type=record["resource_type"],
        region=record["region"],
        account_id=record["account_id"],
        severity=_coerce_severity(record["severity"]),
        status_text=record["status"],
        observed_at=parse_rfc3339(record["observed_at"]),
        raw_payload=source.encode("utf-8"),
    )


def parse_findings(data: bytes | str, format: str = "generic_json") -> ParsedFindings:
    """Parse a scanner document into RawFindings, order preserved.

    Malformed documents raise ParseError with a byte offset. Malformed
    individual records are collected as RecordErrors and parsing continues,
    so a partially broken scan never loses the healthy findings.
    """
    if format not in FORMATS:
        raise ValidationError(f"unknown input format {format!r} (expected one of {FORMATS})")
    if isinstance(data, bytes):
        try:
            doc = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8: {exc.reason}", exc.start) from None
    else:
        doc = data

    result = ParsedFindings(findings=[])
    for index, (value, source) in enumerate(_iter_array_elements(doc)):
        if not isinstance(value, dict):
            result.errors.append(RecordError(index, "finding record is not a JSON object"))
            continue
        record = value
        if format == "prowler_json":
            record = {_PROWLER_KEYS.get(k, k): v for k, v in value.items()}
            record.setdefault("source_tool", "prowler")
        try:
            result.findings.append(_record_to_finding(record, source, default_tool="generic"))
        except (ValidationError, AlertProbeError) as exc:
            result.errors.append(RecordError(index, str(exc)))
    return result


def categorize(check_id: str, resource_type: str, catalog: CheckCatalog) -> AlertCategory:
    """Resolve a finding's threat category from the check catalog.

    resource_type is accepted for future scanner dialects whose check ids
    alone are ambiguous; the shipped catalogs key on check_id only.
    """
    return catalog.match(check_id)


def normalize(finding: RawFinding, catalog: CheckCatalog) -> NormalizedAlert:
    """Map a RawFinding onto the shared alert schema and enrich it."""
    category = categorize(finding.check_id, finding.resource_type, catalog)
    enrichment = {
        "timestamp": isoformat_z(finding.observed_at),
        "account_id": finding.account_id,
        "resource_type": finding.resource_type,
    }
    try:
        payload = json.loads(finding.raw_payload)
    except (ValueError, UnicodeDecodeError):
        payload = {}
    if isinstance(payload, dict):
        raw_severity = payload.get("Severity", payload.get("severity"))
        if isinstance(raw_severity, str) and raw_severity.strip().lower() != finding.severity.value:
            enrichment["severity_note"] = (
                f"unrecognized severity {raw_severity!r} mapped to {finding.severity.value}"
            )
        metadata = payload.get("metadata")
        if isinstance(metadata, dict):
            enrichment.update({str(k): str(v) for k, v in metadata.items()})
    return NormalizedAlert(
        alert_id=make_alert_id(finding.source_tool, finding.check_id, finding.resource_id),
        category=category,
        resource_id=finding.resource_id,
        resource_type=finding.resource_type,
        region=finding.region,
        account_id=finding.account_id,
        severity=finding.severity,
        observed_at=finding.observed_at,
        enrichment=enrichment,
        source=finding,
    )
