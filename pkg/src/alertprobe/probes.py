"""The four concrete probe behaviors and their classification rules.

Each probe is a total function of the backend's responses: every
combination of answers, including timeouts and errors, maps to exactly
one outcome. Evidence carries one entry per backend call.

Classification rules, per alert type:
  storage   exploitable iff the anonymous GET succeeds with readable
            content; non-exploitable iff every anonymous request is
            denied; anything else (timeouts, contradictory answers such
            as HEAD accepted but GET denied) is inconclusive.
  port      exploitable iff the connect is accepted and the service
            check confirms it; refused or filtered ports are
            non-exploitable (a filtered port is a definitive answer
            here, not an indeterminate one); errors are inconclusive.
  key       exploitable iff the key is active, has a recorded use, and
            the scoped role assumption is allowed; inactive or unused
            keys (and active keys whose assumption is denied) are
            non-exploitable; a refused status lookup is inconclusive.
  secret    exploitable iff the credential store confirms the value;
            revoked or unknown values are non-exploitable.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable

from .backend import ProbeTimeout, TargetBackend
from .engine import SafetyPolicy
from .model import EvidenceEntry, ExitStatus, ProbeOutcome, utc_now


class PortState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"
    FILTERED = "filtered"  # connect attempt timed out, no answer either way


class KeyStatus(str, Enum):
    ACTIVE_USED = "active_used"
    ACTIVE_UNUSED = "active_unused"
    INACTIVE = "inactive"
    DENIED = "denied"  # the status lookup itself was refused


class SecretStatus(str, Enum):
    VALID = "valid"
    REVOKED = "revoked"
    INVALID = "invalid"


_DENIED_HTTP = (401, 403)


def _attempt(action: str, fn: Callable[[], object]) -> tuple[object | None, EvidenceEntry]:
    """Run one backend call; exceptions become evidence, never escape."""
    at = utc_now()
    try:
        value = fn()
    except (ProbeTimeout, TimeoutError) as exc:
        return None, EvidenceEntry(at, action, f"timeout: {exc}", ExitStatus.TIMEOUT)
    except Exception as exc:  # noqa: BLE001 - any backend fault is evidence
        return None, EvidenceEntry(at, action, f"error: {exc}", ExitStatus.ERROR)
    return value, EvidenceEntry(at, action, "", ExitStatus.SUCCESS)


def probe_storage(
    endpoint: str, backend: TargetBackend, tag: str
) -> tuple[ProbeOutcome, list[EvidenceEntry]]:
    """Anonymous HEAD/GET plus an authenticated GET against a flagged bucket."""
    evidence: list[EvidenceEntry] = []
    responses: dict[str, tuple[int, bytes] | None] = {}
    for label, method, auth in (
        ("unauth", "HEAD", False),
        ("unauth", "GET", False),
        ("auth", "GET", True),
    ):
        action = f"http {method} {endpoint} ({label})"
        value, entry = _attempt(action, lambda m=method, a=auth: backend.http_request(m, endpoint, a, tag))
        if value is not None:
            status, body = value  # type: ignore[misc]
            exit_status = ExitStatus.DENIED if status in _DENIED_HTTP else ExitStatus.SUCCESS
            entry = EvidenceEntry(entry.at, action, f"HTTP {status}, {len(body)} bytes", exit_status)
            responses[f"{method}:{label}"] = (status, body)
        else:
            responses[f"{method}:{label}"] = None
        evidence.append(entry)

    head = responses["HEAD:unauth"]
    get = responses["GET:unauth"]
    if get is not None and 200 <= get[0] < 300 and get[1]:
        return ProbeOutcome.EXPLOITABLE, evidence
    if (
        head is not None
        and get is not None
        and head[0] in _DENIED_HTTP
        and get[0] in _DENIED_HTTP
    ):
        return ProbeOutcome.NON_EXPLOITABLE, evidence
    return ProbeOutcome.INCONCLUSIVE, evidence


def probe_port(
    host: str, port: int, backend: TargetBackend, policy: SafetyPolicy
) -> tuple[ProbeOutcome, PortState | None, list[EvidenceEntry]]:
    """TCP connect plus a service check against one flagged port."""
    if not 1 <= port <= 65535:
        raise ValueError(f"port {port} out of range")
    evidence: list[EvidenceEntry] = []
    states: list[str | None] = []
    for step in ("tcp connect", "service check"):
        action = f"{step} {host}:{port}"
        value, entry = _attempt(
            action, lambda: backend.tcp_connect(host, port, policy.per_probe_timeout, policy.probe_tag)
        )
        if value is not None:
            state, banner = value.state, value.banner  # type: ignore[union-attr]
            exit_status = {
                "open": ExitStatus.SUCCESS,
                "closed": ExitStatus.DENIED,
                "timeout": ExitStatus.TIMEOUT,
            }.get(state, ExitStatus.ERROR)
            observed = state if state != "open" else (f"open, banner: {banner!r}" if banner else "open, no banner")
            entry = EvidenceEntry(entry.at, action, observed, exit_status)
            states.append(state if state in ("open", "closed", "timeout") else None)
        else:
            states.append("timeout" if entry.exit_status is ExitStatus.TIMEOUT else None)
        evidence.append(entry)

    connect, service = states
    port_state = {
        "open": PortState.OPEN,
        "closed": PortState.CLOSED,
        "timeout": PortState.FILTERED,
    }.get(connect)  # type: ignore[arg-type]
    if connect is None or service is None:
        return ProbeOutcome.INCONCLUSIVE, port_state, evidence
    if connect == "open" and service == "open":
        # Accepted connection is "service responds" even without a banner.
        return ProbeOutcome.EXPLOITABLE, port_state, evidence
    if "open" in (connect, service):
        return ProbeOutcome.INCONCLUSIVE, port_state, evidence
    return ProbeOutcome.NON_EXPLOITABLE, port_state, evidence


def probe_access_key(
    key_id: str, backend: TargetBackend, tag: str
) -> tuple[ProbeOutcome, KeyStatus | None, list[EvidenceEntry]]:
    """Key lifecycle lookup plus a scoped role-assumption attempt."""
    if not key_id:
        raise ValueError("key_id must be non-empty")
    evidence: list[EvidenceEntry] = []

    value, entry = _attempt(f"key status {key_id}", lambda: backend.key_status(key_id, tag))
    status = value if value in {s.value for s in KeyStatus} else None
    if value is not None:
        exit_status = ExitStatus.DENIED if value == "denied" else (
            ExitStatus.SUCCESS if status else ExitStatus.ERROR
        )
        entry = EvidenceEntry(entry.at, entry.action, str(value), exit_status)
    evidence.append(entry)

    value, entry = _attempt(
        f"scoped role assumption via {key_id}", lambda: backend.assume_role_scoped(key_id, tag)
    )
    assume = value if value in ("allowed", "denied") else None
    if value is not None:
        exit_status = ExitStatus.DENIED if value == "denied" else (
            ExitStatus.SUCCESS if assume else ExitStatus.ERROR
        )
        entry = EvidenceEntry(entry.at, entry.action, str(value), exit_status)
    evidence.append(entry)

    key_status = KeyStatus(status) if status else None
    if key_status is None or key_status is KeyStatus.DENIED:
        return ProbeOutcome.INCONCLUSIVE, key_status, evidence
    if key_status in (KeyStatus.INACTIVE, KeyStatus.ACTIVE_UNUSED):
        return ProbeOutcome.NON_EXPLOITABLE, key_status, evidence
    # Active and used: the assumption attempt decides.
    if assume == "allowed":
        return ProbeOutcome.EXPLOITABLE, key_status, evidence
    if assume == "denied":
        return ProbeOutcome.NON_EXPLOITABLE, key_status, evidence
    return ProbeOutcome.INCONCLUSIVE, key_status, evidence


def probe_secret(
    secret_value: str, backend: TargetBackend, tag: str
) -> tuple[ProbeOutcome, SecretStatus | None, list[EvidenceEntry]]:
    """Validity check of an already-extracted candidate secret."""
    if not secret_value:
        raise ValueError("secret_value must be non-empty")
    value, entry = _attempt("secret validity check", lambda: backend.secret_check(secret_value, tag))
    status = value if value in {s.value for s in SecretStatus} else None
    if value is not None:
        entry = EvidenceEntry(
            entry.at, entry.action, str(value),
            ExitStatus.SUCCESS if status else ExitStatus.ERROR,
        )
    evidence = [entry]
    if status is None:
        return ProbeOutcome.INCONCLUSIVE, None, evidence
    secret_status = SecretStatus(status)
    if secret_status is SecretStatus.VALID:
        return ProbeOutcome.EXPLOITABLE, secret_status, evidence
    return ProbeOutcome.NON_EXPLOITABLE, secret_status, evidence
