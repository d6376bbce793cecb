"""Probe planning and safety-controlled execution.

Plans the actions each alert requires, then runs them under a global
token-bucket rate limit, a per-action time bound, and a bounded worker
pool. Failures never propagate out of a batch: a plan that cannot be
probed yields an inconclusive result with error evidence.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .backend import ProbeTimeout, TargetBackend, TcpConnectResult
from .model import (
    AlertCategory,
    EvidenceEntry,
    ExitStatus,
    NormalizedAlert,
    ProbeOutcome,
    ProbeResult,
    ValidationError,
    utc_now,
)

# Wall-clock grace beyond per_probe_timeout before an action is force-abandoned.
# Half of it is granted to the call itself so backends that honor their own
# timeout (tcp connect) can still report a definitive answer.
SCHEDULING_SLACK = 0.5

DEFAULT_PROBE_TAG = "behavioral-validation-probe"


@dataclass(frozen=True)
class SafetyPolicy:
    """Safeguards applied to every outbound probe."""

    per_probe_timeout: float = 5.0  # seconds, per action
    rate_limit: float = 10.0  # requests per second, global
    probe_tag: str = DEFAULT_PROBE_TAG
    max_parallel_probes: int = 8

    def __post_init__(self) -> None:
        if self.per_probe_timeout <= 0:
            raise ValidationError("per_probe_timeout must be > 0")
        if self.rate_limit <= 0:
            raise ValidationError("rate_limit must be > 0")
        if not self.probe_tag:
            raise ValidationError("probe_tag must be non-empty")
        if self.max_parallel_probes < 1:
            raise ValidationError("max_parallel_probes must be >= 1")


class ActionKind(str, Enum):
    HTTP_HEAD = "http_head"
    HTTP_GET = "http_get"
    TCP_CONNECT = "tcp_connect"
    SERVICE_CHECK = "service_check"
    KEY_STATUS = "key_status"
    ASSUME_ROLE = "assume_role"
    SECRET_CHECK = "secret_check"


LEGAL_ACTIONS: dict[AlertCategory, frozenset[ActionKind]] = {
    AlertCategory.PUBLIC_STORAGE: frozenset({ActionKind.HTTP_HEAD, ActionKind.HTTP_GET}),
    AlertCategory.PUBLIC_COMPUTE: frozenset({ActionKind.TCP_CONNECT, ActionKind.SERVICE_CHECK}),
    AlertCategory.EXPOSED_ACCESS_KEY: frozenset({ActionKind.KEY_STATUS, ActionKind.ASSUME_ROLE}),
    AlertCategory.SECRET_LEAK: frozenset({ActionKind.SECRET_CHECK}),
}


@dataclass(frozen=True)
class ProbeAction:
    kind: ActionKind
    params: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class ProbePlan:
    alert_id: str
    category: AlertCategory
    actions: tuple[ProbeAction, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            raise ValidationError("a probe plan must contain at least one action")
        legal = LEGAL_ACTIONS[self.category]
        for action in self.actions:
            if action.kind not in legal:
                raise ValidationError(
                    f"action {action.kind.value} is not legal for {self.category.value}"
                )


class TokenBucket:
    """Thread-safe token bucket shared by all probe workers.

    Capacity equals the sustained rate so steady-state bursts of one
    second's worth of requests can pass, but the bucket starts with a
    single token: a cold batch of N actions is paced to at least
    (N - 1) / rate seconds.
    """

    def __init__(self, rate: float):
        if rate <= 0:
            raise ValidationError("rate must be > 0")
        self._rate = float(rate)
        self._capacity = max(1.0, float(rate))
        self._tokens = 1.0
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        """Block until a token is available, then consume it."""
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            time.sleep(min(wait, 0.05))


class GuardedBackend(TargetBackend):
    """Backend wrapper enforcing the safety policy on every call.

    Each call first takes a rate-limiter token, then runs on a watchdog
    thread; if the backend does not answer within the per-action bound
    (plus half the scheduling slack) the call is abandoned and reported
    as a ProbeTimeout. The abandoned thread is a daemon and may linger
    until the backend's own socket timeout fires.
    """

    def __init__(self, inner: TargetBackend, policy: SafetyPolicy, limiter: TokenBucket):
        self._inner = inner
        self._policy = policy
        self._limiter = limiter
        self._cap = policy.per_probe_timeout + SCHEDULING_SLACK / 2

    def _bounded(self, fn):
        self._limiter.acquire()
        box: dict[str, object] = {}
        done = threading.Event()

        def run() -> None:
            try:
                box["value"] = fn()
            except BaseException as exc:  # noqa: BLE001 - forwarded to caller
                box["error"] = exc
            finally:
                done.set()

        worker = threading.Thread(target=run, daemon=True)
        worker.start()
        if not done.wait(self._cap):
            raise ProbeTimeout(f"no answer within {self._policy.per_probe_timeout:.1f}s")
        if "error" in box:
            raise box["error"]  # type: ignore[misc]
        return box["value"]

    def http_request(self, method: str, endpoint: str, auth: bool, tag: str) -> tuple[int, bytes]:
        return self._bounded(lambda: self._inner.http_request(method, endpoint, auth, tag))

    def tcp_connect(self, host: str, port: int, timeout: float, tag: str) -> TcpConnectResult:
        timeout = min(timeout, self._policy.per_probe_timeout)
        return self._bounded(lambda: self._inner.tcp_connect(host, port, timeout, tag))

    def key_status(self, key_id: str, tag: str) -> str:
        return self._bounded(lambda: self._inner.key_status(key_id, tag))

    def assume_role_scoped(self, key_id: str, tag: str) -> str:
        return self._bounded(lambda: self._inner.assume_role_scoped(key_id, tag))

    def secret_check(self, secret_value: str, tag: str) -> str:
        return self._bounded(lambda: self._inner.secret_check(secret_value, tag))


def _flagged_ports(alert: NormalizedAlert) -> list[int]:
    raw = alert.enrichment.get("flagged_ports", "")
    ports = []
    for piece in raw.split(","):
        piece = piece.strip()
        if piece.isdigit():
            ports.append(int(piece))
    if ports:
        return ports
    tail = alert.source.check_id.rsplit("_", 1)[-1]
    if tail.isdigit() and 1 <= int(tail) <= 65535:
        return [int(tail)]
    return [22, 3389]  # scanner gave no port detail; check the usual suspects


def plan_probes(alert: NormalizedAlert) -> ProbePlan:
    """Build the deterministic action list an alert's category requires."""
    if alert.category is AlertCategory.PUBLIC_STORAGE:
        endpoint = alert.enrichment.get("endpoint", alert.resource_id)
        actions = (
            ProbeAction(ActionKind.HTTP_HEAD, {"endpoint": endpoint, "auth": False}),
            ProbeAction(ActionKind.HTTP_GET, {"endpoint": endpoint, "auth": False}),
            ProbeAction(ActionKind.HTTP_GET, {"endpoint": endpoint, "auth": True}),
        )
    elif alert.category is AlertCategory.PUBLIC_COMPUTE:
        host = alert.enrichment.get("host", alert.resource_id)
        actions = tuple(
            ProbeAction(kind, {"host": host, "port": port})
            for port in _flagged_ports(alert)
            for kind in (ActionKind.TCP_CONNECT, ActionKind.SERVICE_CHECK)
        )
    elif alert.category is AlertCategory.EXPOSED_ACCESS_KEY:
        key_id = alert.enrichment.get("key_id", alert.resource_id)
        actions = (
            ProbeAction(ActionKind.KEY_STATUS, {"key_id": key_id}),
            ProbeAction(ActionKind.ASSUME_ROLE, {"key_id": key_id}),
        )
    else:
        secret = alert.enrichment.get("secret_value", alert.resource_id)
        actions = (ProbeAction(ActionKind.SECRET_CHECK, {"secret_value": secret}),)
    return ProbePlan(alert_id=alert.alert_id, category=alert.category, actions=actions)


def _run_plan(plan: ProbePlan, backend: TargetBackend, policy: SafetyPolicy):
    from . import probes  # local import: probes builds on this module's types

    if plan.category is AlertCategory.PUBLIC_STORAGE:
        endpoint = str(plan.actions[0].params["endpoint"])
        return probes.probe_storage(endpoint, backend, policy.probe_tag)
    if plan.category is AlertCategory.PUBLIC_COMPUTE:
        ports = [
            (str(a.params["host"]), int(a.params["port"]))  # type: ignore[arg-type]
            for a in plan.actions
            if a.kind is ActionKind.TCP_CONNECT
        ]
        outcomes: list[ProbeOutcome] = []
        evidence: list[EvidenceEntry] = []
        for host, port in ports:
            outcome, _state, entries = probes.probe_port(host, port, backend, policy)
            outcomes.append(outcome)
            evidence.extend(entries)
        if ProbeOutcome.EXPLOITABLE in outcomes:
            combined = ProbeOutcome.EXPLOITABLE
        elif ProbeOutcome.INCONCLUSIVE in outcomes:
            combined = ProbeOutcome.INCONCLUSIVE
        else:
            combined = ProbeOutcome.NON_EXPLOITABLE
        return combined, evidence
    if plan.category is AlertCategory.EXPOSED_ACCESS_KEY:
        key_id = str(plan.actions[0].params["key_id"])
        outcome, _status, evidence = probes.probe_access_key(key_id, backend, policy.probe_tag)
        return outcome, evidence
    secret = str(plan.actions[0].params["secret_value"])
    outcome, _status, evidence = probes.probe_secret(secret, backend, policy.probe_tag)
    return outcome, evidence


def execute(
    plan: ProbePlan,
    backend: TargetBackend,
    policy: SafetyPolicy,
    limiter: TokenBucket | None = None,
) -> ProbeResult:
    """Run one plan to completion; never raises.

    Backend-level failures (the backend itself unreachable, not a denied
    probe) yield an inconclusive result with error evidence so batches
    always complete.
    """
    guarded = GuardedBackend(backend, policy, limiter or TokenBucket(policy.rate_limit))
    started = utc_now()
    t0 = time.monotonic()
    try:
        outcome, evidence = _run_plan(plan, guarded, policy)
    except Exception as exc:  # noqa: BLE001 - isolate per the batch contract
        outcome = ProbeOutcome.INCONCLUSIVE
        evidence = [
            EvidenceEntry(
                at=utc_now(),
                action="probe-dispatch",
                observed=f"backend failure: {exc}",
                exit_status=ExitStatus.ERROR,
            )
        ]
    finished = utc_now()
    return ProbeResult(
        alert_id=plan.alert_id,
        outcome=outcome,
        evidence=tuple(evidence),
        started_at=started,
        finished_at=finished,
        duration_ms=(time.monotonic() - t0) * 1000.0,
    )


def execute_batch(
    plans: list[ProbePlan],
    backend: TargetBackend,
    policy: SafetyPolicy,
) -> list[ProbeResult]:
    """Execute plans on a bounded worker pool; results keep the input order."""
    if not plans:
        return []
    limiter = TokenBucket(policy.rate_limit)
    with ThreadPoolExecutor(max_workers=policy.max_parallel_probes) as pool:
        return list(pool.map(lambda plan: execute(plan, backend, policy, limiter), plans))
