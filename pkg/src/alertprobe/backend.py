"""Target backend contract: the read-only surface probes are allowed to touch.

Backends must be stateless with respect to probes (no call mutates target
state) and safe for concurrent invocation. Every call carries the probe
tag so target-side monitoring can tell validation traffic from attacks.
A live cloud backend attaches by implementing this interface.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from .model import AlertProbeError

# Backend response vocabularies. Anything outside these is treated as a
# probe error by the interpretation layer, never as a fourth state.
TCP_STATES = ("open", "closed", "timeout")
KEY_STATUSES = ("active_used", "active_unused", "inactive", "denied")
ASSUME_RESULTS = ("allowed", "denied")
SECRET_RESULTS = ("valid", "revoked", "invalid")


class ProbeTimeout(AlertProbeError):
    """A backend call exceeded its time bound."""


class BackendUnavailable(AlertProbeError):
    """The backend itself could not be reached (distinct from a denied probe)."""


@dataclass(frozen=True)
class TcpConnectResult:
    state: str  # one of TCP_STATES
    banner: str = ""


class TargetBackend(ABC):
    """Capabilities a probe may exercise against flagged resources."""

    @abstractmethod
    def http_request(
        self, method: str, endpoint: str, auth: bool, tag: str
    ) -> tuple[int, bytes]:
        """Issue an HTTP request; returns (status_code, body).

        The tag travels as an X-Probe-Tag header. auth=True attaches the
        backend's scoped credentials; auth=False is fully anonymous.
        """

    @abstractmethod
    def tcp_connect(self, host: str, port: int, timeout: float, tag: str) -> TcpConnectResult:
        """Attempt a TCP connection; reads a short banner when the port accepts."""

    @abstractmethod
    def key_status(self, key_id: str, tag: str) -> str:
        """Look up an access key's lifecycle status; one of KEY_STATUSES."""

    @abstractmethod
    def assume_role_scoped(self, key_id: str, tag: str) -> str:
        """Attempt a least-privilege role assumption; one of ASSUME_RESULTS."""

    @abstractmethod
    def secret_check(self, secret_value: str, tag: str) -> str:
        """Verify a candidate secret against the credential store; one of SECRET_RESULTS."""


class UnreachableBackend(TargetBackend):
    """Stand-in when no backend can be reached; every call fails.

    Probing through it degrades the whole batch to inconclusive verdicts
    instead of losing alerts, which is the contract pipelines rely on
    during infrastructure hiccups.
    """

    def __init__(self, reason: str = "no reachable backend"):
        self._reason = reason

    def _fail(self):
        raise BackendUnavailable(self._reason)

    def http_request(self, method, endpoint, auth, tag):
        self._fail()

    def tcp_connect(self, host, port, timeout, tag):
        self._fail()

    def key_status(self, key_id, tag):
        self._fail()

    def assume_role_scoped(self, key_id, tag):
        self._fail()

    def secret_check(self, secret_value, tag):
        self._fail()
