"""File and webhook emission of enriched, validated alerts.

Validated alerts are written as newline-delimited JSON records so
downstream tools can stream them. Findings documents round-trip through
the generic dialect: the file is the JSON array of each finding's
verbatim payload. The webhook sink POSTs one enriched document per alert
with bounded retries and exponential backoff.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .model import RawFinding, ValidatedAlert
from .testbed import GroundTruthLabel

MAX_RETRIES = 3
BACKOFF_BASE = 0.25  # seconds; doubles per retry


def write_findings(findings: list[RawFinding], path: str | Path) -> None:
    """Serialize findings as a generic-dialect document (array of raw payloads)."""
    body = b",\n".join(f.raw_payload for f in findings)
    Path(path).write_bytes(b"[\n" + body + b"\n]\n" if findings else b"[]\n")


def write_validated(validated: list[ValidatedAlert], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for alert in validated:
            handle.write(json.dumps(alert.to_dict(), sort_keys=True) + "\n")


def read_validated(path: str | Path) -> list[ValidatedAlert]:
    alerts = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                alerts.append(ValidatedAlert.from_dict(json.loads(line)))
    return alerts


def write_truth(truth: dict[str, GroundTruthLabel], path: str | Path) -> None:
    doc = {alert_id: label.to_dict() for alert_id, label in sorted(truth.items())}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_truth(path: str | Path) -> dict[str, GroundTruthLabel]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {alert_id: GroundTruthLabel.from_dict(entry) for alert_id, entry in doc.items()}


@dataclass(frozen=True)
class DeliveryStatus:
    alert_id: str
    delivered: bool
    attempts: int
    retries: int
    last_status: int | None  # HTTP status of the final attempt, None if no answer
    error: str = ""


@dataclass(frozen=True)
class DeliveryReport:
    url: str
    statuses: tuple[DeliveryStatus, ...]

    @property
    def delivered(self) -> int:
        return sum(1 for s in self.statuses if s.delivered)

    @property
    def failed(self) -> list[DeliveryStatus]:
        return [s for s in self.statuses if not s.delivered]


def _post_once(url: str, body: bytes, tag: str, timeout: float) -> tuple[int | None, str]:
    request = urllib.request.Request(
        url,
        data=body,
        method="POST",
        headers={"Content-Type": "application/json", "X-Probe-Tag": tag},
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, ""
    except urllib.error.HTTPError as exc:
        exc.close()
        return exc.code, f"HTTP {exc.code}"
    except (urllib.error.URLError, OSError) as exc:
        return None, str(exc)


def _deliver(alert: ValidatedAlert, url: str, tag: str, timeout: float) -> DeliveryStatus:
    body = json.dumps(alert.to_dict(), sort_keys=True).encode("utf-8")
    attempts = 0
    status: int | None = None
    error = ""
    while attempts <= MAX_RETRIES:
        if attempts:
            time.sleep(BACKOFF_BASE * (2 ** (attempts - 1)))
        attempts += 1
        status, error = _post_once(url, body, tag, timeout)
        if status is not None and 200 <= status < 300:
            return DeliveryStatus(
                alert_id=alert.alert.alert_id,
                delivered=True,
                attempts=attempts,
                retries=attempts - 1,
                last_status=status,
            )
    return DeliveryStatus(
        alert_id=alert.alert.alert_id,
        delivered=False,
        attempts=attempts,
        retries=attempts - 1,
        last_status=status,
        error=error,
    )


def emit_webhook(
    validated: list[ValidatedAlert],
    url: str,
    tag: str,
    timeout: float = 5.0,
    max_parallel: int = 8,
) -> DeliveryReport:
    """POST every validated alert to the webhook; failures never abort the batch."""
    if not url.startswith(("http://", "https://")):
        raise ValueError(f"webhook url must be http(s): {url!r}")
    if not validated:
        return DeliveryReport(url=url, statuses=())
    with ThreadPoolExecutor(max_workers=max(1, max_parallel)) as pool:
        statuses = list(pool.map(lambda a: _deliver(a, url, tag, timeout), validated))
    return DeliveryReport(url=url, statuses=tuple(statuses))
