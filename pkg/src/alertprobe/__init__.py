"""alertprobe: behavioral validation for cloud misconfiguration alerts.

Rule-based scanners flag everything that looks wrong; this package probes
each flagged resource for real exploitability and reclassifies the alert
as a true positive, a false positive, or inconclusive, with evidence.
"""

from .backend import TargetBackend, TcpConnectResult, UnreachableBackend
from .classify import assemble, classify
from .engine import (
    ProbeAction,
    ProbePlan,
    SafetyPolicy,
    TokenBucket,
    execute,
    execute_batch,
    plan_probes,
)
from .ingest import (
    CheckCatalog,
    ParseError,
    UnsupportedCheckError,
    categorize,
    default_catalog,
    load_catalog,
    normalize,
    parse_findings,
)
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    TriageParams,
    build_report,
    confusion,
    fp_reduction,
    ratios,
    triage_report,
)
from .model import (
    AlertCategory,
    AlertProbeError,
    EvidenceEntry,
    ExitStatus,
    NormalizedAlert,
    ProbeOutcome,
    ProbeResult,
    RawFinding,
    Severity,
    ValidatedAlert,
    ValidationError,
    Verdict,
    make_alert_id,
)
from .pipeline import ValidationRun, run_validation, validate_alerts
from .probes import (
    KeyStatus,
    PortState,
    SecretStatus,
    probe_access_key,
    probe_port,
    probe_secret,
    probe_storage,
)
from .testbed import (
    BucketSpec,
    GroundTruthLabel,
    HostSpec,
    KeySpec,
    RunningTestbed,
    ScenarioProfile,
    ScenarioSpec,
    SecretSpec,
    deploy,
    emit_findings,
    generate_scenario,
    ground_truth,
    resolve_profile,
    teardown,
)

__version__ = "0.1.0"
