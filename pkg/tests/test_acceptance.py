"""Acceptance suite: every exit criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one labeled
pass line per criterion; a failing criterion fails its test.
"""

import json
import random
import time
from datetime import datetime, timezone
from types import SimpleNamespace

import pytest
from click.testing import CliRunner

from alertprobe.classify import classify
from alertprobe.cli import cli
from alertprobe.engine import SafetyPolicy, execute, execute_batch, plan_probes
from alertprobe.ingest import default_catalog, parse_findings
from alertprobe.metrics import (
    ConfusionCounts,
    TriageParams,
    confusion,
    ratios,
    triage_report,
)
from alertprobe.model import (
    AlertCategory,
    NormalizedAlert,
    ProbeOutcome,
    RawFinding,
    Severity,
    ValidatedAlert,
    Verdict,
    make_alert_id,
)
from alertprobe.pipeline import normalize_findings, run_validation, validate_alerts
from alertprobe.probes import probe_access_key, probe_port, probe_secret, probe_storage
from alertprobe.testbed import (
    CategoryMix,
    GroundTruthLabel,
    ScenarioProfile,
    deploy,
    emit_findings,
    generate_scenario,
    ground_truth,
)

from helpers import ScriptedBackend

FAST = SafetyPolicy(per_probe_timeout=2.0, rate_limit=10_000, max_parallel_probes=8)
TS = datetime(2025, 1, 1, tzinfo=timezone.utc)


def _pass(line: str) -> None:
    print(f"\n[PASS] {line}")


@pytest.fixture(scope="module")
def benchmark(tmp_path_factory):
    """One full benchmark simulation through the real CLI, shared by criteria 1/3/6."""
    out_dir = tmp_path_factory.mktemp("benchmark")
    started = time.monotonic()
    result = CliRunner().invoke(cli, [
        "simulate", "--profile", "table3", "--seed", "1234", "--out-dir", str(out_dir),
    ])
    elapsed = time.monotonic() - started
    assert result.exit_code == 0, result.output
    metrics = json.loads((out_dir / "metrics.json").read_text())
    return SimpleNamespace(metrics=metrics, elapsed=elapsed, out_dir=out_dir)


def _make_validated(resource_id, verdict, category=AlertCategory.PUBLIC_STORAGE):
    finding = RawFinding(
        source_tool="t", check_id="c", resource_id=resource_id, resource_type="rt",
        region="r", account_id="a", severity=Severity.LOW, status_text="FAIL",
        observed_at=TS, raw_payload=b"{}",
    )
    alert = NormalizedAlert(
        alert_id=make_alert_id("t", "c", resource_id), category=category,
        resource_id=resource_id, resource_type="rt", region="r", account_id="a",
        severity=Severity.LOW, observed_at=TS,
        enrichment={"timestamp": "x", "account_id": "a", "resource_type": "rt"},
        source=finding,
    )
    return ValidatedAlert(alert=alert, probe_results=(), verdict=Verdict.INCONCLUSIVE,
                          validated_at=TS) if verdict is Verdict.INCONCLUSIVE else \
        ValidatedAlert(alert=alert, probe_results=(_probe_result(alert.alert_id),),
                       verdict=verdict, validated_at=TS)


def _probe_result(alert_id):
    from alertprobe.model import EvidenceEntry, ExitStatus, ProbeResult

    return ProbeResult(
        alert_id=alert_id, outcome=ProbeOutcome.EXPLOITABLE,
        evidence=(EvidenceEntry(TS, "a", "o", ExitStatus.SUCCESS),),
        started_at=TS, finished_at=TS, duration_ms=1.0,
    )


def test_criterion_1_benchmark_reproduction(benchmark):
    per = benchmark.metrics["per_category"]
    exact = {
        "public_storage": (800, 50, 100 * 750 / 800),
        "public_compute": (280, 20, 100 * 260 / 280),
        "exposed_access_key": (1700, 100, 100 * 1600 / 1700),
        "secret_leak": (160, 10, 100 * 150 / 160),
    }
    reference = {
        "public_storage": 93.72,
        "public_compute": 92.88,
        "exposed_access_key": 94.12,
        "secret_leak": 93.75,
    }
    for category, (before, after, reduction) in exact.items():
        row = per[category]
        assert row["fp_before"] == before, category
        assert row["fp_after"] == after, category
        assert row["reduction_pct"] == pytest.approx(reduction, abs=1e-9), category
        assert abs(row["reduction_pct"] - reference[category]) <= 0.5, category
    pooled = benchmark.metrics["pooled_reduction_pct"]
    assert pooled == pytest.approx(100 * (2940 - 180) / 2940, abs=1e-9)
    assert round(pooled, 2) == 93.88
    assert benchmark.elapsed < 300, f"benchmark run took {benchmark.elapsed:.0f}s"
    _pass(
        "criterion 1: per-category reductions "
        f"{per['public_storage']['reduction_pct']:.2f}/"
        f"{per['public_compute']['reduction_pct']:.2f}/"
        f"{per['exposed_access_key']['reduction_pct']:.2f}/"
        f"{per['secret_leak']['reduction_pct']:.2f}%, pooled {pooled:.2f}%, "
        f"runtime {benchmark.elapsed:.0f}s"
    )


def test_benchmark_findings_file_parses_completely(benchmark):
    raw = (benchmark.out_dir / "findings.json").read_bytes()
    independent_count = raw.count(b'"check_id"')  # text-level oracle, one per record
    assert independent_count == 3500
    parsed = parse_findings(raw)
    assert len(parsed.findings) == 3500
    assert parsed.errors == []
    counts = benchmark.metrics["counts"]
    assert sum(counts.values()) == 3500  # no result lost across the batch
    _pass("supporting: 3500-record findings file parses with zero record errors "
          "and zero lost results")


def test_criterion_2_ratio_oracle():
    r = ratios(ConfusionCounts(tp=360, fp=180, tn=2960, fn=35))
    assert r.precision == pytest.approx(0.667, abs=0.001)
    assert r.recall == pytest.approx(0.911, abs=0.002)
    assert r.fpr == pytest.approx(0.057, abs=0.002)
    assert r.f1 == pytest.approx(0.769, abs=0.002)
    _pass(
        f"criterion 2: ratios(360,180,2960,35) -> precision {r.precision:.3f}, "
        f"recall {r.recall:.3f}, fpr {r.fpr:.3f}, f1 {r.f1:.3f}"
    )


def test_criterion_3_recall_preservation(benchmark):
    assert benchmark.metrics["recall"] == 1.0
    assert benchmark.metrics["counts"]["fn"] == 0
    profile = ScenarioProfile(
        name="recall",
        storage=CategoryMix(2, 2, 1),
        compute=CategoryMix(1, 1, 1),
        access_keys=CategoryMix(2, 2, 1),
        secrets=CategoryMix(1, 1, 0),
    )
    for seed in (1, 2, 3, 4, 5):
        spec = generate_scenario(seed, profile)
        with deploy(spec) as testbed:
            alerts, _ = normalize_findings(emit_findings(testbed), default_catalog())
            validated = validate_alerts(alerts, testbed.backend, FAST)
        counts = confusion(validated, ground_truth(spec))
        assert counts.fn == 0, f"seed {seed}"
        assert ratios(counts).recall == 1.0, f"seed {seed}"
    _pass("criterion 3: recall 1.0 with zero false negatives on the benchmark run "
          "and 5 seeded scenarios")


def test_criterion_4_truth_table_and_total_probes():
    expected = {
        ProbeOutcome.EXPLOITABLE: Verdict.TRUE_POSITIVE,
        ProbeOutcome.NON_EXPLOITABLE: Verdict.FALSE_POSITIVE,
        ProbeOutcome.INCONCLUSIVE: Verdict.INCONCLUSIVE,
    }
    combos = 0
    for category in AlertCategory:
        for outcome in ProbeOutcome:
            assert classify(category, outcome) is expected[outcome]
            combos += 1
    assert combos == 12

    from alertprobe.backend import ProbeTimeout, TcpConnectResult

    http_palette = [(200, b"data"), (200, b""), (401, b""), (403, b""), (404, b""),
                    (500, b""), ProbeTimeout("t"), OSError("e")]
    checked = 0
    for head in http_palette:
        for get in http_palette:
            backend = ScriptedBackend(http={("HEAD", False): head, ("GET", False): get,
                                            ("GET", True): (403, b"")})
            outcome, evidence = probe_storage("http://e/b", backend, "t")
            assert outcome in ProbeOutcome and len(evidence) == 3
            checked += 1
    tcp_palette = [TcpConnectResult("open", "b"), TcpConnectResult("closed"),
                   TcpConnectResult("timeout"), OSError("e"), ProbeTimeout("t")]
    for first in tcp_palette:
        for second in tcp_palette:
            backend = ScriptedBackend(tcp=[first, second])
            outcome, _, evidence = probe_port("h", 22, backend, FAST)
            assert outcome in ProbeOutcome and len(evidence) == 2
            checked += 1
    key_palette = ["active_used", "active_unused", "inactive", "denied", "??",
                   ProbeTimeout("t"), LookupError("e")]
    assume_palette = ["allowed", "denied", "??", ProbeTimeout("t"), OSError("e")]
    for key in key_palette:
        for assume in assume_palette:
            backend = ScriptedBackend(key=key, assume=assume)
            outcome, _, evidence = probe_access_key("k", backend, "t")
            assert outcome in ProbeOutcome and len(evidence) == 2
            checked += 1
    for secret in ["valid", "revoked", "invalid", "??", ProbeTimeout("t"), OSError("e")]:
        backend = ScriptedBackend(secret=secret)
        outcome, _, evidence = probe_secret("s", backend, "t")
        assert outcome in ProbeOutcome and len(evidence) == 1
        checked += 1
    _pass(f"criterion 4: 12/12 verdict combinations and {checked} probe response "
          "combinations all map to defined outcomes")


def test_criterion_5a_hanging_endpoint_time_bound():
    profile = ScenarioProfile(
        name="hang",
        storage=CategoryMix(0, 0, 0), compute=CategoryMix(0, 0, 0),
        access_keys=CategoryMix(0, 0, 0), secrets=CategoryMix(0, 0, 0),
        hanging_endpoints=1,
    )
    spec = generate_scenario(8, profile)
    with deploy(spec) as testbed:
        alerts, _ = normalize_findings(emit_findings(testbed), default_catalog())
        assert len(alerts) == 1
        policy = SafetyPolicy()  # the real 5-second default
        result = execute(plan_probes(alerts[0]), testbed.backend, policy)
    assert result.outcome is ProbeOutcome.INCONCLUSIVE
    marks = [e.at for e in result.evidence] + [result.finished_at]
    worst = max((b - a).total_seconds() for a, b in zip(marks, marks[1:]))
    assert worst <= 5.5, f"slowest action took {worst:.2f}s"
    _pass(f"criterion 5a: hanging endpoint inconclusive, slowest action {worst:.2f}s <= 5.5s")


def test_criterion_5b_rate_limit_floor():
    rate, plans_n = 40.0, 26  # one action per plan
    policy = SafetyPolicy(per_probe_timeout=2.0, rate_limit=rate, max_parallel_probes=8)
    plans = [plan_probes(_make_validated(f"s{i}", Verdict.TRUE_POSITIVE,
                                         AlertCategory.SECRET_LEAK).alert)
             for i in range(plans_n)]
    backend = ScriptedBackend(secret="invalid")
    started = time.monotonic()
    results = execute_batch(plans, backend, policy)
    elapsed = time.monotonic() - started
    floor = (plans_n - 1) / rate
    assert len(results) == plans_n
    assert elapsed >= floor - 0.01, f"{elapsed:.3f}s < floor {floor:.3f}s"
    _pass(f"criterion 5b: {plans_n} actions at {rate:.0f}/s took {elapsed:.2f}s "
          f">= {floor:.3f}s")


def test_criterion_5cd_tagging_and_read_only():
    profile = ScenarioProfile(
        name="tags",
        storage=CategoryMix(1, 2, 1), compute=CategoryMix(1, 2, 1),
        access_keys=CategoryMix(1, 2, 1), secrets=CategoryMix(1, 2, 1),
    )
    spec = generate_scenario(12, profile)
    policy = SafetyPolicy(per_probe_timeout=2.0, rate_limit=10_000,
                          max_parallel_probes=8, probe_tag="acceptance-tag")
    with deploy(spec) as testbed:
        digest_before = testbed.state_digest()
        alerts, _ = normalize_findings(emit_findings(testbed), default_catalog())
        validate_alerts(alerts, testbed.backend, policy)
        log = testbed.call_log
        digest_after = testbed.state_digest()
    assert log, "batch produced no backend calls"
    tagged = sum(1 for entry in log if entry.tag == "acceptance-tag")
    assert tagged == len(log)
    assert digest_before == digest_after
    _pass(f"criterion 5c/5d: {tagged}/{len(log)} calls tagged; state digest unchanged")


def test_criterion_6_triage_model(benchmark):
    observed = benchmark.metrics["triage"]["mean_reduction_pct"]
    assert 84.0 <= observed <= 88.0
    point = TriageParams(sample_size=50, baseline_range=(210.0, 210.0), validated_seconds=30.0)
    alerts = [_make_validated(f"r{i}", Verdict.FALSE_POSITIVE) for i in range(60)]
    closed_form = 100.0 * (1.0 - 30.0 / 210.0)
    got = triage_report(alerts, point, seed=4).mean_reduction_pct
    assert abs(got - closed_form) <= 0.01
    _pass(f"criterion 6: benchmark triage reduction {observed:.1f}% in [84, 88]; "
          f"point parameters give {got:.2f}% vs closed form {closed_form:.2f}%")


def test_criterion_7_bruteforce_equivalence():
    rng = random.Random(20250809)
    for trial in range(1000):
        n = rng.randint(0, 20)
        alerts, truth = [], {}
        for i in range(n):
            verdict = rng.choice(list(Verdict))
            alert = _make_validated(f"t{trial}-r{i}", verdict)
            alerts.append(alert)
            truth[alert.alert.alert_id] = GroundTruthLabel(rng.random() < 0.5, "x")
        counts = confusion(alerts, truth)
        tp = fp = tn = fn = inc = 0
        for alert in alerts:
            exploitable = truth[alert.alert.alert_id].exploitable
            if alert.verdict is Verdict.INCONCLUSIVE:
                inc += 1
            elif alert.verdict is Verdict.TRUE_POSITIVE and exploitable:
                tp += 1
            elif alert.verdict is Verdict.TRUE_POSITIVE:
                fp += 1
            elif exploitable:
                fn += 1
            else:
                tn += 1
        assert (counts.tp, counts.fp, counts.tn, counts.fn, counts.inconclusive) == \
            (tp, fp, tn, fn, inc)
        # Appending inconclusive alerts must leave every ratio fixed.
        k = rng.randint(1, 5)
        extra = [_make_validated(f"t{trial}-x{j}", Verdict.INCONCLUSIVE) for j in range(k)]
        for alert in extra:
            truth[alert.alert.alert_id] = GroundTruthLabel(rng.random() < 0.5, "x")
        assert ratios(confusion(alerts + extra, truth)) == ratios(counts)
    _pass("criterion 7: 1000 random verdict/label sets match the enumeration oracle; "
          "inconclusive-append invariance holds")


def test_criterion_8_pipeline_conservation():
    rng = random.Random(88)
    checked = 0
    for _ in range(100):
        profile = ScenarioProfile(
            name="fuzz",
            storage=CategoryMix(rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 1)),
            compute=CategoryMix(rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 1)),
            access_keys=CategoryMix(rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 1)),
            secrets=CategoryMix(rng.randint(0, 2), rng.randint(1, 2), rng.randint(0, 1)),
        )
        spec = generate_scenario(rng.randint(0, 10_000), profile)
        with deploy(spec) as testbed:
            records = [json.loads(f.raw_payload) for f in emit_findings(testbed)]
            for i in range(rng.randint(0, 2)):  # findings no catalog entry matches
                record = dict(records[0])
                record["check_id"] = "unknown_check_xyz"
                record["resource_id"] = f"mystery-{i}"
                records.append(record)
            if rng.random() < 0.5:  # one malformed record
                records.append({"check_id": "s3_bucket_public_access"})
            rng.shuffle(records)
            document = json.dumps(records).encode("utf-8")
            run = run_validation(document, default_catalog(), testbed.backend, FAST)
        assert len(run.validated) + len(run.skipped) + len(run.record_errors) == len(records)
        checked += 1
    assert checked == 100
    _pass("criterion 8: findings = validated + skips + record errors across "
          "100 randomized scenarios")
