"""Command-line orchestration of the validation pipeline.

Subcommands:
  simulate  generate a scenario, deploy the loopback testbed, run the
            whole pipeline, and score it against planted ground truth
  validate  run ingest -> probe -> classify over a findings file
            against a backend locator
  report    metrics, tables, and figures for a validated-alerts file

Every flag can also be set through an ALERTPROBE_-prefixed environment
variable; flags win. Exit codes: 0 success, 1 internal error, 2 input
error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import figures, sink
from .backend import TargetBackend, UnreachableBackend
from .engine import DEFAULT_PROBE_TAG, SafetyPolicy
from .ingest import CheckCatalog, default_catalog, load_catalog
from .metrics import MetricsReport, TriageParams, build_report, render_text, volume_summary
from .model import AlertProbeError
from .pipeline import ValidationRun, run_validation
from .testbed import (
    RunningTestbed,
    ScenarioSpec,
    deploy,
    emit_findings,
    generate_scenario,
    ground_truth,
    resolve_profile,
)


class InputError(click.ClickException):
    exit_code = 2


def _policy(timeout_ms: int, rate_limit: float, max_parallel: int, probe_tag: str) -> SafetyPolicy:
    try:
        return SafetyPolicy(
            per_probe_timeout=timeout_ms / 1000.0,
            rate_limit=rate_limit,
            probe_tag=probe_tag,
            max_parallel_probes=max_parallel,
        )
    except AlertProbeError as exc:
        raise InputError(str(exc)) from None


def _load_catalog(path: str | None) -> CheckCatalog:
    try:
        return load_catalog(path) if path else default_catalog()
    except (OSError, AlertProbeError) as exc:
        raise InputError(f"cannot load check catalog: {exc}") from None


def _policy_options(command):
    for option in reversed([
        click.option("--timeout-ms", default=5000, show_default=True,
                     envvar="ALERTPROBE_TIMEOUT_MS", help="Per-action probe time bound."),
        click.option("--max-parallel", default=8, show_default=True,
                     envvar="ALERTPROBE_MAX_PARALLEL", help="Probe worker pool size."),
        click.option("--probe-tag", default=DEFAULT_PROBE_TAG, show_default=True,
                     envvar="ALERTPROBE_PROBE_TAG",
                     help="Tag attached to every outbound probe request."),
    ]):
        command = option(command)
    return command


def _write_outputs(
    out_dir: Path,
    run: ValidationRun,
    report: MetricsReport | None,
) -> list[str]:
    """Validated alerts, metrics, and figures; returns what was written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    sink.write_validated(run.validated, out_dir / "validated.jsonl")
    written.append("validated.jsonl")
    summary = volume_summary(run.validated)
    if report is not None:
        (out_dir / "metrics.json").write_text(report.to_json(), encoding="utf-8")
        (out_dir / "metrics.txt").write_text(render_text(report), encoding="utf-8")
        written.extend(["metrics.json", "metrics.txt"])
    for figure in figures.render_report_figures(out_dir, summary, report):
        written.append(str(figure.relative_to(out_dir)))
    return written


def _echo_run(run: ValidationRun, report: MetricsReport | None, fmt: str) -> None:
    summary = volume_summary(run.validated)
    if fmt == "json":
        doc = {
            "findings": run.total_findings,
            "validated": len(run.validated),
            "skipped": len(run.skipped),
            "record_errors": len(run.record_errors),
            "verdicts": summary.verdicts,
        }
        if report is not None:
            doc["metrics"] = report.to_dict()
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
        return
    click.echo(
        f"findings={run.total_findings} validated={len(run.validated)} "
        f"skipped={len(run.skipped)} record_errors={len(run.record_errors)}"
    )
    click.echo("verdicts: " + " ".join(f"{k}={v}" for k, v in summary.verdicts.items()))
    if report is not None:
        click.echo("")
        click.echo(render_text(report), nl=False)


def _emit_to_webhook(run: ValidationRun, url: str, tag: str) -> None:
    delivery = sink.emit_webhook(run.validated, url, tag)
    click.echo(f"webhook: delivered {delivery.delivered}/{len(delivery.statuses)} to {url}")
    for status in delivery.failed:
        click.echo(f"webhook: failed {status.alert_id}: {status.error}", err=True)


@click.group()
@click.version_option(package_name="alertprobe")
def cli() -> None:
    """Behavioral validation for cloud misconfiguration alerts."""


@cli.command()
@click.option("--profile", default="table3", show_default=True, envvar="ALERTPROBE_PROFILE",
              help="Scenario profile: table3, paper-env, or custom:<file>.")
@click.option("--seed", default=42, show_default=True, envvar="ALERTPROBE_SEED",
              help="Scenario generator seed.")
@click.option("--out-dir", default="alertprobe-out", show_default=True,
              envvar="ALERTPROBE_OUT_DIR", type=click.Path(path_type=Path))
@click.option("--rate-limit", default=200.0, show_default=True, envvar="ALERTPROBE_RATE_LIMIT",
              help="Probe requests per second; loopback default, lower it for real targets.")
@click.option("--webhook-url", default=None, envvar="ALERTPROBE_WEBHOOK_URL",
              help="POST each validated alert to this URL.")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table",
              show_default=True, envvar="ALERTPROBE_FORMAT")
@_policy_options
def simulate(profile, seed, out_dir, rate_limit, webhook_url, fmt,
             timeout_ms, max_parallel, probe_tag) -> None:
    """Run the full pipeline against a deterministic simulated environment."""
    try:
        scenario = generate_scenario(seed, resolve_profile(profile))
    except (OSError, ValueError, AlertProbeError) as exc:
        raise InputError(str(exc)) from None
    policy = _policy(timeout_ms, rate_limit, max_parallel, probe_tag)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scenario.json").write_text(scenario.to_json(), encoding="utf-8")

    testbed = deploy(scenario)
    try:
        findings = emit_findings(testbed)
        sink.write_findings(findings, out_dir / "findings.json")
        document = (out_dir / "findings.json").read_bytes()
        run = run_validation(document, default_catalog(), testbed.backend, policy)
    finally:
        testbed.teardown()

    truth = ground_truth(scenario)
    sink.write_truth(truth, out_dir / "truth.json")
    report = build_report(run.validated, truth, TriageParams(), seed)
    written = ["scenario.json", "findings.json", "truth.json"]
    written += _write_outputs(out_dir, run, report)
    _echo_run(run, report, fmt)
    if webhook_url:
        _emit_to_webhook(run, webhook_url, policy.probe_tag)
    click.echo(f"wrote {out_dir}/: " + " ".join(written))


@cli.command()
@click.argument("findings", type=click.Path(exists=True, path_type=Path))
@click.option("--backend-addr", default=None, envvar="ALERTPROBE_BACKEND_ADDR",
              help="Target backend locator, e.g. testbed:<scenario.json>. "
                   "Unreachable backends degrade to all-inconclusive verdicts.")
@click.option("--input-format", type=click.Choice(["generic_json", "prowler_json"]),
              default="generic_json", show_default=True, envvar="ALERTPROBE_INPUT_FORMAT")
@click.option("--catalog", "catalog_path", default=None, envvar="ALERTPROBE_CATALOG",
              help="Check catalog file; defaults to the built-in catalog.")
@click.option("--out-dir", default="alertprobe-out", show_default=True,
              envvar="ALERTPROBE_OUT_DIR", type=click.Path(path_type=Path))
@click.option("--rate-limit", default=10.0, show_default=True, envvar="ALERTPROBE_RATE_LIMIT",
              help="Probe requests per second across all workers.")
@click.option("--webhook-url", default=None, envvar="ALERTPROBE_WEBHOOK_URL")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table",
              show_default=True, envvar="ALERTPROBE_FORMAT")
@_policy_options
def validate(findings, backend_addr, input_format, catalog_path, out_dir, rate_limit,
             webhook_url, fmt, timeout_ms, max_parallel, probe_tag) -> None:
    """Validate a findings file and write verdict-enriched alerts."""
    policy = _policy(timeout_ms, rate_limit, max_parallel, probe_tag)
    catalog = _load_catalog(catalog_path)
    document = Path(findings).read_bytes()

    backend: TargetBackend
    testbed: RunningTestbed | None = None
    if backend_addr and backend_addr.startswith("testbed:"):
        scenario_path = backend_addr.split(":", 1)[1]
        try:
            testbed = deploy(ScenarioSpec.from_json(Path(scenario_path).read_bytes()))
            backend = testbed.backend
        except (OSError, ValueError, KeyError, AlertProbeError) as exc:
            click.echo(f"warning: backend unreachable ({exc}); "
                       "verdicts will be inconclusive", err=True)
            backend = UnreachableBackend(str(exc))
    else:
        if backend_addr:
            click.echo(f"warning: unknown backend locator {backend_addr!r}; "
                       "verdicts will be inconclusive", err=True)
        else:
            click.echo("warning: no --backend-addr; verdicts will be inconclusive", err=True)
        backend = UnreachableBackend("no reachable backend")

    try:
        run = run_validation(document, catalog, backend, policy, input_format)
    except AlertProbeError as exc:
        raise InputError(str(exc)) from None
    finally:
        if testbed is not None:
            testbed.teardown()

    written = _write_outputs(Path(out_dir), run, report=None)
    _echo_run(run, None, fmt)
    if webhook_url:
        _emit_to_webhook(run, webhook_url, policy.probe_tag)
    click.echo(f"wrote {out_dir}/: " + " ".join(written))


@cli.command()
@click.argument("validated", type=click.Path(exists=True, path_type=Path))
@click.option("--truth", "truth_path", default=None, envvar="ALERTPROBE_TRUTH",
              type=click.Path(path_type=Path),
              help="Ground-truth labels (alert id -> label); enables full metrics.")
@click.option("--out-dir", default="alertprobe-out", show_default=True,
              envvar="ALERTPROBE_OUT_DIR", type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True, envvar="ALERTPROBE_SEED",
              help="Seed for the triage-time sampling model.")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table",
              show_default=True, envvar="ALERTPROBE_FORMAT")
def report(validated, truth_path, out_dir, seed, fmt) -> None:
    """Summarize a validated-alerts file; with truth, score it."""
    try:
        alerts = sink.read_validated(validated)
    except (OSError, ValueError, KeyError, AlertProbeError) as exc:
        raise InputError(f"cannot read validated alerts: {exc}") from None

    metrics_report = None
    if truth_path is not None:
        try:
            truth = sink.read_truth(truth_path)
            metrics_report = build_report(alerts, truth, TriageParams(), seed)
        except (OSError, ValueError, KeyError, AlertProbeError) as exc:
            raise InputError(f"cannot score against truth: {exc}") from None

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = volume_summary(alerts)
    written = []
    if metrics_report is not None:
        (out_dir / "metrics.json").write_text(metrics_report.to_json(), encoding="utf-8")
        (out_dir / "metrics.txt").write_text(render_text(metrics_report), encoding="utf-8")
        written += ["metrics.json", "metrics.txt"]
    else:
        (out_dir / "summary.json").write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append("summary.json")
    for figure in figures.render_report_figures(out_dir, summary, metrics_report):
        written.append(str(figure.relative_to(out_dir)))

    if fmt == "json":
        doc = {"verdicts": summary.verdicts, "per_category": summary.per_category}
        if metrics_report is not None:
            doc["metrics"] = metrics_report.to_dict()
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        click.echo("verdicts: " + " ".join(f"{k}={v}" for k, v in summary.verdicts.items()))
        for category, row in summary.per_category.items():
            click.echo(
                f"{category}: raised={row['raised']} dismissed={row['dismissed']} "
                f"remaining={row['remaining']}"
            )
        if metrics_report is not None:
            click.echo("")
            click.echo(render_text(metrics_report), nl=False)
    click.echo(f"wrote {out_dir}/: " + " ".join(written))


def main() -> None:
    try:
        cli()
    except AlertProbeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
