"""Evaluation metrics: confusion counts, ratios, FP reduction, triage model.

Inconclusive verdicts are tracked but excluded from every ratio
denominator; a ratio whose denominator is empty is reported as None
(an explicit "undefined" marker), never silently as zero.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable

from .model import AlertProbeError, ValidatedAlert, Verdict
from .testbed import GroundTruthLabel


class MissingLabelError(AlertProbeError):
    def __init__(self, alert_id: str):
        super().__init__(f"no ground-truth label for alert {alert_id}")
        self.alert_id = alert_id


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    inconclusive: int = 0

    @property
    def evaluated(self) -> int:
        return self.tp + self.fp + self.tn + self.fn + self.inconclusive


def confusion(
    validated: Iterable[ValidatedAlert], truth: dict[str, GroundTruthLabel]
) -> ConfusionCounts:
    """Score verdicts against ground truth.

    tp: confirmed and actually exploitable; fn: dismissed but exploitable;
    fp: confirmed but benign; tn: dismissed and benign. Inconclusive
    verdicts are counted separately regardless of label.
    """
    tp = fp = tn = fn = inconclusive = 0
    for alert in validated:
        label = truth.get(alert.alert.alert_id)
        if label is None:
            raise MissingLabelError(alert.alert.alert_id)
        if alert.verdict is Verdict.INCONCLUSIVE:
            inconclusive += 1
        elif alert.verdict is Verdict.TRUE_POSITIVE:
            if label.exploitable:
                tp += 1
            else:
                fp += 1
        else:
            if label.exploitable:
                fn += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn, inconclusive=inconclusive)


@dataclass(frozen=True)
class Ratios:
    precision: float | None
    recall: float | None
    fpr: float | None
    f1: float | None


def _div(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def ratios(c: ConfusionCounts) -> Ratios:
    precision = _div(c.tp, c.tp + c.fp)
    recall = _div(c.tp, c.tp + c.fn)
    fpr = _div(c.fp, c.fp + c.tn)
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Ratios(precision=precision, recall=recall, fpr=fpr, f1=f1)


def fp_reduction(fp_before: int, fp_after: int) -> float | None:
    """Percentage of false positives eliminated; None when there were none."""
    if fp_before < 0 or fp_after < 0 or fp_after > fp_before:
        raise ValueError(f"invalid reduction inputs: before={fp_before}, after={fp_after}")
    if fp_before == 0:
        return None
    return 100.0 * (fp_before - fp_after) / fp_before


@dataclass(frozen=True)
class TriageParams:
    sample_size: int = 100
    baseline_range: tuple[float, float] = (120.0, 300.0)  # seconds per alert, manual
    validated_seconds: float = 30.0  # seconds per alert with verdicts attached


@dataclass(frozen=True)
class TriageReport:
    sample_size: int
    baseline_range: tuple[float, float]
    validated_seconds: float
    baseline_mean_seconds: float
    mean_reduction_pct: float

    def to_dict(self) -> dict:
        return {
            "sample_size": self.sample_size,
            "baseline_range_seconds": list(self.baseline_range),
            "validated_seconds_per_alert": self.validated_seconds,
            "baseline_mean_seconds": self.baseline_mean_seconds,
            "mean_reduction_pct": self.mean_reduction_pct,
        }


def triage_report(
    validated: list[ValidatedAlert], params: TriageParams, seed: int
) -> TriageReport:
    """Model analyst time saved on a seeded sample of alerts.

    Manual triage time per sampled alert is drawn uniformly from the
    baseline range; validated alerts carry their evidence, so triage
    takes a fixed short review. Reported reduction is relative to the
    sample's mean baseline.
    """
    if params.sample_size > len(validated):
        raise ValueError(
            f"sample_size {params.sample_size} exceeds {len(validated)} validated alerts"
        )
    rng = random.Random(seed)
    sample = rng.sample(validated, params.sample_size)
    low, high = params.baseline_range
    baselines = [rng.uniform(low, high) for _ in sample]
    baseline_mean = sum(baselines) / len(baselines)
    reduction = 100.0 * (1.0 - params.validated_seconds / baseline_mean)
    return TriageReport(
        sample_size=params.sample_size,
        baseline_range=params.baseline_range,
        validated_seconds=params.validated_seconds,
        baseline_mean_seconds=baseline_mean,
        mean_reduction_pct=reduction,
    )


@dataclass(frozen=True)
class CategoryReduction:
    total: int
    fp_before: int
    fp_after: int
    reduction_pct: float | None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "fp_before": self.fp_before,
            "fp_after": self.fp_after,
            "reduction_pct": self.reduction_pct,
        }


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    precision: float | None
    recall: float | None
    fpr: float | None
    f1: float | None
    per_category: dict[str, CategoryReduction]
    pooled_reduction_pct: float | None
    mean_row_reduction_pct: float | None
    triage: TriageReport | None

    def to_dict(self) -> dict:
        return {
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "tn": self.counts.tn,
                "fn": self.counts.fn,
                "inconclusive": self.counts.inconclusive,
            },
            "precision": self.precision,
            "recall": self.recall,
            "fpr": self.fpr,
            "f1": self.f1,
            "per_category": {k: v.to_dict() for k, v in self.per_category.items()},
            "pooled_reduction_pct": self.pooled_reduction_pct,
            "mean_row_reduction_pct": self.mean_row_reduction_pct,
            "triage": self.triage.to_dict() if self.triage else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def category_reductions(
    validated: Iterable[ValidatedAlert], truth: dict[str, GroundTruthLabel]
) -> dict[str, CategoryReduction]:
    """Per-category FP volume: before validation vs still-on-queue after.

    "After" counts every benign alert the validation layer failed to
    dismiss, whether wrongly confirmed or left inconclusive; those are
    the alerts an analyst still has to look at.
    """
    per: dict[str, dict[str, int]] = {}
    for alert in validated:
        label = truth.get(alert.alert.alert_id)
        if label is None:
            raise MissingLabelError(alert.alert.alert_id)
        bucket = per.setdefault(
            alert.alert.category.value, {"total": 0, "fp_before": 0, "fp_after": 0}
        )
        bucket["total"] += 1
        if not label.exploitable:
            bucket["fp_before"] += 1
            if alert.verdict is not Verdict.FALSE_POSITIVE:
                bucket["fp_after"] += 1
    return {
        category: CategoryReduction(
            total=c["total"],
            fp_before=c["fp_before"],
            fp_after=c["fp_after"],
            reduction_pct=fp_reduction(c["fp_before"], c["fp_after"]),
        )
        for category, c in sorted(per.items())
    }


def build_report(
    validated: list[ValidatedAlert],
    truth: dict[str, GroundTruthLabel],
    triage_params: TriageParams | None = None,
    seed: int = 0,
) -> MetricsReport:
    """Full evaluation of a validated batch against ground truth."""
    counts = confusion(validated, truth)
    r = ratios(counts)
    per_category = category_reductions(validated, truth)
    fp_before = sum(c.fp_before for c in per_category.values())
    fp_after = sum(c.fp_after for c in per_category.values())
    pooled = fp_reduction(fp_before, fp_after)
    rows = [c.reduction_pct for c in per_category.values() if c.reduction_pct is not None]
    mean_rows = sum(rows) / len(rows) if rows else None
    triage = None
    if triage_params is not None:
        params = triage_params
        if params.sample_size > len(validated):
            params = TriageParams(
                sample_size=len(validated),
                baseline_range=params.baseline_range,
                validated_seconds=params.validated_seconds,
            )
        if params.sample_size > 0:
            triage = triage_report(validated, params, seed)
    return MetricsReport(
        counts=counts,
        precision=r.precision,
        recall=r.recall,
        fpr=r.fpr,
        f1=r.f1,
        per_category=per_category,
        pooled_reduction_pct=pooled,
        mean_row_reduction_pct=mean_rows,
        triage=triage,
    )


@dataclass(frozen=True)
class VolumeSummary:
    """Truth-free view: how much alert volume validation dismissed."""

    verdicts: dict[str, int]
    per_category: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {"verdicts": dict(self.verdicts), "per_category": self.per_category}


def volume_summary(validated: Iterable[ValidatedAlert]) -> VolumeSummary:
    verdicts = {v.value: 0 for v in Verdict}
    per: dict[str, dict[str, int]] = {}
    for alert in validated:
        verdicts[alert.verdict.value] += 1
        bucket = per.setdefault(
            alert.alert.category.value, {"raised": 0, "dismissed": 0, "remaining": 0}
        )
        bucket["raised"] += 1
        if alert.verdict is Verdict.FALSE_POSITIVE:
            bucket["dismissed"] += 1
        else:
            bucket["remaining"] += 1
    return VolumeSummary(verdicts=verdicts, per_category=dict(sorted(per.items())))


def _fmt(value: float | None, pattern: str = "{:.3f}") -> str:
    return "undefined" if value is None else pattern.format(value)


def render_text(report: MetricsReport) -> str:
    """Aligned plain-text rendering of a MetricsReport."""
    lines = []
    lines.append("False-positive impact by category")
    lines.append("-" * 70)
    header = f"{'category':<22}{'total':>8}{'fp before':>12}{'fp after':>12}{'reduction':>12}"
    lines.append(header)
    total = fp_before = fp_after = 0
    for name, row in report.per_category.items():
        lines.append(
            f"{name:<22}{row.total:>8}{row.fp_before:>12}{row.fp_after:>12}"
            f"{_fmt(row.reduction_pct, '{:.2f}%'):>12}"
        )
        total += row.total
        fp_before += row.fp_before
        fp_after += row.fp_after
    lines.append(
        f"{'total':<22}{total:>8}{fp_before:>12}{fp_after:>12}"
        f"{_fmt(report.pooled_reduction_pct, '{:.2f}%'):>12}"
    )
    lines.append(
        f"(pooled reduction {_fmt(report.pooled_reduction_pct, '{:.2f}%')}; "
        f"mean of category rows {_fmt(report.mean_row_reduction_pct, '{:.2f}%')})"
    )
    lines.append("")
    lines.append("Classification metrics")
    lines.append("-" * 70)
    c = report.counts
    lines.append(f"{'true positives':<28}{c.tp:>10}")
    lines.append(f"{'false positives':<28}{c.fp:>10}")
    lines.append(f"{'true negatives':<28}{c.tn:>10}")
    lines.append(f"{'false negatives':<28}{c.fn:>10}")
    lines.append(f"{'inconclusive (excluded)':<28}{c.inconclusive:>10}")
    lines.append(f"{'precision':<28}{_fmt(report.precision):>10}")
    lines.append(f"{'recall (tpr)':<28}{_fmt(report.recall):>10}")
    lines.append(f"{'false positive rate':<28}{_fmt(report.fpr):>10}")
    lines.append(f"{'f1':<28}{_fmt(report.f1):>10}")
    if report.triage is not None:
        t = report.triage
        lines.append("")
        lines.append("Analyst triage model")
        lines.append("-" * 70)
        lines.append(
            f"sample={t.sample_size}  baseline={t.baseline_range[0]:.0f}-"
            f"{t.baseline_range[1]:.0f}s/alert  validated={t.validated_seconds:.0f}s/alert"
        )
        lines.append(
            f"mean baseline {t.baseline_mean_seconds:.1f}s -> "
            f"mean triage-time reduction {t.mean_reduction_pct:.1f}%"
        )
    return "\n".join(lines) + "\n"
