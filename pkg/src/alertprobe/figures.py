"""Report figures rendered to files alongside the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricsReport, VolumeSummary  # noqa: E402

_VERDICT_COLORS = {
    "true_positive": "#c0392b",
    "false_positive": "#7f8c8d",
    "inconclusive": "#e67e22",
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fp_reduction_figure(report: MetricsReport, path: Path) -> Path:
    """Grouped bars: benign alert volume before vs after validation, per category."""
    categories = list(report.per_category)
    before = [report.per_category[c].fp_before for c in categories]
    after = [report.per_category[c].fp_after for c in categories]
    x = range(len(categories))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar([i - 0.2 for i in x], before, width=0.4, label="false positives before", color="#7f8c8d")
    ax.bar([i + 0.2 for i in x], after, width=0.4, label="false positives after", color="#2980b9")
    for i, c in enumerate(categories):
        pct = report.per_category[c].reduction_pct
        if pct is not None:
            ax.annotate(f"-{pct:.1f}%", (i, max(before[i], 1)), ha="center", va="bottom", fontsize=9)
    ax.set_xticks(list(x))
    ax.set_xticklabels([c.replace("_", "\n") for c in categories], fontsize=9)
    ax.set_ylabel("alerts")
    ax.set_title("False-positive volume before vs after validation")
    ax.legend()
    return _save(fig, path)


def verdict_figure(summary: VolumeSummary, path: Path) -> Path:
    """Verdict histogram across the validated batch."""
    names = list(summary.verdicts)
    values = [summary.verdicts[n] for n in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values, color=[_VERDICT_COLORS.get(n, "#34495e") for n in names])
    for i, v in enumerate(values):
        ax.annotate(str(v), (i, v), ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("alerts")
    ax.set_title("Validation verdicts")
    return _save(fig, path)


def confusion_figure(report: MetricsReport, path: Path) -> Path:
    """2x2 confusion matrix against ground truth (inconclusive shown aside)."""
    c = report.counts
    grid = [[c.tp, c.fn], [c.fp, c.tn]]
    fig, ax = plt.subplots(figsize=(5, 4.2))
    image = ax.imshow(grid, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax.text(j, i, str(grid[i][j]), ha="center", va="center",
                    color="white" if grid[i][j] > max(map(max, grid)) / 2 else "black")
    ax.set_xticks([0, 1], ["confirmed", "dismissed"])
    ax.set_yticks([0, 1], ["exploitable", "benign"])
    ax.set_xlabel("verdict")
    ax.set_ylabel("ground truth")
    ax.set_title(f"Verdicts vs ground truth ({c.inconclusive} inconclusive excluded)")
    fig.colorbar(image, ax=ax, shrink=0.8)
    return _save(fig, path)


def render_report_figures(
    out_dir: Path,
    summary: VolumeSummary,
    report: MetricsReport | None = None,
) -> list[Path]:
    """Write every figure the available data supports; returns the paths."""
    figures_dir = Path(out_dir) / "figures"
    written = [verdict_figure(summary, figures_dir / "verdicts.png")]
    if report is not None:
        written.append(fp_reduction_figure(report, figures_dir / "fp_reduction.png"))
        written.append(confusion_figure(report, figures_dir / "confusion.png"))
    return written
