"""Rendering of human-readable summaries, plot-data CSVs and figures.

Every figure is written as a PNG next to a CSV holding exactly the plotted
numbers, so results can be re-plotted or diffed without matplotlib.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def engagement_figure(raws, out_png, out_csv) -> dict:
    """Comment count vs viewcount scatter with a log-log power-law fit."""
    views = np.array([r.viewcount_d1 for r in raws], dtype=float)
    comments = np.array([r.comments_d2 for r in raws], dtype=float)
    mask = (views > 0) & (comments > 0)
    fit = None
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(np.log(views[mask]), np.log(comments[mask]), 1)
        fit = {"coefficient": float(np.exp(intercept)), "exponent": float(slope)}
    write_csv(out_csv, ["viewcount_d1", "comments_d2"], zip(views.astype(int), comments.astype(int)))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(views[mask], comments[mask], ".", alpha=0.4, markersize=3)
    if fit is not None:
        grid = np.geomspace(views[mask].min(), views[mask].max(), 50)
        ax.loglog(grid, fit["coefficient"] * grid ** fit["exponent"], "r-",
                  label=f"{fit['coefficient']:.3g} v^{fit['exponent']:.2f}")
        ax.legend()
    ax.set_xlabel("viewcount (day 1)")
    ax.set_ylabel("comments (day 2)")
    ax.set_title("Engagement vs popularity")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return fit or {}


def utility_figure(segment_results: list[dict], out_png, out_csv):
    """Bar chart of recovered utilities per segment (state x action)."""
    rows = []
    for seg in segment_results:
        if seg.get("u") is None:
            continue
        for k, u in enumerate(seg["u"]):
            for xi, row in enumerate(u):
                for ai, val in enumerate(row):
                    rows.append((str(seg.get("segment")), k, xi + 1, ai + 1, val))
    write_csv(out_csv, ["segment", "problem", "state", "action", "utility"], rows)
    shown = [s for s in segment_results if s.get("u") is not None][:4]
    if not shown:
        return
    fig, axes = plt.subplots(1, len(shown), figsize=(4 * len(shown), 3.2), squeeze=False)
    for ax, seg in zip(axes[0], shown):
        u0 = np.array(seg["u"][0])
        n_a = u0.shape[1]
        xs = np.arange(1, n_a + 1)
        width = 0.38
        for xi in range(u0.shape[0]):
            ax.bar(xs + (xi - 0.5) * width, u0[xi], width, label=f"state {xi + 1}")
        ax.set_title(f"segment {seg.get('segment')}")
        ax.set_xlabel("action")
        ax.set_ylabel("utility")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def r3_pair_figure(records: list[dict], out_png, out_csv):
    """Per-pair structured-cost robustness bars."""
    rows = [(str(r["pair"]), r.get("details", {}).get("beta"), r["normalized"]) for r in records]
    write_csv(out_csv, ["pair", "beta", "r3"], rows)
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(rows)), 3.6))
    ax.bar(range(len(rows)), [r[2] for r in rows])
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([r[0] for r in rows], rotation=60, fontsize=7, ha="right")
    ax.set_ylabel("gradient perturbation (normalized)")
    ax.set_title("Structured-cost robustness per pair")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def r3_beta_figure(curve: list[dict], out_png, out_csv):
    """Average structured-cost robustness as a function of the order beta."""
    rows = [(c["beta"], c["mean_r3"]) for c in curve]
    write_csv(out_csv, ["beta", "mean_r3"], rows)
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], "o-")
    ax.set_xlabel("order beta")
    ax.set_ylabel("mean gradient perturbation")
    ax.set_title("Structured-cost robustness vs order")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def render_report(out_dir, dataset_summary=None, test_payload=None,
                  robustness_payload=None, prediction_payload=None, raws=None) -> Path:
    """Assemble summary.md plus available figures/CSVs into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# Rationality analysis report", ""]
    if dataset_summary:
        lines += [
            "## Dataset",
            f"- records: {dataset_summary.get('n_records')}",
            f"- segments: {dataset_summary.get('n_segments')}",
            "",
        ]
    if raws:
        fit = engagement_figure(raws, out / "engagement.png", out / "engagement.csv")
        if fit:
            lines += [
                "## Engagement vs popularity",
                f"- power-law fit: comments = {fit['coefficient']:.3g} * views^{fit['exponent']:.2f}",
                "- figure: engagement.png (data: engagement.csv)",
                "",
            ]
    if test_payload:
        results = test_payload.get("results", [])
        feasible = [r for r in results if r.get("status") in ("feasible", "pass")]
        lines += [
            "## Rationality verdicts",
            f"- cost family: {test_payload.get('config', {}).get('cost', 'general')}",
            f"- passing: {len(feasible)} / {len(results)}",
        ]
        if test_payload.get("category_set") is not None:
            lines.append(f"- mutually consistent segment set: {test_payload['category_set']}")
        lines.append("")
        utility_figure(results, out / "utilities.png", out / "utilities.csv")
        lines += ["- recovered utilities: utilities.png (data: utilities.csv)", ""]
    if robustness_payload:
        recs = robustness_payload.get("results", [])
        by_metric: dict[str, list] = {}
        for r in recs:
            by_metric.setdefault(r["metric"], []).append(r)
        lines.append("## Robustness")
        for metric in sorted(by_metric):
            vals = np.array([r["normalized"] for r in by_metric[metric]])
            lines.append(
                f"- {metric}: n={vals.size} mean={vals.mean():.4g} "
                f"max={vals.max():.4g} p90={np.percentile(vals, 90):.4g}"
            )
        if "R3" in by_metric:
            r3_pair_figure(by_metric["R3"], out / "r3_pairs.png", out / "r3_pairs.csv")
            lines.append("- per-pair structured robustness: r3_pairs.png (data: r3_pairs.csv)")
        curve = robustness_payload.get("beta_curve")
        if curve:
            r3_beta_figure(curve, out / "r3_beta.png", out / "r3_beta.csv")
            lines.append("- robustness vs order: r3_beta.png (data: r3_beta.csv)")
        lines.append("")
    if prediction_payload:
        lines += [
            "## Prediction",
            f"- rows: {len(prediction_payload.get('rows', []))}",
            f"- mean squared action-index error: {prediction_payload.get('mse'):.4g}",
            f"- fraction within 2 units: {prediction_payload.get('fraction_within_2'):.4g}",
            "",
        ]
    path = out / "summary.md"
    path.write_text("\n".join(lines))
    return path
