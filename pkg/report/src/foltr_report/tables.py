"""Markdown summary tables from a summarized run directory.

Two tables are emitted: ranking quality after unlearning (discounted online
performance and final offline nDCG@10) and unlearning verification (RelR Diff
and Dist Diff). Rows identify (dataset, click model, scenario); columns are
strategies. The best cell per row is bold -- the maximum, except for Dist
Diff where smaller is better -- with ties all bolded. Cells whose paired
t-test against the best strategy has p <= 0.05 carry a dagger superscript.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .curves import STRATEGY_LABELS, _ordered
from .loading import dataset_label, load_summary

SIGNIFICANT = "^†"
P_THRESHOLD = 0.05

# metric key -> (display name, better direction, cell format)
_QUALITY_METRICS = (
    ("online_performance_unlearn", "Online performance", "max", "{:.2f}"),
    ("final_offline_ndcg10", "Offline nDCG@10", "max", "{:.4f}"),
)
_VERIFICATION_METRICS = (
    ("relr_diff", "RelR Diff", "max", "{:.4f}"),
    ("dist_diff", "Dist Diff", "min", "{:.4f}"),
)


def _best_strategies(cells: Dict[str, Optional[float]], direction: str) -> List[str]:
    values = {s: v for s, v in cells.items() if v is not None}
    if not values:
        return []
    pick = max(values.values()) if direction == "max" else min(values.values())
    return [s for s, v in values.items() if abs(v - pick) <= 1e-12]


def _p_value(p_values: Dict[str, float], a: str, b: str) -> Optional[float]:
    return p_values.get(f"{a}|{b}", p_values.get(f"{b}|{a}"))


def _metric_rows(summary: dict, row_label: str, strategies: Sequence[str],
                 metrics) -> List[str]:
    rows = []
    for key, name, direction, fmt in metrics:
        cells = {s: summary["strategies"][s].get(key) for s in strategies}
        best = _best_strategies(cells, direction)
        reference = best[0] if best else None
        p_values = summary.get("p_values", {}).get(key, {})
        rendered = []
        for strategy in strategies:
            value = cells[strategy]
            if value is None:
                rendered.append("--")
                continue
            text = fmt.format(value)
            if strategy in best:
                text = f"**{text}**"
            elif reference is not None:
                p = _p_value(p_values, reference, strategy)
                if p is not None and p <= P_THRESHOLD:
                    text += SIGNIFICANT
            rendered.append(text)
        rows.append(f"| {row_label} | {name} | " + " | ".join(rendered) + " |")
    return rows


def render_tables(run_dir) -> str:
    """Render both summary tables as markdown text (requires `summary.json`)."""
    run_dir = Path(run_dir)
    summary = load_summary(run_dir)
    strategies = _ordered(summary["strategies"])
    labels = [STRATEGY_LABELS.get(s, s) for s in strategies]
    row_label = " / ".join([dataset_label(run_dir), summary["click_profile"],
                            summary["scenario"]])

    header = "| setting | metric | " + " | ".join(labels) + " |"
    rule = "| --- | --- | " + " | ".join("---" for _ in labels) + " |"

    lines = ["## Ranking quality after unlearning", "", header, rule]
    lines += _metric_rows(summary, row_label, strategies, _QUALITY_METRICS)
    lines += ["", "## Unlearning verification", "", header, rule]
    lines += _metric_rows(summary, row_label, strategies, _VERIFICATION_METRICS)
    lines += ["", f"Bold marks the best value per row; {SIGNIFICANT} marks cells whose "
                  f"paired t-test against the best strategy has p <= {P_THRESHOLD}.", ""]
    return "\n".join(lines)
