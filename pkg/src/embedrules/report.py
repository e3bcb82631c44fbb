"""Human-facing outputs: Markdown rule tables and matplotlib figures.

Figures land next to the delimited artifacts so a finished run directory is
self-describing: the silhouette sweep, the GA fitness trace, and the fuzzy
partitions behind the winning rulebase.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fuzzy import LABELS, LinguisticVariable
from .rules import RuleBase, RuleReportRow


def markdown_rule_table(rulebase: RuleBase, rows: Sequence[RuleReportRow]) -> str:
    """One row per rule: each variable's label or 'irrelevant', DS and accuracy."""
    names = [v.name for v in rulebase.variables]
    header = "| Rule | Class | " + " | ".join(names) + " | DS | Acc | Wins |"
    sep = "|" + "---|" * (len(names) + 5)
    lines = [header, sep]
    for i, row in enumerate(rows):
        by_var = {a.variable: a.label for a in row.rule.antecedents}
        cells = [by_var.get(j, "irrelevant") for j in range(len(names))]
        acc = "-" if row.accuracy is None else f"{row.accuracy:.2f}"
        lines.append(
            f"| {i} | {row.rule.consequent} | "
            + " | ".join(cells)
            + f" | {row.dominance:.2f} | {acc} | {row.fire_count} |"
        )
    return "\n".join(lines) + "\n"


def markdown_summary_table(aggregate: dict) -> str:
    """Mean +/- std over trials for the headline metrics."""
    lines = [
        "| Metric | Mean | Std |",
        "|---|---|---|",
    ]
    for metric, (mean, std) in aggregate.items():
        lines.append(f"| {metric} | {mean:.4f} | {std:.4f} |")
    return "\n".join(lines) + "\n"


def plot_silhouette_sweep(rows: Sequence[tuple[int, float]], path: str | Path,
                          best_k: Optional[int] = None) -> None:
    ks = [k for k, _ in rows]
    scores = [s for _, s in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, scores, marker="o")
    if best_k is not None:
        ax.axvline(best_k, color="tab:red", linestyle="--", alpha=0.6, label=f"k = {best_k}")
        ax.legend()
    ax.set_xlabel("number of clusters k")
    ax.set_ylabel("silhouette index")
    ax.set_xticks(ks)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fitness_history(history: Sequence[dict], path: str | Path) -> None:
    gens = [row["generation"] for row in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(gens, [row["best_fitness"] for row in history], label="best")
    ax.plot(gens, [row["mean_fitness"] for row in history], label="mean", alpha=0.7)
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_partitions(variables: Sequence[LinguisticVariable], path: str | Path) -> None:
    """The three-label membership functions per variable, IT2 bands shaded."""
    n = len(variables)
    cols = min(2, n)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(5 * cols, 3 * rows), squeeze=False)
    colors = {"low": "tab:red", "medium": "tab:orange", "high": "tab:green"}
    for idx, var in enumerate(variables):
        ax = axes[idx // cols][idx % cols]
        xs = np.linspace(var.domain_min, var.domain_max, 400)
        for label in LABELS:
            lo, up = var.degree_bounds(label, xs)
            ax.plot(xs, up, color=colors[label], label=label)
            if var.kind == "it2":
                ax.plot(xs, lo, color=colors[label], linestyle="--", alpha=0.6)
                ax.fill_between(xs, lo, up, color=colors[label], alpha=0.15)
        ax.set_title(var.name)
        ax.set_ylim(-0.05, 1.05)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    for idx in range(n, rows * cols):
        axes[idx // cols][idx % cols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
