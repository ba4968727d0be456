"""Figure rendering for report outputs.

Every report-producing subcommand writes a PNG next to its delimited
output. Figures are rendered headless and with pinned metadata so that
repeated runs are byte-identical.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import EvalResults  # noqa: E402
from .temporal import TemporalModel, temporal_sensitivity  # noqa: E402

_SAVE_OPTS = {"format": "png", "metadata": {"Software": None}, "dpi": 110}


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def figure_path(output_path: str | Path, suffix: str) -> Path:
    """fig path derived from a report path: results.tsv -> results_<suffix>.png"""
    output_path = Path(output_path)
    return output_path.with_name(f"{output_path.stem}_{suffix}.png")


def render_ndcg_means(results: EvalResults, path: str | Path) -> None:
    """Grouped bars: mean NDCG per model, one group per cutoff."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    models = list(results.model_ids)
    width = 0.8 / max(len(results.k_list), 1)
    for j, k in enumerate(results.k_list):
        xs = [i + j * width for i in range(len(models))]
        ys = [results.means[(mid, k)] for mid in models]
        ax.bar(xs, ys, width=width, label=f"NDCG@{k}")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(models))])
    ax.set_xticklabels(models)
    ax.set_ylim(0, 1)
    ax.set_ylabel("mean NDCG")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_category_volume(
    totals: list[tuple[str, int, int]], path: str | Path
) -> None:
    """Horizontal bars of suggestion volume per category (total and unique)."""
    fig, ax = plt.subplots(figsize=(6, 0.45 * max(len(totals), 4) + 1))
    names = [name for name, _, _ in totals]
    ys = range(len(totals), 0, -1)
    ax.barh(list(ys), [t for _, t, _ in totals], height=0.7, label="total")
    ax.barh(list(ys), [u for _, _, u in totals], height=0.4, label="unique")
    ax.set_yticks(list(ys))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("suggestion suffixes")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_temporal_scopes(
    model: TemporalModel, path: str | Path, max_pairs: int = 12
) -> None:
    """Stacked pre/peri/post bars for the most temporally sensitive pairs."""
    keyed = sorted(
        model.scope,
        key=lambda key: (-temporal_sensitivity(model, key[1], key[0]), key),
    )[:max_pairs]
    fig, ax = plt.subplots(figsize=(6, 0.45 * max(len(keyed), 4) + 1))
    ys = list(range(len(keyed), 0, -1))
    labels = [f"{a} / {i}" for a, i in keyed]
    pre = [model.scope[k][0] for k in keyed]
    peri = [model.scope[k][1] for k in keyed]
    post = [model.scope[k][2] for k in keyed]
    ax.barh(ys, pre, height=0.7, label="pre")
    ax.barh(ys, peri, height=0.7, left=pre, label="peri")
    ax.barh(ys, post, height=0.7, left=[a + b for a, b in zip(pre, peri)], label="post")
    ax.set_yticks(ys)
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_xlim(0, 1)
    ax.set_xlabel("temporal scope")
    ax.legend(frameon=False, fontsize=8, loc="lower right")
    fig.tight_layout()
    _save(fig, path)
