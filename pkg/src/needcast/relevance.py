"""Need-relevance distributions per activity.

Relevance is relative frequency: P(i|a) = n(i,a) / sum_i' n(i',a).
Second-level activities can be smoothed against their parent with a
Dirichlet-style interpolation. `mode="paper"` uses lambda = beta / (n(a) + beta),
which weights the sparse child estimate MORE as the corpus grows;
`mode="standard"` uses the conventional lambda = n(a) / (n(a) + beta).
Both agree at lambda = 1/2 when n(a) equals beta.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

from .corpus import ActivityTaxonomy
from .errors import DataError
from .needs import NeedLexicon
from .tsvio import write_rows


@dataclass(frozen=True)
class NeedCounts:
    """Counts n(i,a) at both hierarchy levels; level-1 rows aggregate children."""

    counts: dict[tuple[str, str], int]
    activity_totals: dict[str, int]
    beta: int


def build_need_counts(
    term_counts: Mapping[tuple[str, str], int],
    lexicon: NeedLexicon,
    taxonomy: ActivityTaxonomy,
) -> NeedCounts:
    """Map per-activity term counts through the lexicon and aggregate.

    Input keys must be second-level activities; terms missing from the
    lexicon are ignored (they carry no canonical need).
    """
    counts: Counter[tuple[str, str]] = Counter()
    for (activity, term), count in term_counts.items():
        act = taxonomy.activities.get(activity)
        if act is None:
            raise DataError(f"unknown activity in term counts: {activity}")
        if act.level != 2:
            raise DataError(f"term counts must be per level-2 activity: {activity}")
        need = lexicon.need_of(term)
        if need is None:
            continue
        counts[(activity, need)] += count
    beta = sum(counts.values())
    for (a2, need), count in list(counts.items()):
        counts[(taxonomy.parent_of(a2), need)] += count
    totals: Counter[str] = Counter()
    for (activity, _), count in counts.items():
        totals[activity] += count
    return NeedCounts(dict(counts), dict(totals), beta)


def need_relevance(counts: NeedCounts, activity: str) -> dict[str, float]:
    """Sparse P(i|a); zero-count needs are never materialized."""
    total = counts.activity_totals.get(activity, 0)
    if total == 0:
        raise DataError(f"no needs observed for activity {activity}")
    return {
        need: n / total
        for (a, need), n in counts.counts.items()
        if a == activity
    }


def smoothing_lambda(counts: NeedCounts, a_l2: str, mode: str = "paper") -> float:
    n = counts.activity_totals.get(a_l2, 0)
    if counts.beta <= 0:
        raise DataError("no level-2 observations; beta is zero")
    if mode == "paper":
        return counts.beta / (n + counts.beta)
    if mode == "standard":
        return n / (n + counts.beta)
    raise ValueError(f"unknown smoothing mode: {mode}")


def smoothed_relevance(
    counts: NeedCounts,
    a_l2: str,
    taxonomy: ActivityTaxonomy,
    mode: str = "paper",
) -> dict[str, float]:
    """Interpolate a second-level distribution with its parent's."""
    act = taxonomy.activities.get(a_l2)
    if act is None or act.level != 2:
        raise DataError(f"{a_l2} is not a level-2 activity")
    parent = act.parent
    if counts.activity_totals.get(parent, 0) == 0:
        raise DataError(f"parent {parent} of {a_l2} has no observed needs")
    parent_dist = need_relevance(counts, parent)
    if counts.activity_totals.get(a_l2, 0) == 0:
        return parent_dist
    child_dist = need_relevance(counts, a_l2)
    lam = smoothing_lambda(counts, a_l2, mode)
    mixed = {need: (1 - lam) * p for need, p in parent_dist.items()}
    for need, p in child_dist.items():
        mixed[need] = mixed.get(need, 0.0) + lam * p
    return mixed


def recall_at_k(
    predicted: list[str], ground_truth: set[str], k: int | None
) -> float:
    """|top-k(predicted) & truth| / |truth|; k=None means no cutoff."""
    if not ground_truth:
        raise DataError("empty ground truth")
    if k is not None and k < 1:
        raise ValueError(f"k must be >= 1 or None, got {k}")
    top = predicted if k is None else predicted[:k]
    return len(set(top) & ground_truth) / len(ground_truth)


def top_needs(dist: Mapping[str, float], k: int) -> list[str]:
    """k most probable needs, ties by need id."""
    return sorted(dist, key=lambda need: (-dist[need], need))[:k]


def category_jaccard(
    rel_a: Mapping[str, float], rel_b: Mapping[str, float], k: int
) -> float:
    """Jaccard coefficient of the two top-k need sets."""
    set_a = set(top_needs(rel_a, k))
    set_b = set(top_needs(rel_b, k))
    union = set_a | set_b
    if not union:
        return 0.0
    return len(set_a & set_b) / len(union)


def export_relevance(counts: NeedCounts, taxonomy: ActivityTaxonomy, path: str | Path) -> None:
    """Write `level  category_id  need_id  probability`, best needs first."""
    rows = []
    for level in (1, 2):
        for activity in taxonomy.level_ids(level):
            if counts.activity_totals.get(activity, 0) == 0:
                continue
            dist = need_relevance(counts, activity)
            for need in sorted(dist, key=lambda i: (-dist[i], i)):
                rows.append(
                    (str(level), activity, need, f"{dist[need]:.6f}")
                )
    write_rows(path, rows)


def global_need_frequency(counts: NeedCounts, taxonomy: ActivityTaxonomy) -> dict[str, float]:
    """Corpus-wide need frequency over level-2 activities."""
    totals: Counter[str] = Counter()
    level2 = set(taxonomy.level_ids(2))
    for (activity, need), n in counts.counts.items():
        if activity in level2:
            totals[need] += n
    grand = sum(totals.values())
    if grand == 0:
        raise DataError("empty need corpus")
    return {need: n / grand for need, n in totals.items()}


def relevance_by_activity(
    counts: NeedCounts,
    taxonomy: ActivityTaxonomy,
    level: int,
    smoothing: str = "off",
) -> dict[str, dict[str, float]]:
    """Materialize need distributions for every observed activity at a level.

    Smoothing (`paper` or `standard`) applies only at level 2.
    """
    out = {}
    for activity in taxonomy.level_ids(level):
        if counts.activity_totals.get(activity, 0) == 0:
            if (
                level == 2
                and smoothing != "off"
                and counts.activity_totals.get(taxonomy.parent_of(activity), 0) > 0
            ):
                out[activity] = smoothed_relevance(counts, activity, taxonomy, smoothing)
            continue
        if level == 2 and smoothing != "off":
            out[activity] = smoothed_relevance(counts, activity, taxonomy, smoothing)
        else:
            out[activity] = need_relevance(counts, activity)
    return out
