"""Graded-relevance evaluation of need rankings over activity transitions.

The protocol samples the most frequent distinct transitions from the test
sessions, pools the top-n needs of both endpoints as candidates, ranks the
candidates with each model conditioned on the source activity, and scores
the ranking with NDCG against graded judgments. Model pairs are compared
with a two-tailed paired t-test over per-transition NDCG values.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from statistics import correlation

from scipy import stats

from .anticipate import NeedRanking
from .corpus import ActivityTaxonomy
from .errors import DataError, SchemaError
from .relevance import top_needs
from .sessions import Session
from .transitions import level_map, session_pairs
from .tsvio import read_rows, write_rows

log = logging.getLogger(__name__)

CANDIDATES_PER_SIDE = 10
GRADE_MAX = 4


@dataclass(frozen=True)
class JudgmentSet:
    """Grades in [0,4] keyed by (from_activity, to_activity, need)."""

    grades: dict[tuple[str, str, str], int]


def load_judgments(path: str | Path) -> JudgmentSet:
    grades: dict[tuple[str, str, str], int] = {}
    for line_no, (frm, to, need, grade_s) in read_rows(path, 4):
        try:
            grade = int(grade_s)
        except ValueError:
            raise SchemaError(path, line_no, f"non-integer grade {grade_s!r}") from None
        if not 0 <= grade <= GRADE_MAX:
            raise SchemaError(path, line_no, f"grade outside [0,{GRADE_MAX}]: {grade}")
        key = (frm, to, need)
        if key in grades:
            raise SchemaError(path, line_no, f"duplicate judgment for {key}")
        grades[key] = grade
    return JudgmentSet(grades)


def dcg(grades_in_rank_order: Sequence[int], k: int) -> float:
    return sum(
        (2**g - 1) / math.log2(r + 1)
        for r, g in enumerate(grades_in_rank_order[:k], start=1)
    )


def ndcg_at_k(ranking: Sequence[str], grades: Mapping[str, int], k: int) -> float:
    """NDCG with exponential gain 2^g - 1; unjudged needs carry grade 0."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not ranking:
        raise DataError("empty ranking")
    actual = [grades.get(need, 0) for need in ranking]
    ideal = sorted(grades.values(), reverse=True)
    idcg = dcg(ideal, k)
    if idcg == 0:
        return 0.0
    return dcg(actual, k) / idcg


def candidate_needs(
    relevance: Mapping[str, Mapping[str, float]],
    frm: str,
    to: str,
    n: int = CANDIDATES_PER_SIDE,
) -> set[str]:
    """Union of the top-n needs of both transition endpoints."""
    pool: set[str] = set()
    for activity in (frm, to):
        dist = relevance.get(activity)
        if not dist:
            raise DataError(f"no need relevance for activity {activity}")
        pool.update(top_needs(dist, n))
    return pool


def most_frequent_transitions(
    test_sessions: list[Session],
    m: int,
    level: int,
    taxonomy: ActivityTaxonomy,
) -> list[tuple[str, str]]:
    """The m most frequent distinct test transitions at level 2.

    At level 1 every ordered activity pair is enumerated instead (still
    ordered by observed count, then by id), so the whole grid is covered.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    lift_map = level_map(taxonomy, level)
    counts = Counter(session_pairs(test_sessions, lift_map, level))
    if not counts:
        raise DataError("no transitions in test sessions")
    if level == 1:
        ids = taxonomy.level_ids(1)
        pairs = [(a, b) for a in ids for b in ids]
        return sorted(pairs, key=lambda p: (-counts.get(p, 0), p))
    ranked = sorted(counts, key=lambda p: (-counts[p], p))
    return ranked[:m]


@dataclass(frozen=True)
class EvalResults:
    model_ids: tuple[str, ...]
    k_list: tuple[int, ...]
    transitions: tuple[tuple[str, str], ...]
    ndcg: dict[tuple[str, int], list[float]]
    means: dict[tuple[str, int], float]
    p_values: dict[tuple[str, str, int], float]


def run_eval(
    models: Mapping[str, Callable[[str], NeedRanking]],
    transitions_sample: Sequence[tuple[str, str]],
    judgments: JudgmentSet,
    relevance: Mapping[str, Mapping[str, float]],
    k_list: Sequence[int],
    n_candidates: int = CANDIDATES_PER_SIDE,
) -> EvalResults:
    """Per-transition NDCG for every model, plus means and pairwise p-values.

    Each model ranking is restricted to the transition's candidate pool;
    candidates the model never scored are appended in need-id order so that
    every candidate receives a rank.
    """
    if not transitions_sample:
        raise DataError("empty transition sample")
    model_ids = tuple(models)
    k_list = tuple(k_list)
    ndcg: dict[tuple[str, int], list[float]] = {
        (mid, k): [] for mid in model_ids for k in k_list
    }
    for frm, to in transitions_sample:
        candidates = candidate_needs(relevance, frm, to, n_candidates)
        grades = {}
        for need in sorted(candidates):
            key = (frm, to, need)
            if key not in judgments.grades:
                log.warning("no judgment for %s; grading 0", key)
            grades[need] = judgments.grades.get(key, 0)
        for mid in model_ids:
            full = models[mid](frm)
            ranked = [need for need, _ in full.entries if need in candidates]
            ranked += sorted(candidates.difference(ranked))
            for k in k_list:
                ndcg[(mid, k)].append(ndcg_at_k(ranked, grades, k))
    means = {key: sum(vals) / len(vals) for key, vals in ndcg.items()}
    p_values = {}
    for i, a in enumerate(model_ids):
        for b in model_ids[i + 1 :]:
            for k in k_list:
                p_values[(a, b, k)] = paired_t_test(ndcg[(a, k)], ndcg[(b, k)])
    return EvalResults(
        model_ids=model_ids,
        k_list=k_list,
        transitions=tuple(transitions_sample),
        ndcg=ndcg,
        means=means,
        p_values=p_values,
    )


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> float:
    """Two-tailed p-value of the paired t statistic with n-1 dof."""
    if len(scores_a) != len(scores_b):
        raise ValueError("paired samples must have equal length")
    n = len(scores_a)
    if n < 2:
        raise ValueError("need at least 2 pairs")
    diffs = [a - b for a, b in zip(scores_a, scores_b)]
    if all(d == 0 for d in diffs):
        return 1.0
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0:
        log.warning("zero-variance nonzero differences; reporting p = 0")
        return 0.0
    return float(stats.ttest_rel(scores_a, scores_b).pvalue)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of two equal-length score vectors."""
    if len(xs) != len(ys):
        raise ValueError("vectors must have equal length")
    if len(xs) < 2:
        raise ValueError("need at least 2 observations")
    try:
        return correlation(xs, ys)
    except Exception as exc:
        raise DataError(f"correlation undefined: {exc}") from None


def write_results(results: EvalResults, path: str | Path) -> None:
    """Per-transition rows, then mean and significance summary blocks."""
    rows: list[tuple[str, ...]] = []
    for mid in results.model_ids:
        for k in results.k_list:
            values = results.ndcg[(mid, k)]
            for (frm, to), value in zip(results.transitions, values):
                rows.append((mid, str(k), frm, to, f"{value:.4f}"))
    rows.append(("# mean ndcg",))
    for mid in results.model_ids:
        for k in results.k_list:
            rows.append((mid, str(k), f"{results.means[(mid, k)]:.4f}"))
    rows.append(("# paired t-test p-values",))
    for (a, b, k), p in sorted(results.p_values.items()):
        rows.append((a, b, str(k), f"{p:.4f}"))
    write_rows(path, rows)
