"""Ranking models for a user's next information needs.

All models score needs for a given last activity and order them by score
(ties by need id). `relevance` arguments are per-activity need
distributions at the model's hierarchy level, as produced by
`relevance.relevance_by_activity`.

    m0: global need frequency, context-agnostic
    m1: expected relevance over the next-activity distribution
    m2: gamma-mixture of last-activity relevance and the m1 expectation
    m3: m2 with per-need temporal weights (post for the last activity,
        pre for each upcoming one) instead of a single gamma
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

from .corpus import ActivityTaxonomy
from .errors import DataError
from .relevance import NeedCounts, global_need_frequency
from .temporal import TemporalModel
from .transitions import TransitionModel, next_activity_dist

MODEL_IDS = ("m0", "m1", "m2", "m3")


@dataclass(frozen=True)
class NeedRanking:
    last_activity: str | None
    model_id: str
    entries: tuple[tuple[str, float], ...]


def _ranked(last_activity: str | None, model_id: str, scores: Mapping[str, float]) -> NeedRanking:
    for need, score in scores.items():
        if not math.isfinite(score):
            raise DataError(f"non-finite score for need {need}")
    ordered = tuple(
        (need, scores[need])
        for need in sorted(scores, key=lambda i: (-scores[i], i))
    )
    return NeedRanking(last_activity, model_id, ordered)


def rank_m0(
    counts: NeedCounts,
    taxonomy: ActivityTaxonomy,
    a_last: str | None = None,
) -> NeedRanking:
    """Most frequent needs in the whole corpus, regardless of activity."""
    return _ranked(a_last, "m0", global_need_frequency(counts, taxonomy))


def _expected_next_relevance(
    relevance: Mapping[str, Mapping[str, float]],
    transitions: TransitionModel,
    a_last: str,
) -> dict[str, float]:
    scores: dict[str, float] = {}
    for a_next, p_next in next_activity_dist(transitions, a_last).items():
        for need, p_need in relevance.get(a_next, {}).items():
            scores[need] = scores.get(need, 0.0) + p_need * p_next
    return scores


def rank_m1(
    relevance: Mapping[str, Mapping[str, float]],
    transitions: TransitionModel,
    a_last: str,
) -> NeedRanking:
    """Relevance expected over all possible upcoming activities."""
    return _ranked(
        a_last, "m1", _expected_next_relevance(relevance, transitions, a_last)
    )


def rank_m2(
    relevance: Mapping[str, Mapping[str, float]],
    transitions: TransitionModel,
    a_last: str,
    gamma: float,
) -> NeedRanking:
    """Mixture: gamma on the last activity's needs, 1-gamma on upcoming ones."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma must be in [0,1], got {gamma}")
    scores = {
        need: (1 - gamma) * score
        for need, score in _expected_next_relevance(
            relevance, transitions, a_last
        ).items()
    }
    for need, p_need in relevance.get(a_last, {}).items():
        scores[need] = scores.get(need, 0.0) + gamma * p_need
    return _ranked(a_last, "m2", scores)


def rank_m3(
    relevance: Mapping[str, Mapping[str, float]],
    transitions: TransitionModel,
    temporal: TemporalModel,
    a_last: str,
) -> NeedRanking:
    """Per-need temporal weighting; scores are proportional, not normalized."""
    scores: dict[str, float] = {}
    for a_next, p_next in next_activity_dist(transitions, a_last).items():
        for need, p_need in relevance.get(a_next, {}).items():
            p_pre = temporal.scope_for(a_next, need)[0]
            scores[need] = scores.get(need, 0.0) + p_pre * p_need * p_next
    for need, p_need in relevance.get(a_last, {}).items():
        p_post = temporal.scope_for(a_last, need)[2]
        scores[need] = scores.get(need, 0.0) + p_post * p_need
    return _ranked(a_last, "m3", scores)


def top_k(ranking: NeedRanking, k: int) -> list[str]:
    """First k need ids of the ranking (all of them when it is shorter)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return [need for need, _ in ranking.entries[:k]]
