"""First-order Markov model over activities.

Transition probabilities are maximum-likelihood row normalizations of
adjacent-pair counts within sessions:

    P(a_j | a_i) = n(a_i -> a_j) / sum_k n(a_i -> a_k)

Rows are kept unsmoothed; querying a source with no observed outgoing
transitions falls back to the marginal next-activity distribution so that
downstream mixtures never see a zero vector.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ActivityTaxonomy
from .errors import DataError
from .sessions import Session
from .tsvio import write_rows


@dataclass(frozen=True)
class TransitionModel:
    level: int
    counts: dict[tuple[str, str], int]
    row_totals: dict[str, int]
    marginal: dict[str, float]
    activities: frozenset[str]
    _rows: dict[str, dict[str, float]] = field(repr=False)
    _lift_map: dict[str, str] = field(repr=False)


def level_map(taxonomy: ActivityTaxonomy, level: int) -> dict[str, str]:
    mapping = {}
    for act_id, act in taxonomy.activities.items():
        if act.level == level:
            mapping[act_id] = act_id
        elif level == 1 and act.level == 2:
            mapping[act_id] = act.parent  # validated at taxonomy load
    return mapping


def session_pairs(sessions: list[Session], lift_map: dict[str, str], level: int):
    for s in sessions:
        lifted = []
        for e in s.events:
            a = lift_map.get(e.activity)
            if a is None:
                raise DataError(
                    f"activity {e.activity} not resolvable at level {level}"
                )
            lifted.append(a)
        for i in range(len(lifted) - 1):
            yield lifted[i], lifted[i + 1]


def fit_transitions(
    train_sessions: list[Session], taxonomy: ActivityTaxonomy, level: int
) -> TransitionModel:
    """Count adjacent within-session pairs at the given hierarchy level."""
    if level not in (1, 2):
        raise ValueError(f"level must be 1 or 2, got {level}")
    if not train_sessions:
        raise DataError("empty training set")
    lift_map = level_map(taxonomy, level)
    counts: Counter[tuple[str, str]] = Counter()
    for pair in session_pairs(train_sessions, lift_map, level):
        counts[pair] += 1
    if not counts:
        raise DataError("training sessions contain no transitions")
    row_totals: Counter[str] = Counter()
    target_totals: Counter[str] = Counter()
    for (a, b), n in counts.items():
        row_totals[a] += n
        target_totals[b] += n
    rows: dict[str, dict[str, float]] = defaultdict(dict)
    for (a, b), n in counts.items():
        rows[a][b] = n / row_totals[a]
    total = sum(target_totals.values())
    marginal = {b: n / total for b, n in target_totals.items()}
    return TransitionModel(
        level=level,
        counts=dict(counts),
        row_totals=dict(row_totals),
        marginal=marginal,
        activities=frozenset(taxonomy.level_ids(level)),
        _rows=dict(rows),
        _lift_map=lift_map,
    )


def next_activity_dist(model: TransitionModel, a_last: str) -> dict[str, float]:
    """MLE row for `a_last`, or the marginal distribution for unseen sources."""
    if a_last not in model.activities:
        raise DataError(f"unknown activity at level {model.level}: {a_last}")
    row = model._rows.get(a_last)
    if row:
        return dict(row)
    return dict(model.marginal)


def precision_at_k(
    model: TransitionModel, test_sessions: list[Session], k: int
) -> float:
    """Fraction of adjacent test pairs whose successor ranks in the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    hits = 0
    total = 0
    for a, b in session_pairs(test_sessions, model._lift_map, model.level):
        dist = next_activity_dist(model, a)
        top = sorted(dist, key=lambda x: (-dist[x], x))[:k]
        hits += b in top
        total += 1
    if total == 0:
        raise DataError("no transitions in test sessions")
    return hits / total


def export_transitions(models: list[TransitionModel], path: str | Path) -> None:
    """Write `level  from_id  to_id  count  probability` rows."""
    rows = []
    for model in sorted(models, key=lambda m: m.level):
        for (a, b) in sorted(model.counts):
            n = model.counts[(a, b)]
            p = n / model.row_totals[a]
            rows.append((str(model.level), a, b, str(n), f"{p:.6f}"))
    write_rows(path, rows)
