"""Temporal scope of information needs: before / during / after an activity.

Scope triples are vote-count normalizations; pairs nobody voted on resolve
to the uniform default. Second-level activities inherit their parent's
triples, which keeps the vote files an order of magnitude smaller.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from .corpus import ActivityTaxonomy
from .errors import DataError, SchemaError
from .tsvio import read_rows, write_rows

PERIODS = ("pre", "peri", "post")
DEFAULT_SCOPE = (1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class TemporalVotes:
    votes: dict[tuple[str, str], tuple[int, int, int]]


@dataclass(frozen=True)
class TemporalModel:
    scope: dict[tuple[str, str], tuple[float, float, float]]

    def scope_for(self, activity: str, need: str) -> tuple[float, float, float]:
        return self.scope.get((activity, need), DEFAULT_SCOPE)


def load_temporal_votes(path: str | Path) -> TemporalVotes:
    """Read `category_id  need_id  pre_votes  peri_votes  post_votes` rows."""
    votes: dict[tuple[str, str], tuple[int, int, int]] = {}
    for line_no, (activity, need, pre_s, peri_s, post_s) in read_rows(path, 5):
        try:
            triple = (int(pre_s), int(peri_s), int(post_s))
        except ValueError:
            raise SchemaError(path, line_no, "non-integer vote count") from None
        if any(v < 0 for v in triple):
            raise SchemaError(path, line_no, "negative vote count")
        if sum(triple) == 0:
            raise SchemaError(path, line_no, f"all-zero votes for ({activity}, {need})")
        if (activity, need) in votes:
            raise SchemaError(path, line_no, f"duplicate key ({activity}, {need})")
        votes[(activity, need)] = triple
    return TemporalVotes(votes)


def fit_temporal_scope(votes: TemporalVotes) -> TemporalModel:
    """Normalize each vote triple by its own sum."""
    scope = {}
    for key, (pre, peri, post) in votes.votes.items():
        total = pre + peri + post
        if total == 0:
            raise DataError(f"all-zero votes for {key}")
        scope[key] = (pre / total, peri / total, post / total)
    return TemporalModel(scope)


def inherit_scope(model: TemporalModel, taxonomy: ActivityTaxonomy) -> TemporalModel:
    """Copy each parent triple down to level-2 activities lacking their own."""
    scope = dict(model.scope)
    needs_by_activity: dict[str, list[str]] = {}
    for activity, need in model.scope:
        needs_by_activity.setdefault(activity, []).append(need)
    for a2 in taxonomy.level_ids(2):
        parent = taxonomy.parent_of(a2)
        for need in needs_by_activity.get(parent, []):
            if (a2, need) not in scope:
                scope[(a2, need)] = model.scope[(parent, need)]
    return TemporalModel(scope)


def temporal_sensitivity(model: TemporalModel, need: str, activity: str) -> float:
    """Population variance of the scope triple; 0 uniform, 2/9 point mass.

    Evaluated as sum(p^2)/3 - 1/9, which equals the variance around the
    fixed mean 1/3 because the triple sums to 1, and lands exactly on the
    uniform and point-mass extremes in float arithmetic.
    """
    triple = model.scope_for(activity, need)
    return sum(p * p for p in triple) / 3 - 1 / 9


def compute_gamma(
    model: TemporalModel, needs: Iterable[str], activities: Iterable[str]
) -> float:
    """Mean post-period probability over all (need, activity) pairs."""
    needs = sorted(set(needs))
    activities = sorted(set(activities))
    if not needs or not activities:
        raise ValueError("needs and activities must be non-empty")
    total = 0.0
    for need in needs:
        for activity in activities:
            total += model.scope_for(activity, need)[2]
    return total / (len(needs) * len(activities))


def write_temporal_report(model: TemporalModel, path: str | Path) -> None:
    """Per-pair scope and sensitivity, 6-decimal columns."""
    rows = []
    for (activity, need) in sorted(model.scope):
        pre, peri, post = model.scope[(activity, need)]
        ts = temporal_sensitivity(model, need, activity)
        rows.append(
            (activity, need, f"{pre:.6f}", f"{peri:.6f}", f"{post:.6f}", f"{ts:.6f}")
        )
    write_rows(path, rows)
