"""Activity taxonomy, venue table, and check-in log.

File formats (strict TSV, see `tsvio`):
    taxonomy.tsv:  category_id  parent_id(empty for level-1)  level  name
    venues.tsv:    venue_id  name  city  category_id  country
    checkins.tsv:  user_id  venue_id  iso8601_utc_timestamp  tz_offset_minutes
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import DataError, SchemaError
from .tsvio import read_rows, write_rows


@dataclass(frozen=True)
class Activity:
    activity_id: str
    name: str
    level: int
    parent: str | None


@dataclass(frozen=True)
class ActivityTaxonomy:
    """Two-level category tree; validated and immutable."""

    activities: dict[str, Activity]

    def __post_init__(self):
        for act in self.activities.values():
            if not act.name:
                raise DataError(f"activity {act.activity_id} has an empty name")
            if act.level not in (1, 2):
                raise DataError(
                    f"activity {act.activity_id}: level outside {{1,2}}: {act.level}"
                )
            if act.level == 1 and act.parent is not None:
                raise DataError(f"level-1 activity {act.activity_id} has a parent")
            if act.level == 2:
                parent = self.activities.get(act.parent or "")
                if parent is None:
                    raise DataError(
                        f"activity {act.activity_id}: orphan parent {act.parent!r}"
                    )
                if parent.level != 1:
                    raise DataError(
                        f"activity {act.activity_id}: parent {act.parent} is not level 1"
                    )

    def __contains__(self, activity_id: str) -> bool:
        return activity_id in self.activities

    def level_ids(self, level: int) -> list[str]:
        """Sorted activity ids at the given level."""
        return sorted(a for a, act in self.activities.items() if act.level == level)

    def parent_of(self, activity_id: str) -> str | None:
        return self.activities[activity_id].parent

    def lift(self, activity_id: str, level: int) -> str:
        """Resolve an activity id at the requested hierarchy level."""
        act = self.activities.get(activity_id)
        if act is None:
            raise DataError(f"unknown activity: {activity_id}")
        if act.level == level:
            return activity_id
        if level == 1 and act.level == 2:
            return act.parent  # type: ignore[return-value]
        raise DataError(
            f"activity {activity_id} (level {act.level}) not resolvable at level {level}"
        )


@dataclass(frozen=True)
class Venue:
    venue_id: str
    name: str
    city: str
    activity: str
    country: str


@dataclass(frozen=True)
class CheckIn:
    user_id: str
    venue_id: str
    timestamp: datetime
    tz_offset: int


def parse_timestamp(raw: str) -> datetime:
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"bad ISO-8601 timestamp {raw!r}") from exc
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_taxonomy(path: str | Path) -> ActivityTaxonomy:
    """Load and validate the two-level activity taxonomy."""
    seen: set[str] = set()
    rows = []
    for line_no, (cat_id, parent, level_s, name) in read_rows(path, 4):
        if cat_id in seen:
            raise SchemaError(path, line_no, f"duplicate id {cat_id}")
        seen.add(cat_id)
        try:
            level = int(level_s)
        except ValueError:
            raise SchemaError(path, line_no, f"non-integer level {level_s!r}") from None
        if level not in (1, 2):
            raise SchemaError(path, line_no, f"level outside {{1,2}}: {level}")
        if not name:
            raise SchemaError(path, line_no, "empty name")
        rows.append((cat_id, parent or None, level, name))
    activities: dict[str, Activity] = {}
    for cat_id, parent, level, name in rows:
        activities[cat_id] = Activity(cat_id, name, level, parent)
    if not activities:
        raise DataError(f"empty taxonomy file: {path}")
    return ActivityTaxonomy(activities)


def write_taxonomy(taxonomy: ActivityTaxonomy, path: str | Path) -> None:
    rows = [
        (a.activity_id, a.parent or "", str(a.level), a.name)
        for a in sorted(taxonomy.activities.values(), key=lambda a: (a.level, a.activity_id))
    ]
    write_rows(path, rows)


def load_venues(
    path: str | Path,
    taxonomy: ActivityTaxonomy,
    countries: set[str] | None = None,
) -> dict[str, Venue]:
    """Load the venue table, keyed by venue_id.

    `countries` optionally restricts rows to the given ISO-3166 alpha-2 codes.
    """
    venues: dict[str, Venue] = {}
    for line_no, (venue_id, name, city, cat_id, country) in read_rows(path, 5):
        if cat_id not in taxonomy:
            raise SchemaError(path, line_no, f"unknown category {cat_id}")
        if venue_id in venues:
            raise SchemaError(path, line_no, f"duplicate venue_id {venue_id}")
        if countries is not None and country not in countries:
            continue
        venues[venue_id] = Venue(venue_id, name, city, cat_id, country)
    return venues


def write_venues(venues: dict[str, Venue], path: str | Path) -> None:
    rows = [
        (v.venue_id, v.name, v.city, v.activity, v.country)
        for v in sorted(venues.values(), key=lambda v: v.venue_id)
    ]
    write_rows(path, rows)


def load_checkins(path: str | Path) -> list[CheckIn]:
    """Load the check-in log in file order."""
    log = []
    for line_no, (user_id, venue_id, ts_raw, offset_raw) in read_rows(path, 4):
        try:
            ts = parse_timestamp(ts_raw)
        except ValueError as exc:
            raise SchemaError(path, line_no, str(exc)) from None
        try:
            offset = int(offset_raw)
        except ValueError:
            raise SchemaError(
                path, line_no, f"non-integer tz offset {offset_raw!r}"
            ) from None
        log.append(CheckIn(user_id, venue_id, ts, offset))
    return log


def write_checkins(log: list[CheckIn], path: str | Path) -> None:
    rows = [
        (c.user_id, c.venue_id, c.timestamp.isoformat(), str(c.tz_offset))
        for c in log
    ]
    write_rows(path, rows)


def top_venues_per_category(
    venues: dict[str, Venue],
    checkins: list[CheckIn],
    k: int,
    taxonomy: ActivityTaxonomy | None = None,
) -> dict[str, list[str]]:
    """Top-k venues per category by check-in count, ties by venue_id.

    With a taxonomy, only level-2 categories are reported; otherwise every
    category that appears in the venue table is.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    counts = Counter(c.venue_id for c in checkins)
    by_cat: dict[str, list[str]] = {}
    if taxonomy is not None:
        by_cat = {a: [] for a in taxonomy.level_ids(2)}
    for venue in venues.values():
        if taxonomy is not None and venue.activity not in by_cat:
            continue
        by_cat.setdefault(venue.activity, []).append(venue.venue_id)
    return {
        cat: sorted(ids, key=lambda v: (-counts[v], v))[:k]
        for cat, ids in by_cat.items()
    }
