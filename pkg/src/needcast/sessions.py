"""Check-in deduplication, session extraction, and the train/test split.

A session is one user's chronological run of check-ins in which no two
consecutive events are separated by more than `max_gap` (boundary
inclusive: a gap of exactly `max_gap` stays in-session).
"""

from __future__ import annotations

import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from .corpus import CheckIn, Venue, parse_timestamp
from .errors import DataError


@dataclass(frozen=True)
class SessionEvent:
    timestamp: datetime
    venue_id: str
    activity: str


@dataclass(frozen=True)
class Session:
    user_id: str
    events: tuple[SessionEvent, ...]

    def __post_init__(self):
        if not self.events:
            raise DataError("session with no events")

    @property
    def start(self) -> datetime:
        return self.events[0].timestamp


def dedup_checkins(
    log: list[CheckIn], window: timedelta
) -> tuple[list[CheckIn], float]:
    """Drop repeat check-ins at the same venue within `window` of the last
    kept one; returns (kept, fraction_removed).

    Output is in chronological order, ties broken by (user_id, venue_id).
    """
    if window <= timedelta(0):
        raise ValueError(f"window must be positive, got {window}")
    by_key: dict[tuple[str, str], list[CheckIn]] = defaultdict(list)
    for c in log:
        by_key[(c.user_id, c.venue_id)].append(c)
    kept: list[CheckIn] = []
    for key in by_key:
        last_kept = None
        for c in sorted(by_key[key], key=lambda c: c.timestamp):
            if last_kept is None or c.timestamp - last_kept > window:
                kept.append(c)
                last_kept = c.timestamp
    kept.sort(key=lambda c: (c.timestamp, c.user_id, c.venue_id))
    removed = len(log) - len(kept)
    return kept, (removed / len(log) if log else 0.0)


def extract_sessions(
    log: list[CheckIn],
    venues: dict[str, Venue],
    max_gap: timedelta = timedelta(hours=6),
) -> list[Session]:
    """Greedy left-to-right segmentation of each user's check-ins.

    Events are ordered by (timestamp, venue_id) per user; a gap strictly
    greater than `max_gap` starts a new session.
    """
    if max_gap <= timedelta(0):
        raise ValueError(f"max_gap must be positive, got {max_gap}")
    per_user: dict[str, list[CheckIn]] = defaultdict(list)
    for c in log:
        per_user[c.user_id].append(c)
    sessions: list[Session] = []
    for user_id in per_user:
        events = sorted(per_user[user_id], key=lambda c: (c.timestamp, c.venue_id))
        current: list[SessionEvent] = []
        prev_ts = None
        for c in events:
            venue = venues.get(c.venue_id)
            if venue is None:
                raise DataError(f"check-in references unknown venue: {c.venue_id}")
            if prev_ts is not None and c.timestamp - prev_ts > max_gap:
                sessions.append(Session(user_id, tuple(current)))
                current = []
            current.append(SessionEvent(c.timestamp, c.venue_id, venue.activity))
            prev_ts = c.timestamp
        if current:
            sessions.append(Session(user_id, tuple(current)))
    sessions.sort(key=lambda s: (s.user_id, s.start))
    return sessions


def chronological_split(
    sessions: list[Session], train_fraction: float
) -> tuple[list[Session], list[Session]]:
    """Earliest ceil(fraction * N) sessions train, rest test.

    Sessions are atomic; ordering ties on start time break by
    (user_id, first venue_id).
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0,1), got {train_fraction}")
    if len(sessions) < 2:
        raise DataError(f"cannot split {len(sessions)} session(s)")
    ordered = sorted(
        sessions, key=lambda s: (s.start, s.user_id, s.events[0].venue_id)
    )
    # small epsilon so float noise in fraction*N cannot bump the ceiling
    n_train = math.ceil(train_fraction * len(ordered) - 1e-9)
    return ordered[:n_train], ordered[n_train:]


def write_sessions_jsonl(sessions: list[Session], path: str | Path) -> None:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for s in sessions:
            obj = {
                "user": s.user_id,
                "start": s.start.isoformat(),
                "events": [
                    {
                        "ts": e.timestamp.isoformat(),
                        "venue": e.venue_id,
                        "category": e.activity,
                    }
                    for e in s.events
                ],
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def load_sessions_jsonl(path: str | Path) -> list[Session]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing input file: {path}")
    sessions = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                events = tuple(
                    SessionEvent(parse_timestamp(e["ts"]), e["venue"], e["category"])
                    for e in obj["events"]
                )
                sessions.append(Session(obj["user"], events))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: bad session record: {exc}") from None
    return sessions
