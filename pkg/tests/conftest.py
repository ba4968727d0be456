from datetime import datetime, timedelta, timezone

import pytest

from needcast.corpus import Activity, ActivityTaxonomy, CheckIn, Venue
from needcast.sessions import Session, SessionEvent

T0 = datetime(2024, 3, 1, 8, 0, 0, tzinfo=timezone.utc)


def at(minutes: float) -> datetime:
    return T0 + timedelta(minutes=minutes)


def make_taxonomy(spec: dict[str, list[str]]) -> ActivityTaxonomy:
    """spec: {level1_id: [level2_id, ...]}"""
    activities = {}
    for parent, children in spec.items():
        activities[parent] = Activity(parent, parent.title(), 1, None)
        for child in children:
            activities[child] = Activity(child, child.title(), 2, parent)
    return ActivityTaxonomy(activities)


@pytest.fixture
def taxonomy():
    return make_taxonomy(
        {
            "food": ["restaurant", "cafe"],
            "travel": ["station", "airport"],
        }
    )


def make_session(user: str, *events: tuple[float, str]) -> Session:
    return Session(
        user,
        tuple(
            SessionEvent(at(minutes), f"v-{activity}", activity)
            for minutes, activity in events
        ),
    )


def make_checkin(user: str, venue: str, minutes: float) -> CheckIn:
    return CheckIn(user, venue, at(minutes), 0)


def make_venue(venue_id: str, activity: str, name: str = "", city: str = "Town") -> Venue:
    return Venue(venue_id, name or venue_id.upper(), city, activity, "US")


def write_tsv(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "".join("\t".join(str(f) for f in row) + "\n" for row in rows),
        encoding="utf-8",
    )
    return path
