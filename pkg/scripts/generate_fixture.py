#!/usr/bin/env python3
"""Generate the shipped mini-world fixture under fixtures/mini/.

Everything in here is an independent brute-force reference: the fixture's
judgment grades are derived from ground-truth utilities, and the expected
model ordering (mean NDCG@3: m2 > m1 > m0) is verified with direct formula
evaluation before the files are written. The script only uses the standard
library; it deliberately does not import the package it exercises.

Run from the repository root:  python3 scripts/generate_fixture.py
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, defaultdict
from datetime import datetime, timedelta, timezone
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "mini"
BASE = datetime(2024, 3, 1, 6, 0, 0, tzinfo=timezone.utc)

TAXONOMY = {
    "food": ["restaurant", "cafe"],
    "travel": ["station", "airport"],
    "shop": ["mall", "grocery"],
}
PARENT = {a2: a1 for a1, children in TAXONOMY.items() for a2 in children}

VENUES = {
    "restaurant": [
        ("v_re1", "Blue Bistro", "Kentville"),
        ("v_re2", "Corner Grill", "Arbor"),
        ("v_re3", "Harbor Kitchen", "Kentville"),
        ("v_re4", "Quiet Diner", "Arbor"),  # no snapshot entries on purpose
    ],
    "cafe": [
        ("v_ca1", "Bean Scene", "Kentville"),
        ("v_ca2", "Roast House", "Arbor"),
        ("v_ca3", "Morning Cup", "Kentville"),
    ],
    "station": [
        ("v_st1", "Central Station", "Kentville"),
        ("v_st2", "North Station", "Arbor"),
        ("v_st3", "Harbor Station", "Kentville"),
    ],
    "airport": [
        ("v_ai1", "Kentville Airport", "Kentville"),
        ("v_ai2", "Arbor Field", "Arbor"),
        ("v_ai3", "Bay Airstrip", "Kentville"),
    ],
    "mall": [
        ("v_ma1", "Grand Mall", "Kentville"),
        ("v_ma2", "West Arcade", "Arbor"),
        ("v_ma3", "City Plaza", "Kentville"),
    ],
    "grocery": [
        ("v_gr1", "Fresh Mart", "Kentville"),
        ("v_gr2", "Daily Goods", "Arbor"),
        ("v_gr3", "Green Grocer", "Kentville"),
    ],
}

# Synonym variants behind each canonical need label. The first listed term is
# kept globally most frequent so it becomes the cluster label.
SYNONYMS = {
    "hours": ["hours", "opening hours", "open time"],
    "menu": ["menu", "food menu"],
    "map": ["map", "location map"],
    "tickets": ["tickets", "ticket booking"],
    "parking": ["parking"],
    "reviews": ["reviews", "ratings"],
    "prices": ["prices", "price list"],
    "wifi": ["wifi"],
    "schedule": ["schedule", "timetable"],
    "deals": ["deals", "offers"],
    "jobs": ["jobs", "careers"],
    "events": ["events"],
}

# Per level-2 category: term -> suffix count after cleansing.
TERM_TABLE = {
    "restaurant": {
        "menu": 6, "food menu": 2,
        "hours": 3, "opening hours": 2,
        "reviews": 3, "ratings": 1,
        "prices": 2, "price list": 1,
        "parking": 2, "map": 1,
    },
    "cafe": {
        "wifi": 8,
        "hours": 4, "open time": 2,
        "menu": 2, "food menu": 2,
        "deals": 2, "offers": 1,
        "reviews": 1, "ratings": 1, "map": 1,
    },
    "station": {
        "schedule": 5, "timetable": 3,
        "tickets": 5, "ticket booking": 2,
        "map": 4, "location map": 1,
        "parking": 2, "hours": 1,
    },
    "airport": {
        "map": 5, "location map": 1,
        "tickets": 4, "ticket booking": 2,
        "parking": 5, "wifi": 3,
        "schedule": 2, "timetable": 1, "prices": 1,
    },
    "mall": {
        "deals": 5, "offers": 3,
        "hours": 4, "opening hours": 2,
        "parking": 4, "events": 3,
        "jobs": 1, "careers": 1, "map": 1,
    },
    "grocery": {
        "hours": 5, "opening hours": 3,
        "deals": 3, "offers": 2,
        "prices": 3, "price list": 2,
        "jobs": 2, "careers": 1,
        "parking": 2, "wifi": 1,
    },
}

GAZETTEER = ["arbor", "kentville"]
DAY_MONTH = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
    "sunday", "january", "february", "march", "april", "may", "june",
    "july", "august", "september", "october", "november", "december",
}

# Temporal votes per (level-1 category, need label): (pre, peri, post).
VOTES = {
    ("food", "menu"): (6, 3, 1),
    ("food", "hours"): (8, 1, 1),
    ("food", "reviews"): (2, 1, 7),
    ("food", "prices"): (5, 4, 1),
    ("food", "parking"): (5, 5, 0),
    ("food", "wifi"): (1, 8, 1),
    ("food", "map"): (6, 3, 1),
    ("food", "deals"): (6, 2, 2),
    ("travel", "schedule"): (7, 2, 1),
    ("travel", "tickets"): (8, 1, 1),
    ("travel", "map"): (5, 4, 1),
    ("travel", "parking"): (6, 3, 1),
    ("travel", "wifi"): (1, 8, 1),
    ("travel", "hours"): (6, 2, 2),
    ("travel", "prices"): (6, 3, 1),
    ("shop", "deals"): (6, 3, 1),
    ("shop", "hours"): (7, 2, 1),
    ("shop", "parking"): (5, 4, 1),
    ("shop", "events"): (6, 2, 2),
    ("shop", "jobs"): (2, 1, 7),
    ("shop", "prices"): (4, 5, 1),
    ("shop", "map"): (5, 4, 1),
    ("shop", "reviews"): (2, 2, 6),
}

# Mixing weight of the source activity's needs in the ground-truth utility.
ALPHA = 0.35

TRAIN_ROWS = {
    "restaurant": {"cafe": 0.55, "mall": 0.25, "restaurant": 0.20},
    "cafe": {"mall": 0.50, "cafe": 0.30, "restaurant": 0.20},
    "station": {"station": 0.60, "airport": 0.25, "mall": 0.15},
    "airport": {"station": 0.55, "mall": 0.30, "airport": 0.15},
    "mall": {"grocery": 0.45, "mall": 0.30, "cafe": 0.25},
    "grocery": {"grocery": 0.40, "mall": 0.40, "restaurant": 0.20},
}

TEST_SESSIONS = [
    ["airport", "station", "station"],
    ["airport", "station", "station"],
    ["station", "station"],
    ["station", "station"],
    ["mall", "grocery", "mall"],
    ["mall", "grocery"],
    ["mall", "grocery"],
    ["restaurant", "cafe"],
    ["restaurant", "cafe"],
    ["restaurant", "cafe"],
    ["cafe", "mall"],
    ["cafe", "mall"],
]

N_TRAIN_SESSIONS = 48
EVAL_TRANSITIONS = 6
NDCG_KS = (3, 5)


# -- shared brute-force helpers ---------------------------------------------

def normalize(text: str) -> str:
    return " ".join(text.lower().split())


def cleanse(raw: str) -> str | None:
    tokens = [
        t for t in raw.lower().split()
        if not t.isdigit() and t not in DAY_MONTH and t not in GAZETTEER
    ]
    term = " ".join(tokens)
    return term if len(term) > 2 else None


def distribution(counts: dict) -> dict:
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()}


def ndcg(ranked, grades, k):
    def dcg(gs):
        return sum((2**g - 1) / math.log2(r + 1) for r, g in enumerate(gs[:k], 1))

    ideal = sorted(grades.values(), reverse=True)
    idcg = dcg(ideal)
    if idcg == 0:
        return 0.0
    return dcg([grades.get(n, 0) for n in ranked]) / idcg


# -- world assembly ----------------------------------------------------------

def build_suggestion_snapshot():
    """Per-venue raw suggestion lists realizing TERM_TABLE after cleansing."""
    noise = [
        lambda t: t,
        lambda t: f"{t} 2024",
        lambda t: f"{t} january",
        lambda t: f"arbor {t}",
    ]
    snapshot_rows = []
    per_cat_counts = {}
    for category, table in TERM_TABLE.items():
        content_venues = [v for v in VENUES[category] if v[0] != "v_re4"]
        raws = []
        i = 0
        for term in sorted(table):
            for _ in range(table[term]):
                raws.append(noise[i % len(noise)](term))
                i += 1
        assert len(raws) <= 10 * len(content_venues), category
        per_venue = defaultdict(list)
        for j, raw in enumerate(raws):
            per_venue[content_venues[j % len(content_venues)][0]].append(raw)
        for venue_id, name, city in content_venues:
            query = normalize(f"{name} {city}")
            for raw in per_venue[venue_id]:
                snapshot_rows.append((query, f"{query} {raw}"))
            # one reformulation per venue; it must be ignored downstream
            snapshot_rows.append((query, f"best {category} near me"))
        per_cat_counts[category] = dict(Counter(
            cleanse(raw) for raw in raws
        ))
    for category, table in TERM_TABLE.items():
        assert per_cat_counts[category] == table, (category, per_cat_counts[category])
    return snapshot_rows


def assign_need_ids():
    """Labels from the most-frequent-term rule, ids over sorted labels."""
    totals = Counter()
    for table in TERM_TABLE.values():
        for term, n in table.items():
            totals[term] += n
    labels = {}
    for intended, terms in SYNONYMS.items():
        label = min(terms, key=lambda t: (-totals[t], t))
        assert label == intended, (intended, label, {t: totals[t] for t in terms})
        labels[label] = terms
    need_id = {
        label: f"n{idx:05d}" for idx, label in enumerate(sorted(labels), start=1)
    }
    term_to_label = {
        term: label for label, terms in labels.items() for term in terms
    }
    return need_id, term_to_label


def need_counts():
    need_id, term_to_label = assign_need_ids()
    counts = defaultdict(int)
    for category, table in TERM_TABLE.items():
        for term, n in table.items():
            counts[(category, need_id[term_to_label[term]])] += n
    return dict(counts)


def build_sessions():
    """Deterministic walk-based train sessions plus the designed test set."""
    rng = random.Random(2024)
    activities = sorted(PARENT)
    sessions = []
    for idx in range(N_TRAIN_SESSIONS):
        current = activities[idx % len(activities)]
        length = rng.randint(2, 4)
        seq = [current]
        for _ in range(length - 1):
            row = TRAIN_ROWS[current]
            r = rng.random()
            acc = 0.0
            for nxt, w in sorted(row.items()):
                acc += w
                if r <= acc:
                    current = nxt
                    break
            seq.append(current)
        sessions.append(seq)
    return sessions, [list(s) for s in TEST_SESSIONS]


def materialize_checkins(train_seqs, test_seqs):
    """Sessions -> timestamped check-ins, plus injected duplicates."""
    venue_cycle = {cat: 0 for cat in VENUES}

    def venue_for(activity):
        options = VENUES[activity]
        venue_cycle[activity] = (venue_cycle[activity] + 1) % len(options)
        return options[venue_cycle[activity]][0]

    checkins = []   # (user, venue, dt)
    sessions = []   # (user, [(dt, venue, activity)])
    all_seqs = [("train", seq) for seq in train_seqs] + [
        ("test", seq) for seq in test_seqs
    ]
    for idx, (kind, seq) in enumerate(all_seqs):
        user = f"u{idx % 6 + 1:02d}"
        # train sessions occupy days 0..47, test sessions days 50..61
        day = idx if kind == "train" else 50 + (idx - len(train_seqs))
        start = BASE + timedelta(days=day, hours=(idx * 3) % 12)
        events = []
        for j, activity in enumerate(seq):
            ts = start + timedelta(minutes=90 * j)
            venue = venue_for(activity)
            events.append((ts, venue, activity))
            checkins.append((user, venue, ts))
        sessions.append((user, events))
    duplicates = []
    for user, events in sessions[::7]:
        ts, venue, _ = events[0]
        duplicates.append((user, venue, ts + timedelta(minutes=3)))
    return checkins, duplicates, sessions


def transition_mle(session_seqs):
    counts = Counter()
    for seq in session_seqs:
        for pair in zip(seq, seq[1:]):
            counts[pair] += 1
    totals = Counter()
    for (a, _), n in counts.items():
        totals[a] += n
    rows = defaultdict(dict)
    for (a, b), n in counts.items():
        rows[a][b] = n / totals[a]
    marginal_counts = Counter()
    for (_, b), n in counts.items():
        marginal_counts[b] += n
    total = sum(marginal_counts.values())
    marginal = {b: n / total for b, n in marginal_counts.items()}
    return dict(rows), marginal, counts


def reference_models(counts, rows, marginal, temporal_scope, gamma):
    """Brute-force m0/m1/m2/m3 scores per source activity."""
    need_ids = sorted({need for (_, need) in counts})
    rel = {}
    for category in TERM_TABLE:
        cat_counts = {
            need: n for (a, need), n in counts.items() if a == category
        }
        rel[category] = distribution(cat_counts)
    grand = sum(counts.values())
    m0 = {need: sum(
        n for (_, other), n in counts.items() if other == need
    ) / grand for need in need_ids}

    def row_for(a):
        return rows.get(a) or marginal

    def score(model, a_last):
        out = {}
        for i in need_ids:
            future = 0.0
            for a_next in TERM_TABLE:
                p = row_for(a_last).get(a_next, 0.0)
                q = rel[a_next].get(i, 0.0)
                if model == "m3":
                    pre = temporal_scope.get((a_next, i), (1/3, 1/3, 1/3))[0]
                    future += pre * q * p
                else:
                    future += q * p
            p_last = rel[a_last].get(i, 0.0)
            if model == "m0":
                out[i] = m0[i]
            elif model == "m1":
                out[i] = future
            elif model == "m2":
                out[i] = gamma * p_last + (1 - gamma) * future
            else:
                post = temporal_scope.get((a_last, i), (1/3, 1/3, 1/3))[2]
                out[i] = post * p_last + future
        return out

    return rel, score


def main():
    need_id, term_to_label = assign_need_ids()
    snapshot = build_suggestion_snapshot()
    counts = need_counts()

    train_seqs, test_seqs = build_sessions()
    checkins, duplicates, sessions = materialize_checkins(train_seqs, test_seqs)
    n_total = len(train_seqs) + len(test_seqs)
    assert math.ceil(0.8 * n_total - 1e-9) == len(train_seqs)

    rows, marginal, _ = transition_mle(train_seqs)

    # level-2 temporal scope by inheritance from the level-1 vote table
    scope_l1 = {}
    for (a1, label), triple in VOTES.items():
        total = sum(triple)
        scope_l1[(a1, need_id[label])] = tuple(v / total for v in triple)
    scope_l2 = {}
    for a2, a1 in PARENT.items():
        for (act, need), triple in scope_l1.items():
            if act == a1:
                scope_l2[(a2, need)] = triple

    all_needs = sorted(need_id.values())
    level1 = sorted(TAXONOMY)
    gamma = sum(
        scope_l1.get((a1, need), (1/3, 1/3, 1/3))[2]
        for need in all_needs
        for a1 in level1
    ) / (len(all_needs) * len(level1))

    rel, score = reference_models(counts, rows, marginal, scope_l2, gamma)

    # most frequent distinct transitions in the test fraction
    test_counts = Counter()
    for seq in test_seqs:
        for pair in zip(seq, seq[1:]):
            test_counts[pair] += 1
    sample = sorted(test_counts, key=lambda p: (-test_counts[p], p))[:EVAL_TRANSITIONS]

    # ground-truth utilities -> integer grades; restricted candidate pools
    judgments = {}
    for ta, tb in sample:
        pool = set()
        for side in (ta, tb):
            ranked = sorted(rel[side], key=lambda i: (-rel[side][i], i))[:10]
            pool.update(ranked)
        utility = {
            i: ALPHA * rel[ta].get(i, 0.0) + (1 - ALPHA) * rel[tb].get(i, 0.0)
            for i in pool
        }
        u_max = max(utility.values())
        for i, u in utility.items():
            judgments[(ta, tb, i)] = int(math.floor(4 * u / u_max + 0.5))

    # reference evaluation
    means = {}
    per_model = {}
    for model in ("m0", "m1", "m2", "m3"):
        by_k = {k: [] for k in NDCG_KS}
        for ta, tb in sample:
            pool = {
                need for (a, b, need) in judgments if (a, b) == (ta, tb)
            }
            scores = score(model, ta)
            ranked = sorted(
                [i for i in scores if i in pool],
                key=lambda i: (-scores[i], i),
            )
            ranked += sorted(pool.difference(ranked))
            grades = {
                need: judgments[(ta, tb, need)] for need in pool
            }
            for k in NDCG_KS:
                by_k[k].append(ndcg(ranked, grades, k))
        per_model[model] = by_k
        for k in NDCG_KS:
            means[(model, k)] = sum(by_k[k]) / len(by_k[k])

    print("reference mean NDCG:")
    for model in ("m0", "m1", "m2", "m3"):
        print(
            f"  {model}: "
            + "  ".join(f"@{k} {means[(model, k)]:.4f}" for k in NDCG_KS)
        )
    print(f"  gamma = {gamma:.4f}")
    m0_3, m1_3, m2_3 = means[("m0", 3)], means[("m1", 3)], means[("m2", 3)]
    assert m2_3 > m1_3 > m0_3, "model ordering not achieved"
    assert m0_3 < 0.9, "baseline too strong"
    assert m2_3 - m0_3 >= 0.05, "margin too small"

    # -- write the fixture ----------------------------------------------------
    OUT.mkdir(parents=True, exist_ok=True)

    def tsv(name, rows_):
        path = OUT / name
        path.write_text(
            "".join("\t".join(str(f) for f in r) + "\n" for r in rows_),
            encoding="utf-8",
        )

    tax_rows = [(a1, "", 1, a1.title()) for a1 in sorted(TAXONOMY)]
    tax_rows += [
        (a2, a1, 2, a2.title())
        for a1 in sorted(TAXONOMY)
        for a2 in TAXONOMY[a1]
    ]
    tsv("taxonomy.tsv", tax_rows)

    venue_rows = [
        (vid, name, city, category, "US")
        for category in sorted(VENUES)
        for vid, name, city in VENUES[category]
    ]
    tsv("venues.tsv", venue_rows)

    checkin_rows = sorted(
        [(u, v, ts.isoformat(), 0) for u, v, ts in checkins + duplicates],
        key=lambda r: (r[2], r[0], r[1]),
    )
    tsv("checkins.tsv", checkin_rows)

    tsv("suggestions_snapshot.tsv", snapshot)

    (OUT / "gazetteer.txt").write_text(
        "# place names stripped from suggestion suffixes\n"
        + "".join(f"{g}\n" for g in GAZETTEER),
        encoding="utf-8",
    )

    # three assessors; the third leaves 'ratings' ungrouped (mild disagreement)
    full_groups = [sorted(terms) for _, terms in sorted(SYNONYMS.items())]
    third = [
        sorted(set(g) - {"ratings"}) if "ratings" in g else g for g in full_groups
    ]
    with open(OUT / "synonyms_input.jsonl", "w", encoding="utf-8") as fh:
        for assessor, groups in (
            ("a1", full_groups),
            ("a2", full_groups),
            ("a3", third + [["ratings"]]),
        ):
            fh.write(json.dumps({"assessor": assessor, "groups": groups}) + "\n")

    tsv(
        "temporal_votes.tsv",
        [
            (a1, need_id[label], pre, peri, post)
            for (a1, label), (pre, peri, post) in sorted(VOTES.items())
        ],
    )

    tsv(
        "judgments.tsv",
        [
            (ta, tb, need, grade)
            for (ta, tb, need), grade in sorted(judgments.items())
        ],
    )

    (OUT / "needcast.cfg").write_text(
        "# mini-world pipeline configuration\n"
        "taxonomy = taxonomy.tsv\n"
        "venues = venues.tsv\n"
        "checkins = checkins.tsv\n"
        "suggestions_snapshot = suggestions_snapshot.tsv\n"
        "synonyms = synonyms_input.jsonl\n"
        "temporal_votes = temporal_votes.tsv\n"
        "judgments = judgments.tsv\n"
        "gazetteer = gazetteer.txt\n"
        "out_dir = out\n"
        "max_gap_hours = 6\n"
        "dedup_window_minutes = 10\n"
        "train_fraction = 0.8\n"
        "top_venues = 200\n"
        "dashboard_k = 3\n"
        "ndcg_ks = 3,5\n"
        "smoothing = off\n"
        "gamma = auto\n"
        "density_min = 0.5\n"
        "cp_min = 0.5\n"
        "top_terms = 100\n"
        f"eval_transitions = {EVAL_TRANSITIONS}\n"
        "candidate_needs = 10\n",
        encoding="utf-8",
    )

    print(f"fixture written to {OUT}")
    print(f"  {len(checkin_rows)} check-ins ({len(duplicates)} duplicates)")
    print(f"  {len(snapshot)} snapshot rows, {len(judgments)} judgments")
    print(f"  transitions sampled: {sample}")


if __name__ == "__main__":
    main()
