"""Randomized small worlds shared by model tests and the acceptance suite."""

from __future__ import annotations

import random

from conftest import make_session, make_taxonomy
from needcast.needs import canonicalize
from needcast.relevance import build_need_counts, relevance_by_activity
from needcast.temporal import TemporalModel, TemporalVotes, fit_temporal_scope
from needcast.transitions import fit_transitions, next_activity_dist


def random_world(
    rng: random.Random,
    max_activities: int = 5,
    max_needs: int = 20,
    uniform_temporal: bool = False,
):
    """A consistent fitted world over one level-1 parent.

    Returns a dict with the taxonomy, fitted models, materialized relevance,
    and the raw pieces the brute-force oracles need.
    """
    n_act = rng.randint(2, max_activities)
    n_needs = rng.randint(2, max_needs)
    acts = [f"act{chr(ord('a') + i)}" for i in range(n_act)]
    taxonomy = make_taxonomy({"root": acts})
    needs = [f"t{i:02d}" for i in range(n_needs)]

    term_counts = {}
    for a in acts:
        for t in rng.sample(needs, rng.randint(1, n_needs)):
            term_counts[(a, t)] = rng.randint(1, 12)
    lexicon = canonicalize([{t} for t in needs], {t: 1 for t in needs})
    counts = build_need_counts(term_counts, lexicon, taxonomy)
    rel = relevance_by_activity(counts, taxonomy, 2)

    seqs = [
        [rng.choice(acts) for _ in range(rng.randint(2, 6))]
        for _ in range(rng.randint(3, 12))
    ]
    sessions = [
        make_session(f"u{i}", *((j * 10.0, a) for j, a in enumerate(seq)))
        for i, seq in enumerate(seqs)
    ]
    trans = fit_transitions(sessions, taxonomy, 2)

    need_ids = sorted({lexicon.need_of(t) for t in needs})
    if uniform_temporal:
        temporal = TemporalModel({})
    else:
        votes = {}
        for a in acts:
            for need in rng.sample(need_ids, rng.randint(0, len(need_ids))):
                triple = (rng.randint(0, 5), rng.randint(0, 5), rng.randint(0, 5))
                if sum(triple) == 0:
                    triple = (1, 1, 1)
                votes[(a, need)] = triple
        temporal = fit_temporal_scope(TemporalVotes(votes))

    return {
        "taxonomy": taxonomy,
        "activities": acts,
        "need_ids": need_ids,
        "need_of": {t: lexicon.need_of(t) for t in needs},
        "counts": counts,
        "rel": rel,
        "trans": trans,
        "trans_rows": {
            a: next_activity_dist(trans, a) for a in acts
        },
        "temporal": temporal,
        "global_counts": {
            (a, need): n
            for (a, need), n in counts.counts.items()
            if taxonomy.activities[a].level == 2
        },
    }
