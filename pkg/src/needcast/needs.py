"""Information-need lexicon construction.

Pipeline: probe queries per venue -> suggestion suffixes (offline snapshot
or HTTP client) -> cleansed terms -> per-activity counts -> assessor
synonym graph -> density clustering -> canonical needs.
"""

from __future__ import annotations

import json
import logging
import os
import time
import urllib.parse
import urllib.request
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Venue
from .errors import DataError
from .tsvio import read_rows, write_rows

log = logging.getLogger(__name__)

SUGGESTIONS_PER_QUERY = 10


@dataclass(frozen=True)
class SuggestionRecord:
    venue_id: str
    activity: str
    suffix: str


@dataclass(frozen=True)
class SynonymGraph:
    """Undirected term graph; edge weight = assessors co-grouping the pair."""

    nodes: frozenset[str]
    edges: dict[tuple[str, str], int]


@dataclass(frozen=True)
class Need:
    need_id: str
    label: str
    synonyms: frozenset[str]


@dataclass(frozen=True)
class NeedLexicon:
    needs: dict[str, Need]
    term_to_need: dict[str, str]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for need in self.needs.values():
            if need.label not in need.synonyms:
                raise DataError(f"need {need.need_id}: label not among synonyms")
            for term in need.synonyms:
                if term in seen:
                    raise DataError(
                        f"term {term!r} in needs {seen[term]} and {need.need_id}"
                    )
                seen[term] = need.need_id
        if seen != self.term_to_need:
            raise DataError("term_to_need inconsistent with synonym sets")

    def need_of(self, term: str) -> str | None:
        return self.term_to_need.get(term)


def normalize_query_text(text: str) -> str:
    return " ".join(text.lower().split())


def probe_queries(venues: Iterable[Venue]) -> list[tuple[str, str]]:
    """One probe per venue: lowercased `name city`, whitespace-normalized.

    Venues with a missing name or city are skipped with a warning.
    """
    probes = []
    for v in venues:
        if not v.name.strip() or not v.city.strip():
            log.warning("venue %s lacks a name or city; skipped", v.venue_id)
            continue
        probes.append((v.venue_id, normalize_query_text(f"{v.name} {v.city}")))
    return probes


class OfflineFileSource:
    """Suggestion snapshot: TSV rows `query  suggestion`, in rank order."""

    def __init__(self, path: str | Path):
        self._by_query: dict[str, list[str]] = defaultdict(list)
        for _, (query, suggestion) in read_rows(path, 2):
            self._by_query[normalize_query_text(query)].append(suggestion)

    def get(self, query: str) -> list[str]:
        return list(self._by_query.get(normalize_query_text(query), []))


class HttpSuggestionSource:
    """Client for a remote suggestion endpoint honoring the offline contract.

    The endpoint receives the probe in the `q` parameter and answers JSON:
    either a plain list of suggestion strings or the OpenSearch-style pair
    `[query, [suggestions...]]`. Transport failures are retried up to
    `max_retries` times; a query that keeps failing yields an empty list.
    """

    def __init__(
        self,
        base_url: str,
        max_retries: int = 2,
        rate_limit_qps: float = 0.0,
        timeout: float = 10.0,
        transport=None,
        sleep=time.sleep,
        clock=time.monotonic,
    ):
        self.base_url = base_url
        self.max_retries = max_retries
        self.min_interval = 1.0 / rate_limit_qps if rate_limit_qps > 0 else 0.0
        self.timeout = timeout
        self._transport = transport or self._http_get
        self._sleep = sleep
        self._clock = clock
        self._last_call = None

    def _http_get(self, url: str) -> str:
        with urllib.request.urlopen(url, timeout=self.timeout) as resp:
            return resp.read().decode("utf-8")

    def _throttle(self):
        if self.min_interval <= 0:
            return
        now = self._clock()
        if self._last_call is not None:
            wait = self.min_interval - (now - self._last_call)
            if wait > 0:
                self._sleep(wait)
        self._last_call = self._clock()

    def get(self, query: str) -> list[str]:
        url = f"{self.base_url}?q={urllib.parse.quote_plus(query)}"
        for attempt in range(self.max_retries + 1):
            self._throttle()
            try:
                payload = json.loads(self._transport(url))
            except Exception as exc:
                if attempt == self.max_retries:
                    log.warning("query %r failed after %d retries: %s",
                                query, self.max_retries, exc)
                    return []
                continue
            if (
                isinstance(payload, list)
                and len(payload) == 2
                and isinstance(payload[1], list)
            ):
                payload = payload[1]
            if not isinstance(payload, list):
                log.warning("query %r: malformed suggestion payload", query)
                return []
            return [str(s) for s in payload]
        return []


def fetch_suggestions(source, query: str, limit: int = SUGGESTIONS_PER_QUERY) -> list[str]:
    """Suffixes of suggestions that extend the probe; reformulations dropped."""
    probe = normalize_query_text(query)
    suffixes = []
    for raw in source.get(query):
        suggestion = normalize_query_text(raw)
        if not suggestion.startswith(probe + " "):
            continue  # reformulation or the probe itself
        suffix = suggestion[len(probe):].strip()
        if suffix:
            suffixes.append(suffix)
        if len(suffixes) == limit:
            break
    return suffixes


def load_stoplist() -> frozenset[str]:
    """Packaged English day and month names."""
    text = (
        resources.files("needcast.data")
        .joinpath("day_month_stoplist.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def load_gazetteer(path: str | Path) -> frozenset[str]:
    """User-supplied place terms, one phrase per line, '#' comments allowed."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing gazetteer file: {path}")
    phrases = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip().lower()
            if line and not line.startswith("#"):
                phrases.add(" ".join(line.split()))
    return frozenset(phrases)


_STOPLIST = None


def _stoplist() -> frozenset[str]:
    global _STOPLIST
    if _STOPLIST is None:
        _STOPLIST = load_stoplist()
    return _STOPLIST


def _drop_phrases(tokens: list[str], phrases: list[list[str]]) -> list[str]:
    out = []
    i = 0
    while i < len(tokens):
        matched = None
        for phrase in phrases:
            if tokens[i : i + len(phrase)] == phrase:
                matched = phrase
                break
        if matched:
            i += len(matched)
        else:
            out.append(tokens[i])
            i += 1
    return out


def cleanse_suffix(raw: str, gazetteer: frozenset[str] = frozenset()) -> str | None:
    """Cleansed term, or None when nothing longer than 2 characters remains.

    Drops standalone number tokens, English day/month names, and gazetteer
    phrases (longest match first, repeated to a fixpoint so removals cannot
    leave a new phrase occurrence behind).
    """
    tokens = [
        t
        for t in raw.lower().split()
        if not t.isdigit() and t not in _stoplist()
    ]
    phrases = sorted(
        (p.split() for p in gazetteer), key=lambda p: (-len(p), p)
    )
    while phrases:
        dropped = _drop_phrases(tokens, phrases)
        if dropped == tokens:
            break
        tokens = dropped
    term = " ".join(tokens)
    return term if len(term) > 2 else None


def aggregate_terms(records: Iterable[SuggestionRecord]) -> dict[tuple[str, str], int]:
    """Exact multiset counts of cleansed terms per activity."""
    counts: Counter[tuple[str, str]] = Counter()
    for r in records:
        counts[(r.activity, r.suffix)] += 1
    return dict(counts)


def top_terms_per_category(
    term_counts: Mapping[tuple[str, str], int], n: int
) -> frozenset[str]:
    """Union over categories of the n most frequent terms (ties by term)."""
    per_cat: dict[str, Counter[str]] = defaultdict(Counter)
    for (activity, term), count in term_counts.items():
        per_cat[activity][term] += count
    top: set[str] = set()
    for activity in per_cat:
        ranked = sorted(per_cat[activity].items(), key=lambda kv: (-kv[1], kv[0]))
        top.update(term for term, _ in ranked[:n])
    return frozenset(top)


def build_synonym_graph(assessor_sets: list[list[set[str]]]) -> SynonymGraph:
    """Clique per assessor group; parallel edges accumulate as weights."""
    nodes: set[str] = set()
    edges: Counter[tuple[str, str]] = Counter()
    for idx, groups in enumerate(assessor_sets):
        assigned: set[str] = set()
        for group in groups:
            overlap = assigned & set(group)
            if overlap:
                raise DataError(
                    f"assessor {idx}: overlapping groups (shared {sorted(overlap)})"
                )
            assigned.update(group)
            members = sorted(group)
            nodes.update(members)
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    edges[(members[i], members[j])] += 1
    return SynonymGraph(frozenset(nodes), dict(edges))


def cluster_synonyms(
    graph: SynonymGraph, density_min: float = 0.5, cp_min: float = 0.5
) -> list[set[str]]:
    """Greedy density clustering of the synonym graph.

    Seed with the highest weighted-degree remaining node, then grow by the
    neighbor with the best cluster property

        cp(n, C) = w(n, C) / (density(C) * |C|)

    while the grown cluster keeps density 2*W / (|C| * (|C| - 1)) above
    `density_min` and cp stays above `cp_min`. Emitted clusters are removed
    and the process repeats; isolated nodes end up as singletons.
    """
    if not 0 < density_min <= 1 or not 0 < cp_min <= 1:
        raise ValueError("density_min and cp_min must be in (0, 1]")
    adj: dict[str, dict[str, int]] = defaultdict(dict)
    for (u, v), w in graph.edges.items():
        adj[u][v] = w
        adj[v][u] = w
    remaining = set(graph.nodes)
    clusters: list[set[str]] = []
    while remaining:
        wdeg = {
            n: sum(w for m, w in adj[n].items() if m in remaining)
            for n in remaining
        }
        seed = min(remaining, key=lambda n: (-wdeg[n], n))
        cluster = {seed}
        internal = 0
        while True:
            candidates = {
                m
                for n in cluster
                for m in adj[n]
                if m in remaining and m not in cluster
            }
            if not candidates:
                break
            size = len(cluster)
            density = 1.0 if size == 1 else 2 * internal / (size * (size - 1))
            weight_to = {
                m: sum(adj[m].get(n, 0) for n in cluster) for m in candidates
            }
            cp = {m: weight_to[m] / (density * size) for m in candidates}
            best = min(candidates, key=lambda m: (-cp[m], m))
            new_density = 2 * (internal + weight_to[best]) / ((size + 1) * size)
            if cp[best] < cp_min or new_density < density_min:
                break
            cluster.add(best)
            internal += weight_to[best]
        clusters.append(cluster)
        remaining -= cluster
    return clusters


def canonicalize(
    clusters: Iterable[set[str]],
    term_totals: Mapping[str, int],
    label_overrides: Mapping[str, str] | None = None,
) -> NeedLexicon:
    """Label each cluster by its most frequent term (ties by text).

    `label_overrides` maps a member term to a manual label; the label is
    added to the synonym set when it is not already a member.
    """
    overrides = dict(label_overrides or {})
    labeled: list[tuple[str, set[str]]] = []
    for cluster in clusters:
        synonyms = set(cluster)
        manual = [overrides[t] for t in sorted(synonyms) if t in overrides]
        if manual:
            label = manual[0]
            synonyms.add(label)
        else:
            label = min(synonyms, key=lambda t: (-term_totals.get(t, 0), t))
        labeled.append((label, synonyms))
    labeled.sort(key=lambda pair: pair[0])
    needs = {}
    term_to_need = {}
    for idx, (label, synonyms) in enumerate(labeled, start=1):
        need_id = f"n{idx:05d}"
        needs[need_id] = Need(need_id, label, frozenset(synonyms))
        for term in synonyms:
            term_to_need[term] = need_id
    return NeedLexicon(needs, term_to_need)


def fleiss_kappa(assessor_sets: list[list[set[str]]]) -> float:
    """Fleiss' kappa over same-group/different ratings of all term pairs."""
    n_raters = len(assessor_sets)
    if n_raters < 2:
        raise ValueError("need at least 2 assessors")
    universe = sorted({t for groups in assessor_sets for g in groups for t in g})
    pairs = [
        (universe[i], universe[j])
        for i in range(len(universe))
        for j in range(i + 1, len(universe))
    ]
    if not pairs:
        return 1.0
    same_of = []
    for groups in assessor_sets:
        membership = {}
        for gid, group in enumerate(groups):
            for term in group:
                membership[term] = gid
        same_of.append(membership)
    total_same = 0
    p_bar_sum = 0.0
    for u, v in pairs:
        n_same = sum(
            1
            for m in same_of
            if u in m and v in m and m[u] == m[v]
        )
        n_diff = n_raters - n_same
        total_same += n_same
        p_bar_sum += (n_same * n_same + n_diff * n_diff - n_raters) / (
            n_raters * (n_raters - 1)
        )
    p_bar = p_bar_sum / len(pairs)
    p_same = total_same / (len(pairs) * n_raters)
    p_e = p_same * p_same + (1 - p_same) * (1 - p_same)
    if p_e == 1.0:
        return 1.0
    return (p_bar - p_e) / (1 - p_e)


def build_lexicon(
    term_counts: Mapping[tuple[str, str], int],
    assessor_sets: list[list[set[str]]],
    density_min: float = 0.5,
    cp_min: float = 0.5,
    top_terms: int = 100,
    label_overrides: Mapping[str, str] | None = None,
) -> NeedLexicon:
    """Full normalization: cluster the top terms, pass the rest through."""
    candidates = top_terms_per_category(term_counts, top_terms)
    restricted = [
        [g & candidates for g in groups if g & candidates]
        for groups in assessor_sets
    ]
    graph = build_synonym_graph(restricted)
    clusters = cluster_synonyms(graph, density_min, cp_min)
    clustered = {t for c in clusters for t in c}
    all_terms = {term for (_, term) in term_counts}
    singletons = [{t} for t in sorted(all_terms - clustered)]
    totals: Counter[str] = Counter()
    for (_, term), count in term_counts.items():
        totals[term] += count
    return canonicalize(clusters + singletons, totals, label_overrides)


def write_suggestions(records: list[SuggestionRecord], path: str | Path) -> None:
    write_rows(path, [(r.venue_id, r.activity, r.suffix) for r in records])


def load_suggestions(path: str | Path) -> list[SuggestionRecord]:
    return [
        SuggestionRecord(venue_id, activity, suffix)
        for _, (venue_id, activity, suffix) in read_rows(path, 3)
    ]


def load_assessor_sets(path: str | Path) -> list[list[set[str]]]:
    """Read `{assessor, groups}` JSON lines in file order."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing input file: {path}")
    sets = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                sets.append([set(g) for g in obj["groups"]])
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: bad assessor record: {exc}") from None
    return sets


def load_label_overrides(path: str | Path) -> dict[str, str]:
    """TSV rows `term  label`: the cluster containing term gets the label."""
    return {term: label for _, (term, label) in read_rows(path, 2)}


def write_lexicon(lexicon: NeedLexicon, path: str | Path) -> None:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    payload = {
        "needs": [
            {
                "id": need.need_id,
                "label": need.label,
                "synonyms": sorted(need.synonyms),
            }
            for need in sorted(lexicon.needs.values(), key=lambda n: n.need_id)
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_lexicon(path: str | Path) -> NeedLexicon:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing input file: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except ValueError as exc:
            raise DataError(f"{path}: bad lexicon JSON: {exc}") from None
    needs = {}
    term_to_need = {}
    for entry in payload.get("needs", []):
        need = Need(entry["id"], entry["label"], frozenset(entry["synonyms"]))
        needs[need.need_id] = need
        for term in need.synonyms:
            term_to_need[term] = need.need_id
    return NeedLexicon(needs, term_to_need)
