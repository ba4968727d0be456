"""Command-line interface.

Subcommands mirror the pipeline stages:

    ingest | sessions | fit-transitions | build-needs | normalize-needs
    | fit-temporal | rank | evaluate

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import functools
import json
import logging
from collections import Counter
from datetime import timedelta

import click

from . import anticipate, evaluate, needs, relevance, report, sessions, temporal, transitions
from .config import PipelineConfig, load_config
from .corpus import (
    load_checkins,
    load_taxonomy,
    load_venues,
    top_venues_per_category,
)
from .errors import DataError
from .tsvio import write_rows

log = logging.getLogger("needcast")


def pipeline_command(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataError as exc:
            click.echo(f"error: data: {exc}", err=True)
            raise SystemExit(3) from exc
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except Exception as exc:
            click.echo(f"error: internal: {type(exc).__name__}: {exc}", err=True)
            raise SystemExit(4) from exc

    return wrapper


@click.group()
@click.option(
    "--config",
    "-c",
    "config_path",
    type=click.Path(),
    default=None,
    help="Pipeline config file (falls back to $NEEDCAST_CONFIG).",
)
@click.option("--verbose", "-v", is_flag=True, help="Log warnings and info to stderr.")
@click.pass_context
def main(ctx, config_path, verbose):
    """Anticipate information needs from check-in activity."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = config_path


def _config(config_path) -> PipelineConfig:
    return load_config(config_path)


def _load_corpus(cfg: PipelineConfig):
    taxonomy = load_taxonomy(cfg.path("taxonomy"))
    countries = set(cfg.countries) if cfg.countries else None
    venues = load_venues(cfg.path("venues"), taxonomy, countries)
    return taxonomy, venues


@main.command()
@click.pass_obj
@pipeline_command
def ingest(config_path):
    """Validate inputs and rank the most visited venues per category."""
    cfg = _config(config_path)
    taxonomy, venues = _load_corpus(cfg)
    checkins = load_checkins(cfg.path("checkins"))
    top = top_venues_per_category(venues, checkins, cfg.top_venues, taxonomy)
    visit_counts = Counter(c.venue_id for c in checkins)
    rows = []
    for category in sorted(top):
        for venue_id in top[category]:
            rows.append((category, venue_id, str(visit_counts[venue_id])))
    out = cfg.out_path("top_venues.tsv")
    write_rows(out, rows)
    n1 = len(taxonomy.level_ids(1))
    n2 = len(taxonomy.level_ids(2))
    click.echo(
        f"ingested {n1} level-1 / {n2} level-2 categories, "
        f"{len(venues)} venues, {len(checkins)} check-ins -> {out}"
    )


@main.command("sessions")
@click.option("--max-gap-hours", type=float, default=None)
@click.option("--dedup-window-minutes", type=float, default=None)
@click.pass_obj
@pipeline_command
def sessions_cmd(config_path, max_gap_hours, dedup_window_minutes):
    """Deduplicate check-ins and extract gap-bounded activity sessions."""
    cfg = _config(config_path)
    gap = max_gap_hours if max_gap_hours is not None else cfg.max_gap_hours
    window = (
        dedup_window_minutes
        if dedup_window_minutes is not None
        else cfg.dedup_window_minutes
    )
    taxonomy, venues = _load_corpus(cfg)
    checkins = load_checkins(cfg.path("checkins"))
    if not checkins:
        raise DataError(f"no check-ins in {cfg.path('checkins')}")
    deduped, removed = sessions.dedup_checkins(checkins, timedelta(minutes=window))
    extracted = sessions.extract_sessions(deduped, venues, timedelta(hours=gap))
    out = cfg.out_path("sessions.jsonl")
    sessions.write_sessions_jsonl(extracted, out)
    click.echo(
        f"dedup removed {removed:.1%} of check-ins; "
        f"{len(extracted)} sessions from {len(deduped)} events -> {out}"
    )


@main.command("fit-transitions")
@click.pass_obj
@pipeline_command
def fit_transitions_cmd(config_path):
    """Fit first-order transition models on the chronological train split."""
    cfg = _config(config_path)
    taxonomy, _ = _load_corpus(cfg)
    all_sessions = sessions.load_sessions_jsonl(cfg.out_path("sessions.jsonl"))
    train, test = sessions.chronological_split(all_sessions, cfg.train_fraction)
    models = [
        transitions.fit_transitions(train, taxonomy, level) for level in (1, 2)
    ]
    out = cfg.out_path("transitions.tsv")
    transitions.export_transitions(models, out)
    for model in models:
        try:
            p5 = transitions.precision_at_k(model, test, 5)
            note = f"precision@5 = {p5:.3f} on {len(test)} test sessions"
        except DataError:
            note = "no test transitions to score"
        click.echo(
            f"level {model.level}: {len(model.counts)} distinct transitions, {note}"
        )
    click.echo(f"wrote {out}")


@main.command("build-needs")
@click.option("--gazetteer", type=click.Path(), default=None, help="Place-term stoplist file.")
@click.option("--rate-limit", type=float, default=None, help="Remote source queries per second.")
@click.pass_obj
@pipeline_command
def build_needs(config_path, gazetteer, rate_limit):
    """Probe queries per top venue and collect cleansed suggestion suffixes."""
    cfg = _config(config_path)
    taxonomy, venues = _load_corpus(cfg)
    checkins = load_checkins(cfg.path("checkins"))
    top = top_venues_per_category(venues, checkins, cfg.top_venues, taxonomy)
    gaz_path = gazetteer if gazetteer is not None else (cfg.gazetteer or None)
    gaz = needs.load_gazetteer(cfg.base_dir / gaz_path) if gaz_path else frozenset()
    qps = rate_limit if rate_limit is not None else cfg.rate_limit
    if cfg.suggestions_url:
        source = needs.HttpSuggestionSource(
            cfg.suggestions_url,
            max_retries=cfg.fetch_retries,
            rate_limit_qps=qps,
        )
    else:
        source = needs.OfflineFileSource(cfg.path("suggestions_snapshot"))
    records = []
    n_probes = 0
    n_nonempty = 0
    for category in sorted(top):
        ranked_venues = [venues[vid] for vid in top[category]]
        for venue_id, query in needs.probe_queries(ranked_venues):
            n_probes += 1
            suffixes = needs.fetch_suggestions(source, query)
            if suffixes:
                n_nonempty += 1
            for suffix in suffixes:
                term = needs.cleanse_suffix(suffix, gaz)
                if term is not None:
                    records.append(needs.SuggestionRecord(venue_id, category, term))
    out = cfg.out_path("suggestions.tsv")
    needs.write_suggestions(records, out)
    summary = _volume_summary(records, taxonomy)
    summary_out = cfg.out_path("needs_summary.tsv")
    write_rows(summary_out, [(c, str(t), str(u)) for c, t, u in summary])
    if cfg.figures:
        report.render_category_volume(
            summary, report.figure_path(summary_out, "volume")
        )
    rate = n_nonempty / n_probes if n_probes else 0.0
    click.echo(
        f"{n_probes} probes ({rate:.0%} non-empty), "
        f"{len(records)} cleansed suffixes -> {out}"
    )


def _volume_summary(records, taxonomy):
    """Per level-1 category: total and unique suffix counts, largest first."""
    totals: Counter[str] = Counter()
    uniques: dict[str, set[str]] = {}
    for r in records:
        parent = taxonomy.lift(r.activity, 1)
        totals[parent] += 1
        uniques.setdefault(parent, set()).add(r.suffix)
    return [
        (cat, totals[cat], len(uniques[cat]))
        for cat in sorted(totals, key=lambda c: (-totals[c], c))
    ]


@main.command("normalize-needs")
@click.option("--density-min", type=float, default=None)
@click.option("--cp-min", type=float, default=None)
@click.option("--top-terms", type=int, default=None)
@click.pass_obj
@pipeline_command
def normalize_needs(config_path, density_min, cp_min, top_terms):
    """Cluster synonym terms into canonical needs and export relevance."""
    cfg = _config(config_path)
    taxonomy, _ = _load_corpus(cfg)
    records = needs.load_suggestions(cfg.out_path("suggestions.tsv"))
    if not records:
        raise DataError("no suggestion records to normalize")
    term_counts = needs.aggregate_terms(records)
    assessor_sets = needs.load_assessor_sets(cfg.path("synonyms"))
    overrides = (
        needs.load_label_overrides(cfg.base_dir / cfg.label_overrides)
        if cfg.label_overrides
        else None
    )
    lexicon = needs.build_lexicon(
        term_counts,
        assessor_sets,
        density_min if density_min is not None else cfg.density_min,
        cp_min if cp_min is not None else cfg.cp_min,
        top_terms if top_terms is not None else cfg.top_terms,
        overrides,
    )
    lex_out = cfg.out_path("lexicon.json")
    needs.write_lexicon(lexicon, lex_out)
    counts = relevance.build_need_counts(term_counts, lexicon, taxonomy)
    rel_out = cfg.out_path("relevance.tsv")
    relevance.export_relevance(counts, taxonomy, rel_out)
    if len(assessor_sets) >= 2:
        kappa_note = f"assessor agreement kappa = {needs.fleiss_kappa(assessor_sets):.3f}"
    else:
        kappa_note = "fewer than 2 assessors; kappa not computed"
    click.echo(
        f"{len(term_counts)} (category, term) pairs -> "
        f"{len(lexicon.needs)} needs; {kappa_note}; wrote {lex_out} and {rel_out}"
    )


@main.command("fit-temporal")
@click.pass_obj
@pipeline_command
def fit_temporal(config_path):
    """Fit temporal scopes from vote counts and report sensitivity."""
    cfg = _config(config_path)
    taxonomy, _ = _load_corpus(cfg)
    votes = temporal.load_temporal_votes(cfg.path("temporal_votes"))
    model = temporal.fit_temporal_scope(votes)
    out = cfg.out_path("temporal_report.tsv")
    temporal.write_temporal_report(model, out)
    if cfg.figures:
        report.render_temporal_scopes(model, report.figure_path(out, "scopes"))
    lexicon = needs.load_lexicon(cfg.out_path("lexicon.json"))
    gamma = temporal.compute_gamma(
        model, lexicon.needs.keys(), taxonomy.level_ids(1)
    )
    click.echo(
        f"{len(model.scope)} scope triples; mixture gamma = {gamma:.4f}; wrote {out}"
    )


def _assemble(cfg: PipelineConfig, level: int, smoothing: str, gamma_opt: str | None):
    """Load artifacts and fit everything the ranking models need."""
    taxonomy, _ = _load_corpus(cfg)
    all_sessions = sessions.load_sessions_jsonl(cfg.out_path("sessions.jsonl"))
    train, test = sessions.chronological_split(all_sessions, cfg.train_fraction)
    trans = transitions.fit_transitions(train, taxonomy, level)
    records = needs.load_suggestions(cfg.out_path("suggestions.tsv"))
    lexicon = needs.load_lexicon(cfg.out_path("lexicon.json"))
    counts = relevance.build_need_counts(
        needs.aggregate_terms(records), lexicon, taxonomy
    )
    rel = relevance.relevance_by_activity(counts, taxonomy, level, smoothing)
    votes = temporal.load_temporal_votes(cfg.path("temporal_votes"))
    fitted = temporal.fit_temporal_scope(votes)
    temp = temporal.inherit_scope(fitted, taxonomy) if level == 2 else fitted
    gamma_raw = gamma_opt if gamma_opt is not None else cfg.gamma
    if gamma_raw == "auto":
        gamma = temporal.compute_gamma(
            fitted, lexicon.needs.keys(), taxonomy.level_ids(1)
        )
    else:
        gamma = float(gamma_raw)
        if not 0 <= gamma <= 1:
            raise DataError(f"gamma must be in [0,1], got {gamma}")
    return taxonomy, lexicon, counts, rel, trans, temp, gamma, test


def _model_fn(model_id, taxonomy, counts, rel, trans, temp, gamma):
    if model_id == "m0":
        return lambda a_last: anticipate.rank_m0(counts, taxonomy, a_last)
    if model_id == "m1":
        return lambda a_last: anticipate.rank_m1(rel, trans, a_last)
    if model_id == "m2":
        return lambda a_last: anticipate.rank_m2(rel, trans, a_last, gamma)
    if model_id == "m3":
        return lambda a_last: anticipate.rank_m3(rel, trans, temp, a_last)
    raise click.UsageError(f"unknown model {model_id!r}")


@main.command()
@click.option("--last-activity", required=True, help="Activity id of the last check-in.")
@click.option("--model", default="m2", show_default=True, help="Model id or comma list.")
@click.option("--k", type=int, default=None, help="Cards on the dashboard.")
@click.option("--smoothing", type=click.Choice(["off", "paper", "standard"]), default=None)
@click.option("--gamma", default=None, help="'auto' or a fixed value in [0,1].")
@click.pass_obj
@pipeline_command
def rank(config_path, last_activity, model, k, smoothing, gamma):
    """Print the dashboard JSON for the anticipated needs."""
    cfg = _config(config_path)
    taxonomy = load_taxonomy(cfg.path("taxonomy"))
    act = taxonomy.activities.get(last_activity)
    if act is None:
        raise DataError(f"unknown activity: {last_activity}")
    k = k if k is not None else cfg.dashboard_k
    if k < 1:
        raise click.UsageError("--k must be >= 1")
    smoothing = smoothing if smoothing is not None else cfg.smoothing
    taxonomy, lexicon, counts, rel, trans, temp, gamma_val, _ = _assemble(
        cfg, act.level, smoothing, gamma
    )
    for model_id in [m.strip() for m in model.split(",") if m.strip()]:
        fn = _model_fn(model_id, taxonomy, counts, rel, trans, temp, gamma_val)
        ranking = fn(last_activity)
        cards = [
            {
                "need": need,
                "label": lexicon.needs[need].label if need in lexicon.needs else need,
                "score": round(score, 6),
            }
            for need, score in ranking.entries[:k]
        ]
        click.echo(
            json.dumps(
                {
                    "last_activity": last_activity,
                    "model": model_id,
                    "k": k,
                    "cards": cards,
                },
                sort_keys=True,
            )
        )


@main.command("evaluate")
@click.option("--models", default="m0,m1,m2,m3", show_default=True)
@click.option("--level", type=click.IntRange(1, 2), default=2, show_default=True)
@click.option("--smoothing", type=click.Choice(["off", "paper", "standard"]), default=None)
@click.option("--gamma", default=None, help="'auto' or a fixed value in [0,1].")
@click.pass_obj
@pipeline_command
def evaluate_cmd(config_path, models, level, smoothing, gamma):
    """Score the models with NDCG over sampled test transitions."""
    cfg = _config(config_path)
    smoothing = smoothing if smoothing is not None else cfg.smoothing
    taxonomy, lexicon, counts, rel, trans, temp, gamma_val, test = _assemble(
        cfg, level, smoothing, gamma
    )
    model_ids = [m.strip() for m in models.split(",") if m.strip()]
    model_fns = {
        mid: _model_fn(mid, taxonomy, counts, rel, trans, temp, gamma_val)
        for mid in model_ids
    }
    sample = evaluate.most_frequent_transitions(
        test, cfg.eval_transitions, level, taxonomy
    )
    judgments = evaluate.load_judgments(cfg.path("judgments"))
    results = evaluate.run_eval(
        model_fns, sample, judgments, rel, cfg.ndcg_ks, cfg.candidate_needs
    )
    out = cfg.out_path("results.tsv")
    evaluate.write_results(results, out)
    if cfg.figures:
        report.render_ndcg_means(results, report.figure_path(out, "ndcg"))
    for mid in results.model_ids:
        for k in results.k_list:
            click.echo(f"{mid} ndcg@{k} mean = {results.means[(mid, k)]:.4f}")
    click.echo(f"{len(sample)} transitions evaluated; wrote {out}")


if __name__ == "__main__":
    main()
