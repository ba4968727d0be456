import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

from needcast import anticipate, needs, relevance, sessions, temporal, transitions
from needcast.cli import main
from needcast.config import load_config
from needcast.corpus import load_taxonomy
from needcast.errors import DataError

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "mini"

runner = CliRunner()


@pytest.fixture
def mini(tmp_path):
    """A disposable copy of the shipped mini-world fixture."""
    target = tmp_path / "mini"
    shutil.copytree(FIXTURE, target, ignore=shutil.ignore_patterns("out"))
    return target


def run(cfg, *args, expect=0):
    result = runner.invoke(main, ["-c", str(cfg)] + list(args))
    assert result.exit_code == expect, result.output + str(result.exception)
    return result


CHAIN = [
    ("ingest",),
    ("sessions",),
    ("fit-transitions",),
    ("build-needs",),
    ("normalize-needs",),
    ("fit-temporal",),
]


def run_chain(mini):
    cfg = mini / "needcast.cfg"
    for step in CHAIN:
        run(cfg, *step)
    return cfg


# -- config ------------------------------------------------------------------

def test_config_defaults_match_published_setup(mini):
    cfg = load_config(mini / "needcast.cfg")
    assert cfg.max_gap_hours == 6
    assert cfg.train_fraction == 0.8
    assert cfg.top_venues == 200
    assert cfg.dashboard_k == 3
    assert cfg.ndcg_ks == (3, 5)
    assert cfg.dedup_window_minutes == 10


def test_config_env_fallback(mini, monkeypatch):
    monkeypatch.setenv("NEEDCAST_CONFIG", str(mini / "needcast.cfg"))
    assert load_config(None).train_fraction == 0.8


def test_config_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("no_such_knob = 1\n")
    with pytest.raises(DataError, match="unknown config key"):
        load_config(path)


def test_config_range_validation(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("train_fraction = 1.5\n")
    with pytest.raises(DataError, match="train_fraction"):
        load_config(path)


# -- subcommands ----------------------------------------------------------------

def test_full_chain_and_rank_matches_library_call(mini):
    cfg = run_chain(mini)
    result = run(cfg, "rank", "--last-activity", "food", "--model", "m2", "--k", "3")
    payload = json.loads(result.output.strip().splitlines()[-1])
    assert payload["model"] == "m2"
    assert payload["last_activity"] == "food"
    assert len(payload["cards"]) == 3

    # oracle: the equivalent library-level m2 call
    config = load_config(cfg)
    taxonomy = load_taxonomy(config.path("taxonomy"))
    all_sessions = sessions.load_sessions_jsonl(config.out_path("sessions.jsonl"))
    train, _ = sessions.chronological_split(all_sessions, config.train_fraction)
    trans = transitions.fit_transitions(train, taxonomy, 1)
    records = needs.load_suggestions(config.out_path("suggestions.tsv"))
    lexicon = needs.load_lexicon(config.out_path("lexicon.json"))
    counts = relevance.build_need_counts(
        needs.aggregate_terms(records), lexicon, taxonomy
    )
    rel = relevance.relevance_by_activity(counts, taxonomy, 1)
    votes = temporal.load_temporal_votes(config.path("temporal_votes"))
    gamma = temporal.compute_gamma(
        temporal.fit_temporal_scope(votes), lexicon.needs.keys(), taxonomy.level_ids(1)
    )
    ranking = anticipate.rank_m2(rel, trans, "food", gamma)
    expected = [
        {"need": n, "label": lexicon.needs[n].label, "score": round(s, 6)}
        for n, s in ranking.entries[:3]
    ]
    assert payload["cards"] == expected


def test_evaluate_emits_summary_rows_per_model_per_k(mini):
    cfg = run_chain(mini)
    result = run(cfg, "evaluate", "--models", "m0,m1,m2,m3")
    results_path = mini / "out" / "results.tsv"
    lines = results_path.read_text().splitlines()
    mean_block = lines[lines.index("# mean ndcg") + 1 : lines.index("# paired t-test p-values")]
    assert len(mean_block) == 4 * 2  # four models, k in {3, 5}
    assert (mini / "out" / "results_ndcg.png").is_file()
    assert "m2 ndcg@3 mean" in result.output


def test_report_paths_write_delimited_output_and_figures(mini):
    run_chain(mini)
    out = mini / "out"
    assert (out / "needs_summary.tsv").is_file()
    assert (out / "needs_summary_volume.png").is_file()
    assert (out / "temporal_report.tsv").is_file()
    assert (out / "temporal_report_scopes.png").is_file()


def test_sessions_on_empty_checkins(mini):
    (mini / "checkins.tsv").write_text("")
    result = run(mini / "needcast.cfg", "sessions", expect=3)
    assert "no check-ins" in result.stderr


def test_missing_prerequisite_names_the_file(mini):
    result = run(mini / "needcast.cfg", "fit-transitions", expect=3)
    assert "sessions.jsonl" in result.stderr


def test_usage_error_exit_code(mini):
    result = runner.invoke(main, ["-c", str(mini / "needcast.cfg"), "rank"])
    assert result.exit_code == 2  # --last-activity is required


def test_unknown_activity_is_a_data_error(mini):
    run_chain(mini)
    result = run(
        mini / "needcast.cfg", "rank", "--last-activity", "zoo", expect=3
    )
    assert "unknown activity" in result.stderr


def test_schema_violation_names_file_and_line(mini):
    (mini / "taxonomy.tsv").write_text("foo\t\t9\tFoo\n")
    result = run(mini / "needcast.cfg", "ingest", expect=3)
    assert "taxonomy.tsv:1" in result.stderr


def test_rank_level2_with_smoothing_flags(mini):
    cfg = run_chain(mini)
    raw = run(cfg, "rank", "--last-activity", "station", "--model", "m3")
    smoothed = run(
        cfg, "rank", "--last-activity", "station", "--model", "m3",
        "--smoothing", "paper",
    )
    assert json.loads(raw.output.splitlines()[-1])["cards"]
    assert json.loads(smoothed.output.splitlines()[-1])["cards"]


def test_gamma_flag_override(mini):
    cfg = run_chain(mini)
    fixed = run(cfg, "rank", "--last-activity", "food", "--gamma", "1.0")
    auto = run(cfg, "rank", "--last-activity", "food", "--gamma", "auto")
    assert fixed.output != auto.output
    run(cfg, "rank", "--last-activity", "food", "--gamma", "2.0", expect=3)


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "needcast.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "ingest" in proc.stdout
