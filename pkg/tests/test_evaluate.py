import logging
import math
import random

import pytest
from scipy import stats

from conftest import make_session, make_taxonomy, write_tsv
from needcast.anticipate import NeedRanking
from needcast.errors import DataError
from needcast.evaluate import (
    EvalResults,
    candidate_needs,
    load_judgments,
    most_frequent_transitions,
    ndcg_at_k,
    paired_t_test,
    pearson,
    run_eval,
    write_results,
)
from oracles import oracle_ndcg, oracle_paired_p


# -- ndcg ---------------------------------------------------------------------

def test_ndcg_ideal_order_is_one():
    grades = {"a": 4, "b": 3, "c": 1}
    assert ndcg_at_k(["a", "b", "c"], grades, 3) == pytest.approx(1.0)


def test_ndcg_hand_derived_case():
    assert ndcg_at_k(["a", "b"], {"a": 0, "b": 3}, 2) == pytest.approx(
        0.6309, abs=1e-4
    )


def test_ndcg_all_zero_grades():
    assert ndcg_at_k(["a", "b"], {"a": 0, "b": 0}, 2) == 0.0


def test_ndcg_empty_ranking_errors():
    with pytest.raises(DataError, match="empty ranking"):
        ndcg_at_k([], {"a": 1}, 3)


def test_ndcg_bounded_and_matches_oracle():
    rng = random.Random(14)
    for _ in range(100):
        needs = [f"n{i}" for i in range(rng.randint(2, 12))]
        grades = {n: rng.randint(0, 4) for n in needs}
        ranking = needs[:]
        rng.shuffle(ranking)
        k = rng.randint(1, len(needs))
        value = ndcg_at_k(ranking, grades, k)
        assert 0.0 <= value <= 1.0 + 1e-12
        assert value == pytest.approx(oracle_ndcg(ranking, grades, k), abs=1e-12)


def test_ndcg_invariant_under_equal_grade_permutation():
    rng = random.Random(15)
    for _ in range(100):
        needs = [f"n{i}" for i in range(8)]
        grades = {n: rng.choice([0, 2, 2, 3]) for n in needs}
        ranking = needs[:]
        rng.shuffle(ranking)
        base = ndcg_at_k(ranking, grades, 5)
        # swap two adjacent equal-grade items
        for i in range(len(ranking) - 1):
            if grades[ranking[i]] == grades[ranking[i + 1]]:
                swapped = ranking[:]
                swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
                assert ndcg_at_k(swapped, grades, 5) == pytest.approx(base, abs=1e-12)


def test_ndcg_ignores_grade_zero_tail_beyond_k():
    grades = {"a": 3, "b": 1}
    base = ndcg_at_k(["a", "b"], grades, 2)
    extended = ndcg_at_k(["a", "b", "x", "y", "z"], grades, 2)
    assert extended == pytest.approx(base, abs=1e-15)


# -- candidates and transition sampling ----------------------------------------

def rel_of(**dists):
    return dists


def test_candidates_disjoint_and_identical():
    a = {f"a{i}": 1.0 / (i + 1) for i in range(10)}
    b = {f"b{i}": 1.0 / (i + 1) for i in range(10)}
    assert len(candidate_needs(rel_of(x=a, y=b), "x", "y")) == 20
    assert len(candidate_needs(rel_of(x=a, y=a), "x", "y")) == 10


def test_candidates_partial_overlap_matches_sets():
    a = {"n1": 0.5, "n2": 0.3, "n3": 0.2}
    b = {"n2": 0.6, "n4": 0.4}
    got = candidate_needs(rel_of(x=a, y=b), "x", "y", n=2)
    assert got == {"n1", "n2", "n4"}


def test_candidates_empty_side_errors():
    with pytest.raises(DataError, match="no need relevance"):
        candidate_needs(rel_of(x={"n": 1.0}), "x", "y")


def sessions_from(seqs):
    return [
        make_session(f"u{i}", *((j * 10.0, a) for j, a in enumerate(seq)))
        for i, seq in enumerate(seqs)
    ]


def test_most_frequent_transitions_count_sort():
    tax = make_taxonomy({"root": ["A", "B", "C"]})
    seqs = [["A", "B"]] * 3 + [["B", "C"]] * 2 + [["A", "C"]]
    got = most_frequent_transitions(sessions_from(seqs), 2, 2, tax)
    assert got == [("A", "B"), ("B", "C")]
    everything = most_frequent_transitions(sessions_from(seqs), 99, 2, tax)
    assert everything == [("A", "B"), ("B", "C"), ("A", "C")]


def test_most_frequent_matches_tally_oracle():
    rng = random.Random(3)
    tax = make_taxonomy({"root": ["A", "B", "C", "D"]})
    seqs = [
        [rng.choice("ABCD") for _ in range(rng.randint(2, 6))] for _ in range(40)
    ]
    tally = {}
    for seq in seqs:
        for pair in zip(seq, seq[1:]):
            tally[pair] = tally.get(pair, 0) + 1
    expected = sorted(tally, key=lambda p: (-tally[p], p))[:5]
    assert most_frequent_transitions(sessions_from(seqs), 5, 2, tax) == expected


def test_level1_enumerates_all_pairs():
    tax = make_taxonomy({f"l1-{i}": [f"l2-{i}"] for i in range(9)})
    seqs = [["l2-0", "l2-1"]]
    pairs = most_frequent_transitions(sessions_from(seqs), 100, 1, tax)
    assert len(pairs) == 81
    assert pairs[0] == ("l1-0", "l1-1")  # the only observed transition leads


def test_no_transitions_errors():
    tax = make_taxonomy({"root": ["A"]})
    with pytest.raises(DataError, match="no transitions"):
        most_frequent_transitions(sessions_from([["A"]]), 5, 2, tax)


# -- run_eval -------------------------------------------------------------------

def fixed_model(order):
    def fn(a_last):
        entries = tuple((n, 1.0 - i / 10) for i, n in enumerate(order))
        return NeedRanking(a_last, "fixed", entries)

    return fn


def test_run_eval_perfect_model_scores_one():
    rel = rel_of(A={"x": 0.6, "y": 0.4}, B={"y": 0.9, "z": 0.1})
    from needcast.evaluate import JudgmentSet

    judgments = JudgmentSet(
        {
            ("A", "B", "x"): 4,
            ("A", "B", "y"): 2,
            ("A", "B", "z"): 1,
        }
    )
    models = {"good": fixed_model(["x", "y", "z"])}
    results = run_eval(models, [("A", "B")], judgments, rel, [3], n_candidates=3)
    assert results.means[("good", 3)] == pytest.approx(1.0)
    assert results.ndcg[("good", 3)] == [pytest.approx(1.0)]


def test_run_eval_mean_equals_row_mean_and_orders_models():
    rel = rel_of(A={"x": 0.6, "y": 0.4}, B={"y": 0.9, "z": 0.1})
    from needcast.evaluate import JudgmentSet

    judgments = JudgmentSet(
        {
            ("A", "B", "x"): 4,
            ("A", "B", "y"): 2,
            ("B", "A", "y"): 3,
            ("B", "A", "x"): 1,
        }
    )
    models = {
        "good": fixed_model(["x", "y", "z"]),
        "bad": fixed_model(["z", "y", "x"]),
    }
    sample = [("A", "B"), ("B", "A")]
    results = run_eval(models, sample, judgments, rel, [3, 5], n_candidates=3)
    for key, rows in results.ndcg.items():
        assert results.means[key] == pytest.approx(sum(rows) / len(rows))
    assert results.means[("good", 3)] > results.means[("bad", 3)]
    assert set(results.p_values) == {("good", "bad", 3), ("good", "bad", 5)}


def test_run_eval_missing_judgment_warns_and_grades_zero(caplog):
    rel = rel_of(A={"x": 1.0}, B={"y": 1.0})
    from needcast.evaluate import JudgmentSet

    judgments = JudgmentSet({("A", "B", "x"): 3})
    models = {"m": fixed_model(["x", "y"])}
    with caplog.at_level(logging.WARNING):
        results = run_eval(models, [("A", "B")], judgments, rel, [2])
    assert "no judgment" in caplog.text
    assert results.means[("m", 2)] == pytest.approx(1.0)  # x first, y grade 0


def test_run_eval_appends_unscored_candidates():
    # model scored only 'x'; candidate 'y' must still receive a rank
    rel = rel_of(A={"x": 1.0}, B={"y": 1.0})
    from needcast.evaluate import JudgmentSet

    judgments = JudgmentSet({("A", "B", "y"): 4})
    models = {"m": fixed_model(["x"])}
    results = run_eval(models, [("A", "B")], judgments, rel, [2])
    # y lands at rank 2: ndcg = (15/log2(3)) / 15
    assert results.ndcg[("m", 2)][0] == pytest.approx(1 / math.log2(3), abs=1e-12)


def test_run_eval_empty_sample_errors():
    from needcast.evaluate import JudgmentSet

    with pytest.raises(DataError, match="empty transition sample"):
        run_eval({}, [], JudgmentSet({}), {}, [3])


# -- significance and correlation -------------------------------------------------

def test_t_test_identical_vectors():
    assert paired_t_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7]) == 1.0


def test_t_test_constant_nonzero_difference(caplog):
    with caplog.at_level(logging.WARNING):
        p = paired_t_test([1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 2.0, 3.0])
    assert p == 0.0
    assert "zero-variance" in caplog.text


def test_t_test_matches_quadrature_oracle_and_scipy():
    rng = random.Random(19)
    for n in (2, 3, 5, 12, 30):
        a = [rng.random() for _ in range(n)]
        b = [rng.random() for _ in range(n)]
        if all(x == y for x, y in zip(a, b)):
            continue
        p = paired_t_test(a, b)
        assert p == pytest.approx(oracle_paired_p(a, b), abs=1e-9)
        assert p == pytest.approx(stats.ttest_rel(a, b).pvalue, abs=1e-12)


def test_t_test_symmetric():
    a = [0.1, 0.5, 0.4, 0.8]
    b = [0.2, 0.3, 0.7, 0.6]
    assert paired_t_test(a, b) == pytest.approx(paired_t_test(b, a), abs=1e-15)


def test_t_test_input_validation():
    with pytest.raises(ValueError):
        paired_t_test([1.0], [2.0])
    with pytest.raises(ValueError):
        paired_t_test([1.0, 2.0], [1.0])


def test_pearson_hand_value():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([1.0], [1.0])
    with pytest.raises(DataError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


# -- files -------------------------------------------------------------------------

def test_load_judgments(tmp_path):
    path = write_tsv(
        tmp_path / "judgments.tsv",
        [("A", "B", "n1", 4), ("A", "B", "n2", 0)],
    )
    judgments = load_judgments(path)
    assert judgments.grades == {("A", "B", "n1"): 4, ("A", "B", "n2"): 0}
    bad = write_tsv(tmp_path / "bad.tsv", [("A", "B", "n1", 9)])
    with pytest.raises(DataError, match="grade outside"):
        load_judgments(bad)


def test_write_results_layout(tmp_path):
    results = EvalResults(
        model_ids=("m0", "m2"),
        k_list=(3,),
        transitions=(("A", "B"),),
        ndcg={("m0", 3): [0.5], ("m2", 3): [0.75]},
        means={("m0", 3): 0.5, ("m2", 3): 0.75},
        p_values={("m0", "m2", 3): 0.0451},
    )
    path = tmp_path / "results.tsv"
    write_results(results, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "m0\t3\tA\tB\t0.5000"
    assert lines[1] == "m2\t3\tA\tB\t0.7500"
    assert "# mean ndcg" in lines
    assert "m2\t3\t0.7500" in lines
    assert lines[-1] == "m0\tm2\t3\t0.0451"
