import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diaforge.genspec import DiagramFamily, Level, sample_spec
from diaforge.mermaid import emit, parse, summarize
from diaforge.metrics import (
    CAM,
    CBI,
    CBL,
    CED,
    CLE,
    FAMILY_CATEGORIES,
    aggregate,
    bleu,
    chrf,
    rouge_l,
    score_structural,
)

GOLD_GRAPH = (
    "graph TD\n"
    "    A[alpha] --> B[beta]\n"
    "    B --> C[gamma]\n"
    "    C -->|loops| A\n"
    "    C --> D[delta]\n"
    "    D --> E[epsilon]\n"
)


def _gold_summary():
    return parse(GOLD_GRAPH)


def test_gold_against_itself_scores_one_everywhere():
    report = score_structural(GOLD_GRAPH, _gold_summary())
    assert report.compiled and not report.wrong_family
    assert set(report.categories) == set(FAMILY_CATEGORIES[DiagramFamily.GRAPH])
    for score in report.categories.values():
        assert score.precision == score.recall == score.f1 == 1.0


@pytest.mark.parametrize("family", list(DiagramFamily))
def test_every_family_self_scores_one(family, bank, profiles):
    spec = sample_spec(family, Level.MEDIUM,
                       profiles[(family, Level.MEDIUM)], bank,
                       random.Random(21))
    code = emit(spec)
    report = score_structural(code, summarize(spec))
    assert set(report.categories) == set(FAMILY_CATEGORIES[family])
    for name, score in report.categories.items():
        assert score.f1 == 1.0, (family, name)


def test_broken_code_reports_not_compiled():
    report = score_structural("graph TD\n    A --> \n", _gold_summary())
    assert not report.compiled
    assert report.categories == {}


def test_wrong_family_zeroes_applicable_categories():
    report = score_structural("stateDiagram-v2\n    s1 --> s2\n",
                              _gold_summary())
    assert report.compiled and report.wrong_family
    assert report.predicted_family == DiagramFamily.STATE
    assert set(report.categories) == set(FAMILY_CATEGORIES[DiagramFamily.GRAPH])
    for score in report.categories.values():
        assert score.precision == score.recall == score.f1 == 0.0


def test_deleted_edge_hits_recall_only():
    pred = ("graph TD\n"
            "    A[alpha] --> B[beta]\n"
            "    B --> C[gamma]\n"
            "    C -->|loops| A\n"
            "    C --> D[delta]\n"
            "    D[delta]\n"
            "    E[epsilon]\n")
    report = score_structural(pred, _gold_summary())
    edge = report.categories[CED]
    assert edge.precision == 1.0
    assert edge.recall == pytest.approx(0.8)
    assert report.categories[CBL].f1 == 1.0


def test_spurious_edge_hits_precision_only():
    pred = GOLD_GRAPH + "    E --> A\n"
    report = score_structural(pred, _gold_summary())
    edge = report.categories[CED]
    assert edge.precision == pytest.approx(5 / 6)
    assert edge.recall == 1.0


def test_block_overlap_worked_example():
    # prediction names 4 blocks, 3 of which exist among the gold's 4
    pred = ("graph TD\n"
            "    A[alpha] --> B[beta]\n"
            "    C[gamma] --> X[zeta]\n")
    gold = parse("graph TD\n    A[alpha] --> B[beta]\n    C[gamma] --> D[delta]\n")
    score = score_structural(pred, gold).categories[CBL]
    assert score.precision == pytest.approx(0.75)
    assert score.recall == pytest.approx(0.75)
    assert score.f1 == pytest.approx(0.75)


def test_wrong_label_counts_for_edges_but_not_labeled_edges():
    pred = GOLD_GRAPH.replace("|loops|", "|wrong|")
    report = score_structural(pred, _gold_summary())
    assert report.categories[CED].f1 == 1.0
    assert report.categories[CLE].f1 == pytest.approx(0.8)


def test_undirected_edges_match_flipped():
    gold = parse("graph TD\n    A[left] --- B[right]\n    B --> C[down]\n")
    pred = "graph TD\n    B[right] --- A[left]\n    B --> C[down]\n"
    report = score_structural(pred, gold)
    assert report.categories[CED].f1 == 1.0
    # a directed edge must not match its reverse
    rev = "graph TD\n    A[left] --- B[right]\n    C[down] --> B\n"
    flipped = score_structural(rev, gold)
    assert flipped.categories[CED].f1 == pytest.approx(0.5)


def test_class_member_category():
    gold_src = ("classDiagram\n"
                "    class Pump {\n        +rate\n        -start()\n    }\n"
                "    class Valve {\n        #setting\n    }\n"
                "    Pump --|> Valve\n")
    gold = parse(gold_src)
    assert set(FAMILY_CATEGORIES[DiagramFamily.CLASS]) == {CBL, CED, CLE, CAM}
    perfect = score_structural(gold_src, gold)
    assert perfect.categories[CAM].f1 == 1.0
    # one member renamed: 2 of 3 members survive
    mutated = gold_src.replace("+rate", "+pressure")
    report = score_structural(mutated, gold)
    assert report.categories[CAM].f1 == pytest.approx(2 / 3)
    assert report.categories[CBL].f1 == 1.0


def test_packet_bits_category():
    gold = parse('packet-beta\n0-3: "head"\n4-15: "body"\n')
    assert set(FAMILY_CATEGORIES[DiagramFamily.PACKET]) == {CBL, CBI}
    moved = score_structural('packet-beta\n0-7: "head"\n8-15: "body"\n', gold)
    assert moved.categories[CBI].f1 == 0.0
    assert moved.categories[CBL].f1 == 1.0
    half = score_structural('packet-beta\n0-3: "head"\n4-15: "tail"\n', gold)
    assert half.categories[CBI].f1 == pytest.approx(0.5)


def test_sequence_categories_are_blocks_and_labeled_edges():
    assert set(FAMILY_CATEGORIES[DiagramFamily.SEQUENCE]) == {CBL, CLE}
    assert set(FAMILY_CATEGORIES[DiagramFamily.C4]) == {CBL, CED}


def test_empty_sides_convention():
    gold = parse("graph TD\n    A[only]\n")
    report = score_structural("graph TD\n    A[only]\n", gold)
    assert report.categories[CED].precision == 1.0
    assert report.categories[CED].recall == 1.0
    assert report.categories[CED].f1 == 1.0


def test_aggregate_means_and_error_rate():
    gold = _gold_summary()
    reports = [score_structural(GOLD_GRAPH, gold),
               score_structural("graph TD\n    A --> \n", gold),
               score_structural("graph TD\n    A[alpha]\n", gold)]
    table = aggregate(reports)
    overall = table["overall"]
    assert overall["n"] == 3
    assert overall["compile_error_rate"] == pytest.approx(1 / 3)
    # compiled rows only: perfect and blocks-1/5 rows
    cbl = overall["categories"][CBL]
    assert cbl["precision"] == pytest.approx((1.0 + 1.0) / 2)
    assert cbl["recall"] == pytest.approx((1.0 + 0.2) / 2)
    assert table["graph"]["n"] == 3


# --- text metrics ----------------------------------------------------------


def test_identical_strings_hit_the_ceiling():
    text = "graph TD\n    A[alpha] --> B[beta]\n"
    assert bleu(text, text) == pytest.approx(1.0)
    assert chrf(text, text) == pytest.approx(100.0)
    assert rouge_l(text, text) == pytest.approx((1.0, 1.0, 1.0))


def test_hand_computed_oracles():
    assert bleu("a b c d", "a b c e") == pytest.approx(
        0.5946035575013605, abs=1e-9)
    assert chrf("abcd", "abce") == pytest.approx(
        47.916666666666664, abs=1e-9)
    p, r, f = rouge_l("a b c", "a b c d")
    assert p == pytest.approx(1.0, abs=1e-9)
    assert r == pytest.approx(0.75, abs=1e-9)
    assert f == pytest.approx(6 / 7, abs=1e-9)


def test_short_and_empty_inputs():
    assert bleu("", "a b c") == 0.0
    assert bleu("a b c", "") == 0.0
    assert chrf("", "") == pytest.approx(100.0)
    assert rouge_l("", "x") == (0.0, 0.0, 0.0)
    # single-token prediction works through the n-gram cap
    assert bleu("a", "a") == pytest.approx(1.0)


def test_disjoint_strings_score_low():
    # add-one smoothing keeps BLEU above zero on disjoint inputs
    assert 0.0 < bleu("a b c", "x y z") < 0.5
    assert bleu("a b c", "x y z") < bleu("a b c", "a y z")
    assert rouge_l("a b c", "x y z") == (0.0, 0.0, 0.0)


def test_brevity_penalty_pulls_short_predictions_down():
    full = bleu("a b c d", "a b c d")
    short = bleu("a b c", "a b c d")
    assert short < full


@given(st.text(alphabet="abc d", min_size=1, max_size=24),
       st.text(alphabet="abc d", min_size=1, max_size=24))
@settings(max_examples=80, deadline=None)
def test_text_metric_invariants(a, b):
    score = bleu(a, b)
    assert 0.0 <= score <= 1.0 + 1e-12
    c = chrf(a, b)
    assert 0.0 <= c <= 100.0 + 1e-9
    p, r, f = rouge_l(a, b)
    assert 0.0 <= min(p, r, f) and max(p, r, f) <= 1.0
    pr, rr, fr = rouge_l(b, a)
    assert (p, r) == (rr, pr)
    assert f == pytest.approx(fr)
