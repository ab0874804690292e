"""Acceptance gate: one test per shipped guarantee, run with pytest -v."""

import collections
import os
import random
import time

import numpy as np
import pytest

from diaforge import pipeline
from diaforge.augment import AugmentConfig, RasterImage, augment
from diaforge.compiler import cli_path
from diaforge.enhance import DERIVABLE_FAMILIES, derive, reinsert
from diaforge.genspec import DiagramFamily, Level, check_spec, sample_spec
from diaforge.manifest import read_d1
from diaforge.mermaid import emit, parse, summarize, to_source, validate
from diaforge.mermaid.emit import doc_from_spec
from diaforge.metrics import (
    CED,
    FAMILY_CATEGORIES,
    aggregate,
    bleu,
    chrf,
    rouge_l,
    score_structural,
)
from diaforge.tasks import CorpusRow, DerivedRow, TaskKind, TaskPool, sample_mix

BLOCK_EASY_LENGTH = (80, 237)

GOLD_5_EDGES = (
    "graph TD\n"
    "    A[alpha] --> B[beta]\n"
    "    B --> C[gamma]\n"
    "    C -->|loops| A\n"
    "    C --> D[delta]\n"
    "    D --> E[epsilon]\n"
)


def _cells():
    return [(family, level) for family in DiagramFamily for level in Level]


def test_criterion_01_round_trip_oracle_24k_under_60s(bank, profiles):
    started = time.perf_counter()
    checked = 0
    for family, level in _cells():
        profile = profiles[(family, level)]
        for i in range(1000):
            rng = random.Random(checked)
            spec = sample_spec(family, level, profile, bank, rng)
            assert parse(emit(spec)) == summarize(spec), (family, level, i)
            checked += 1
    elapsed = time.perf_counter() - started
    assert checked == 24000
    assert elapsed < 60.0, f"round-trip sweep took {elapsed:.1f}s"


def test_criterion_02_structural_ranges_hold_for_200_per_cell(bank, profiles):
    for family, level in _cells():
        profile = profiles[(family, level)]
        for i in range(200):
            spec = sample_spec(family, level, profile, bank,
                               random.Random(i * 31 + 1))
            check_spec(spec, profile)
            summary = summarize(spec)
            if family is DiagramFamily.PACKET and level is Level.EASY:
                assert 2 <= len(summary.bits) <= 3
            if family is DiagramFamily.BLOCK and level is Level.EASY:
                assert 2 <= len(summary.blocks) <= 3
                assert len(summary.edges) == 1
            if family is DiagramFamily.CLASS and level is Level.HARD:
                assert len(summary.blocks) == 6
                assert len(summary.edges) == 5


def test_criterion_03_block_easy_code_length_envelope(bank, profiles):
    profile = profiles[(DiagramFamily.BLOCK, Level.EASY)]
    lo, hi = BLOCK_EASY_LENGTH
    lengths = []
    for i in range(200):
        spec = sample_spec(DiagramFamily.BLOCK, Level.EASY, profile, bank,
                           random.Random(i))
        lengths.append(len(emit(spec)))
    inside = sum(1 for n in lengths if lo <= n <= hi)
    assert inside / len(lengths) >= 0.95, (
        f"{inside}/{len(lengths)} inside [{lo}, {hi}]; "
        f"min={min(lengths)} max={max(lengths)}")


def test_criterion_04_scoring_identities(bank, profiles):
    for family in DiagramFamily:
        spec = sample_spec(family, Level.MEDIUM,
                           profiles[(family, Level.MEDIUM)], bank,
                           random.Random(17))
        code = emit(spec)
        report = score_structural(code, summarize(spec))
        assert report.compiled and not report.wrong_family
        assert set(report.categories) == set(FAMILY_CATEGORIES[family])
        for name, score in report.categories.items():
            assert score.f1 == 1.0, (family, name)

    broken = score_structural("graph TD\n    A --> \n", parse(GOLD_5_EDGES))
    assert broken.compiled is False
    assert broken.categories == {}

    wrong = score_structural("stateDiagram-v2\n    a --> b\n",
                             parse(GOLD_5_EDGES))
    assert wrong.compiled and wrong.wrong_family
    assert wrong.categories
    for score in wrong.categories.values():
        assert score.precision == score.recall == score.f1 == 0.0


def test_criterion_05_mutation_arithmetic_is_exact():
    gold = parse(GOLD_5_EDGES)
    dropped = ("graph TD\n"
               "    A[alpha] --> B[beta]\n"
               "    B --> C[gamma]\n"
               "    C -->|loops| A\n"
               "    C --> D[delta]\n"
               "    E[epsilon]\n")
    edge = score_structural(dropped, gold).categories[CED]
    assert edge.recall == 0.8
    assert edge.precision == 1.0

    spurious = GOLD_5_EDGES + "    E --> A\n"
    edge = score_structural(spurious, gold).categories[CED]
    assert edge.precision == 5 / 6
    assert edge.recall == 1.0


def test_criterion_06_enhancement_closure_over_500_samples(bank, profiles,
                                                           templates):
    derivable = sorted(DERIVABLE_FAMILIES, key=lambda f: f.value)
    produced = 0
    seed = 0
    while produced < 500:
        family = derivable[seed % len(derivable)]
        level = (Level.MEDIUM, Level.HARD)[seed % 2]
        spec = sample_spec(family, level, profiles[(family, level)], bank,
                           random.Random(seed))
        seed += 1
        doc = doc_from_spec(spec)
        if len(doc.edges()) < 2:
            continue
        sample = derive(doc, random.Random(seed + 90000), templates)
        reduced_code = to_source(sample.reduced)
        assert validate(reduced_code).ok
        restored = reinsert(sample.reduced, sample.removed)
        assert parse(to_source(restored)) == summarize(spec)
        produced += 1
    assert produced == 500


def test_criterion_07_task_mix_uniform_at_90k():
    base = [
        CorpusRow(id=f"d1-graph-easy-{i:05d}", family="graph",
                  code=f"graph TD\n    A[a{i}] --> B[b{i}]",
                  description=f"This graph contains 2 nodes. #{i}",
                  image_ref=f"img/{i}.png", code_ref=f"code/{i}.mmd")
        for i in range(40)
    ]
    derived = [
        DerivedRow(id=f"d2-graph-easy-{i:05d}",
                   base_id=f"d1-graph-easy-{i:05d}", family="graph",
                   reduced_code=f"graph TD\n    A[a{i}]",
                   prompt=f"Complete the diagram by adding an arrow from 'a{i}' to 'b{i}'.",
                   missing=({"src": f"a{i}", "dst": f"b{i}", "label": None},),
                   reduced_image_ref=f"img/red-{i}.png",
                   reduced_code_ref=f"code/red-{i}.mmd")
        for i in range(40)
    ]
    pool = TaskPool(base, derived)
    instances = sample_mix(pool, 90000, random.Random(2026))
    counts = collections.Counter(inst.kind for inst in instances)
    assert set(counts) == set(TaskKind)
    for kind, n in counts.items():
        assert abs(n - 10000) <= 300, (kind.value, n)
    qa = [inst for inst in instances if inst.kind == TaskKind.PAIR_QA]
    positive = sum(1 for inst in qa if inst.target["label"])
    assert abs(positive / len(qa) - 0.50) <= 0.02


def test_criterion_08_augmentation_gates_calibrated_at_10k():
    img = RasterImage.blank(16, 16)
    cfg = AugmentConfig()
    rng = random.Random(808)
    gates = collections.Counter()
    applied = collections.Counter()
    runs = 10000
    for _ in range(runs):
        events = []
        augment(img, cfg, rng, events=events)
        for tag, name in events:
            if tag == "gate":
                gates[name] += 1
            elif tag == "apply":
                applied[name] += 1
    assert abs(gates["blur"] / runs - 0.70) <= 0.02
    assert abs(gates["color"] / runs - 0.90) <= 0.02
    assert abs(gates["weather"] / runs - 0.40) <= 0.02
    assert abs(applied["clahe"] / runs - 0.30) <= 0.02

    noise = RasterImage(np.random.default_rng(5).integers(
        0, 256, size=(32, 32, 3), dtype=np.uint8))
    still = augment(noise, AugmentConfig.zeroed(), random.Random(0))
    assert np.array_equal(still.pixels, noise.pixels)

    first = augment(noise, cfg, random.Random(4242))
    second = augment(noise, cfg, random.Random(4242))
    assert first.pixels.tobytes() == second.pixels.tobytes()


def test_criterion_09_text_metric_identities_and_oracles():
    text = "graph TD\n    A[alpha] --> B[beta]\n"
    assert bleu(text, text) == pytest.approx(1.0, abs=1e-9)
    assert chrf(text, text) == pytest.approx(100.0, abs=1e-9)
    assert rouge_l(text, text) == pytest.approx((1.0, 1.0, 1.0), abs=1e-9)

    assert bleu("a b c d", "a b c e") == pytest.approx(
        0.5946035575013605, abs=1e-9)
    assert chrf("abcd", "abce") == pytest.approx(
        47.916666666666664, abs=1e-9)
    assert rouge_l("a b c", "a b c d") == pytest.approx(
        (1.0, 0.75, 6 / 7), abs=1e-9)


def test_criterion_10_desk_scale_build_exact_and_fast(tmp_path):
    recipe = pipeline.default_recipe()
    started = time.perf_counter()
    # gen_corpus raises on any validation failure, so finishing means zero
    manifest = pipeline.gen_corpus(tmp_path / "desk", recipe=recipe, seed=0)
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0, f"desk build took {elapsed:.1f}s"

    _, rows = read_d1(manifest)
    per_cell = collections.Counter((row.family, row.level) for row in rows)
    for (family, level), want in recipe.items():
        assert per_cell[(family.value, level.value)] == want
    assert sum(per_cell.values()) == sum(recipe.values())


def test_criterion_11_model_result_tables_out_of_scope_harness_present():
    """Fine-tuned-model result tables need GPU training runs and human
    raters, neither of which exists here; the shipped substitute is the
    property suite plus a scoring harness that turns any directory of
    model predictions into those tables."""
    assert callable(pipeline.score_predictions)
    assert callable(aggregate)
    for fn in (bleu, chrf, rouge_l):
        assert callable(fn)
    # the harness must accept the documented prediction layout
    import inspect

    params = inspect.signature(pipeline.score_predictions).parameters
    assert "manifest_path" in params and "pred_dir" in params


@pytest.mark.skipif(not os.environ.get("MERMAID_CLI"),
                    reason="MERMAID_CLI not set; external compiler check is opt-in")
def test_criterion_12_external_compiler_accepts_50_per_family(bank, profiles,
                                                              tmp_path):
    from diaforge.compiler import compile_check

    cli = cli_path(None)
    assert cli, "MERMAID_CLI must point at an executable"
    for family in DiagramFamily:
        for i in range(50):
            level = (Level.EASY, Level.MEDIUM, Level.HARD)[i % 3]
            spec = sample_spec(family, level, profiles[(family, level)],
                               bank, random.Random(i))
            ok, detail = compile_check(emit(spec), cli)
            assert ok, (family, level, i, detail)
