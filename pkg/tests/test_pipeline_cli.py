import hashlib
import json
import os
import shutil

import pytest
from click.testing import CliRunner

from diaforge import pipeline
from diaforge.cli import main
from diaforge.errors import ConfigError
from diaforge.genspec import DiagramFamily, Level
from diaforge.manifest import read_code, read_d1, read_d2, read_manifest
from diaforge.mermaid import validate

SMALL_RECIPE = {
    (DiagramFamily.BLOCK, Level.EASY): 4,
    (DiagramFamily.GRAPH, Level.MEDIUM): 5,
    (DiagramFamily.CLASS, Level.HARD): 3,
    (DiagramFamily.PACKET, Level.EASY): 2,
    (DiagramFamily.C4, Level.EASY): 2,
    (DiagramFamily.SEQUENCE, Level.MEDIUM): 3,
}


def _tree_digest(root):
    digest = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            digest.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as fh:
                digest.update(fh.read())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    manifest = pipeline.gen_corpus(out, recipe=dict(SMALL_RECIPE), seed=5)
    return out, manifest


def test_gen_corpus_counts_and_files(corpus):
    out, manifest = corpus
    meta, rows = read_d1(manifest)
    assert meta["seed"] == 5
    assert len(rows) == sum(SMALL_RECIPE.values())
    by_cell = {}
    for row in rows:
        by_cell.setdefault((row.family, row.level), 0)
        by_cell[(row.family, row.level)] += 1
    for (family, level), want in SMALL_RECIPE.items():
        assert by_cell[(family.value, level.value)] == want
    for row in rows:
        code = read_code(os.path.join(out, row.code_path))
        assert validate(code).ok
        assert os.path.exists(os.path.join(out, row.description_path))
        assert row.id.startswith(f"d1-{row.family}-{row.level}-")


def test_gen_corpus_reruns_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    pipeline.gen_corpus(a, recipe=dict(SMALL_RECIPE), seed=9)
    pipeline.gen_corpus(b, recipe=dict(SMALL_RECIPE), seed=9)
    assert _tree_digest(a) == _tree_digest(b)
    c = tmp_path / "c"
    pipeline.gen_corpus(c, recipe=dict(SMALL_RECIPE), seed=10)
    assert _tree_digest(a) != _tree_digest(c)


def test_stats_report_clean_then_tampered(corpus, tmp_path):
    out, manifest = corpus
    report, mismatches = pipeline.stats_report(manifest)
    assert mismatches == []
    assert report["rows"] == sum(SMALL_RECIPE.values())
    assert report["cells"]["block.easy"]["count"] == 4

    copy = tmp_path / "tampered"
    shutil.copytree(out, copy)
    _, rows = read_d1(copy / "manifest.d1.jsonl")
    victim = copy / rows[0].code_path
    victim.write_text(victim.read_text(encoding="utf-8")
                      + "    X[extra] --> Y[more]\n", encoding="utf-8")
    _, bad = pipeline.stats_report(copy / "manifest.d1.jsonl")
    assert bad == [rows[0].id]


def test_gen_enhance_skips_and_validates(corpus, tmp_path):
    out, manifest = corpus
    d2_dir = tmp_path / "d2"
    d2_manifest = pipeline.gen_enhance(manifest, out_dir=d2_dir, seed=1)
    meta, rows = read_d2(d2_manifest)
    skipped = meta["skipped"]
    assert sum(v for k, v in skipped.items() if "not derivable" in k) >= 4
    assert all(row.id.startswith("d2-") for row in rows)
    families = {row.family for row in rows}
    assert "packet" not in families and "c4" not in families
    for row in rows:
        assert validate(read_code(os.path.join(d2_dir, row.code_path))).ok
        assert row.prompt
        assert row.missing
    assert len(rows) + sum(skipped.values()) == sum(SMALL_RECIPE.values())


def test_build_tasks_writes_schema_v1(corpus, tmp_path):
    out, manifest = corpus
    d2_manifest = pipeline.gen_enhance(manifest, out_dir=tmp_path / "d2", seed=1)
    task_path = tmp_path / "tasks.jsonl"
    count = pipeline.build_tasks(manifest, d2_manifest, 150, 3, task_path,
                                 codeless=True)
    assert count == 150
    lines = task_path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 150
    kinds = set()
    for line in lines:
        obj = json.loads(line)
        assert obj["v"] == 1
        assert obj["provenance"]["seed"] == 3
        kinds.add(obj["kind"])
    assert "Image2Code" in kinds
    assert any(k.endswith("EnhancePrompt") for k in kinds)


def test_score_gold_predictions_are_perfect(corpus, tmp_path):
    out, manifest = corpus
    pred = tmp_path / "pred"
    pred.mkdir()
    _, rows = read_d1(manifest)
    for row in rows:
        shutil.copy(os.path.join(out, row.code_path), pred / f"{row.id}.mmd")
    result = pipeline.score_predictions(manifest, pred)
    overall = result["aggregate"]["overall"]
    assert overall["compile_error_rate"] == 0.0
    for stats in overall["categories"].values():
        assert stats["f1"] == pytest.approx(1.0)
    assert (pred / "scores.json").exists()
    csv_head = (pred / "scores.csv").read_text(encoding="utf-8").splitlines()[0]
    assert csv_head.startswith("scope,n,CEr,CBl_P,CBl_R,CBl_F1")


def test_score_counts_broken_and_missing(corpus, tmp_path):
    out, manifest = corpus
    _, rows = read_d1(manifest)
    pred = tmp_path / "pred"
    pred.mkdir()
    # 1 broken file, 1 missing, rest gold
    broken_id = rows[0].id
    (pred / f"{broken_id}.mmd").write_text("graph TD\n    A --> \n",
                                           encoding="utf-8")
    for row in rows[2:]:
        shutil.copy(os.path.join(out, row.code_path), pred / f"{row.id}.mmd")
    result = pipeline.score_predictions(manifest, pred)
    overall = result["aggregate"]["overall"]
    assert overall["compile_error_rate"] == pytest.approx(2 / len(rows))
    assert result["per_sample"][broken_id]["compiled"] is False
    assert result["per_sample"][broken_id]["missing"] is False
    assert result["per_sample"][rows[1].id]["missing"] is True


def test_score_text_predictions(corpus, tmp_path):
    out, manifest = corpus
    _, rows = read_d1(manifest)
    pred = tmp_path / "pred"
    pred.mkdir()
    row = rows[0]
    shutil.copy(os.path.join(out, row.code_path), pred / f"{row.id}.mmd")
    shutil.copy(os.path.join(out, row.description_path), pred / f"{row.id}.txt")
    result = pipeline.score_predictions(manifest, pred)
    text = result["per_sample"][row.id]["text"]
    assert text["bleu"] == pytest.approx(1.0)
    assert text["chrf"] == pytest.approx(100.0)
    assert result["text_aggregate"]["n"] == 1


def test_parse_recipe_rejects_bad_keys():
    with pytest.raises(ConfigError):
        pipeline.parse_recipe({"dragon.easy": 3})
    with pytest.raises(ConfigError):
        pipeline.parse_recipe({"block.easy": -1})
    good = pipeline.parse_recipe({"block.easy": 3})
    assert good == {(DiagramFamily.BLOCK, Level.EASY): 3}


def test_eval_recipe_splits_per_family():
    recipe = pipeline.eval_recipe(500)
    for family in DiagramFamily:
        cells = [recipe[(family, level)] for level in Level]
        assert sum(cells) == 500
        assert max(cells) - min(cells) <= 1


def test_desk_recipe_shape():
    recipe = pipeline.default_recipe()
    assert sum(recipe.values()) == 7484
    assert recipe[(DiagramFamily.BLOCK, Level.EASY)] == 440
    assert recipe[(DiagramFamily.SEQUENCE, Level.HARD)] == 179


# --- CLI -------------------------------------------------------------------


@pytest.fixture()
def runner():
    return CliRunner()


def _write_recipe(path, entries):
    path.write_text(json.dumps(entries), encoding="utf-8")
    return str(path)


def test_cli_corpus_validate_stats_flow(runner, tmp_path):
    recipe = _write_recipe(tmp_path / "recipe.json",
                           {"graph.easy": 3, "state.medium": 2})
    out = tmp_path / "corpus"
    result = runner.invoke(main, ["gen-corpus", "--out", str(out),
                                  "--recipe", recipe, "--seed", "2"])
    assert result.exit_code == 0, result.output
    assert "wrote 5 rows" in result.output

    manifest = str(out / "manifest.d1.jsonl")
    result = runner.invoke(main, ["validate", "--manifest", manifest])
    assert result.exit_code == 0, result.output
    assert "5 files, 0 failed" in result.output.replace("checked ", "", 1)

    result = runner.invoke(main, ["stats", "--manifest", manifest])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["stat_mismatches"] == []


def test_cli_validate_failure_exits_two(runner, tmp_path):
    bad = tmp_path / "bad.mmd"
    bad.write_text("graph TD\n    A --> \n", encoding="utf-8")
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 2
    assert f"{bad}:" in result.output


def test_cli_config_error_exits_three(runner, tmp_path):
    img = tmp_path / "img.png"
    img.write_bytes(b"not a png")
    result = runner.invoke(main, ["augment", "--image", str(img)])
    assert result.exit_code == 3
    assert "--out" in result.output


def test_cli_config_file_merges_under_flags(runner, tmp_path):
    recipe = _write_recipe(tmp_path / "recipe.json", {"graph.easy": 2})
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 40}), encoding="utf-8")

    out_a = tmp_path / "a"
    result = runner.invoke(main, ["gen-corpus", "--out", str(out_a),
                                  "--recipe", recipe, "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    meta, _ = read_manifest(str(out_a / "manifest.d1.jsonl"))
    assert meta["seed"] == 40

    out_b = tmp_path / "b"
    result = runner.invoke(main, ["gen-corpus", "--out", str(out_b),
                                  "--recipe", recipe, "--config", str(cfg),
                                  "--seed", "7"])
    assert result.exit_code == 0, result.output
    meta, _ = read_manifest(str(out_b / "manifest.d1.jsonl"))
    assert meta["seed"] == 7


def test_cli_enhance_tasks_score_flow(runner, tmp_path):
    recipe = _write_recipe(tmp_path / "recipe.json",
                           {"graph.medium": 4, "packet.easy": 1})
    out = tmp_path / "corpus"
    result = runner.invoke(main, ["gen-corpus", "--out", str(out),
                                  "--recipe", recipe])
    assert result.exit_code == 0, result.output
    manifest = str(out / "manifest.d1.jsonl")

    result = runner.invoke(main, ["gen-enhance", "--manifest", manifest])
    assert result.exit_code == 0, result.output
    assert "skipped" in result.output
    d2 = str(out / "manifest.d2.jsonl")

    tasks = tmp_path / "tasks.jsonl"
    result = runner.invoke(main, ["build-tasks", "--manifest", manifest,
                                  "--derived", d2, "--n", "40",
                                  "--out", str(tasks), "--codeless"])
    assert result.exit_code == 0, result.output
    assert "wrote 40 task instances" in result.output

    pred = tmp_path / "pred"
    pred.mkdir()
    _, rows = read_d1(manifest)
    for row in rows:
        shutil.copy(os.path.join(out, row.code_path), pred / f"{row.id}.mmd")
    result = runner.invoke(main, ["score", "--manifest", manifest,
                                  "--pred", str(pred)])
    assert result.exit_code == 0, result.output
    assert "compile error rate 0.0000" in result.output


def test_cli_augment_image_mode(runner, tmp_path):
    import numpy as np

    from diaforge.augment import AugmentConfig, RasterImage

    src = tmp_path / "in.png"
    RasterImage.blank(16, 16, value=128).write_png(src)
    cfg = tmp_path / "zero.json"
    cfg.write_text(json.dumps(AugmentConfig.zeroed().to_json()), encoding="utf-8")
    out = tmp_path / "out.png"
    result = runner.invoke(main, ["augment", "--image", str(src),
                                  "--out", str(out), "--seed", "4",
                                  "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    back = RasterImage.read_png(out)
    assert np.array_equal(back.pixels,
                          np.full((16, 16, 3), 128, dtype=np.uint8))


def test_cli_missing_inputs_fail_cleanly(runner, tmp_path):
    result = runner.invoke(main, ["augment"])
    assert result.exit_code == 3
    result = runner.invoke(main, ["validate"])
    assert result.exit_code == 3
    # click itself rejects nonexistent paths before our handler runs
    result = runner.invoke(main, ["score", "--manifest", "nope.jsonl",
                                  "--pred", str(tmp_path)])
    assert result.exit_code == 2
