"""End-to-end flows: corpus builds, derivation, task mixes, images, scoring.

Every flow is deterministic under (recipe, seed): per-row RNGs are seeded
with the base seed plus the row's global index, manifests carry no
timestamps, and JSON is emitted with sorted keys, so reruns are
byte-identical.  Rendering is the one exception; pixel output belongs to
the external compiler.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import random
import statistics
from collections import Counter

from . import compiler
from .augment import AugmentConfig, RasterImage, augment
from .describe import describe, load_templates
from .enhance import DERIVABLE_FAMILIES, derive, missing_refs
from .errors import ConfigError, DiaforgeError
from .genspec import DiagramFamily, Level, default_profiles, sample_spec
from .keywords import load_bank
from .manifest import (
    D1_NAME,
    D2_NAME,
    D1Row,
    D2Row,
    read_code,
    read_d1,
    read_d2,
    read_manifest,
    read_text,
    stats_of_code,
    write_code,
    write_manifest,
    write_text,
)
from .mermaid import emit, parse, parse_doc, summarize, to_source, validate
from .metrics import aggregate, bleu, chrf, rouge_l, score_structural
from .tasks import CorpusRow, DerivedRow, TaskPool, sample_mix, write_tasks

log = logging.getLogger(__name__)

# Default desk-scale recipe: one tenth of the published corpus counts per
# family and level, rounded; keeps the distribution shape at a size that
# builds in seconds.
DESK_RECIPE = {
    (DiagramFamily.BLOCK, Level.EASY): 440,
    (DiagramFamily.BLOCK, Level.MEDIUM): 200,
    (DiagramFamily.BLOCK, Level.HARD): 250,
    (DiagramFamily.C4, Level.EASY): 474,
    (DiagramFamily.C4, Level.MEDIUM): 300,
    (DiagramFamily.C4, Level.HARD): 250,
    (DiagramFamily.CLASS, Level.EASY): 600,
    (DiagramFamily.CLASS, Level.MEDIUM): 200,
    (DiagramFamily.CLASS, Level.HARD): 250,
    (DiagramFamily.FLOWCHART, Level.EASY): 150,
    (DiagramFamily.FLOWCHART, Level.MEDIUM): 300,
    (DiagramFamily.FLOWCHART, Level.HARD): 350,
    (DiagramFamily.GRAPH, Level.EASY): 370,
    (DiagramFamily.GRAPH, Level.MEDIUM): 500,
    (DiagramFamily.GRAPH, Level.HARD): 173,
    (DiagramFamily.PACKET, Level.EASY): 150,
    (DiagramFamily.PACKET, Level.MEDIUM): 298,
    (DiagramFamily.PACKET, Level.HARD): 350,
    (DiagramFamily.SEQUENCE, Level.EASY): 600,
    (DiagramFamily.SEQUENCE, Level.MEDIUM): 150,
    (DiagramFamily.SEQUENCE, Level.HARD): 179,
    (DiagramFamily.STATE, Level.EASY): 500,
    (DiagramFamily.STATE, Level.MEDIUM): 250,
    (DiagramFamily.STATE, Level.HARD): 200,
}


def default_recipe() -> dict:
    return dict(DESK_RECIPE)


def eval_recipe(per_family: int) -> dict:
    """Split a per-family count across levels, leftovers to easier levels."""
    recipe = {}
    base, extra = divmod(per_family, len(Level))
    for family in DiagramFamily:
        for i, level in enumerate(Level):
            recipe[(family, level)] = base + (1 if i < extra else 0)
    return recipe


def parse_recipe(data: dict) -> dict:
    """Convert {"family.level": count} JSON into recipe keys."""
    recipe = {}
    for key, count in data.items():
        try:
            fam_name, level_name = key.split(".")
            recipe[(DiagramFamily(fam_name), Level(level_name))] = int(count)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad recipe entry {key!r}: {exc}") from exc
        if recipe[(DiagramFamily(fam_name), Level(level_name))] < 0:
            raise ConfigError(f"recipe count for {key!r} must be >= 0")
    return recipe


def _recipe_json(recipe: dict) -> dict:
    return {
        f"{family.value}.{level.value}": recipe[(family, level)]
        for family, level in sorted(recipe, key=lambda k: (k[0].value, _level_order(k[1])))
        if recipe[(family, level)] > 0
    }


def _level_order(level: Level) -> int:
    return (Level.EASY, Level.MEDIUM, Level.HARD).index(level)


def _ensure_dirs(out_dir, *names) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name in names:
        os.makedirs(os.path.join(out_dir, name), exist_ok=True)


def gen_corpus(out_dir, recipe=None, seed: int = 0, bank=None, profiles=None,
               templates=None, manifest_name: str = D1_NAME) -> str:
    """Generate code and description files plus the base manifest.

    Returns the manifest path.  Row ids, paths, and contents depend only
    on (recipe, seed, bank, profiles, templates).
    """
    recipe = dict(DESK_RECIPE) if recipe is None else recipe
    bank = bank or load_bank()
    profiles = profiles or default_profiles()
    templates = templates or load_templates()
    _ensure_dirs(out_dir, "code", "desc")

    rows = []
    index = 0
    for family in DiagramFamily:
        for level in (Level.EASY, Level.MEDIUM, Level.HARD):
            for _ in range(recipe.get((family, level), 0)):
                rng = random.Random(seed + index)
                spec = sample_spec(family, level, profiles[(family, level)], bank, rng)
                code = emit(spec)
                report = validate(code)
                if not report.ok:
                    raise DiaforgeError(
                        f"generated code failed validation ({family.value}/{level.value} "
                        f"seed {seed + index}): {report.issues[:3]}")
                description = describe(summarize(spec), templates)
                row_id = f"d1-{family.value}-{level.value}-{index:05d}"
                code_path = f"code/{row_id}.mmd"
                desc_path = f"desc/{row_id}.txt"
                write_code(os.path.join(out_dir, code_path), code)
                write_text(os.path.join(out_dir, desc_path), description)
                rows.append(D1Row(
                    id=row_id,
                    family=family.value,
                    level=level.value,
                    discipline=spec.discipline,
                    seed=seed + index,
                    code_path=code_path,
                    description_path=desc_path,
                    stats=stats_of_code(code),
                ))
                index += 1

    manifest_path = os.path.join(out_dir, manifest_name)
    meta = {"kind": "d1", "seed": seed, "recipe": _recipe_json(recipe), "rows": len(rows)}
    write_manifest(manifest_path, meta, rows)
    log.info("wrote %d rows to %s", len(rows), manifest_path)
    return manifest_path


def gen_eval(out_dir, per_family: int = 500, seed: int = 0, **kwargs) -> str:
    """Evaluation corpus: a fixed count per family, split across levels."""
    return gen_corpus(out_dir, recipe=eval_recipe(per_family), seed=seed, **kwargs)


def gen_enhance(d1_manifest, out_dir=None, seed: int = 0, removals: int = 1,
                templates=None) -> str:
    """Derive one completion sample per eligible base row.

    Ineligible rows (non-derivable family, too few edges) are skipped and
    counted in the manifest meta.
    """
    templates = templates or load_templates()
    meta, rows = read_d1(d1_manifest)
    base_dir = os.path.dirname(os.path.abspath(d1_manifest))
    out_dir = out_dir or base_dir
    _ensure_dirs(out_dir, "code")

    d2_rows = []
    skipped = Counter()
    for index, row in enumerate(rows):
        family = DiagramFamily(row.family)
        if family not in DERIVABLE_FAMILIES:
            skipped[f"family {family.value} not derivable"] += 1
            continue
        doc = parse_doc(read_code(os.path.join(base_dir, row.code_path))).doc
        if len(doc.edges()) < removals + 1:
            skipped[f"fewer than {removals + 1} edges"] += 1
            continue
        rng = random.Random(seed + index)
        sample = derive(doc, rng, templates, removals=removals)
        reduced_code = to_source(sample.reduced)
        report = validate(reduced_code)
        if not report.ok:
            raise DiaforgeError(
                f"reduced code failed validation for {row.id}: {report.issues[:3]}")
        d2_id = "d2-" + row.id.removeprefix("d1-")
        code_path = f"code/{d2_id}.mmd"
        write_code(os.path.join(out_dir, code_path), reduced_code)
        d2_rows.append(D2Row(
            id=d2_id,
            base_id=row.id,
            family=row.family,
            level=row.level,
            seed=seed + index,
            removals=removals,
            code_path=code_path,
            prompt=sample.prompt,
            missing=missing_refs(sample),
        ))

    manifest_path = os.path.join(out_dir, D2_NAME)
    meta = {
        "kind": "d2",
        "seed": seed,
        "removals": removals,
        "base_manifest": os.path.basename(d1_manifest),
        "rows": len(d2_rows),
        "skipped": dict(sorted(skipped.items())),
    }
    write_manifest(manifest_path, meta, d2_rows)
    log.info("derived %d rows (%d skipped) to %s", len(d2_rows),
             sum(skipped.values()), manifest_path)
    return manifest_path


def _load_pool(d1_manifest, d2_manifest=None) -> TaskPool:
    _, rows = read_d1(d1_manifest)
    base_dir = os.path.dirname(os.path.abspath(d1_manifest))
    base = [
        CorpusRow(
            id=row.id,
            family=row.family,
            code=read_code(os.path.join(base_dir, row.code_path)),
            description=read_text(os.path.join(base_dir, row.description_path)),
            image_ref=row.image_path,
            code_ref=row.code_path,
        )
        for row in rows
    ]
    derived = []
    if d2_manifest and os.path.exists(d2_manifest):
        _, d2rows = read_d2(d2_manifest)
        d2_dir = os.path.dirname(os.path.abspath(d2_manifest))
        derived = [
            DerivedRow(
                id=row.id,
                base_id=row.base_id,
                family=row.family,
                reduced_code=read_code(os.path.join(d2_dir, row.code_path)),
                prompt=row.prompt,
                missing=tuple(row.missing),
                reduced_image_ref=row.image_path,
                reduced_code_ref=row.code_path,
            )
            for row in d2rows
        ]
    return TaskPool(base=base, derived=derived)


def build_tasks(d1_manifest, d2_manifest, n: int, seed: int, out_path,
                codeless: bool = False, positive_rate: float = 0.5) -> int:
    """Sample a task mix from the manifests and write it as JSONL."""
    pool = _load_pool(d1_manifest, d2_manifest)
    instances = sample_mix(pool, n, random.Random(seed), codeless=codeless,
                           positive_rate=positive_rate, seed=seed)
    write_tasks(instances, out_path)
    return len(instances)


def _manifest_rows(manifest_path):
    """Load either manifest flavor as (meta, typed rows)."""
    meta, _ = read_manifest(manifest_path)
    if meta.get("kind") == "d1":
        return read_d1(manifest_path)
    return read_d2(manifest_path)


def render_manifest(manifest_path, cli=None, scale: int = 2, limit=None) -> tuple:
    """Render each row's code to PNG via the external compiler.

    Failures mark the row render-failed and the run continues.  Returns
    (rendered, failed) counts; the manifest is rewritten with image paths.
    """
    cli = compiler.cli_path(cli)
    if not cli:
        raise ConfigError("rendering needs MERMAID_CLI or an explicit compiler path")
    meta, rows = _manifest_rows(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    _ensure_dirs(base_dir, "images")
    rendered = failed = 0
    for row in rows if limit is None else rows[:limit]:
        code = read_code(os.path.join(base_dir, row.code_path))
        image_path = f"images/{row.id}.png"
        ok = compiler.render_png(code, os.path.join(base_dir, image_path), cli, scale)
        if ok:
            row.image_path = image_path
            row.render_failed = False
            rendered += 1
        else:
            row.image_path = None
            row.render_failed = True
            failed += 1
            log.warning("render failed for %s", row.id)
    write_manifest(manifest_path, meta, rows)
    return rendered, failed


def augment_manifest(manifest_path, passes: int = 1, cfg: AugmentConfig | None = None,
                     seed: int = 0) -> int:
    """Write ``passes`` augmented variants per rendered image.

    Per-variant RNG is seeded from (seed, row id, pass), so adding rows or
    rerunning never shifts another row's pixels.
    """
    if passes < 1:
        raise ConfigError("passes must be >= 1")
    cfg = cfg or AugmentConfig()
    cfg.validate()
    meta, rows = _manifest_rows(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    written = 0
    for row in rows:
        if not row.image_path:
            continue
        image = RasterImage.read_png(os.path.join(base_dir, row.image_path))
        stem, _ = os.path.splitext(row.image_path)
        variants = []
        for k in range(1, passes + 1):
            rng = random.Random(f"{seed}:{row.id}:{k}")
            out = augment(image, cfg, rng)
            variant_path = f"{stem}.aug{k}.png"
            out.write_png(os.path.join(base_dir, variant_path))
            variants.append(variant_path)
            written += 1
        row.augmented_paths = variants
    write_manifest(manifest_path, meta, rows)
    return written


def score_predictions(manifest_path, pred_dir, out_dir=None,
                      case_sensitive: bool = False, external_cli=None) -> dict:
    """Score ``<id>.mmd`` predictions against manifest gold code.

    A missing prediction scores compiled=false with a ``missing`` flag.
    ``<id>.txt`` files, when present, are scored with the text metrics
    against the gold description.  Writes scores.json and scores.csv.
    """
    meta, rows = read_d1(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    out_dir = out_dir or pred_dir
    os.makedirs(out_dir, exist_ok=True)

    lower = not case_sensitive
    reports = []
    per_sample = {}
    text_rows = []
    for row in rows:
        gold_code = read_code(os.path.join(base_dir, row.code_path))
        gold = parse(gold_code, lower=lower)
        pred_path = os.path.join(pred_dir, f"{row.id}.mmd")
        if os.path.exists(pred_path):
            report = score_structural(read_code(pred_path), gold,
                                      case_sensitive=case_sensitive,
                                      external_cli=external_cli)
            missing = False
        else:
            report = score_structural("", gold)
            missing = True
        reports.append(report)
        entry = report.to_json()
        entry["missing"] = missing
        text_path = os.path.join(pred_dir, f"{row.id}.txt")
        if os.path.exists(text_path):
            gold_desc = read_text(os.path.join(base_dir, row.description_path))
            pred_desc = read_text(text_path)
            p, r, f1 = rouge_l(pred_desc, gold_desc)
            entry["text"] = {
                "bleu": bleu(pred_desc, gold_desc),
                "chrf": chrf(pred_desc, gold_desc),
                "rouge_l": {"precision": p, "recall": r, "f1": f1},
            }
            text_rows.append(entry["text"])
        per_sample[row.id] = entry

    result = {"aggregate": aggregate(reports), "per_sample": per_sample}
    if text_rows:
        n = len(text_rows)
        result["text_aggregate"] = {
            "n": n,
            "bleu": sum(t["bleu"] for t in text_rows) / n,
            "chrf": sum(t["chrf"] for t in text_rows) / n,
            "rouge_l_f1": sum(t["rouge_l"]["f1"] for t in text_rows) / n,
        }

    json_path = os.path.join(out_dir, "scores.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _write_scores_csv(os.path.join(out_dir, "scores.csv"), result["aggregate"])
    return result


def _write_scores_csv(path, agg: dict) -> None:
    categories = ("CBl", "CEd", "CLE", "CAM", "CBi")
    header = ["scope", "n", "CEr"]
    for cat in categories:
        header += [f"{cat}_P", f"{cat}_R", f"{cat}_F1"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for scope in sorted(agg, key=lambda s: (s != "overall", s)):
            bucket = agg[scope]
            line = [scope, bucket["n"], f"{bucket['compile_error_rate']:.4f}"]
            for cat in categories:
                scores = bucket["categories"].get(cat)
                if scores:
                    line += [f"{scores['precision']:.4f}", f"{scores['recall']:.4f}",
                             f"{scores['f1']:.4f}"]
                else:
                    line += ["", "", ""]
            writer.writerow(line)


def stats_report(manifest_path) -> tuple:
    """Recompute stats from code files; report distributions and mismatches."""
    meta, rows = read_d1(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    mismatches = []
    cells = {}
    for row in rows:
        fresh = stats_of_code(read_code(os.path.join(base_dir, row.code_path)))
        if fresh != row.stats:
            mismatches.append(row.id)
        cells.setdefault((row.family, row.level), []).append(fresh)

    def dist(values):
        return {
            "min": min(values),
            "mean": round(statistics.mean(values), 2),
            "std": round(statistics.pstdev(values), 2),
            "max": max(values),
        }

    table = {}
    for (family, level), stat_rows in sorted(cells.items()):
        table[f"{family}.{level}"] = {
            "count": len(stat_rows),
            "blocks": dist([s.blocks for s in stat_rows]),
            "edges": dist([s.edges for s in stat_rows]),
            "labeled_edges": dist([s.labeled_edges for s in stat_rows]),
            "attrs": dist([s.attrs for s in stat_rows]),
            "headers": dist([s.headers for s in stat_rows]),
            "code_length": dist([s.code_length for s in stat_rows]),
        }
    report = {
        "manifest": os.path.basename(manifest_path),
        "rows": len(rows),
        "stat_mismatches": mismatches,
        "cells": table,
    }
    return report, mismatches
