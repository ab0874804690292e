"""Command-line interface: corpus builds, task mixes, images, and scoring.

Options can come from a JSON config file (keys match option names); flags
given on the command line win over config values.  Exit codes: 0 success,
2 validation failures or stat mismatches present, 3 configuration error.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click
from click.core import ParameterSource

from . import compiler, pipeline
from .augment import AugmentConfig, RasterImage, augment as augment_image
from .describe import load_templates
from .errors import ConfigError, DiaforgeError
from .genspec import default_profiles, load_profiles
from .keywords import load_bank
from .mermaid import validate as validate_source
from .manifest import read_code, read_manifest
import random


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(3 if isinstance(exc, ConfigError) else 1)


def _merge_config(ctx, config_path, values: dict) -> dict:
    """Overlay JSON config under explicitly passed command-line options."""
    if not config_path:
        return values
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in values:
            raise ConfigError(f"unknown config key {key!r}")
        if ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
            values[name] = value
    return values


def _load_inputs(keyword_bank, profiles, templates):
    bank = load_bank(keyword_bank) if keyword_bank else load_bank()
    profs = load_profiles(profiles) if profiles else default_profiles()
    temps = load_templates(templates) if templates else load_templates()
    return bank, profs, temps


@click.group()
@click.option("--verbose", is_flag=True, help="Log progress details.")
def main(verbose):
    """Synthesize diagram corpora, derive tasks, augment images, score output."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")


@main.command("gen-corpus")
@click.option("--out", required=True, type=click.Path(), help="Output corpus directory.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--recipe", type=click.Path(exists=True),
              help="JSON {\"family.level\": count} overriding the desk recipe.")
@click.option("--keyword-bank", type=click.Path(exists=True))
@click.option("--profiles", type=click.Path(exists=True))
@click.option("--templates", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.pass_context
def gen_corpus_cmd(ctx, out, seed, recipe, keyword_bank, profiles, templates, config_path):
    """Generate the base corpus: code, descriptions, and a manifest."""
    try:
        opts = _merge_config(ctx, config_path, {
            "out": out, "seed": seed, "recipe": recipe,
            "keyword_bank": keyword_bank, "profiles": profiles,
            "templates": templates})
        bank, profs, temps = _load_inputs(
            opts["keyword_bank"], opts["profiles"], opts["templates"])
        recipe_map = None
        if opts["recipe"]:
            with open(opts["recipe"], "r", encoding="utf-8") as fh:
                recipe_map = pipeline.parse_recipe(json.load(fh))
        path = pipeline.gen_corpus(opts["out"], recipe=recipe_map, seed=opts["seed"],
                                   bank=bank, profiles=profs, templates=temps)
        _, rows = read_manifest(path)
        click.echo(f"wrote {len(rows)} rows to {path}")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("gen-eval")
@click.option("--out", required=True, type=click.Path())
@click.option("--per-family", default=500, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--keyword-bank", type=click.Path(exists=True))
@click.option("--profiles", type=click.Path(exists=True))
@click.option("--templates", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.pass_context
def gen_eval_cmd(ctx, out, per_family, seed, keyword_bank, profiles, templates, config_path):
    """Generate an evaluation corpus with a fixed count per family."""
    try:
        opts = _merge_config(ctx, config_path, {
            "out": out, "per_family": per_family, "seed": seed,
            "keyword_bank": keyword_bank, "profiles": profiles,
            "templates": templates})
        bank, profs, temps = _load_inputs(
            opts["keyword_bank"], opts["profiles"], opts["templates"])
        path = pipeline.gen_eval(opts["out"], per_family=opts["per_family"],
                                 seed=opts["seed"], bank=bank, profiles=profs,
                                 templates=temps)
        _, rows = read_manifest(path)
        click.echo(f"wrote {len(rows)} rows to {path}")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("gen-enhance")
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="Base corpus manifest.")
@click.option("--out", type=click.Path(), help="Defaults to the manifest directory.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--removals", default=1, show_default=True, type=int,
              help="Edges removed per derived sample.")
@click.option("--templates", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.pass_context
def gen_enhance_cmd(ctx, manifest, out, seed, removals, templates, config_path):
    """Derive completion samples by removing edges from base rows."""
    try:
        opts = _merge_config(ctx, config_path, {
            "manifest": manifest, "out": out, "seed": seed,
            "removals": removals, "templates": templates})
        temps = load_templates(opts["templates"]) if opts["templates"] else load_templates()
        path = pipeline.gen_enhance(opts["manifest"], out_dir=opts["out"],
                                    seed=opts["seed"], removals=opts["removals"],
                                    templates=temps)
        meta, rows = read_manifest(path)
        skipped = sum(meta.get("skipped", {}).values())
        click.echo(f"derived {len(rows)} rows ({skipped} skipped) to {path}")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("build-tasks")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--derived", type=click.Path(), help="Derived-corpus manifest.")
@click.option("--n", required=True, type=int, help="Instances to sample.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--codeless", is_flag=True,
              help="Let code paths stand in for unrendered images.")
@click.option("--positive-rate", default=0.5, show_default=True, type=float)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.pass_context
def build_tasks_cmd(ctx, manifest, derived, n, seed, out, codeless, positive_rate,
                    config_path):
    """Sample a uniform mix of task instances into a JSONL file."""
    try:
        opts = _merge_config(ctx, config_path, {
            "manifest": manifest, "derived": derived, "n": n, "seed": seed,
            "out": out, "codeless": codeless, "positive_rate": positive_rate})
        count = pipeline.build_tasks(opts["manifest"], opts["derived"], opts["n"],
                                     opts["seed"], opts["out"],
                                     codeless=opts["codeless"],
                                     positive_rate=opts["positive_rate"])
        click.echo(f"wrote {count} task instances to {opts['out']}")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("render")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--compiler", "compiler_path", type=click.Path(),
              help="Mermaid compiler executable; defaults to $MERMAID_CLI.")
@click.option("--scale", default=2, show_default=True, type=int)
@click.option("--limit", type=int, help="Render only the first N rows.")
def render_cmd(manifest, compiler_path, scale, limit):
    """Render manifest rows to PNG via the external compiler."""
    try:
        rendered, failed = pipeline.render_manifest(manifest, cli=compiler_path,
                                                    scale=scale, limit=limit)
        click.echo(f"rendered {rendered} images, {failed} failures")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("augment")
@click.option("--manifest", type=click.Path(exists=True),
              help="Augment every rendered image in a manifest.")
@click.option("--image", type=click.Path(exists=True), help="Augment one PNG.")
@click.option("--out", type=click.Path(), help="Output path for --image mode.")
@click.option("--passes", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON mirror of the augmentation config.")
def augment_cmd(manifest, image, out, passes, seed, config_path):
    """Apply the probabilistic augmentation pipeline to rendered images."""
    try:
        cfg = AugmentConfig.load(config_path) if config_path else AugmentConfig()
        if manifest:
            written = pipeline.augment_manifest(manifest, passes=passes, cfg=cfg,
                                                seed=seed)
            click.echo(f"wrote {written} augmented images")
        elif image:
            if not out:
                raise ConfigError("--image mode needs --out")
            result = augment_image(RasterImage.read_png(image), cfg,
                                   random.Random(seed))
            result.write_png(out)
            click.echo(f"wrote {out}")
        else:
            raise ConfigError("pass --manifest or --image")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("score")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--pred", required=True, type=click.Path(exists=True),
              help="Directory of <sample-id>.mmd predictions.")
@click.option("--out", type=click.Path(), help="Defaults to the predictions directory.")
@click.option("--case-sensitive", is_flag=True,
              help="Match block and label text case-sensitively.")
@click.option("--compiler", "compiler_path", type=click.Path(),
              help="Validate predictions with the external compiler instead.")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.pass_context
def score_cmd(ctx, manifest, pred, out, case_sensitive, compiler_path, config_path):
    """Score predictions against gold code; writes scores.json and scores.csv."""
    try:
        opts = _merge_config(ctx, config_path, {
            "manifest": manifest, "pred": pred, "out": out,
            "case_sensitive": case_sensitive, "compiler": compiler_path})
        result = pipeline.score_predictions(
            opts["manifest"], opts["pred"], out_dir=opts["out"],
            case_sensitive=opts["case_sensitive"], external_cli=opts["compiler"])
        overall = result["aggregate"]["overall"]
        click.echo(f"scored {overall['n']} samples; "
                   f"compile error rate {overall['compile_error_rate']:.4f}")
    except DiaforgeError as exc:
        _fail(exc)


@main.command("validate")
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.option("--manifest", type=click.Path(exists=True),
              help="Validate every code file of a manifest.")
@click.option("--compiler", "compiler_path", type=click.Path(),
              help="Use the external compiler as the verdict.")
def validate_cmd(files, manifest, compiler_path):
    """Validate Mermaid files; exits 2 when any file fails."""
    try:
        targets = list(files)
        if manifest:
            base = os.path.dirname(os.path.abspath(manifest))
            _, rows = read_manifest(manifest)
            targets += [os.path.join(base, row["code_path"]) for row in rows]
        if not targets:
            raise ConfigError("pass files or --manifest")
        cli = compiler.cli_path(compiler_path)
        failures = 0
        for path in targets:
            report = validate_source(read_code(path), external_cli=cli)
            if not report.ok:
                failures += 1
                for issue in report.issues:
                    click.echo(f"{path}:{issue.line}: {issue.message}")
        click.echo(f"checked {len(targets)} files, {failures} failed")
        if failures:
            sys.exit(2)
    except DiaforgeError as exc:
        _fail(exc)


@main.command("stats")
@click.option("--manifest", required=True, type=click.Path(exists=True))
def stats_cmd(manifest):
    """Recompute row stats from code; exits 2 on any manifest mismatch."""
    try:
        report, mismatches = pipeline.stats_report(manifest)
        click.echo(json.dumps(report, indent=2, sort_keys=True))
        if mismatches:
            sys.exit(2)
    except DiaforgeError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
