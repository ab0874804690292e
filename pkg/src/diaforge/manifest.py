"""Corpus manifest rows, per-row structure stats, and JSONL persistence.

A manifest is one JSONL file: a meta object on the first line, then one
row object per line.  Paths inside rows are relative to the manifest's
directory so a corpus tree can be moved or rebuilt byte-identically.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .mermaid import parse

MANIFEST_VERSION = 1
D1_NAME = "manifest.d1.jsonl"
D2_NAME = "manifest.d2.jsonl"


@dataclass(frozen=True)
class RowStats:
    """Structure counts recomputable from the code file alone."""

    blocks: int
    edges: int
    labeled_edges: int
    attrs: int
    headers: int
    code_length: int


def stats_of_code(code: str) -> RowStats:
    summary = parse(code)
    return RowStats(
        blocks=len(summary.blocks),
        edges=len(summary.edges),
        labeled_edges=sum(1 for e in summary.edges if e.label),
        attrs=sum(len(sigs) for sigs in summary.attributes.values()),
        headers=len(summary.bits),
        code_length=len(code),
    )


@dataclass
class D1Row:
    id: str
    family: str
    level: str
    discipline: str
    seed: int
    code_path: str
    description_path: str
    stats: RowStats
    image_path: str | None = None
    augmented_paths: list = field(default_factory=list)
    render_failed: bool = False

    def to_json(self) -> dict:
        out = asdict(self)
        out["stats"] = asdict(self.stats)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "D1Row":
        data = dict(data)
        data["stats"] = RowStats(**data["stats"])
        return cls(**data)


@dataclass
class D2Row:
    id: str
    base_id: str
    family: str
    level: str
    seed: int
    removals: int
    code_path: str
    prompt: str
    missing: list
    image_path: str | None = None
    augmented_paths: list = field(default_factory=list)
    render_failed: bool = False

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "D2Row":
        return cls(**data)


def write_code(path, code: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(code + "\n")


def read_code(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().removesuffix("\n")


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def read_text(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().removesuffix("\n")


def write_manifest(path, meta: dict, rows) -> None:
    """Atomically write meta plus rows; an interrupted write leaves no file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    header = {"v": MANIFEST_VERSION, **meta}
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".manifest-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
            for row in rows:
                data = row.to_json() if hasattr(row, "to_json") else row
                fh.write(json.dumps(data, sort_keys=True, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_manifest(path) -> tuple:
    """Return (meta, raw row dicts); validates version and id uniqueness."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read manifest: {exc}") from exc
    if not lines:
        raise ConfigError(f"manifest is empty: {path}")
    try:
        meta = json.loads(lines[0])
        rows = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest is not valid JSONL: {exc}") from exc
    if meta.get("v") != MANIFEST_VERSION:
        raise ConfigError(f"unsupported manifest version: {meta.get('v')!r}")
    ids = [row.get("id") for row in rows]
    if len(ids) != len(set(ids)):
        raise ConfigError(f"manifest has duplicate sample ids: {path}")
    return meta, rows


def read_d1(path) -> tuple:
    meta, rows = read_manifest(path)
    if meta.get("kind") != "d1":
        raise ConfigError(f"expected a base-corpus manifest, got kind {meta.get('kind')!r}")
    return meta, [D1Row.from_json(r) for r in rows]


def read_d2(path) -> tuple:
    meta, rows = read_manifest(path)
    if meta.get("kind") != "d2":
        raise ConfigError(f"expected a derived-corpus manifest, got kind {meta.get('kind')!r}")
    return meta, [D2Row.from_json(r) for r in rows]
