"""Training-task construction over generated and derived corpus rows.

Nine task kinds share one instance schema: a JSON object with optional
input payloads (image ref, code text, description text, prompt text), a
single target (code, description, or label), and provenance naming the
source sample ids and the run seed.  ``sample_mix`` draws kinds uniformly,
so large streams split evenly across whatever kinds the pools support.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import TaskBuildError

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class TaskKind(str, Enum):
    IMAGE2CODE = "Image2Code"
    DESCRIPTION2CODE = "Description2Code"
    IMAGE2DESCRIPTION = "Image2Description"
    IMAGE_ENHANCE_PROMPT = "ImageEnhancePrompt"
    IMAGE_ENHANCE_DESCRIPTION = "ImageEnhanceDescription"
    CODE_ENHANCE_PROMPT = "CodeEnhancePrompt"
    CODE_ENHANCE_DESCRIPTION = "CodeEnhanceDescription"
    PAIR_QA = "PairQA"
    PARTIAL_MATCH_QA = "PartialMatchQA"


# Kinds built from base corpus rows alone vs. kinds that need derived rows.
BASE_KINDS = (
    TaskKind.IMAGE2CODE,
    TaskKind.DESCRIPTION2CODE,
    TaskKind.IMAGE2DESCRIPTION,
    TaskKind.PAIR_QA,
)
DERIVED_KINDS = (
    TaskKind.IMAGE_ENHANCE_PROMPT,
    TaskKind.IMAGE_ENHANCE_DESCRIPTION,
    TaskKind.CODE_ENHANCE_PROMPT,
    TaskKind.CODE_ENHANCE_DESCRIPTION,
    TaskKind.PARTIAL_MATCH_QA,
)


@dataclass(frozen=True)
class CorpusRow:
    """Resolved view of one generated sample."""

    id: str
    family: str
    code: str
    description: str
    image_ref: str | None = None
    code_ref: str | None = None


@dataclass(frozen=True)
class DerivedRow:
    """Resolved view of one completion sample derived from a base row."""

    id: str
    base_id: str
    family: str
    reduced_code: str
    prompt: str
    missing: tuple = ()
    reduced_image_ref: str | None = None
    reduced_code_ref: str | None = None


@dataclass
class TaskPool:
    base: list
    derived: list = field(default_factory=list)

    def __post_init__(self):
        self.by_id = {row.id: row for row in self.base}
        self.by_family = {}
        for row in self.base:
            self.by_family.setdefault(row.family, []).append(row)


@dataclass(frozen=True)
class TaskInstance:
    kind: TaskKind
    inputs: dict
    target: dict
    provenance: dict

    def to_json(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "kind": self.kind.value,
            "inputs": self.inputs,
            "target": self.target,
            "provenance": self.provenance,
        }


def _image(row, codeless: bool, kind: TaskKind, attr: str = "image_ref",
           code_attr: str = "code_ref") -> str:
    ref = getattr(row, attr)
    if ref is not None:
        return ref
    if codeless:
        code_ref = getattr(row, code_attr)
        if code_ref is not None:
            return code_ref
    raise TaskBuildError(
        f"{kind.value} needs an image for sample {row.id}; "
        "render images first or build with codeless mode")


def build_instance(kind: TaskKind, samples: dict, codeless: bool = False,
                   seed: int | None = None) -> TaskInstance:
    """Assemble one task instance from the rows a kind needs.

    ``samples`` keys: "row" (base kinds), "other" (negative PairQA partner,
    same family), "derived" and "base" (derived kinds).  Missing payloads
    raise TaskBuildError naming the kind and sample.
    """

    def need(key: str):
        row = samples.get(key)
        if row is None:
            raise TaskBuildError(f"{kind.value} needs a {key!r} sample")
        return row

    ids = []
    if kind == TaskKind.IMAGE2CODE:
        row = need("row")
        inputs = {"image": _image(row, codeless, kind)}
        target = {"code": row.code}
        ids = [row.id]
    elif kind == TaskKind.DESCRIPTION2CODE:
        row = need("row")
        inputs = {"description": row.description}
        target = {"code": row.code}
        ids = [row.id]
    elif kind == TaskKind.IMAGE2DESCRIPTION:
        row = need("row")
        inputs = {"image": _image(row, codeless, kind)}
        target = {"description": row.description}
        ids = [row.id]
    elif kind == TaskKind.PAIR_QA:
        row = need("row")
        other = samples.get("other")
        if other is None:
            inputs = {"image": _image(row, codeless, kind), "code": row.code}
            target = {"label": True}
            ids = [row.id]
        else:
            if other.id == row.id or other.family != row.family:
                raise TaskBuildError(
                    f"{kind.value} negative needs a distinct same-family sample, "
                    f"got {row.id} and {other.id}")
            inputs = {"image": _image(row, codeless, kind), "code": other.code}
            target = {"label": False}
            ids = [row.id, other.id]
    elif kind in (TaskKind.IMAGE_ENHANCE_PROMPT, TaskKind.IMAGE_ENHANCE_DESCRIPTION):
        derived, base = need("derived"), need("base")
        image = _image(derived, codeless, kind,
                       attr="reduced_image_ref", code_attr="reduced_code_ref")
        if kind == TaskKind.IMAGE_ENHANCE_PROMPT:
            inputs = {"image": image, "prompt": derived.prompt}
        else:
            inputs = {"image": image, "description": base.description}
        target = {"code": base.code}
        ids = [base.id, derived.id]
    elif kind in (TaskKind.CODE_ENHANCE_PROMPT, TaskKind.CODE_ENHANCE_DESCRIPTION):
        derived, base = need("derived"), need("base")
        if kind == TaskKind.CODE_ENHANCE_PROMPT:
            inputs = {"code": derived.reduced_code, "prompt": derived.prompt}
        else:
            inputs = {"code": derived.reduced_code, "description": base.description}
        target = {"code": base.code}
        ids = [base.id, derived.id]
    elif kind == TaskKind.PARTIAL_MATCH_QA:
        derived, base = need("derived"), need("base")
        inputs = {"image": _image(base, codeless, kind), "code": derived.reduced_code}
        target = {"label": {"partial": True, "missing": list(derived.missing)}}
        ids = [base.id, derived.id]
    else:  # pragma: no cover - enum is closed
        raise TaskBuildError(f"unknown task kind {kind!r}")

    provenance = {"samples": ids}
    if seed is not None:
        provenance["seed"] = seed
    return TaskInstance(kind=kind, inputs=inputs, target=target, provenance=provenance)


def sample_mix(pool: TaskPool, n: int, rng: random.Random, codeless: bool = False,
               positive_rate: float = 0.5, seed: int | None = None) -> list:
    """Draw ``n`` instances with kinds distributed uniformly.

    When the derived pool is empty the mix renormalizes over the four
    base-backed kinds.  Negative PairQA partners come from the same family;
    a family with a single row falls back to a positive instance.
    """
    if not pool.base:
        raise TaskBuildError("task mix needs at least one base corpus row")
    kinds = list(BASE_KINDS)
    if pool.derived:
        kinds += list(DERIVED_KINDS)
    else:
        log.warning("derived pool empty; mixing over %d kinds: %s",
                    len(kinds), ", ".join(k.value for k in kinds))

    instances = []
    for _ in range(n):
        kind = kinds[rng.randrange(len(kinds))]
        if kind in BASE_KINDS:
            row = pool.base[rng.randrange(len(pool.base))]
            samples = {"row": row}
            if kind == TaskKind.PAIR_QA and rng.random() >= positive_rate:
                partners = [r for r in pool.by_family[row.family] if r.id != row.id]
                if partners:
                    samples["other"] = partners[rng.randrange(len(partners))]
        else:
            derived = pool.derived[rng.randrange(len(pool.derived))]
            base = pool.by_id.get(derived.base_id)
            if base is None:
                raise TaskBuildError(
                    f"derived sample {derived.id} references missing base row "
                    f"{derived.base_id}")
            samples = {"derived": derived, "base": base}
        instances.append(build_instance(kind, samples, codeless=codeless, seed=seed))
    return instances


def write_tasks(instances, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_json(), sort_keys=True) + "\n")


def read_tasks(path) -> list:
    """Parse a task JSONL file back into dicts (schema check only)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if row.get("v") != SCHEMA_VERSION:
                raise TaskBuildError(f"line {lineno}: unsupported schema version")
            rows.append(row)
    return rows
