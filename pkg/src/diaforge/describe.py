"""Natural-language descriptions of diagram structure, and their inversion.

A description is a list of sentences produced from per-family patterns:
one preamble naming the family and the element count, one sentence per
block (or packet field), one sentence per class member, and one sentence
per edge.  Because every sentence is generated from a fixed pattern, the
mapping is reversible: ``parse_description`` matches each line against
the pattern set and rebuilds the structural summary.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConfigError, InversionError
from .genspec import DiagramFamily
from .mermaid.model import StructuralSummary, EdgeRef, canonical_name

# Words used for member visibility markers in sentences.
VISIBILITY_WORDS = {"+": "public", "-": "private", "#": "protected", "~": "package"}
_WORD_TO_VIS = {w: s for s, w in VISIBILITY_WORDS.items()}

# Line patterns tried against each description sentence, most specific first.
# Labeled forms must precede unlabeled ones: the unlabeled regex would
# otherwise swallow "... carrying the label 'x'" into its last group.
_PRECEDENCE = (
    "field",
    "member_method",
    "member_attribute",
    "edge_undirected_labeled",
    "edge_labeled",
    "edge_undirected",
    "edge",
    "component",
)

_NUMERIC_FIELDS = {"count", "start", "end"}


def _pattern_to_regex(pattern: str) -> re.Pattern:
    """Turn a ``str.format`` pattern into an anchored matching regex."""
    parts = []
    pos = 0
    for m in re.finditer(r"\{(\w+)\}", pattern):
        parts.append(re.escape(pattern[pos:m.start()]))
        name = m.group(1)
        if name in _NUMERIC_FIELDS:
            parts.append(rf"(?P<{name}>\d+)")
        elif name == "visibility":
            parts.append(r"(?P<visibility>\w+)")
        else:
            # Placeholder values never contain single quotes, which is what
            # makes the quoted slots unambiguous.
            parts.append(rf"(?P<{name}>[^']*)")
        pos = m.end()
    parts.append(re.escape(pattern[pos:]))
    return re.compile("^" + "".join(parts) + "$")


@dataclass(frozen=True)
class TemplateSet:
    """Sentence patterns for descriptions and completion prompts."""

    describe: dict
    enhance: dict
    _regex_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def regex(self, family: str, key: str) -> re.Pattern:
        cache_key = (family, key)
        if cache_key not in self._regex_cache:
            self._regex_cache[cache_key] = _pattern_to_regex(self.describe[family][key])
        return self._regex_cache[cache_key]


def _required_keys(family: str) -> tuple:
    if family == "packet":
        return ("preamble", "field")
    keys = ["preamble", "component", "edge", "edge_labeled",
            "edge_undirected", "edge_undirected_labeled"]
    if family == "class":
        keys += ["member_attribute", "member_method"]
    return tuple(keys)


def load_templates(path=None) -> TemplateSet:
    """Load sentence patterns from ``path`` or the packaged defaults."""
    try:
        if path is None:
            raw = resources.files("diaforge.data").joinpath("templates.json").read_text("utf-8")
        else:
            with open(path, "r", encoding="utf-8") as fh:
                raw = fh.read()
        data = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load templates: {exc}") from exc

    describe = data.get("describe")
    enhance = data.get("enhance", {})
    if not isinstance(describe, dict):
        raise ConfigError("templates file must define a 'describe' mapping")
    for family in DiagramFamily:
        pats = describe.get(family.value)
        if not isinstance(pats, dict):
            raise ConfigError(f"templates missing family {family.value!r}")
        for key in _required_keys(family.value):
            if not isinstance(pats.get(key), str):
                raise ConfigError(f"templates for {family.value!r} missing pattern {key!r}")
    return TemplateSet(describe=describe, enhance=enhance)


def _split_signature(sig: str) -> tuple:
    """Break a member signature into (visibility word, name, is_method)."""
    vis = sig[0] if sig and sig[0] in VISIBILITY_WORDS else "+"
    body = sig[1:] if sig and sig[0] in VISIBILITY_WORDS else sig
    is_method = body.endswith("()")
    if is_method:
        body = body[:-2]
    return VISIBILITY_WORDS[vis], body, is_method


def describe(summary: StructuralSummary, templates: TemplateSet) -> str:
    """Render a structural summary as one sentence per element.

    The output always starts with the preamble, even for an empty summary.
    """
    fam = summary.family.value
    pats = templates.describe[fam]
    lines = [pats["preamble"].format(count=len(summary.blocks))]
    if fam == "packet":
        for name in summary.blocks:
            start, end = summary.bits[name]
            lines.append(pats["field"].format(name=name, start=start, end=end))
        return "\n".join(lines)

    for name in summary.blocks:
        lines.append(pats["component"].format(name=name))
        if fam == "class":
            for sig in summary.attributes.get(name, ()):
                vis_word, member, is_method = _split_signature(sig)
                key = "member_method" if is_method else "member_attribute"
                lines.append(pats[key].format(cls=name, visibility=vis_word, name=member))
    for edge in summary.edges:
        key = "edge"
        if edge.undirected:
            key += "_undirected"
        if edge.label:
            key += "_labeled"
        lines.append(pats[key].format(src=edge.src, dst=edge.dst, label=edge.label))
    return "\n".join(lines)


def _detect_family(first_line: str, templates: TemplateSet):
    for family in DiagramFamily:
        m = templates.regex(family.value, "preamble").match(first_line)
        if m:
            return family
    return None


def parse_description(text: str, templates: TemplateSet, lower: bool = True) -> StructuralSummary:
    """Invert ``describe``: rebuild the summary from its sentences.

    Raises InversionError when the first line matches no preamble or any
    later line matches no pattern.  Lines are matched independently, so a
    description with sentences removed still inverts; the result simply
    lacks the corresponding elements.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InversionError("description is empty")
    family = _detect_family(lines[0], templates)
    if family is None:
        raise InversionError(f"line 1 matches no preamble pattern: {lines[0]!r}")

    fam = family.value
    pats = templates.describe[fam]
    available = [k for k in _PRECEDENCE if k in pats]

    blocks = []
    seen = set()
    edges = []
    attributes = {}
    bits = {}

    def add_block(name: str) -> None:
        if name not in seen:
            seen.add(name)
            blocks.append(name)

    def canon(value: str) -> str:
        return canonical_name(value, lower=lower)

    for lineno, line in enumerate(lines[1:], start=2):
        for key in available:
            m = templates.regex(fam, key).match(line)
            if not m:
                continue
            g = m.groupdict()
            if key == "component":
                add_block(canon(g["name"]))
            elif key == "field":
                name = canon(g["name"])
                add_block(name)
                bits[name] = (int(g["start"]), int(g["end"]))
            elif key in ("member_attribute", "member_method"):
                vis = _WORD_TO_VIS.get(g["visibility"])
                if vis is None:
                    raise InversionError(
                        f"line {lineno}: unknown visibility word {g['visibility']!r}")
                cls = canon(g["cls"])
                add_block(cls)
                sig = vis + canon(g["name"]) + ("()" if key == "member_method" else "")
                attributes[cls] = attributes.get(cls, ()) + (sig,)
            else:
                label = canon(g["label"]) if "label" in g else None
                edges.append(EdgeRef(
                    src=canon(g["src"]),
                    dst=canon(g["dst"]),
                    label=label or None,
                    undirected="undirected" in key,
                ))
            break
        else:
            raise InversionError(f"line {lineno} matches no {fam} pattern: {line!r}")

    if fam == "class":
        for name in blocks:
            attributes.setdefault(name, ())
    return StructuralSummary(
        family=family,
        blocks=tuple(blocks),
        edges=tuple(edges),
        attributes=attributes,
        bits=bits,
    )


def describe_spec(spec, templates: TemplateSet, lower: bool = True) -> str:
    """Describe a sampled spec by summarizing its emitted document."""
    from .mermaid import summarize

    return describe(summarize(spec, lower=lower), templates)
