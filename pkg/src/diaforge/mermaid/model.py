"""Statement-level document model and structural summaries."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from ..genspec import DiagramFamily

_WS = re.compile(r"\s+")
# Characters that carry Mermaid structure; canonical names drop them so that
# quoting style and bracket shape never affect matching.
_DELIMS = re.compile(r'["\[\]{}();:`|]')

# Arrows whose edges have no orientation for matching purposes.
UNDIRECTED_ARROWS = frozenset({"---", "BiRel"})


def canonical_name(text: str, lower: bool = True) -> str:
    """Lowercase (optional), strip structural delimiters, collapse whitespace."""
    text = _DELIMS.sub("", text)
    if lower:
        text = text.lower()
    return _WS.sub(" ", text.strip())


def member_signature(visibility: str, name: str, is_method: bool, lower: bool = True) -> str:
    """Canonical form of one class member, e.g. "+batchSize" -> "+batchsize"."""
    sig = (visibility or "+") + canonical_name(name, lower)
    return sig + "()" if is_method else sig


@dataclass(frozen=True)
class NodeStmt:
    id: str
    name: str
    kind: str
    extra: str | None = None  # c4 element description text


@dataclass(frozen=True)
class EdgeStmt:
    src: str
    dst: str
    label: str | None
    arrow: str


@dataclass(frozen=True)
class MemberStmt:
    visibility: str
    name: str
    is_method: bool


@dataclass(frozen=True)
class ClassStmt:
    name: str
    members: tuple[MemberStmt, ...] = ()


@dataclass(frozen=True)
class FieldStmt:
    name: str
    start: int
    end: int


@dataclass(frozen=True)
class RawStmt:
    """A recognized non-structural line kept verbatim (titles, layout hints)."""

    text: str


Statement = NodeStmt | EdgeStmt | ClassStmt | FieldStmt | RawStmt


@dataclass
class MermaidDoc:
    family: DiagramFamily
    header: str
    statements: list[Statement] = field(default_factory=list)

    def edges(self) -> list[EdgeStmt]:
        return [s for s in self.statements if isinstance(s, EdgeStmt)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, MermaidDoc):
            return NotImplemented
        return (
            self.family == other.family
            and self.header.split() == other.header.split()
            and self.statements == other.statements
        )


@dataclass(frozen=True)
class EdgeRef:
    """One canonical edge of a summary; src/dst are canonical block names."""

    src: str
    dst: str
    label: str | None = None
    undirected: bool = False


@dataclass
class StructuralSummary:
    """Order-preserving canonical view of a diagram's structure.

    Equality ignores declaration order: blocks compare as a set, edges as a
    multiset, class members as per-class sets.
    """

    family: DiagramFamily
    blocks: tuple[str, ...] = ()
    edges: tuple[EdgeRef, ...] = ()
    attributes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    bits: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StructuralSummary):
            return NotImplemented
        return (
            self.family == other.family
            and set(self.blocks) == set(other.blocks)
            and Counter(self.edges) == Counter(other.edges)
            and {k: set(v) for k, v in self.attributes.items()}
            == {k: set(v) for k, v in other.attributes.items()}
            and self.bits == other.bits
        )

    __hash__ = None  # mutable container semantics


def summary_of_doc(doc: MermaidDoc, lower: bool = True) -> StructuralSummary:
    """Project a document onto its structural summary.

    Node ids resolve to declared display names wherever a declaration exists
    anywhere in the document (forward references allowed); an undeclared id
    is its own name. Blocks keep first-seen order without duplicates.
    """
    display: dict[str, str] = {}
    for s in doc.statements:
        if isinstance(s, NodeStmt) and s.id not in display:
            display[s.id] = s.name
        elif isinstance(s, ClassStmt) and s.name not in display:
            display[s.name] = s.name

    blocks: list[str] = []
    seen: set[str] = set()
    edges: list[EdgeRef] = []
    attributes: dict[str, tuple[str, ...]] = {}
    bits: dict[str, tuple[int, int]] = {}

    def add_block(token: str) -> str:
        name = canonical_name(display.get(token, token), lower)
        if name and name not in seen:
            seen.add(name)
            blocks.append(name)
        return name

    for s in doc.statements:
        if isinstance(s, NodeStmt):
            add_block(s.id)
        elif isinstance(s, ClassStmt):
            cname = add_block(s.name)
            sigs = tuple(
                member_signature(m.visibility, m.name, m.is_method, lower) for m in s.members
            )
            existing = attributes.get(cname, ())
            attributes[cname] = existing + sigs
        elif isinstance(s, FieldStmt):
            fname = add_block(s.name)
            bits[fname] = (s.start, s.end)
        elif isinstance(s, EdgeStmt):
            src = add_block(s.src)
            dst = add_block(s.dst)
            label = canonical_name(s.label, lower) if s.label is not None else None
            if label == "":
                label = None
            edges.append(EdgeRef(src, dst, label, s.arrow in UNDIRECTED_ARROWS))
        # RawStmt carries no structure

    if doc.family is DiagramFamily.CLASS:
        for b in blocks:
            attributes.setdefault(b, ())
    return StructuralSummary(doc.family, tuple(blocks), tuple(edges), attributes, bits)
