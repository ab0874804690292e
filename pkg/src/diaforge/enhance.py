"""Completion-sample derivation by removing edge triplets from documents.

A derived sample pairs a reduced document with a prompt asking for the
missing piece.  One derivation step removes a uniformly chosen edge; any
endpoint left with no remaining edges loses its declaration too, so the
reduced diagram never shows a dangling element that gives the answer away.
``reinsert`` is the inverse and restores the original structure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .describe import TemplateSet
from .errors import DerivationError
from .genspec import DiagramFamily
from .mermaid.model import (
    ClassStmt,
    EdgeStmt,
    MermaidDoc,
    NodeStmt,
    UNDIRECTED_ARROWS,
    canonical_name,
)

# Families whose documents support edge removal.  Packet diagrams have no
# edges; C4 elements carry relationship text that would leak the answer.
DERIVABLE_FAMILIES = frozenset({
    DiagramFamily.BLOCK,
    DiagramFamily.CLASS,
    DiagramFamily.FLOWCHART,
    DiagramFamily.GRAPH,
    DiagramFamily.SEQUENCE,
    DiagramFamily.STATE,
})

# Kind recorded for an endpoint that has no explicit declaration statement.
_IMPLICIT_KIND = {
    DiagramFamily.BLOCK: "block",
    DiagramFamily.CLASS: "class",
    DiagramFamily.FLOWCHART: "process",
    DiagramFamily.GRAPH: "node",
    DiagramFamily.SEQUENCE: "participant",
    DiagramFamily.STATE: "state",
}


@dataclass(frozen=True)
class TripletEndpoint:
    """Identity of one side of a removed edge.

    ``token`` is the identifier used in edge statements; ``name`` is the
    display text.  ``members`` keeps class bodies so reinsertion can
    restore a dropped class declaration in full.
    """

    token: str
    name: str
    kind: str
    members: tuple = ()
    extra: str | None = None


@dataclass(frozen=True)
class RemovedTriplet:
    src: TripletEndpoint
    dst: TripletEndpoint
    label: str | None
    arrow: str


@dataclass(frozen=True)
class EnhancementSample:
    base: MermaidDoc
    reduced: MermaidDoc
    removed: tuple[RemovedTriplet, ...]
    prompt: str


def _endpoint(doc: MermaidDoc, token: str) -> TripletEndpoint:
    for stmt in doc.statements:
        if isinstance(stmt, NodeStmt) and stmt.id == token:
            return TripletEndpoint(token, stmt.name, stmt.kind, (), stmt.extra)
        if isinstance(stmt, ClassStmt) and stmt.name == token:
            return TripletEndpoint(token, stmt.name, "class", stmt.members)
    return TripletEndpoint(token, token, _IMPLICIT_KIND[doc.family])


def _declares(stmt, token: str) -> bool:
    return (isinstance(stmt, NodeStmt) and stmt.id == token) or (
        isinstance(stmt, ClassStmt) and stmt.name == token
    )


def remove_triplet(doc: MermaidDoc, rng: random.Random) -> tuple[MermaidDoc, RemovedTriplet]:
    """Remove one uniformly chosen edge; drop declarations orphaned by it.

    Requires a derivable family and at least two edges, so the reduced
    document still shows a diagram rather than a bare header.
    """
    if doc.family not in DERIVABLE_FAMILIES:
        raise DerivationError(f"family {doc.family.value!r} does not support edge removal")
    edge_positions = [i for i, s in enumerate(doc.statements) if isinstance(s, EdgeStmt)]
    if len(edge_positions) < 2:
        raise DerivationError(
            f"need at least 2 edges to remove one, found {len(edge_positions)}")

    victim_at = edge_positions[rng.randrange(len(edge_positions))]
    victim = doc.statements[victim_at]
    statements = [s for i, s in enumerate(doc.statements) if i != victim_at]

    removed = RemovedTriplet(
        src=_endpoint(doc, victim.src),
        dst=_endpoint(doc, victim.dst),
        label=victim.label,
        arrow=victim.arrow,
    )

    for token in dict.fromkeys((victim.src, victim.dst)):
        degree = sum(
            1 for s in statements
            if isinstance(s, EdgeStmt) and token in (s.src, s.dst)
        )
        if degree == 0:
            statements = [s for s in statements if not _declares(s, token)]

    reduced = MermaidDoc(family=doc.family, header=doc.header, statements=statements)
    return reduced, removed


def verbalize(removed: RemovedTriplet, family: DiagramFamily, templates: TemplateSet) -> str:
    """Phrase one removed triplet as a completion instruction."""
    pats = templates.enhance.get(family.value)
    if not pats:
        raise DerivationError(f"no completion patterns for family {family.value!r}")
    key = "edge"
    if removed.arrow in UNDIRECTED_ARROWS:
        key += "_undirected"
    if removed.label:
        key += "_labeled"
    return pats[key].format(src=removed.src.name, dst=removed.dst.name, label=removed.label)


def derive(doc: MermaidDoc, rng: random.Random, templates: TemplateSet,
           removals: int = 1) -> EnhancementSample:
    """Apply ``removals`` successive edge removals and verbalize each one.

    The prompt lists one instruction per removed edge, most recently
    removed first, matching the order a solver should reinsert them.
    """
    if removals < 1:
        raise DerivationError("removals must be at least 1")
    if len(doc.edges()) < removals + 1:
        raise DerivationError(
            f"need at least {removals + 1} edges for {removals} removals, "
            f"found {len(doc.edges())}")
    current = doc
    removed = []
    for _ in range(removals):
        current, triplet = remove_triplet(current, rng)
        removed.append(triplet)
    prompts = [verbalize(t, doc.family, templates) for t in reversed(removed)]
    return EnhancementSample(
        base=doc,
        reduced=current,
        removed=tuple(removed),
        prompt="\n".join(prompts),
    )


def reinsert(reduced: MermaidDoc, removed) -> MermaidDoc:
    """Append the removed declarations and edges back onto a reduced document.

    Statement placement differs from the original, but the structural
    summary of the result equals the summary of the base document.
    """
    statements = list(reduced.statements)
    for triplet in removed:
        for endpoint in (triplet.src, triplet.dst):
            if any(_declares(s, endpoint.token) for s in statements):
                continue
            if endpoint.kind == "class":
                statements.append(ClassStmt(name=endpoint.token, members=endpoint.members))
            else:
                statements.append(NodeStmt(
                    id=endpoint.token, name=endpoint.name,
                    kind=endpoint.kind, extra=endpoint.extra))
        statements.append(EdgeStmt(
            src=triplet.src.token, dst=triplet.dst.token,
            label=triplet.label, arrow=triplet.arrow))
    return MermaidDoc(family=reduced.family, header=reduced.header, statements=statements)


def missing_refs(sample: EnhancementSample, lower: bool = True) -> list[dict]:
    """Canonical (src, dst, label) dicts for each removed edge, oldest first."""
    refs = []
    for triplet in sample.removed:
        label = canonical_name(triplet.label, lower) if triplet.label else None
        refs.append({
            "src": canonical_name(triplet.src.name, lower),
            "dst": canonical_name(triplet.dst.name, lower),
            "label": label or None,
        })
    return refs
