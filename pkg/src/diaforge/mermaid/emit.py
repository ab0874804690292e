"""Render DiagramSpec structures into Mermaid source text."""
from __future__ import annotations

import logging

from ..genspec import DiagramFamily, DiagramSpec, Level
from .model import (
    ClassStmt,
    EdgeStmt,
    FieldStmt,
    MemberStmt,
    MermaidDoc,
    NodeStmt,
    RawStmt,
)

log = logging.getLogger(__name__)

# Expected rendered-source length per family/level; violations are logged,
# never fatal, since phrase draws legitimately spread the distribution.
CODE_LENGTH_RANGES: dict[tuple[DiagramFamily, Level], tuple[int, int]] = {
    (DiagramFamily.BLOCK, Level.EASY): (80, 237),
    (DiagramFamily.BLOCK, Level.MEDIUM): (247, 772),
    (DiagramFamily.BLOCK, Level.HARD): (303, 971),
    (DiagramFamily.C4, Level.EASY): (221, 415),
    (DiagramFamily.C4, Level.MEDIUM): (833, 1352),
    (DiagramFamily.C4, Level.HARD): (859, 1355),
    (DiagramFamily.CLASS, Level.EASY): (198, 459),
    (DiagramFamily.CLASS, Level.MEDIUM): (460, 1287),
    (DiagramFamily.CLASS, Level.HARD): (730, 1291),
    (DiagramFamily.FLOWCHART, Level.EASY): (173, 277),
    (DiagramFamily.FLOWCHART, Level.MEDIUM): (196, 394),
    (DiagramFamily.FLOWCHART, Level.HARD): (198, 393),
    (DiagramFamily.GRAPH, Level.EASY): (41, 234),
    (DiagramFamily.GRAPH, Level.MEDIUM): (62, 344),
    (DiagramFamily.GRAPH, Level.HARD): (81, 213),
    (DiagramFamily.PACKET, Level.EASY): (95, 142),
    (DiagramFamily.PACKET, Level.MEDIUM): (114, 322),
    (DiagramFamily.PACKET, Level.HARD): (174, 419),
    (DiagramFamily.SEQUENCE, Level.EASY): (47, 268),
    (DiagramFamily.SEQUENCE, Level.MEDIUM): (137, 366),
    (DiagramFamily.SEQUENCE, Level.HARD): (303, 538),
    (DiagramFamily.STATE, Level.EASY): (32, 217),
    (DiagramFamily.STATE, Level.MEDIUM): (118, 518),
    (DiagramFamily.STATE, Level.HARD): (441, 1093),
}

_HEADERS = {
    DiagramFamily.BLOCK: "block-beta",
    DiagramFamily.C4: "C4Context",
    DiagramFamily.CLASS: "classDiagram",
    DiagramFamily.FLOWCHART: "flowchart TD",
    DiagramFamily.GRAPH: "graph TD",
    DiagramFamily.PACKET: "packet-beta",
    DiagramFamily.SEQUENCE: "sequenceDiagram",
    DiagramFamily.STATE: "stateDiagram-v2",
}

_C4_ELEMENT = {"person": "Person", "system": "System", "system_ext": "System_Ext"}

C4_LAYOUT_LINE = 'UpdateLayoutConfig($c4ShapeInRow="3", $c4BoundaryInRow="1")'


def doc_from_spec(spec: DiagramSpec) -> MermaidDoc:
    """Build the statement-level document a spec renders to."""
    fam = spec.family
    doc = MermaidDoc(fam, _HEADERS[fam])
    stmts = doc.statements

    if fam is DiagramFamily.PACKET:
        stmts.append(RawStmt(f"title {spec.discipline.capitalize()} data packet"))
        offset = 0
        for comp in spec.components:
            stmts.append(FieldStmt(comp.name, offset, offset + comp.width - 1))
            offset += comp.width
        return doc

    if fam is DiagramFamily.C4:
        stmts.append(RawStmt(f"title System context diagram for the {spec.discipline} domain"))
        stmts.append(RawStmt(f'Enterprise_Boundary(b0, "{spec.discipline.capitalize()} services") {{'))
        for comp in spec.components:
            desc = f"Supports the {spec.discipline} workflow"
            stmts.append(NodeStmt(comp.id, comp.name, comp.kind, extra=desc))
        stmts.append(RawStmt("}"))
        for e in spec.edges:
            stmts.append(EdgeStmt(e.src, e.dst, e.label, e.arrow))
        stmts.append(RawStmt(C4_LAYOUT_LINE))
        return doc

    if fam is DiagramFamily.BLOCK:
        stmts.append(RawStmt(f"columns {min(len(spec.components), 3)}"))

    if fam is DiagramFamily.CLASS:
        for comp in spec.components:
            members = tuple(MemberStmt(m.visibility, m.name, m.is_method) for m in comp.members)
            stmts.append(ClassStmt(comp.name, members))
        id_to_name = {c.id: c.name for c in spec.components}
        for e in spec.edges:
            stmts.append(EdgeStmt(id_to_name[e.src], id_to_name[e.dst], e.label, e.arrow))
        return doc

    for comp in spec.components:
        stmts.append(NodeStmt(comp.id, comp.name, comp.kind))
    for e in spec.edges:
        stmts.append(EdgeStmt(e.src, e.dst, e.label, e.arrow))
    return doc


def _line_graph(s) -> str:
    if isinstance(s, NodeStmt):
        shape = {
            "process": ("[", "]"),
            "node": ("[", "]"),
            "decision": ("{", "}"),
            "terminal": ("([", "])"),
            "circle": ("((", "))"),
            "round": ("(", ")"),
        }.get(s.kind, ("[", "]"))
        return f"{s.id}{shape[0]}{s.name}{shape[1]}"
    if isinstance(s, EdgeStmt):
        if s.label is not None:
            return f"{s.src} {s.arrow}|{s.label}| {s.dst}"
        return f"{s.src} {s.arrow} {s.dst}"
    return s.text


def _line_block(s) -> str:
    if isinstance(s, NodeStmt):
        return f'{s.id}["{s.name}"]'
    if isinstance(s, EdgeStmt):
        if s.label is not None:
            return f'{s.src} -- "{s.label}" --> {s.dst}'
        return f"{s.src} {s.arrow} {s.dst}"
    return s.text


def _line_sequence(s) -> str:
    if isinstance(s, NodeStmt):
        return f"participant {s.id} as {s.name}"
    if isinstance(s, EdgeStmt):
        if s.label is not None:
            return f"{s.src}{s.arrow}{s.dst}: {s.label}"
        return f"{s.src}{s.arrow}{s.dst}"
    return s.text


def _line_state(s) -> str:
    if isinstance(s, NodeStmt):
        return f'state "{s.name}" as {s.id}'
    if isinstance(s, EdgeStmt):
        base = f"{s.src} --> {s.dst}"
        return f"{base} : {s.label}" if s.label is not None else base
    return s.text


def _line_c4(s) -> str:
    if isinstance(s, NodeStmt):
        element = _C4_ELEMENT.get(s.kind, "System")
        if s.extra:
            return f'{element}({s.id}, "{s.name}", "{s.extra}")'
        return f'{element}({s.id}, "{s.name}")'
    if isinstance(s, EdgeStmt):
        return f'{s.arrow}({s.src}, {s.dst}, "{s.label or ""}")'
    return s.text


def _line_packet(s) -> str:
    if isinstance(s, FieldStmt):
        if s.start == s.end:
            return f'{s.start}: "{s.name}"'
        return f'{s.start}-{s.end}: "{s.name}"'
    return s.text


def to_source(doc: MermaidDoc) -> str:
    """Serialize a document back to Mermaid text."""
    fam = doc.family
    lines = [doc.header]

    if fam is DiagramFamily.CLASS:
        for s in doc.statements:
            if isinstance(s, ClassStmt):
                if s.members:
                    lines.append(f"    class {s.name} {{")
                    for m in s.members:
                        suffix = "()" if m.is_method else ""
                        lines.append(f"        {m.visibility}{m.name}{suffix}")
                    lines.append("    }")
                else:
                    lines.append(f"    class {s.name}")
            elif isinstance(s, EdgeStmt):
                base = f"    {s.src} {s.arrow} {s.dst}"
                lines.append(f"{base} : {s.label}" if s.label is not None else base)
            else:
                lines.append(f"    {s.text}")
        return "\n".join(lines)

    if fam is DiagramFamily.C4:
        indent = 4
        for s in doc.statements:
            if isinstance(s, RawStmt) and s.text.endswith("{"):
                lines.append(" " * 4 + s.text)
                indent = 8
            elif isinstance(s, RawStmt) and s.text == "}":
                indent = 4
                lines.append(" " * 4 + s.text)
            else:
                lines.append(" " * (indent if isinstance(s, NodeStmt) else 4) + _line_c4(s))
        return "\n".join(lines)

    if fam is DiagramFamily.PACKET:
        lines.extend(_line_packet(s) for s in doc.statements)
        return "\n".join(lines)

    renderer = {
        DiagramFamily.BLOCK: _line_block,
        DiagramFamily.FLOWCHART: _line_graph,
        DiagramFamily.GRAPH: _line_graph,
        DiagramFamily.SEQUENCE: _line_sequence,
        DiagramFamily.STATE: _line_state,
    }[fam]
    lines.extend("    " + renderer(s) for s in doc.statements)
    return "\n".join(lines)


def emit(spec: DiagramSpec) -> str:
    """Render a spec to Mermaid source, soft-checking the length envelope."""
    source = to_source(doc_from_spec(spec))
    bounds = CODE_LENGTH_RANGES.get((spec.family, spec.level))
    if bounds and not bounds[0] <= len(source) <= bounds[1]:
        log.debug(
            "emitted %s/%s source of %d chars outside envelope [%d, %d]",
            spec.family.value, spec.level.value, len(source), bounds[0], bounds[1],
        )
    return source
