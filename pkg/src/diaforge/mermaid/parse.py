"""Line-oriented parsing of the supported Mermaid subset.

Each family is parsed with regular-expression productions over stripped
lines. Parsing is best-effort: lines matching no production are skipped and
reported; validation reuses the same productions but treats unknown lines
and semantic breaks (bit gaps, undeclared relation endpoints, unclosed
class bodies) as errors with line numbers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import FamilyDetectionError
from ..genspec import DiagramFamily
from .model import (
    ClassStmt,
    EdgeStmt,
    FieldStmt,
    MemberStmt,
    MermaidDoc,
    NodeStmt,
    RawStmt,
    StructuralSummary,
    summary_of_doc,
)


@dataclass(frozen=True)
class ValidationIssue:
    line: int
    message: str


@dataclass
class ParseOutcome:
    statements: list = field(default_factory=list)
    unknown: list[tuple[int, str]] = field(default_factory=list)
    issues: list[ValidationIssue] = field(default_factory=list)


@dataclass
class ParseResult:
    doc: MermaidDoc
    skipped: list[tuple[int, str]]


_HEADER_PATTERNS: list[tuple[re.Pattern, DiagramFamily]] = [
    (re.compile(r"^flowchart(\s+(TB|TD|BT|LR|RL))?$"), DiagramFamily.FLOWCHART),
    (re.compile(r"^graph(\s+(TB|TD|BT|LR|RL))?$"), DiagramFamily.GRAPH),
    (re.compile(r"^block-beta$"), DiagramFamily.BLOCK),
    (re.compile(r"^C4Context$"), DiagramFamily.C4),
    (re.compile(r"^classDiagram(-v2)?$"), DiagramFamily.CLASS),
    (re.compile(r"^sequenceDiagram$"), DiagramFamily.SEQUENCE),
    (re.compile(r"^stateDiagram(-v2)?$"), DiagramFamily.STATE),
    (re.compile(r"^packet(-beta)?$"), DiagramFamily.PACKET),
]


def split_rows(source: str) -> list[tuple[int, str]]:
    """1-indexed stripped lines, blank lines and %% comments removed."""
    rows = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        text = raw.strip()
        if not text or text.startswith("%%"):
            continue
        rows.append((lineno, text))
    return rows


def detect_family(source: str):
    """Return (family|None, header_text, header_line, remaining rows)."""
    rows = split_rows(source)
    if not rows:
        return None, "", 1, []
    lineno, text = rows[0]
    for pattern, family in _HEADER_PATTERNS:
        if pattern.match(text):
            return family, text, lineno, rows[1:]
    return None, text, lineno, rows

# --- graph / flowchart -----------------------------------------------------

_SHAPE = r"(\(\[[^()\[\]]*\]\)|\(\([^()]*\)\)|\{[^{}]*\}|\[[^\[\]]*\]|\([^()]*\))"
_GF_NODE = re.compile(rf"^(\w+)\s*{_SHAPE}$")
_GF_EDGE = re.compile(
    rf"^(\w+)\s*{_SHAPE}?\s*(-->|---|-\.->)\s*(?:\|([^|]*)\|\s*)?(\w+)\s*{_SHAPE}?$"
)
_GF_EDGE_MID = re.compile(
    rf'^(\w+)\s*{_SHAPE}?\s*--\s*"?([^"|]+?)"?\s*(-->|---)\s*(\w+)\s*{_SHAPE}?$'
)


def _shape_node(token: str, chunk: str, family: DiagramFamily) -> NodeStmt:
    if chunk.startswith("(["):
        kind, text = "terminal", chunk[2:-2]
    elif chunk.startswith("(("):
        kind, text = "circle", chunk[2:-2]
    elif chunk.startswith("{"):
        kind, text = "decision", chunk[1:-1]
    elif chunk.startswith("["):
        kind = "node" if family is DiagramFamily.GRAPH else "process"
        text = chunk[1:-1]
    else:
        kind, text = "round", chunk[1:-1]
    text = text.strip()
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        text = text[1:-1]
    return NodeStmt(token, text.strip() or token, kind)


def _parse_graphlike(rows, family: DiagramFamily) -> ParseOutcome:
    out = ParseOutcome()
    for lineno, text in rows:
        m = _GF_NODE.match(text)
        if m:
            out.statements.append(_shape_node(m.group(1), m.group(2), family))
            continue
        m = _GF_EDGE.match(text)
        if m:
            src, sshape, arrow, label, dst, dshape = m.groups()
            if sshape:
                out.statements.append(_shape_node(src, sshape, family))
            if dshape:
                out.statements.append(_shape_node(dst, dshape, family))
            out.statements.append(EdgeStmt(src, dst, label if label else None, arrow))
            continue
        m = _GF_EDGE_MID.match(text)
        if m:
            src, sshape, label, arrow, dst, dshape = m.groups()
            if sshape:
                out.statements.append(_shape_node(src, sshape, family))
            if dshape:
                out.statements.append(_shape_node(dst, dshape, family))
            out.statements.append(EdgeStmt(src, dst, label.strip() or None, arrow))
            continue
        out.unknown.append((lineno, text))
    return out

# --- block ------------------------------------------------------------------

_BLOCK_COLUMNS = re.compile(r"^columns\s+(\d+|auto)$")
_BLOCK_SPACE = re.compile(r"^space(?::\d+)?$")
_BLOCK_NODE = re.compile(r'^(\w+)\s*\[\s*"?(.*?)"?\s*\]$')
_BLOCK_EDGE_LABELED = re.compile(r'^(\w+)\s*--\s*"([^"]*)"\s*-->\s*(\w+)$')
_BLOCK_EDGE = re.compile(r"^(\w+)\s*-->\s*(\w+)$")


def _parse_block(rows, family) -> ParseOutcome:
    out = ParseOutcome()
    for lineno, text in rows:
        if _BLOCK_COLUMNS.match(text) or _BLOCK_SPACE.match(text):
            out.statements.append(RawStmt(text))
            continue
        m = _BLOCK_NODE.match(text)
        if m:
            name = m.group(2).strip()
            out.statements.append(NodeStmt(m.group(1), name or m.group(1), "block"))
            continue
        m = _BLOCK_EDGE_LABELED.match(text)
        if m:
            out.statements.append(EdgeStmt(m.group(1), m.group(3), m.group(2).strip() or None, "-->"))
            continue
        m = _BLOCK_EDGE.match(text)
        if m:
            out.statements.append(EdgeStmt(m.group(1), m.group(2), None, "-->"))
            continue
        out.unknown.append((lineno, text))
    return out

# --- sequence ----------------------------------------------------------------

_SEQ_PARTICIPANT = re.compile(r"^(?:participant|actor)\s+(\w+)(?:\s+as\s+(.+?))?$")
_SEQ_MSG = re.compile(r"^(\w+)\s*(-->>|->>|-->|->)\s*(\w+)\s*:\s*(.*)$")
_SEQ_MSG_BARE = re.compile(r"^(\w+)\s*(-->>|->>|-->|->)\s*(\w+)$")
_SEQ_RAW = re.compile(
    r"^(autonumber|(?:de)?activate\s+\w+|[Nn]ote\s+(?:left of|right of|over)\s+[^:]+:.+)$"
)


def _parse_sequence(rows, family) -> ParseOutcome:
    out = ParseOutcome()
    for lineno, text in rows:
        m = _SEQ_PARTICIPANT.match(text)
        if m:
            name = (m.group(2) or m.group(1)).strip()
            out.statements.append(NodeStmt(m.group(1), name, "participant"))
            continue
        m = _SEQ_MSG.match(text)
        if m:
            label = m.group(4).strip()
            out.statements.append(EdgeStmt(m.group(1), m.group(3), label or None, m.group(2)))
            continue
        m = _SEQ_MSG_BARE.match(text)
        if m:
            out.statements.append(EdgeStmt(m.group(1), m.group(3), None, m.group(2)))
            out.issues.append(ValidationIssue(lineno, "message missing ': text' part"))
            continue
        if _SEQ_RAW.match(text):
            out.statements.append(RawStmt(text))
            continue
        out.unknown.append((lineno, text))
    return out

# --- state --------------------------------------------------------------------

_STATE_TRANS = re.compile(r"^(\[\*\]|\w+)\s*-->\s*(\[\*\]|\w+)(?:\s*:\s*(.*))?$")
_STATE_DECL = re.compile(r'^state\s+"([^"]*)"\s+as\s+(\w+)$')
_STATE_DESC = re.compile(r"^(\w+)\s*:\s*(.+)$")
_STATE_DIRECTION = re.compile(r"^direction\s+(TB|TD|BT|LR|RL)$")


def _parse_state(rows, family) -> ParseOutcome:
    out = ParseOutcome()
    for lineno, text in rows:
        m = _STATE_TRANS.match(text)
        if m:
            src, dst, label = m.groups()
            if src == "[*]" or dst == "[*]":
                out.statements.append(RawStmt(text))
            else:
                out.statements.append(EdgeStmt(src, dst, (label or "").strip() or None, "-->"))
            continue
        m = _STATE_DECL.match(text)
        if m:
            name = m.group(1).strip()
            out.statements.append(NodeStmt(m.group(2), name or m.group(2), "state"))
            continue
        if _STATE_DIRECTION.match(text):
            out.statements.append(RawStmt(text))
            continue
        m = _STATE_DESC.match(text)
        if m:
            out.statements.append(NodeStmt(m.group(1), m.group(2).strip(), "state"))
            continue
        out.unknown.append((lineno, text))
    return out

# --- class ----------------------------------------------------------------------

_CLASS_OPEN = re.compile(r"^class\s+(\w+)\s*\{$")
_CLASS_BARE = re.compile(r"^class\s+(\w+)$")
_CLASS_REL = re.compile(
    r"^(\w+)\s*(<\|--|--\|>|\*--|--\*|o--|--o|<--|-->|\.\.>|<\.\.|--)\s*(\w+)(?:\s*:\s*(.*))?$"
)
_CLASS_EXT_MEMBER = re.compile(r"^(\w+)\s*:\s*([+\-#~])?\s*(\w+)\s*(\([^)]*\))?\s*([\w<>\[\]~]*)$")
_CLASS_MEMBER = re.compile(
    r"^([+\-#~])?\s*(\w+)(?:\s+(\w+))?\s*(\([^)]*\))?\s*:?\s*([\w<>\[\]~]*)$"
)
_CLASS_ANNOTATION = re.compile(r"^<<\w+>>$")


def _member_from_match(m: re.Match) -> MemberStmt:
    vis = m.group(1) or "+"
    first, second, parens = m.group(2), m.group(3), m.group(4)
    if parens is not None:
        return MemberStmt(vis, first, True)
    # two bare words read as "Type name"
    name = second if second else first
    return MemberStmt(vis, name, False)


def _parse_class(rows, family) -> ParseOutcome:
    out = ParseOutcome()
    order: list = []  # "class:<name>" markers interleaved with statements
    members: dict[str, list[MemberStmt]] = {}
    open_class: str | None = None
    open_line = 0

    def ensure_class(name: str) -> None:
        if name not in members:
            members[name] = []
            order.append(("class", name))

    for lineno, text in rows:
        if open_class is not None:
            if text == "}":
                open_class = None
                continue
            if _CLASS_ANNOTATION.match(text):
                continue
            m = _CLASS_MEMBER.match(text)
            if m:
                members[open_class].append(_member_from_match(m))
                continue
            out.unknown.append((lineno, text))
            continue
        m = _CLASS_OPEN.match(text)
        if m:
            ensure_class(m.group(1))
            open_class = m.group(1)
            open_line = lineno
            continue
        m = _CLASS_BARE.match(text)
        if m:
            ensure_class(m.group(1))
            continue
        m = _CLASS_REL.match(text)
        if m:
            src, arrow, dst, label = m.groups()
            order.append(EdgeStmt(src, dst, (label or "").strip() or None, arrow))
            continue
        m = _CLASS_EXT_MEMBER.match(text)
        if m:
            name, vis, member_name, parens, _ = m.groups()
            ensure_class(name)
            members[name].append(MemberStmt(vis or "+", member_name, parens is not None))
            continue
        out.unknown.append((lineno, text))

    if open_class is not None:
        out.issues.append(ValidationIssue(open_line, f"class body of {open_class!r} never closed"))

    for entry in order:
        if isinstance(entry, tuple) and entry[0] == "class":
            out.statements.append(ClassStmt(entry[1], tuple(members[entry[1]])))
        else:
            out.statements.append(entry)
    return out

# --- c4 ---------------------------------------------------------------------------

_C4_ELEMENT = re.compile(
    r"^(Person_Ext|Person|System_Ext|SystemDb_Ext|SystemQueue_Ext|SystemDb|SystemQueue|System"
    r'|ContainerDb|ContainerQueue|Container|Component)\s*\(\s*(\w+)\s*,\s*"([^"]*)"'
    r'\s*(?:,\s*"([^"]*)"\s*)?\)$'
)
_C4_REL = re.compile(
    r'^(BiRel|Rel_Back|Rel_U|Rel_D|Rel_L|Rel_R|Rel)\s*\(\s*(\w+)\s*,\s*(\w+)\s*,\s*"([^"]*)"'
    r'\s*(?:,\s*"[^"]*"\s*)*\)$'
)
_C4_BOUNDARY = re.compile(
    r"^(?:Enterprise_Boundary|System_Boundary|Container_Boundary|Boundary)\s*\([^)]*\)\s*\{$"
)
_C4_TITLE = re.compile(r"^title\s+.*$")
_C4_UPDATE = re.compile(r"^Update\w+\s*\(.*\)$")


def _parse_c4(rows, family) -> ParseOutcome:
    out = ParseOutcome()
    declared: set[str] = set()
    for lineno, text in rows:
        m = _C4_ELEMENT.match(text)
        if m:
            token, alias, label, desc = m.groups()
            declared.add(alias)
            out.statements.append(NodeStmt(alias, label.strip() or alias, token.lower(), extra=desc))
            continue
        m = _C4_REL.match(text)
        if m:
            kind, src, dst, label = m.groups()
            arrow = "BiRel" if kind == "BiRel" else "Rel"
            out.statements.append(EdgeStmt(src, dst, label.strip() or None, arrow))
            for alias in (src, dst):
                if alias not in declared:
                    out.issues.append(
                        ValidationIssue(lineno, f"relation references undeclared element {alias!r}")
                    )
            continue
        if _C4_BOUNDARY.match(text) or text == "}" or _C4_TITLE.match(text) or _C4_UPDATE.match(text):
            out.statements.append(RawStmt(text))
            continue
        out.unknown.append((lineno, text))
    return out

# --- packet --------------------------------------------------------------------------

_PACKET_FIELD = re.compile(r'^(\d+)\s*(?:-\s*(\d+))?\s*:\s*"?([^"]*?)"?$')
_PACKET_TITLE = re.compile(r"^title\s+.*$")


def _parse_packet(rows, family) -> ParseOutcome:
    out = ParseOutcome()
    next_bit = 0
    for lineno, text in rows:
        if _PACKET_TITLE.match(text):
            out.statements.append(RawStmt(text))
            continue
        m = _PACKET_FIELD.match(text)
        if m:
            start = int(m.group(1))
            end = int(m.group(2)) if m.group(2) is not None else start
            name = m.group(3).strip()
            if end < start:
                out.issues.append(ValidationIssue(lineno, f"field range {start}-{end} is reversed"))
            if start != next_bit:
                out.issues.append(
                    ValidationIssue(
                        lineno, f"field starts at bit {start}, expected {next_bit} (must tile from 0)"
                    )
                )
            next_bit = max(next_bit, end + 1)
            out.statements.append(FieldStmt(name or f"bit{start}", start, end))
            continue
        out.unknown.append((lineno, text))
    return out


_PARSERS = {
    DiagramFamily.BLOCK: _parse_block,
    DiagramFamily.C4: _parse_c4,
    DiagramFamily.CLASS: _parse_class,
    DiagramFamily.FLOWCHART: _parse_graphlike,
    DiagramFamily.GRAPH: _parse_graphlike,
    DiagramFamily.PACKET: _parse_packet,
    DiagramFamily.SEQUENCE: _parse_sequence,
    DiagramFamily.STATE: _parse_state,
}


def run_parser(source: str):
    """Internal: (family|None, header, header_line, ParseOutcome)."""
    family, header, header_line, rows = detect_family(source)
    if family is None:
        return None, header, header_line, ParseOutcome()
    return family, header, header_line, _PARSERS[family](rows, family)


def parse_doc(source: str) -> ParseResult:
    """Best-effort statement parse; unknown lines are skipped and reported."""
    family, header, header_line, outcome = run_parser(source)
    if family is None:
        raise FamilyDetectionError(
            f"no diagram header directive found (line {header_line}: {header!r})"
        )
    doc = MermaidDoc(family, header, outcome.statements)
    return ParseResult(doc, outcome.unknown)


def parse(source: str, lower: bool = True) -> StructuralSummary:
    """Extract the structural summary of Mermaid source text."""
    return summary_of_doc(parse_doc(source).doc, lower)
