"""Mermaid subset toolkit: emit, parse, summarize, validate."""
from .emit import CODE_LENGTH_RANGES, doc_from_spec, emit, to_source
from .model import (
    ClassStmt,
    EdgeRef,
    EdgeStmt,
    FieldStmt,
    MemberStmt,
    MermaidDoc,
    NodeStmt,
    RawStmt,
    StructuralSummary,
    canonical_name,
    member_signature,
    summary_of_doc,
)
from .parse import ParseResult, ValidationIssue, parse, parse_doc
from .validation import ValidationReport, validate

from ..genspec import DiagramSpec


def summarize(spec: DiagramSpec, lower: bool = True) -> StructuralSummary:
    """Project a spec onto the summary its emission parses back to."""
    return summary_of_doc(doc_from_spec(spec), lower)


__all__ = [
    "CODE_LENGTH_RANGES",
    "ClassStmt",
    "EdgeRef",
    "EdgeStmt",
    "FieldStmt",
    "MemberStmt",
    "MermaidDoc",
    "NodeStmt",
    "ParseResult",
    "RawStmt",
    "StructuralSummary",
    "ValidationIssue",
    "ValidationReport",
    "canonical_name",
    "doc_from_spec",
    "emit",
    "member_signature",
    "parse",
    "parse_doc",
    "summarize",
    "summary_of_doc",
    "to_source",
    "validate",
]
