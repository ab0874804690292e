"""Hermetic grammar-subset validation, with an optional external compiler."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..genspec import DiagramFamily
from .parse import ValidationIssue, run_parser


@dataclass
class ValidationReport:
    ok: bool
    family: DiagramFamily | None
    issues: list[ValidationIssue] = field(default_factory=list)


def validate(source: str, external_cli: str | None = None) -> ValidationReport:
    """Check that source conforms to the supported grammar subset.

    Every non-blank, non-comment line must match a production of the detected
    family; semantic breaks (non-contiguous packet bits, undeclared C4
    relation endpoints, unclosed class bodies) are also errors. When
    external_cli is given, the verdict is the external compiler's exit
    status instead; the hermetic check is not run.
    """
    if external_cli:
        from ..compiler import compile_check

        ok, detail = compile_check(source, external_cli)
        family, _, _, _ = run_parser(source) if ok else (None, None, None, None)
        issues = [] if ok else [ValidationIssue(0, f"external compiler rejected source: {detail}")]
        return ValidationReport(ok, family, issues)

    family, header, header_line, outcome = run_parser(source)
    if family is None:
        what = f"line {header_line}: {header!r}" if header else "empty source"
        return ValidationReport(False, None, [ValidationIssue(header_line, f"no diagram header directive ({what})")])
    issues = list(outcome.issues)
    issues.extend(
        ValidationIssue(lineno, f"unrecognized {family.value} statement: {text!r}")
        for lineno, text in outcome.unknown
    )
    issues.sort(key=lambda i: i.line)
    return ValidationReport(not issues, family, issues)
