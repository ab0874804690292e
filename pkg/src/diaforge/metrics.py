"""Structural and text scoring for model-generated diagram code.

Structural scoring mirrors a grading protocol that only inspects output
which compiles: a prediction that fails validation gets no category
scores, only the failed-compilation mark.  Compiled predictions are
parsed and compared to the gold summary per category:

  CBl  block identity (canonical names; packet: field names)
  CEd  edge endpoint pairs
  CLE  edges including label text (sequence messages score here)
  CAM  class member signatures within name-matched classes
  CBi  packet field name plus exact bit interval

Matching is maximum-cardinality greedy on exact keys; edges from
undirected arrows may match with flipped orientation.

The text metrics are self-contained reimplementations with documented
behavior: BLEU-4 with uniform weights, brevity penalty and add-one
smoothing on zero counts over whitespace-and-punctuation tokens; chrF
with character n-grams of order 1..6 and beta = 2 on a whitespace-free
stream; ROUGE-L precision/recall/F1 from longest common subsequence.
Scores are self-consistent rather than byte-matched to external tools.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .genspec import DiagramFamily
from .mermaid import parse, validate
from .mermaid.model import StructuralSummary

CBL, CED, CLE, CAM, CBI = "CBl", "CEd", "CLE", "CAM", "CBi"

# Categories that apply to each family.  Sequence has no bare edge
# category: every message carries its text, so only CLE applies.  C4
# relations are matched without their text, so CLE is absent.
FAMILY_CATEGORIES = {
    DiagramFamily.BLOCK: (CBL, CED, CLE),
    DiagramFamily.C4: (CBL, CED),
    DiagramFamily.CLASS: (CBL, CED, CLE, CAM),
    DiagramFamily.FLOWCHART: (CBL, CED, CLE),
    DiagramFamily.GRAPH: (CBL, CED, CLE),
    DiagramFamily.PACKET: (CBL, CBI),
    DiagramFamily.SEQUENCE: (CBL, CLE),
    DiagramFamily.STATE: (CBL, CED, CLE),
}


@dataclass(frozen=True)
class CategoryScore:
    precision: float
    recall: float
    f1: float


@dataclass
class ScoreReport:
    family: DiagramFamily
    compiled: bool
    wrong_family: bool = False
    predicted_family: DiagramFamily | None = None
    categories: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "family": self.family.value,
            "compiled": self.compiled,
            "wrong_family": self.wrong_family,
            "predicted_family": self.predicted_family.value if self.predicted_family else None,
            "categories": {
                name: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
                for name, s in self.categories.items()
            },
        }


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _prf(matched: int, n_pred: int, n_gold: int) -> CategoryScore:
    p = matched / n_pred if n_pred else (1.0 if n_gold == 0 else 0.0)
    r = matched / n_gold if n_gold else (1.0 if n_pred == 0 else 0.0)
    return CategoryScore(p, r, _f1(p, r))


def _edge_key(edge, with_label: bool, flip: bool = False):
    src, dst = (edge.dst, edge.src) if flip else (edge.src, edge.dst)
    return (src, dst, edge.label) if with_label else (src, dst)


def _match_edges(pred, gold, with_label: bool) -> int:
    """Greedy maximum matching on exact keys, then flipped undirected keys."""
    remaining = list(gold)
    matched = 0
    second_pass = []
    for p in pred:
        key = _edge_key(p, with_label)
        for i, g in enumerate(remaining):
            if key == _edge_key(g, with_label):
                matched += 1
                remaining.pop(i)
                break
        else:
            second_pass.append(p)
    for p in second_pass:
        key = _edge_key(p, with_label, flip=True)
        for i, g in enumerate(remaining):
            if (p.undirected or g.undirected) and key == _edge_key(g, with_label):
                matched += 1
                remaining.pop(i)
                break
    return matched


def _member_sets(summary: StructuralSummary) -> dict:
    return {cls: set(sigs) for cls, sigs in summary.attributes.items()}


def score_structural(source: str, gold: StructuralSummary,
                     case_sensitive: bool = False,
                     external_cli: str | None = None) -> ScoreReport:
    """Score one predicted Mermaid source against a gold summary.

    A prediction that fails validation reports compiled=False and no
    categories.  A compiled prediction of the wrong family zeroes every
    category applicable to the gold family.
    """
    report = validate(source, external_cli=external_cli)
    if not report.ok:
        return ScoreReport(family=gold.family, compiled=False,
                           predicted_family=report.family)

    pred = parse(source, lower=not case_sensitive)
    applicable = FAMILY_CATEGORIES[gold.family]
    if pred.family != gold.family:
        zeros = {name: CategoryScore(0.0, 0.0, 0.0) for name in applicable}
        return ScoreReport(family=gold.family, compiled=True, wrong_family=True,
                           predicted_family=pred.family, categories=zeros)

    scores = {}
    pred_blocks, gold_blocks = set(pred.blocks), set(gold.blocks)
    scores[CBL] = _prf(len(pred_blocks & gold_blocks), len(pred_blocks), len(gold_blocks))
    if CED in applicable:
        scores[CED] = _prf(_match_edges(pred.edges, gold.edges, with_label=False),
                           len(pred.edges), len(gold.edges))
    if CLE in applicable:
        scores[CLE] = _prf(_match_edges(pred.edges, gold.edges, with_label=True),
                           len(pred.edges), len(gold.edges))
    if CAM in applicable:
        pred_members = _member_sets(pred)
        gold_members = _member_sets(gold)
        matched = sum(
            len(pred_members[cls] & gold_members[cls])
            for cls in pred_members.keys() & gold_members.keys()
        )
        scores[CAM] = _prf(matched,
                           sum(len(s) for s in pred_members.values()),
                           sum(len(s) for s in gold_members.values()))
    if CBI in applicable:
        matched = len(set(pred.bits.items()) & set(gold.bits.items()))
        scores[CBI] = _prf(matched, len(pred.bits), len(gold.bits))
    return ScoreReport(family=gold.family, compiled=True,
                       predicted_family=pred.family, categories=scores)


def aggregate(reports) -> dict:
    """Mean category scores and failed-compilation rate, per family and overall."""

    def bucket(rows):
        out = {
            "n": len(rows),
            "compile_error_rate": (
                sum(1 for r in rows if not r.compiled) / len(rows) if rows else 0.0),
            "categories": {},
        }
        for name in (CBL, CED, CLE, CAM, CBI):
            scored = [r.categories[name] for r in rows if name in r.categories]
            if scored:
                out["categories"][name] = {
                    "precision": sum(s.precision for s in scored) / len(scored),
                    "recall": sum(s.recall for s in scored) / len(scored),
                    "f1": sum(s.f1 for s in scored) / len(scored),
                }
        return out

    result = {"overall": bucket(list(reports))}
    for family in DiagramFamily:
        rows = [r for r in reports if r.family == family]
        if rows:
            result[family.value] = bucket(rows)
    return result


# --- text metrics ---------------------------------------------------------

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def _tokens(text: str) -> list:
    return _TOKEN_RE.findall(text)


def _ngrams(items, n: int) -> Counter:
    return Counter(tuple(items[i:i + n]) for i in range(len(items) - n + 1))


def bleu(predicted: str, reference: str) -> float:
    """BLEU-4 in [0, 1]; see the module docstring for the exact variant."""
    pred = _tokens(predicted)
    ref = _tokens(reference)
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    max_n = min(4, len(pred), len(ref))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        pred_counts = _ngrams(pred, n)
        ref_counts = _ngrams(ref, n)
        clipped = sum(min(c, ref_counts[g]) for g, c in pred_counts.items())
        total = sum(pred_counts.values())
        if clipped == 0:
            clipped, total = clipped + 1, total + 1
        log_sum += math.log(clipped / total) / max_n
    brevity = 1.0 if len(pred) > len(ref) else math.exp(1 - len(ref) / max(len(pred), 1))
    return brevity * math.exp(log_sum)


def chrf(predicted: str, reference: str, beta: float = 2.0, max_order: int = 6) -> float:
    """Character n-gram F-score in [0, 100] over whitespace-free streams."""
    pred = "".join(predicted.split())
    ref = "".join(reference.split())
    if not pred and not ref:
        return 100.0
    if not pred or not ref:
        return 0.0
    precisions, recalls = [], []
    for n in range(1, max_order + 1):
        pred_counts = _ngrams(pred, n)
        ref_counts = _ngrams(ref, n)
        total_pred = sum(pred_counts.values())
        total_ref = sum(ref_counts.values())
        if total_pred == 0 and total_ref == 0:
            continue
        overlap = sum(min(c, ref_counts[g]) for g, c in pred_counts.items())
        precisions.append(overlap / total_pred if total_pred else 0.0)
        recalls.append(overlap / total_ref if total_ref else 0.0)
    avg_p = sum(precisions) / len(precisions)
    avg_r = sum(recalls) / len(recalls)
    if avg_p + avg_r == 0:
        return 0.0
    b2 = beta * beta
    return 100.0 * (1 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r)


def _lcs_length(a, b) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(predicted: str, reference: str) -> tuple:
    """ROUGE-L (precision, recall, f1) over the shared tokenizer."""
    pred = _tokens(predicted)
    ref = _tokens(reference)
    if not pred and not ref:
        return (1.0, 1.0, 1.0)
    if not pred or not ref:
        return (0.0, 0.0, 0.0)
    lcs = _lcs_length(pred, ref)
    p = lcs / len(pred)
    r = lcs / len(ref)
    return (p, r, _f1(p, r))
