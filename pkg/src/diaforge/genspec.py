"""Random diagram structure sampling under per-family difficulty profiles."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import ConfigError
from .keywords import KeywordBank, sample_discipline, sample_keywords


class DiagramFamily(str, Enum):
    BLOCK = "block"
    C4 = "c4"
    CLASS = "class"
    FLOWCHART = "flowchart"
    GRAPH = "graph"
    PACKET = "packet"
    SEQUENCE = "sequence"
    STATE = "state"


class Level(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


FAMILIES = tuple(DiagramFamily)
LEVELS = tuple(Level)

# Only state diagrams may connect a component to itself (self transitions).
SELF_LOOP_FAMILIES = frozenset({DiagramFamily.STATE})

# Families whose edge labels are not optional: C4 relations and sequence
# messages are meaningless without text, so label_probability is pinned to 1.
FORCED_LABEL_FAMILIES = frozenset({DiagramFamily.C4, DiagramFamily.SEQUENCE})

MAX_FIELD_BITS = 32


@dataclass(frozen=True)
class DifficultyProfile:
    """Inclusive count ranges that a sampled spec must respect."""

    edge_range: tuple[int, int]
    block_range: tuple[int, int]
    attribute_range: tuple[int, int] | None = None  # class family only
    header_range: tuple[int, int] | None = None     # packet family only
    label_probability: float = 0.5

    def validate(self) -> None:
        for name in ("edge_range", "block_range", "attribute_range", "header_range"):
            rng = getattr(self, name)
            if rng is None:
                continue
            lo, hi = rng
            if lo < 0 or hi < lo:
                raise ConfigError(f"bad {name} {rng!r}: need 0 <= min <= max")
        if not 0.0 <= self.label_probability <= 1.0:
            raise ConfigError(f"label_probability {self.label_probability} outside [0, 1]")


def _p(edges, blocks, attrs=None, headers=None, label=0.5):
    return DifficultyProfile(edges, blocks, attrs, headers, label)


def default_profiles() -> dict[tuple[DiagramFamily, Level], DifficultyProfile]:
    """Per-(family, level) count ranges calibrated to the released corpus."""
    F, L = DiagramFamily, Level
    return {
        (F.BLOCK, L.EASY): _p((1, 1), (2, 3)),
        (F.BLOCK, L.MEDIUM): _p((1, 6), (4, 7)),
        (F.BLOCK, L.HARD): _p((1, 9), (4, 9)),
        (F.C4, L.EASY): _p((1, 1), (1, 2), label=1.0),
        (F.C4, L.MEDIUM): _p((4, 6), (3, 6), label=1.0),
        (F.C4, L.HARD): _p((4, 6), (3, 6), label=1.0),
        (F.CLASS, L.EASY): _p((1, 1), (2, 2), attrs=(4, 10)),
        (F.CLASS, L.MEDIUM): _p((3, 5), (4, 6), attrs=(9, 33)),
        (F.CLASS, L.HARD): _p((5, 5), (6, 6), attrs=(14, 34)),
        (F.FLOWCHART, L.EASY): _p((3, 4), (4, 5)),
        (F.FLOWCHART, L.MEDIUM): _p((4, 9), (5, 7)),
        (F.FLOWCHART, L.HARD): _p((4, 9), (5, 7)),
        (F.GRAPH, L.EASY): _p((1, 2), (3, 5)),
        (F.GRAPH, L.MEDIUM): _p((3, 5), (2, 8)),
        (F.GRAPH, L.HARD): _p((3, 7), (2, 8)),
        (F.PACKET, L.EASY): _p((0, 0), (0, 0), headers=(2, 3)),
        (F.PACKET, L.MEDIUM): _p((0, 0), (0, 0), headers=(3, 8)),
        (F.PACKET, L.HARD): _p((0, 0), (0, 0), headers=(6, 9)),
        (F.SEQUENCE, L.EASY): _p((1, 4), (2, 4), label=1.0),
        (F.SEQUENCE, L.MEDIUM): _p((3, 4), (2, 4), label=1.0),
        (F.SEQUENCE, L.HARD): _p((5, 8), (6, 9), label=1.0),
        (F.STATE, L.EASY): _p((1, 4), (2, 8)),
        (F.STATE, L.MEDIUM): _p((5, 12), (5, 19)),
        (F.STATE, L.HARD): _p((5, 8), (3, 13)),
    }


def load_profiles(path: str | Path | None = None) -> dict[tuple[DiagramFamily, Level], DifficultyProfile]:
    """Defaults, optionally overridden by a JSON file keyed "family.level".

    Override entries may set any subset of: edge_range, block_range,
    attribute_range, header_range, label_probability.
    """
    profiles = default_profiles()
    if path is None:
        return profiles
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"profiles file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("profiles file must be a JSON object keyed family.level")
    for key, fields in data.items():
        try:
            fam_name, lvl_name = key.split(".")
            cell = (DiagramFamily(fam_name), Level(lvl_name))
        except ValueError:
            raise ConfigError(f"bad profile key {key!r}; expected family.level") from None
        if not isinstance(fields, dict):
            raise ConfigError(f"profile override {key!r} must be an object")
        base = profiles[cell]
        kwargs = {}
        for name, value in fields.items():
            if name in ("edge_range", "block_range", "attribute_range", "header_range"):
                if not (isinstance(value, list) and len(value) == 2):
                    raise ConfigError(f"{key}.{name} must be a [min, max] pair")
                kwargs[name] = (int(value[0]), int(value[1]))
            elif name == "label_probability":
                kwargs[name] = float(value)
            else:
                raise ConfigError(f"unknown profile field {key}.{name}")
        prof = replace(base, **kwargs)
        prof.validate()
        profiles[cell] = prof
    return profiles


@dataclass(frozen=True)
class Member:
    """One class member: attribute or method."""

    visibility: str  # one of + - #
    name: str        # camelCase identifier
    is_method: bool


@dataclass(frozen=True)
class Component:
    id: str
    name: str
    kind: str
    members: tuple[Member, ...] = ()  # class family
    width: int = 0                    # packet family: field width in bits


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    label: str | None
    arrow: str


@dataclass
class DiagramSpec:
    family: DiagramFamily
    level: Level
    discipline: str
    components: list[Component]
    edges: list[Edge]
    seed: int | None = None


VISIBILITIES = ("+", "-", "#")

_FLOW_KINDS = ("process", "decision", "terminal")
_C4_KINDS = ("person", "system", "system_ext")

_ARROWS = {
    DiagramFamily.BLOCK: ("-->",),
    DiagramFamily.C4: ("Rel",),
    DiagramFamily.CLASS: ("-->", "--|>", "--*", "--o"),
    DiagramFamily.FLOWCHART: ("-->",),
    DiagramFamily.GRAPH: ("-->", "---"),
    DiagramFamily.SEQUENCE: ("->>", "-->>"),
    DiagramFamily.STATE: ("-->",),
}


def camel_case(phrase: str, upper_first: bool) -> str:
    words = phrase.split()
    head = words[0].capitalize() if upper_first else words[0].lower()
    return head + "".join(w.capitalize() for w in words[1:])


def _pair_capacity(blocks: int, self_loops: bool) -> int:
    return blocks * blocks if self_loops else blocks * (blocks - 1)


def sample_spec(
    family: DiagramFamily,
    level: Level,
    profile: DifficultyProfile,
    bank: KeywordBank,
    rng: random.Random,
    seed: int | None = None,
) -> DiagramSpec:
    """Draw one diagram structure uniformly within the profile's ranges.

    Draw order is fixed (discipline, counts, names, kinds, members, edges) so
    a seeded rng reproduces the result exactly. When the drawn block count
    cannot host the drawn edge count without duplicate (src, dst) pairs or
    forbidden self loops, the block count is raised within its range; the
    edge count is trimmed only if even the range maximum cannot host it.
    """
    profile.validate()
    discipline = sample_discipline(bank, rng)

    if family is DiagramFamily.PACKET:
        if profile.header_range is None:
            raise ConfigError("packet profile needs header_range")
        n_fields = rng.randint(*profile.header_range)
        names = sample_keywords(bank, discipline, n_fields, rng)
        components = [
            Component(id=f"N{i + 1}", name=name, kind="field", width=rng.randint(1, MAX_FIELD_BITS))
            for i, name in enumerate(names)
        ]
        return DiagramSpec(family, level, discipline, components, [], seed)

    self_loops = family in SELF_LOOP_FAMILIES
    n_edges = rng.randint(*profile.edge_range)
    n_blocks = rng.randint(*profile.block_range)
    while _pair_capacity(n_blocks, self_loops) < n_edges and n_blocks < profile.block_range[1]:
        n_blocks += 1
    n_edges = min(n_edges, _pair_capacity(n_blocks, self_loops))

    names = sample_keywords(bank, discipline, n_blocks, rng)
    components: list[Component] = []
    for i, name in enumerate(names):
        cid = f"N{i + 1}"
        if family is DiagramFamily.CLASS:
            components.append(Component(id=cid, name=camel_case(name, upper_first=True), kind="class"))
        elif family is DiagramFamily.FLOWCHART:
            components.append(Component(id=cid, name=name, kind=_FLOW_KINDS[rng.randrange(3)]))
        elif family is DiagramFamily.C4:
            components.append(Component(id=cid, name=name, kind=_C4_KINDS[rng.randrange(3)]))
        else:
            kind = {
                DiagramFamily.BLOCK: "block",
                DiagramFamily.GRAPH: "node",
                DiagramFamily.SEQUENCE: "participant",
                DiagramFamily.STATE: "state",
            }[family]
            components.append(Component(id=cid, name=name, kind=kind))

    if family is DiagramFamily.CLASS:
        if profile.attribute_range is None:
            raise ConfigError("class profile needs attribute_range")
        n_members = rng.randint(*profile.attribute_range)
        member_names = sample_keywords(bank, discipline, n_members, rng)
        grouped: dict[int, list[Member]] = {i: [] for i in range(n_blocks)}
        for name in member_names:
            owner = rng.randrange(n_blocks)
            grouped[owner].append(
                Member(
                    visibility=VISIBILITIES[rng.randrange(3)],
                    name=camel_case(name, upper_first=False),
                    is_method=rng.random() < 0.5,
                )
            )
        components = [replace(c, members=tuple(grouped[i])) for i, c in enumerate(components)]

    label_p = 1.0 if family in FORCED_LABEL_FAMILIES else profile.label_probability
    pairs = [
        (a, b)
        for a in range(n_blocks)
        for b in range(n_blocks)
        if self_loops or a != b
    ]
    chosen = rng.sample(pairs, n_edges)
    arrows = _ARROWS[family]
    phrases = bank.phrases(discipline)
    edges = []
    for a, b in chosen:
        arrow = arrows[rng.randrange(len(arrows))]
        label = phrases[rng.randrange(len(phrases))] if rng.random() < label_p else None
        edges.append(Edge(src=f"N{a + 1}", dst=f"N{b + 1}", label=label, arrow=arrow))
    return DiagramSpec(family, level, discipline, components, edges, seed)


def check_spec(spec: DiagramSpec, profile: DifficultyProfile) -> None:
    """Raise AssertionError when a spec breaks its structural invariants."""
    ids = [c.id for c in spec.components]
    assert len(ids) == len(set(ids)), "duplicate component ids"
    if spec.family is DiagramFamily.PACKET:
        lo, hi = profile.header_range
        assert lo <= len(spec.components) <= hi, "header count outside range"
        assert not spec.edges, "packet specs carry no edges"
        assert all(1 <= c.width <= MAX_FIELD_BITS for c in spec.components), "bad field width"
        return
    lo, hi = profile.block_range
    n_blocks = len(spec.components)
    assert lo <= n_blocks <= hi, "block count outside range"
    e_lo, e_hi = profile.edge_range
    capacity = _pair_capacity(n_blocks, spec.family in SELF_LOOP_FAMILIES)
    n_edges = len(spec.edges)
    assert n_edges <= e_hi, "edge count above range"
    # The sampler may trim edges below range minimum only when the whole
    # block range cannot host that many distinct pairs.
    assert n_edges >= e_lo or n_edges == capacity, "edge count below range"
    known = set(ids)
    seen_pairs = set()
    for e in spec.edges:
        assert e.src in known and e.dst in known, "edge endpoint missing"
        if spec.family not in SELF_LOOP_FAMILIES:
            assert e.src != e.dst, "self loop outside state family"
        assert (e.src, e.dst) not in seen_pairs, "duplicate (src, dst) pair"
        seen_pairs.add((e.src, e.dst))
    if spec.family in FORCED_LABEL_FAMILIES:
        assert all(e.label is not None for e in spec.edges), "label required"
    if spec.family is DiagramFamily.CLASS and profile.attribute_range is not None:
        lo, hi = profile.attribute_range
        total = sum(len(c.members) for c in spec.components)
        assert lo <= total <= hi, "member count outside range"
