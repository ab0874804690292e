import json
import random

import pytest

from diaforge.errors import ConfigError
from diaforge.genspec import (
    FORCED_LABEL_FAMILIES,
    MAX_FIELD_BITS,
    SELF_LOOP_FAMILIES,
    DiagramFamily,
    DifficultyProfile,
    Level,
    check_spec,
    load_profiles,
    sample_spec,
)

BLOCK = DiagramFamily.BLOCK
C4 = DiagramFamily.C4
CLASS = DiagramFamily.CLASS
PACKET = DiagramFamily.PACKET
SEQUENCE = DiagramFamily.SEQUENCE
STATE = DiagramFamily.STATE


def test_default_profile_table_spot_values(profiles):
    assert profiles[(BLOCK, Level.EASY)].block_range == (2, 3)
    assert profiles[(BLOCK, Level.EASY)].edge_range == (1, 1)
    assert profiles[(CLASS, Level.HARD)].block_range == (6, 6)
    assert profiles[(CLASS, Level.HARD)].edge_range == (5, 5)
    assert profiles[(PACKET, Level.EASY)].header_range == (2, 3)
    assert profiles[(PACKET, Level.HARD)].header_range == (6, 9)
    assert profiles[(C4, Level.EASY)].label_probability == 1.0
    assert profiles[(SEQUENCE, Level.MEDIUM)].label_probability == 1.0


def test_every_cell_stays_within_profile_ranges(bank, profiles):
    for family in DiagramFamily:
        for level in Level:
            profile = profiles[(family, level)]
            for i in range(60):
                spec = sample_spec(family, level, profile, bank,
                                   random.Random(i * 31 + 1))
                check_spec(spec, profile)


def test_forced_label_families_always_label_edges(bank, profiles):
    for family in FORCED_LABEL_FAMILIES:
        for i in range(40):
            spec = sample_spec(family, Level.MEDIUM,
                               profiles[(family, Level.MEDIUM)], bank,
                               random.Random(i))
            assert all(e.label for e in spec.edges), family


def test_self_loops_confined_to_state_diagrams(bank, profiles):
    assert SELF_LOOP_FAMILIES == {STATE}
    for family in DiagramFamily:
        for i in range(60):
            spec = sample_spec(family, Level.HARD,
                               profiles[(family, Level.HARD)], bank,
                               random.Random(i + 7))
            loops = [e for e in spec.edges if e.src == e.dst]
            if family is not STATE:
                assert not loops, family


def test_no_duplicate_edge_pairs(bank, profiles):
    for family in DiagramFamily:
        for i in range(40):
            spec = sample_spec(family, Level.MEDIUM,
                               profiles[(family, Level.MEDIUM)], bank,
                               random.Random(1000 + i))
            pairs = [(e.src, e.dst) for e in spec.edges]
            assert len(pairs) == len(set(pairs)), family


def test_packet_fields_fit_word_budget(bank, profiles):
    for i in range(60):
        spec = sample_spec(PACKET, Level.HARD, profiles[(PACKET, Level.HARD)],
                           bank, random.Random(i))
        for comp in spec.components:
            assert 1 <= comp.width <= MAX_FIELD_BITS


def test_sampling_is_deterministic(make_spec):
    a = make_spec(DiagramFamily.GRAPH, Level.MEDIUM, seed=42)
    b = make_spec(DiagramFamily.GRAPH, Level.MEDIUM, seed=42)
    assert a == b


def test_profile_validation_rejects_bad_ranges():
    with pytest.raises(ConfigError):
        DifficultyProfile(edge_range=(3, 1), block_range=(1, 2)).validate()
    with pytest.raises(ConfigError):
        DifficultyProfile(edge_range=(1, 2), block_range=(1, 2),
                          label_probability=1.5).validate()


def test_load_profiles_overrides_single_cell(tmp_path, bank):
    path = tmp_path / "profiles.json"
    path.write_text(json.dumps({
        "graph.easy": {"block_range": [9, 9], "edge_range": [2, 2]},
    }))
    profiles = load_profiles(path)
    assert profiles[(DiagramFamily.GRAPH, Level.EASY)].block_range == (9, 9)
    # untouched cells keep their defaults
    assert profiles[(DiagramFamily.GRAPH, Level.MEDIUM)].block_range == (2, 8)
    spec = sample_spec(DiagramFamily.GRAPH, Level.EASY,
                       profiles[(DiagramFamily.GRAPH, Level.EASY)], bank,
                       random.Random(0))
    assert len(spec.components) == 9
    assert len(spec.edges) == 2

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nosuch.easy": {}}))
    with pytest.raises(ConfigError):
        load_profiles(bad)
