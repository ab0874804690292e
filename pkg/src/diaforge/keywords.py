"""Discipline-keyed phrase pools used to name diagram components and edge labels."""
from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import CapacityError, ConfigError

log = logging.getLogger(__name__)

# Substrings that collide with Mermaid structure; a phrase containing any of
# them could change the meaning of an emitted line.
RESERVED = ('"', '[', ']', '{', '}', '(', ')', ':', ';', '\n', '-->')

MIN_PHRASES = 30
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class KeywordBank:
    """Immutable mapping of discipline name -> unique phrase tuple."""

    disciplines: dict[str, tuple[str, ...]]

    def phrases(self, discipline: str) -> tuple[str, ...]:
        try:
            return self.disciplines[discipline]
        except KeyError:
            raise ConfigError(f"unknown discipline {discipline!r}") from None

    def names(self) -> list[str]:
        return sorted(self.disciplines)


def _clean(phrase: str) -> str | None:
    phrase = _WS.sub(" ", phrase.strip())
    if not phrase:
        return None
    if any(tok in phrase for tok in RESERVED):
        return None
    if not 1 <= len(phrase.split()) <= 4:
        return None
    return phrase


def load_bank(path: str | Path | None = None) -> KeywordBank:
    """Load a bank from JSON ({discipline: [phrase, ...]}); default is packaged.

    Phrases are sanitized on load: entries containing Mermaid-reserved
    delimiters or more than four words are dropped with a warning. A
    discipline must keep at least MIN_PHRASES unique phrases afterwards.
    """
    if path is None:
        raw = resources.files("diaforge.data").joinpath("keyword_bank.json").read_text()
    else:
        raw = Path(path).read_text()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"keyword bank is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or not data:
        raise ConfigError("keyword bank must be a non-empty JSON object")

    disciplines: dict[str, tuple[str, ...]] = {}
    for name, phrases in data.items():
        if not isinstance(phrases, list):
            raise ConfigError(f"discipline {name!r} must map to a list of phrases")
        kept: list[str] = []
        seen: set[str] = set()
        for entry in phrases:
            cleaned = _clean(str(entry))
            if cleaned is None:
                log.warning("dropping unusable phrase %r from discipline %r", entry, name)
                continue
            key = cleaned.lower()
            if key in seen:
                log.warning("dropping duplicate phrase %r from discipline %r", entry, name)
                continue
            seen.add(key)
            kept.append(cleaned)
        if len(kept) < MIN_PHRASES:
            raise ConfigError(
                f"discipline {name!r} keeps only {len(kept)} usable phrases; "
                f"need at least {MIN_PHRASES}"
            )
        disciplines[name] = tuple(kept)
    return KeywordBank(disciplines)


def sample_discipline(bank: KeywordBank, rng: random.Random) -> str:
    """Uniform draw of a discipline name."""
    names = bank.names()
    if not names:
        raise ConfigError("keyword bank has no disciplines")
    return names[rng.randrange(len(names))]


def sample_keywords(bank: KeywordBank, discipline: str, n: int, rng: random.Random) -> list[str]:
    """Draw n distinct phrases from one discipline, uniformly without replacement."""
    phrases = bank.phrases(discipline)
    if n < 0:
        raise ConfigError(f"cannot draw {n} phrases")
    if n > len(phrases):
        raise CapacityError(
            f"requested {n} phrases but discipline {discipline!r} holds {len(phrases)}"
        )
    return rng.sample(phrases, n)
