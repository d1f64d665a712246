"""Rhetorical relations and the cue-phrase lexicon."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence


class RelationKind(str, enum.Enum):
    NONE = "NONE"
    CONTRAST = "CONTRAST"
    CAUSE = "CAUSE"
    RESULT = "RESULT"
    CONDITION = "CONDITION"
    TEMPORAL = "TEMPORAL"
    ELABORATION = "ELABORATION"
    LIST = "LIST"
    BACKGROUND = "BACKGROUND"
    UNKNOWN = "UNKNOWN"


class PartRole(str, enum.Enum):
    """Syntactic role of one rule output relative to the matched structure."""

    SUPERORDINATE = "superordinate"
    SUBORDINATE = "subordinate"
    COORDINATE = "coordinate"


@dataclass(frozen=True)
class RhetoricalRelation:
    kind: RelationKind
    cue: Optional[str] = None

    def to_json(self) -> dict:
        return {"relation": self.kind.value, "cue": self.cue}


NO_RELATION = RhetoricalRelation(RelationKind.NONE)


@dataclass(frozen=True)
class CueEntry:
    words: tuple[str, ...]
    kind: RelationKind
    position: Optional[str] = None  # restrict to "leading" / "medial"


class CueLexicon:
    """Cue phrases mapped to relation kinds, looked up by longest prefix match.

    File format: ``cue words<TAB>KIND[<TAB>leading|medial]``; ``#`` starts
    a comment line.
    """

    def __init__(self, entries: Sequence[CueEntry]):
        self.entries = tuple(sorted(entries, key=lambda e: (-len(e.words), e.words)))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "CueLexicon":
        if path is None:
            text = resources.files("coremsg.data").joinpath("cues.tsv").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        entries = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) not in (2, 3):
                raise ValueError(f"cue lexicon line {lineno}: expected 2 or 3 tab-separated columns")
            position = cols[2].strip() if len(cols) == 3 else None
            if position not in (None, "leading", "medial"):
                raise ValueError(f"cue lexicon line {lineno}: bad position {position!r}")
            entries.append(CueEntry(tuple(cols[0].lower().split()), RelationKind(cols[1].strip()), position))
        return cls(entries)

    def lookup(self, tokens: Sequence[str], position: str = "medial") -> Optional[CueEntry]:
        words = tuple(t.lower() for t in tokens)
        for entry in self.entries:
            if entry.position is not None and entry.position != position:
                continue
            if words[: len(entry.words)] == entry.words:
                return entry
        return None

    def __contains__(self, phrase: str) -> bool:
        words = tuple(phrase.lower().split())
        return any(e.words == words for e in self.entries)


def classify_relation(
    cue_tokens: Sequence[str],
    position: str,
    role: PartRole,
    lexicon: CueLexicon,
) -> RhetoricalRelation:
    """Infer the relation a rule output holds to the proposition it came from.

    An unmatched or empty cue falls back to ELABORATION for subordinate
    parts and LIST for coordinate parts.  Superordinate parts carry no
    relation of their own.
    """
    if role is PartRole.SUPERORDINATE:
        return NO_RELATION
    entry = lexicon.lookup(cue_tokens, position) if cue_tokens else None
    if entry is not None:
        return RhetoricalRelation(entry.kind, " ".join(entry.words))
    if role is PartRole.SUBORDINATE:
        return RhetoricalRelation(RelationKind.ELABORATION)
    if role is PartRole.COORDINATE:
        return RhetoricalRelation(RelationKind.LIST)
    return RhetoricalRelation(RelationKind.UNKNOWN)
