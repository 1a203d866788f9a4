"""Fact tuples and fact sets.

A fact tuple is one atomic claim about the reviewed item: a subject (the
item or one of its features) plus a one-word-ish description of it. A fact
set is an ordered multiset of tuples together with the index of the source
document each tuple came from. Duplicates are kept on purpose: how often a
claim repeats across reviews is part of the signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from .errors import InvalidInputError

# Characters stripped from the ends of subject/description fields.
_QUOTE_CHARS = "\"'`“”‘’"
_STRIP_CHARS = _QUOTE_CHARS + " \t\r\n"


def canonical_field(value: str) -> str:
    """Trim surrounding whitespace/quotes and lower-case a tuple field."""
    return value.strip(_STRIP_CHARS).casefold()


@dataclass(frozen=True)
class FactTuple:
    """One (subject, description) claim, canonicalized on construction."""

    subject: str
    description: str

    def __post_init__(self) -> None:
        subject = canonical_field(self.subject)
        description = canonical_field(self.description)
        if not subject or not description:
            raise InvalidInputError(
                f"fact tuple fields must be non-empty after trimming: "
                f"({self.subject!r}, {self.description!r})"
            )
        object.__setattr__(self, "subject", subject)
        object.__setattr__(self, "description", description)


@dataclass(frozen=True)
class FactSet:
    """Ordered multiset of fact tuples with per-tuple source indices."""

    tuples: tuple[FactTuple, ...] = ()
    provenance: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tuples", tuple(self.tuples))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if len(self.tuples) != len(self.provenance):
            raise InvalidInputError(
                f"{len(self.tuples)} tuples but {len(self.provenance)} provenance entries"
            )
        for source in self.provenance:
            if not isinstance(source, int) or source < 0:
                raise InvalidInputError(f"provenance index must be a non-negative int, got {source!r}")

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[FactTuple]:
        return iter(self.tuples)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], source: int = 0) -> "FactSet":
        """Build a single-source fact set from (subject, description) pairs."""
        tuples = tuple(FactTuple(s, d) for s, d in pairs)
        return cls(tuples=tuples, provenance=(source,) * len(tuples))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "tuples": [
                {"subject": t.subject, "description": t.description, "source": src}
                for t, src in zip(self.tuples, self.provenance)
            ]
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "FactSet":
        try:
            entries = data["tuples"]
            tuples = tuple(FactTuple(e["subject"], e["description"]) for e in entries)
            provenance = tuple(int(e["source"]) for e in entries)
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed fact-set document: {exc}") from exc
        return cls(tuples=tuples, provenance=provenance)
