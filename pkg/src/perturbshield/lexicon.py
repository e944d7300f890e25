"""Spelling and synonym word resources.

Spell lexicon file: one ``word count`` pair per line.
Synonym lexicon file: one group per line, members separated by TAB; ``#``
starts a comment line.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)
_index_lock = threading.Lock()

__all__ = [
    "LexiconError",
    "SpellLexicon",
    "SynonymLexicon",
    "damerau_levenshtein",
    "load_spell_lexicon",
    "load_synonym_lexicon",
    "synonym_candidates",
    "write_spell_lexicon",
    "write_synonym_lexicon",
]


class LexiconError(ValueError):
    pass


def damerau_levenshtein(a: str, b: str) -> int:
    """Unrestricted Damerau-Levenshtein distance (adjacent transpositions allowed
    to be edited further)."""
    la, lb = len(a), len(b)
    inf = la + lb
    d = [[0] * (lb + 2) for _ in range(la + 2)]
    d[0][0] = inf
    for i in range(la + 1):
        d[i + 1][0] = inf
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[0][j + 1] = inf
        d[1][j + 1] = j
    last_row: dict[str, int] = {}
    for i in range(1, la + 1):
        last_match_col = 0
        for j in range(1, lb + 1):
            i1 = last_row.get(b[j - 1], 0)
            j1 = last_match_col
            if a[i - 1] == b[j - 1]:
                cost = 0
                last_match_col = j
            else:
                cost = 1
            d[i + 1][j + 1] = min(
                d[i][j] + cost,
                d[i + 1][j] + 1,
                d[i][j + 1] + 1,
                d[i1][j1] + (i - i1 - 1) + 1 + (j - j1 - 1),
            )
        last_row[a[i - 1]] = i
    return d[la + 1][lb + 1]


def _deletes(word: str, depth: int) -> set[str]:
    out = {word}
    frontier = {word}
    for _ in range(depth):
        nxt = set()
        for w in frontier:
            for i in range(len(w)):
                nxt.add(w[:i] + w[i + 1:])
        out |= nxt
        frontier = nxt
    return out


def _valid_spell_word(word: str) -> bool:
    stripped = word.replace("-", "")
    return bool(stripped) and stripped.isalpha() and word == word.lower()


@dataclass(frozen=True, eq=False)
class SpellLexicon:
    entries: Mapping[str, int]
    max_distance: int = 2
    _index: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if not self.entries:
            raise LexiconError("spell lexicon is empty")
        for w, c in self.entries.items():
            if not _valid_spell_word(w):
                raise LexiconError(f"invalid spell lexicon word {w!r}")
            if not isinstance(c, int) or c < 1:
                raise LexiconError(f"frequency for {w!r} must be a positive integer")

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def frequency(self, word: str) -> int:
        return self.entries.get(word.lower(), 0)

    def _deletion_index(self) -> dict[str, list[str]]:
        # built once, lazily; symmetric-delete candidate generation
        with _index_lock:
            if not self._index:
                index: dict[str, list[str]] = {}
                for w in sorted(self.entries):
                    for d in _deletes(w, self.max_distance):
                        index.setdefault(d, []).append(w)
                self._index.update(index)
        return self._index

    def within(self, word: str, max_distance: int | None = None) -> dict[str, int]:
        """Lexicon words within Damerau-Levenshtein ``max_distance`` of ``word``,
        mapped to their distance."""
        limit = self.max_distance if max_distance is None else max_distance
        if limit > self.max_distance:
            raise ValueError(f"index supports distances up to {self.max_distance}")
        query = word.lower()
        index = self._deletion_index()
        seen: set[str] = set()
        for d in _deletes(query, limit):
            seen.update(index.get(d, ()))
        out = {}
        for cand in seen:
            dist = damerau_levenshtein(query, cand)
            if dist <= limit:
                out[cand] = dist
        return out


@dataclass(frozen=True)
class SynonymLexicon:
    groups: tuple[tuple[str, ...], ...]
    index: Mapping[str, frozenset[int]]

    @classmethod
    def from_groups(cls, groups: Iterable[Sequence[str]]) -> "SynonymLexicon":
        kept: list[tuple[str, ...]] = []
        index: dict[str, set[int]] = {}
        for group in groups:
            members: list[str] = []
            for m in group:
                m = m.strip().lower()
                if m and m not in members:
                    members.append(m)
            if len(members) < 2:
                continue
            gid = len(kept)
            kept.append(tuple(members))
            for m in members:
                index.setdefault(m, set()).add(gid)
        return cls(tuple(kept), {w: frozenset(ids) for w, ids in index.items()})

    def __len__(self) -> int:
        return len(self.groups)


def synonym_candidates(lex: SynonymLexicon, t: str) -> set[str]:
    """Union of every group containing ``t`` (case-folded), without ``t`` itself."""
    key = t.lower()
    out: set[str] = set()
    for gid in lex.index.get(key, ()):
        out.update(lex.groups[gid])
    out.discard(key)
    return out


def load_spell_lexicon(path: "str | Path") -> SpellLexicon:
    entries: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: expected 'word count', got {line!r}")
            word, count = parts[0].lower(), parts[1]
            try:
                freq = int(count)
            except ValueError:
                raise LexiconError(f"{path}:{lineno}: count {count!r} is not an integer") from None
            if freq < 1:
                raise LexiconError(f"{path}:{lineno}: count must be positive")
            if not _valid_spell_word(word):
                raise LexiconError(f"{path}:{lineno}: word {parts[0]!r} is not alphabetic")
            entries[word] = max(freq, entries.get(word, 0))
    if not entries:
        raise LexiconError(f"{path}: spell lexicon is empty")
    return SpellLexicon(entries)


def load_synonym_lexicon(path: "str | Path") -> SynonymLexicon:
    groups = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            groups.append(line.split("\t"))
    lex = SynonymLexicon.from_groups(groups)
    log.debug("loaded %d synonym groups from %s", len(lex), path)
    return lex


def write_spell_lexicon(path: "str | Path", entries: Mapping[str, int]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w in sorted(entries):
            fh.write(f"{w} {entries[w]}\n")


def write_synonym_lexicon(path: "str | Path", groups: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for g in groups:
            fh.write("\t".join(g) + "\n")
