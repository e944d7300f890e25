"""Text representation: labels, tokens, sentences and reviews.

Segmentation and tokenization are rule based and deterministic.  A token is a
whitespace-delimited surface string; punctuation stays on the surface but is
excluded from the token's alphabetic core.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

__all__ = [
    "ABBREVIATIONS",
    "EmptyInput",
    "Label",
    "Review",
    "Sentence",
    "Token",
    "load_corpus",
    "reassemble",
    "segment",
    "split_core",
    "tokenize",
    "write_jsonl",
]


class EmptyInput(ValueError):
    """Raised when text to segment is blank."""


class Label(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"

    @classmethod
    def parse(cls, value: "str | Label") -> "Label":
        if isinstance(value, Label):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown label {value!r}; expected 'positive' or 'negative'") from None

    @property
    def rank(self) -> int:
        return 0 if self is Label.NEGATIVE else 1

    def other(self) -> "Label":
        return Label.POSITIVE if self is Label.NEGATIVE else Label.NEGATIVE

    def __lt__(self, other):
        if not isinstance(other, Label):
            return NotImplemented
        return self.rank < other.rank

    def __str__(self) -> str:
        return self.value


# Lowercased, including the trailing period.  Single-letter initials ("J.")
# are protected separately.
ABBREVIATIONS = frozenset(
    {
        "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.", "mt.",
        "vs.", "etc.", "e.g.", "i.e.", "cf.", "al.", "approx.", "no.",
        "vol.", "fig.", "inc.", "ltd.", "co.", "corp.", "jan.", "feb.",
        "mar.", "apr.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
        "u.s.", "u.k.", "a.m.", "p.m.",
    }
)

_TERMINALS = ".!?"
_CLOSERS = "\"')]}”’"
_OPENERS = "\"'([{“‘"


def split_core(surface: str) -> tuple[str, str, str]:
    """Split a surface into (leading punctuation, core, trailing punctuation)."""
    start, end = 0, len(surface)
    while start < end and not surface[start].isalnum():
        start += 1
    while end > start and not surface[end - 1].isalnum():
        end -= 1
    return surface[:start], surface[start:end], surface[end:]


def _is_word(core: str) -> bool:
    if not core:
        return False
    return core.replace("-", "").replace("'", "").replace("’", "").isalpha()


@dataclass(frozen=True)
class Token:
    surface: str
    is_word: bool = field(init=False)
    eligible: bool = field(init=False)

    def __post_init__(self):
        core = split_core(self.surface)[1]
        word = _is_word(core)
        object.__setattr__(self, "is_word", word)
        object.__setattr__(self, "eligible", word and len(core) >= 2)

    @property
    def core(self) -> str:
        return split_core(self.surface)[1]

    @property
    def dropped(self) -> bool:
        return self.surface == ""

    def with_core(self, new_core: str) -> "Token":
        """Same punctuation, different alphabetic core."""
        lead, _, trail = split_core(self.surface)
        return Token(lead + new_core + trail)


DROPPED = Token("")


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]

    @property
    def text(self) -> str:
        return reassemble(self.tokens)

    @property
    def eligible_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.tokens) if t.eligible]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Review:
    id: str
    text: str
    sentences: tuple[Sentence, ...]
    gold_label: Optional[Label] = None

    @classmethod
    def from_text(cls, id: str, text: str, gold_label: "Label | str | None" = None) -> "Review":
        sentences = tuple(
            Sentence(i, tuple(tokenize(s))) for i, s in enumerate(segment(text))
        )
        label = Label.parse(gold_label) if gold_label is not None else None
        return cls(str(id), text, sentences, label)

    @property
    def word_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    @property
    def mean_sentence_length(self) -> float:
        return self.word_count / len(self.sentences)

    def has_eligible(self) -> bool:
        return any(t.eligible for s in self.sentences for t in s.tokens)


def _starts_sentence(token: str) -> bool:
    stripped = token.lstrip(_OPENERS)
    return bool(stripped) and (stripped[0].isupper() or stripped[0].isdigit())


def _ends_sentence(token: str) -> bool:
    body = token.rstrip(_CLOSERS)
    if not body or body[-1] not in _TERMINALS:
        return False
    if body.endswith("."):
        low = body.lower().lstrip(_OPENERS)
        if low in ABBREVIATIONS:
            return False
        # initials such as "J."
        if len(low) == 2 and low[0].isalpha():
            return False
    return True


def segment(text: str) -> list[str]:
    """Split text into sentences.

    A sentence ends at a token whose last non-closing character is one of
    ``.!?`` when the next token starts with an uppercase letter or digit, or
    when the text ends.  Tokens in :data:`ABBREVIATIONS` and single-letter
    initials never end a sentence.  Sentences are returned
    whitespace-normalized.
    """
    words = text.split()
    if not words:
        raise EmptyInput("cannot segment blank text")
    sentences: list[str] = []
    current: list[str] = []
    for i, w in enumerate(words):
        current.append(w)
        nxt = words[i + 1] if i + 1 < len(words) else None
        if _ends_sentence(w) and (nxt is None or _starts_sentence(nxt)):
            sentences.append(" ".join(current))
            current = []
    if current:
        sentences.append(" ".join(current))
    return sentences


def tokenize(sentence_text: str) -> list[Token]:
    return [Token(w) for w in sentence_text.split()]


def reassemble(tokens: Iterable[Token]) -> str:
    return " ".join(t.surface for t in tokens if t.surface)


def load_corpus(path: "str | Path") -> list[Review]:
    """Read a JSON Lines review corpus (``id``, ``text``, optional ``label``)."""
    reviews = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                reviews.append(Review.from_text(row["id"], row["text"], row.get("label")))
            except (KeyError, TypeError, json.JSONDecodeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed corpus row ({exc})") from exc
    return reviews


def write_jsonl(path: "str | Path", rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def iter_jsonl(path: "str | Path") -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from exc


def reviews_to_rows(reviews: Sequence[Review]) -> list[dict]:
    rows = []
    for r in reviews:
        row = {"id": r.id, "text": r.text}
        if r.gold_label is not None:
            row["label"] = r.gold_label.value
        rows.append(row)
    return rows
