"""Small black-box attack generators used to build attacked corpora.

These mimic perturbation styles of common word- and character-level attacks
without their encoders or constraint machinery:

* ``charbug``: random character edits on randomly chosen tokens.
* ``synswap``: random synonym replacement on randomly chosen tokens.
* ``greedyflip``: tokens ranked by leave-one-out score drop on a target
  classifier, then replaced with the synonym that hurts the original label
  most (character edit when no synonym exists) until the label flips or the
  budget runs out.
"""
from __future__ import annotations

import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .classify import ClassifierBackend, classify, classify_batch
from .lexicon import SynonymLexicon, synonym_candidates
from .perturb import match_case
from .rng import Rng
from .textcore import DROPPED, Label, Review, Token, reassemble

__all__ = [
    "AttackSpec",
    "AttackStyle",
    "AttackedReview",
    "CHAR_OPS",
    "attack_charbug",
    "attack_corpus",
    "attack_greedyflip",
    "attack_synswap",
    "char_edit",
    "swap_chars",
    "token_importance",
    "visual_substitute",
]

VISUAL = {"o": "0", "l": "1", "a": "@"}
CHAR_OPS = ("swap", "delete", "insert", "visual")

Position = tuple[int, int]


class AttackStyle(str, Enum):
    CHARBUG = "charbug"
    SYNSWAP = "synswap"
    GREEDYFLIP = "greedyflip"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AttackSpec:
    style: AttackStyle
    budget: Optional[int] = None
    fraction: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "style", AttackStyle(self.style))
        if (self.budget is None) == (self.fraction is None):
            raise ValueError("give exactly one of budget or fraction")
        if self.budget is not None and self.budget < 1:
            raise ValueError("attack budget must be >= 1")
        if self.fraction is not None and not 0 < self.fraction <= 1:
            raise ValueError("attack fraction must be in (0, 1]")

    def budget_for(self, review: Review) -> int:
        """Absolute budget for ``review``, clamped to its word count."""
        w = review.word_count
        if self.budget is not None:
            return min(self.budget, w)
        return min(w, max(1, round(self.fraction * w)))

    @property
    def budget_label(self) -> str:
        return str(self.budget) if self.budget is not None else f"{self.fraction:g}W"


@dataclass(frozen=True)
class AttackedReview:
    original: Review
    attacked_text: str
    perturbed_positions: tuple[Position, ...]
    flipped: bool = False
    style: str = ""
    budget: int = 0
    skipped: bool = False

    def to_row(self, budget_label: Optional[str] = None) -> dict:
        return {
            "id": self.original.id,
            "original_text": self.original.text,
            "attacked_text": self.attacked_text,
            "label": self.original.gold_label.value if self.original.gold_label else None,
            "perturbed_positions": [list(p) for p in self.perturbed_positions],
            "flipped": self.flipped,
            "style": self.style,
            "budget": budget_label if budget_label is not None else self.budget,
        }


# ---------------------------------------------------------------- char edits

def swap_chars(word: str, i: int) -> str:
    """Swap the characters at ``i`` and ``i + 1``."""
    return word[:i] + word[i + 1] + word[i] + word[i + 2:]


def visual_substitute(word: str, i: int) -> str:
    return word[:i] + VISUAL[word[i].lower()] + word[i + 1:]


def char_edit(word: str, rng: Rng, op: Optional[str] = None) -> str:
    """One random character-level edit; ``visual`` falls back to ``swap``
    when the word has no substitutable letter."""
    op = op or rng.choice(CHAR_OPS)
    if op == "visual":
        spots = [i for i, c in enumerate(word) if c.lower() in VISUAL]
        if spots:
            return visual_substitute(word, rng.choice(spots))
        op = "swap"
    if op == "swap":
        return swap_chars(word, rng.randbelow(len(word) - 1)) if len(word) > 1 else word
    if op == "delete":
        i = rng.randbelow(len(word))
        return word[:i] + word[i + 1:]
    if op == "insert":
        i = rng.randbelow(len(word) + 1)
        return word[:i] + rng.choice(string.ascii_lowercase) + word[i:]
    raise ValueError(f"unknown character edit {op!r}")


# ---------------------------------------------------------------- helpers

class _Draft:
    """Mutable per-sentence token lists for building an attacked text."""

    def __init__(self, review: Review):
        self.tokens = [list(s.tokens) for s in review.sentences]

    def positions(self) -> list[Position]:
        return [(si, ti) for si, toks in enumerate(self.tokens) for ti, t in enumerate(toks) if t.eligible]

    def get(self, pos: Position) -> Token:
        return self.tokens[pos[0]][pos[1]]

    def text(self, override: Optional[tuple[Position, Token]] = None) -> str:
        parts = []
        for si, toks in enumerate(self.tokens):
            if override is not None and override[0][0] == si:
                toks = list(toks)
                toks[override[0][1]] = override[1]
            parts.append(reassemble(toks))
        return " ".join(p for p in parts if p)

    def set(self, pos: Position, token: Token) -> None:
        self.tokens[pos[0]][pos[1]] = token


def _replace_core(token: Token, new_core: str) -> Token:
    return token.with_core(match_case(token.core, new_core))


# ---------------------------------------------------------------- attacks

def attack_charbug(review: Review, a: int, rng: Rng) -> AttackedReview:
    if a < 1:
        raise ValueError("attack budget must be >= 1")
    draft = _Draft(review)
    eligible = draft.positions()
    chosen = rng.sample(eligible, min(a, len(eligible)))
    for pos in chosen:
        tok = draft.get(pos)
        draft.set(pos, tok.with_core(char_edit(tok.core, rng)))
    return AttackedReview(review, draft.text(), tuple(chosen), style="charbug", budget=a)


def attack_synswap(review: Review, a: int, lex: SynonymLexicon, rng: Rng) -> AttackedReview:
    """Replace up to ``a`` random tokens by random synonyms; tokens without a
    synonym are skipped and the next random token is tried."""
    if a < 1:
        raise ValueError("attack budget must be >= 1")
    draft = _Draft(review)
    order = draft.positions()
    rng.shuffle(order)
    done: list[Position] = []
    for pos in order:
        if len(done) >= a:
            break
        tok = draft.get(pos)
        cands = sorted(synonym_candidates(lex, tok.core))
        if not cands:
            continue
        draft.set(pos, _replace_core(tok, rng.choice(cands)))
        done.append(pos)
    return AttackedReview(review, draft.text(), tuple(done), style="synswap", budget=a)


def token_importance(review: Review, backend: ClassifierBackend,
                     label: Optional[Label] = None) -> list[tuple[Position, float]]:
    """Leave-one-out importance of every eligible token, most important first.

    Importance is the drop in the probability of ``label`` (default: the
    backend's prediction on the full text) when the token is deleted.  Ties
    keep text order.
    """
    draft = _Draft(review)
    positions = draft.positions()
    if label is None:
        label = classify(backend, review.text).label
    base = classify(backend, draft.text()).prob(label)
    if not positions:
        return []
    verdicts = classify_batch(backend, [draft.text((p, DROPPED)) for p in positions])
    scored = [(p, base - v.prob(label)) for p, v in zip(positions, verdicts)]
    return sorted(scored, key=lambda item: -item[1])


def attack_greedyflip(review: Review, a: int, backend: ClassifierBackend,
                      lex: Optional[SynonymLexicon], rng: Rng) -> AttackedReview:
    if a < 1:
        raise ValueError("attack budget must be >= 1")
    original = classify(backend, review.text).label
    draft = _Draft(review)
    done: list[Position] = []
    flipped = False
    for pos, _ in token_importance(review, backend, original):
        if len(done) >= a:
            break
        tok = draft.get(pos)
        cands = sorted(synonym_candidates(lex, tok.core)) if lex is not None else []
        if cands:
            options = [_replace_core(tok, c) for c in cands]
            verdicts = classify_batch(backend, [draft.text((pos, o)) for o in options])
            best = min(range(len(options)), key=lambda i: verdicts[i].prob(original))
            draft.set(pos, options[best])
            label_now = verdicts[best].label
        else:
            draft.set(pos, tok.with_core(char_edit(tok.core, rng)))
            label_now = classify(backend, draft.text()).label
        done.append(pos)
        if label_now is not original:
            flipped = True
            break
    return AttackedReview(review, draft.text(), tuple(done), flipped, style="greedyflip", budget=a)


def _attack_one(review: Review, spec: AttackSpec, backend: Optional[ClassifierBackend],
                lex: Optional[SynonymLexicon], skip_misclassified: bool) -> AttackedReview:
    rng = Rng(spec.seed).fork("attack").fork(review.id)
    a = spec.budget_for(review)
    style = spec.style.value
    if backend is not None and skip_misclassified and review.gold_label is not None:
        if classify(backend, review.text).label is not review.gold_label:
            return AttackedReview(review, review.text, (), style=style, budget=a, skipped=True)
    if spec.style is AttackStyle.CHARBUG:
        out = attack_charbug(review, a, rng)
    elif spec.style is AttackStyle.SYNSWAP:
        if lex is None:
            raise ValueError("synswap needs a synonym lexicon")
        out = attack_synswap(review, a, lex, rng)
    else:
        if backend is None:
            raise ValueError("greedyflip needs a target backend")
        return attack_greedyflip(review, a, backend, lex, rng)
    if backend is not None and out.perturbed_positions:
        flipped = classify(backend, out.attacked_text).label is not classify(backend, review.text).label
        out = AttackedReview(out.original, out.attacked_text, out.perturbed_positions, flipped, style, a)
    return out


def attack_corpus(reviews: Sequence[Review], spec: AttackSpec,
                  backend: Optional[ClassifierBackend] = None,
                  lex: Optional[SynonymLexicon] = None,
                  skip_misclassified: bool = True, jobs: int = 1) -> list[AttackedReview]:
    """Attack every review; each review draws from its own substream of ``spec.seed``.

    Reviews the target already gets wrong are passed through unperturbed
    (``skipped``), as attack toolkits do.  Output order follows input order
    for any ``jobs``.
    """
    def one(r):
        return _attack_one(r, spec, backend, lex, skip_misclassified)

    if jobs <= 1:
        return [one(r) for r in reviews]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, reviews))
