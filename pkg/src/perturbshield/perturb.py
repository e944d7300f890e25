"""Random token corrections: spell check, synonym substitution and word drop.

Planning and application are split.  :func:`plan_replicate` consumes the
random stream and records every draw a replicate needs (token choice,
correction kind, synonym draw, fallback kinds); :func:`apply_plan` is then a
pure function of the plan, the sentence and the lexicons.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .lexicon import SpellLexicon, SynonymLexicon, synonym_candidates
from .rng import Rng
from .textcore import DROPPED, Sentence, Token, reassemble

__all__ = [
    "ALL_KINDS",
    "CorrectionKind",
    "EmptySentence",
    "Lexicons",
    "NO_CANDIDATE",
    "PerturbationPlan",
    "PlanStep",
    "Replicate",
    "apply_plan",
    "drop_word",
    "match_case",
    "parse_kinds",
    "pick_synonym",
    "plan_replicate",
    "spell_correct",
    "synonym_sub",
]

MAX_FALLBACKS = 2


class CorrectionKind(str, Enum):
    SPELL = "spell"
    SYNONYM = "synonym"
    DROP = "drop"

    def __str__(self) -> str:
        return self.value


ALL_KINDS: tuple[CorrectionKind, ...] = (CorrectionKind.SPELL, CorrectionKind.SYNONYM, CorrectionKind.DROP)


def parse_kinds(spec: "str | Sequence[str | CorrectionKind]") -> tuple[CorrectionKind, ...]:
    """Parse ``"spell,synonym,drop"`` (or a sequence) into kinds in canonical order."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    chosen = set()
    for item in items:
        item = str(item).strip().lower()
        if not item:
            continue
        try:
            chosen.add(CorrectionKind(item))
        except ValueError:
            raise ValueError(f"unknown correction kind {item!r}") from None
    if not chosen:
        raise ValueError("at least one correction kind must be enabled")
    return tuple(k for k in ALL_KINDS if k in chosen)


class EmptySentence(ValueError):
    """The sentence has no perturbation-eligible token."""


class _NoCandidate:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_CANDIDATE"

    def __bool__(self) -> bool:
        return False


NO_CANDIDATE = _NoCandidate()


@dataclass(frozen=True)
class Lexicons:
    spell: Optional[SpellLexicon] = None
    synonyms: Optional[SynonymLexicon] = None


def match_case(template: str, word: str) -> str:
    if len(template) > 1 and template.isupper():
        return word.upper()
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


@functools.lru_cache(maxsize=1 << 16)
def _best_correction(lex: SpellLexicon, word: str) -> Optional[str]:
    near = lex.within(word)
    if not near:
        return None
    return min(near, key=lambda w: (-lex.entries[w], w))


def spell_correct(lex: SpellLexicon, t: str) -> str:
    """Correct ``t`` to the most frequent lexicon word within edit distance 2.

    In-lexicon words come back unchanged, as do words with nothing nearby.
    Frequency ties go to the lexicographically smallest word.  The
    capitalization pattern of ``t`` is kept.
    """
    low = t.lower()
    if low in lex.entries:
        return t
    best = _best_correction(lex, low)
    if best is None:
        return t
    return match_case(t, best)


def pick_synonym(lex: SynonymLexicon, t: str, u: float):
    """Synonym at position ``floor(u * n)`` of the sorted candidates, or NO_CANDIDATE."""
    cands = sorted(synonym_candidates(lex, t))
    if not cands:
        return NO_CANDIDATE
    return match_case(t, cands[min(int(u * len(cands)), len(cands) - 1)])


def synonym_sub(lex: SynonymLexicon, t: str, rng: Rng):
    return pick_synonym(lex, t, rng.random())


def drop_word(t: "Token | str") -> Token:
    return DROPPED


@dataclass(frozen=True)
class PlanStep:
    sentence_index: int
    token_index: int
    kind: CorrectionKind
    # uniform draw for the synonym pick, then the kinds to retry if no synonym exists
    u: float = 0.0
    fallbacks: tuple[CorrectionKind, ...] = ()


@dataclass(frozen=True)
class PerturbationPlan:
    seed: int
    steps: tuple[PlanStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def plan_step(
    sentence_index: int, token_index: int, kinds: Sequence[CorrectionKind], rng: Rng
) -> PlanStep:
    kind = rng.choice(kinds)
    u = rng.random()
    rest = [k for k in kinds if k != kind]
    rng.shuffle(rest)
    return PlanStep(sentence_index, token_index, kind, u, tuple(rest[:MAX_FALLBACKS]))


def plan_replicate(
    sentence: Sentence,
    k: int,
    rng: Rng,
    kinds: Sequence[CorrectionKind] = ALL_KINDS,
    replace: bool = False,
) -> PerturbationPlan:
    """Pick ``min(k, eligible)`` distinct eligible tokens and a correction for each.

    With ``replace=True`` exactly ``k`` tokens are drawn with replacement.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    eligible = sentence.eligible_indices
    if not eligible:
        raise EmptySentence(f"sentence {sentence.index} has no eligible token")
    if replace:
        picks = [rng.choice(eligible) for _ in range(k)]
    else:
        picks = rng.sample(eligible, min(k, len(eligible)))
    steps = tuple(plan_step(sentence.index, i, kinds, rng) for i in picks)
    return PerturbationPlan(rng.seed, steps)


@dataclass(frozen=True)
class Replicate:
    sentence_index: int
    text: str
    audit: tuple[dict, ...] = field(default=())

    def audit_row(self, review_id: str, replicate_index: int) -> dict:
        return {
            "review_id": review_id,
            "sentence_index": self.sentence_index,
            "replicate_index": replicate_index,
            "steps": list(self.audit),
        }


def _apply_step(token: Token, step: PlanStep, lexicons: Lexicons) -> tuple[Token, CorrectionKind]:
    core = token.core
    for kind in (step.kind,) + step.fallbacks:
        if kind is CorrectionKind.DROP:
            return drop_word(token), kind
        if kind is CorrectionKind.SPELL:
            if lexicons.spell is None:
                raise ValueError("spell correction enabled without a spell lexicon")
            return token.with_core(spell_correct(lexicons.spell, core)), kind
        if kind is CorrectionKind.SYNONYM:
            if lexicons.synonyms is None:
                continue
            syn = pick_synonym(lexicons.synonyms, core, step.u)
            if syn is NO_CANDIDATE:
                continue
            return token.with_core(syn), kind
    return token, step.kind


def apply_plan(sentence: Sentence, plan: "PerturbationPlan | Sequence[PlanStep]", lexicons: Lexicons) -> Replicate:
    tokens = list(sentence.tokens)
    audit = []
    for step in plan:
        if step.sentence_index != sentence.index:
            raise ValueError(f"step targets sentence {step.sentence_index}, not {sentence.index}")
        before = tokens[step.token_index]
        if before.dropped:
            after, kind = before, step.kind
        else:
            after, kind = _apply_step(before, step, lexicons)
        tokens[step.token_index] = after
        entry = {"token_index": step.token_index, "kind": kind.value,
                 "before": before.surface, "after": after.surface}
        if kind is not step.kind:
            entry["requested"] = step.kind.value
        audit.append(entry)
    return Replicate(sentence.index, reassemble(tokens), tuple(audit))
