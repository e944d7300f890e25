"""Random Perturbations Defense (RPD) and Increased Randomness Defense (IRD).

RPD makes ``l`` replicates of every sentence, each with ``k`` random
corrections, and votes over all ``N * l`` replicate verdicts.  IRD draws
``k`` sentences uniformly with replacement, makes one random correction in
each, and votes over the ``k`` verdicts.  Certainty is the fraction of votes
that agree with the final label.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .classify import ClassifierBackend, Verdict, classify_batch
from .perturb import (
    ALL_KINDS,
    CorrectionKind,
    Lexicons,
    Replicate,
    apply_plan,
    plan_replicate,
    plan_step,
)
from .rng import Rng
from .textcore import Label, Review

__all__ = [
    "DefenseOutcome",
    "DegenerateInput",
    "EmptyVotes",
    "IrdConfig",
    "RpdConfig",
    "build_ird_replicates",
    "build_rpd_replicates",
    "certainty",
    "defend",
    "defend_ird",
    "defend_rpd",
    "majority_vote",
]


class EmptyVotes(ValueError):
    pass


class DegenerateInput(ValueError):
    """The review has no perturbation-eligible token."""


def _check_kinds(kinds) -> tuple[CorrectionKind, ...]:
    kinds = tuple(kinds)
    if not kinds:
        raise ValueError("at least one correction kind must be enabled")
    return kinds


@dataclass(frozen=True)
class RpdConfig:
    l: int = 7
    k: int = 5
    kinds: tuple[CorrectionKind, ...] = ALL_KINDS
    seed: int = 0
    with_replacement: bool = False

    def __post_init__(self):
        if self.l < 1 or self.k < 1:
            raise ValueError("RPD needs l >= 1 and k >= 1")
        object.__setattr__(self, "kinds", _check_kinds(self.kinds))

    method = "rpd"


@dataclass(frozen=True)
class IrdConfig:
    k: int = 41
    kinds: tuple[CorrectionKind, ...] = ALL_KINDS
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("IRD needs k >= 1")
        object.__setattr__(self, "kinds", _check_kinds(self.kinds))

    method = "ird"


@dataclass(frozen=True)
class DefenseOutcome:
    review_id: str
    method: str
    final_label: Label
    certainty: float
    votes: tuple[Verdict, ...]
    replicate_count: int
    classifier_calls: int
    degenerate: bool = False
    replicates: tuple[Replicate, ...] = field(default=(), repr=False, compare=False)

    def to_json(self) -> dict:
        row = {
            "review_id": self.review_id,
            "method": self.method,
            "final_label": self.final_label.value,
            "certainty": self.certainty,
            "replicate_count": self.replicate_count,
            "classifier_calls": self.classifier_calls,
            "votes": [v.to_json() for v in self.votes],
        }
        if self.degenerate:
            row["degenerate"] = True
        return row


def majority_vote(votes: Sequence[Verdict]) -> Label:
    """Label with more votes; on a tie, larger summed score, then negative."""
    if not votes:
        raise EmptyVotes("cannot vote over zero verdicts")
    counts = Counter(v.label for v in votes)
    pos, neg = counts[Label.POSITIVE], counts[Label.NEGATIVE]
    if pos != neg:
        return Label.POSITIVE if pos > neg else Label.NEGATIVE
    pos_score = sum(v.score for v in votes if v.label is Label.POSITIVE)
    neg_score = sum(v.score for v in votes if v.label is Label.NEGATIVE)
    return Label.POSITIVE if pos_score > neg_score else Label.NEGATIVE


def certainty(votes: Sequence[Verdict], final_label: Label) -> float:
    if not votes:
        raise EmptyVotes("cannot compute certainty over zero verdicts")
    return sum(1 for v in votes if v.label is final_label) / len(votes)


def build_rpd_replicates(review: Review, cfg: RpdConfig, lexicons: Lexicons, rng: Rng) -> list[Replicate]:
    """``l`` replicates per sentence, sentence-major order.

    Sentences without an eligible token are copied unperturbed.
    """
    out = []
    for sentence in review.sentences:
        eligible = bool(sentence.eligible_indices)
        for _ in range(cfg.l):
            if not eligible:
                out.append(Replicate(sentence.index, sentence.text))
                continue
            plan = plan_replicate(sentence, cfg.k, rng, cfg.kinds, replace=cfg.with_replacement)
            out.append(apply_plan(sentence, plan, lexicons))
    return out


def build_ird_replicates(review: Review, cfg: IrdConfig, lexicons: Lexicons, rng: Rng) -> list[Replicate]:
    """``k`` single-correction replicates of uniformly drawn sentences."""
    out = []
    n = len(review.sentences)
    for _ in range(cfg.k):
        sentence = review.sentences[rng.randbelow(n)]
        eligible = sentence.eligible_indices
        if not eligible:
            out.append(Replicate(sentence.index, sentence.text))
            continue
        step = plan_step(sentence.index, rng.choice(eligible), cfg.kinds, rng)
        out.append(apply_plan(sentence, [step], lexicons))
    return out


def _outcome(review: Review, method: str, replicates: list[Replicate],
             backend: ClassifierBackend, keep_replicates: bool) -> DefenseOutcome:
    votes = classify_batch(backend, [r.text for r in replicates])
    final = majority_vote(votes)
    return DefenseOutcome(
        review_id=review.id,
        method=method,
        final_label=final,
        certainty=certainty(votes, final),
        votes=tuple(votes),
        replicate_count=len(replicates),
        classifier_calls=len(votes),
        replicates=tuple(replicates) if keep_replicates else (),
    )


def _degenerate(review: Review, method: str, backend: ClassifierBackend, fallback: bool) -> DefenseOutcome:
    if not fallback:
        raise DegenerateInput(f"review {review.id} has no perturbation-eligible token")
    votes = classify_batch(backend, [review.text])
    return DefenseOutcome(review.id, method, votes[0].label, 1.0, tuple(votes), 1, 1, degenerate=True)


def defend_rpd(review: Review, cfg: RpdConfig, backend: ClassifierBackend, lexicons: Lexicons,
               rng: Optional[Rng] = None, *, fallback: bool = True,
               keep_replicates: bool = False) -> DefenseOutcome:
    """Random Perturbations Defense for one review.

    ``rng`` defaults to a stream derived from ``cfg.seed`` and the review id.
    A review with no eligible token at all is classified once as-is and
    flagged ``degenerate`` (or raises :class:`DegenerateInput` when
    ``fallback`` is false).
    """
    if not review.has_eligible():
        return _degenerate(review, "rpd", backend, fallback)
    rng = rng if rng is not None else Rng(cfg.seed).fork(review.id)
    return _outcome(review, "rpd", build_rpd_replicates(review, cfg, lexicons, rng), backend, keep_replicates)


def defend_ird(review: Review, cfg: IrdConfig, backend: ClassifierBackend, lexicons: Lexicons,
               rng: Optional[Rng] = None, *, fallback: bool = True,
               keep_replicates: bool = False) -> DefenseOutcome:
    """Increased Randomness Defense for one review; certainty is over ``k`` votes."""
    if not review.has_eligible():
        return _degenerate(review, "ird", backend, fallback)
    rng = rng if rng is not None else Rng(cfg.seed).fork(review.id)
    return _outcome(review, "ird", build_ird_replicates(review, cfg, lexicons, rng), backend, keep_replicates)


def defend(review: Review, cfg: "RpdConfig | IrdConfig", backend: ClassifierBackend,
           lexicons: Lexicons, rng: Optional[Rng] = None, **kw) -> DefenseOutcome:
    if isinstance(cfg, RpdConfig):
        return defend_rpd(review, cfg, backend, lexicons, rng, **kw)
    return defend_ird(review, cfg, backend, lexicons, rng, **kw)
