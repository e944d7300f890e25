"""Probability model for attack vs. defense coverage, and the evaluation harness.

The model treats a review as ``W = N * m`` words (``N`` sentences of average
length ``m``).  An attack touching ``a`` words has per-word probability
``a / W``.  IRD with ``k`` single-correction replicates reaches
``k / (N * m)``.  The RPD quantity ``N * l * C(m, k)`` is a selection count,
not a probability, and is returned as such.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .classify import ClassifierBackend, classify_batch
from .defense import IrdConfig, RpdConfig, defend
from .perturb import Lexicons
from .rng import Rng
from .textcore import Label, Review

__all__ = [
    "EvalRow",
    "EvaluationReport",
    "IdMismatch",
    "InvalidBudget",
    "InvalidParams",
    "ProbInputs",
    "evaluate",
    "mc_hit_estimate",
    "mc_standard_error",
    "one_sample_t",
    "p_attack",
    "p_ird",
    "p_rpd",
    "p_rpd_rearranged",
    "ird_dominates_attack",
]

Number = Union[int, float, Fraction]


class InvalidBudget(ValueError):
    pass


class InvalidParams(ValueError):
    pass


class IdMismatch(ValueError):
    pass


def _q(x: Number) -> Fraction:
    return Fraction(x) if isinstance(x, (Rational, float)) else Fraction(str(x))


def _out(x: Fraction, exact: bool):
    return x if exact else float(x)


@dataclass(frozen=True)
class ProbInputs:
    N: int
    m: Number
    a: int = 0
    l: int = 1
    k: int = 1

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise InvalidParams("N and m must be >= 1")
        if self.a < 0:
            raise InvalidParams("a must be >= 0")
        if self.l < 1 or self.k < 0:
            raise InvalidParams("l must be >= 1 and k >= 0")

    @property
    def W(self) -> Fraction:
        return self.N * _q(self.m)

    @classmethod
    def from_review(cls, review: Review, a: int = 0, l: int = 1, k: int = 1) -> "ProbInputs":
        """``m`` is the review's mean sentence length, kept as an exact ratio."""
        return cls(len(review.sentences), Fraction(review.word_count, len(review.sentences)), a, l, k)


def p_attack(inp: ProbInputs, exact: bool = False):
    if inp.a > inp.W:
        raise InvalidBudget(f"attack budget a={inp.a} exceeds W={inp.W}")
    return _out(inp.a / inp.W, exact)


def _binomial(m: Number, k: int) -> Fraction:
    mq = _q(m)
    if mq.denominator == 1:
        return Fraction(math.comb(int(mq), k))
    # generalized binomial for a fractional average length
    num = Fraction(1)
    for i in range(k):
        num *= mq - i
    return num / math.factorial(k)


def p_rpd(inp: ProbInputs, exact: bool = False):
    """``N * l * m! / (k! (m - k)!)`` as written; can exceed 1."""
    if inp.k > inp.m:
        raise InvalidParams(f"k={inp.k} exceeds m={inp.m}")
    return _out(inp.N * inp.l * _binomial(inp.m, inp.k), exact)


def p_rpd_rearranged(inp: ProbInputs, exact: bool = False):
    """``N^2 m^2 l (m-1)(m-2)...(m-k+1) / k!``, the form compared against ``a``."""
    if inp.k > inp.m:
        raise InvalidParams(f"k={inp.k} exceeds m={inp.m}")
    m = _q(inp.m)
    prod = Fraction(1)
    for i in range(1, inp.k):
        prod *= m - i
    return _out(inp.N ** 2 * m ** 2 * inp.l * prod / math.factorial(inp.k), exact)


def p_ird(inp: ProbInputs, exact: bool = False):
    if inp.k < 1:
        raise InvalidParams("IRD needs k >= 1")
    return _out(inp.k / inp.W, exact)


def ird_dominates_attack(inp: ProbInputs) -> bool:
    """Whether ``k > a`` implies ``p_ird > p_attack`` for these inputs (exact)."""
    if inp.k <= inp.a:
        return True
    return p_ird(inp, exact=True) > p_attack(inp, exact=True)


# ---------------------------------------------------------------- Monte Carlo

SHARD_TRIALS = 10_000


def mc_standard_error(N: int, m: int, k: int, trials: int) -> float:
    p = 1.0 / (N * m)
    return math.sqrt(k * p * (1 - p) / trials)


def _shard_hits(N: int, m: int, k: int, n: int, rng: Rng) -> int:
    gen = rng.numpy()
    sentences = gen.integers(0, N, size=(n, k))
    tokens = gen.integers(0, m, size=(n, k))
    return int(np.count_nonzero((sentences == 0) & (tokens == 0)))


def mc_hit_estimate(N: int, m: int, k: int, trials: int, rng: Rng,
                    exhaustive: bool = False, jobs: int = 1) -> float:
    """Mean number of IRD draws (uniform sentence, then uniform token) that
    land on one fixed position, over ``trials`` simulated reviews.

    The expectation is exactly ``k / (N * m)``.  Trials are split into fixed
    shards with their own substreams, so the result does not depend on
    ``jobs``.  ``exhaustive`` replaces random draws with a cyclic sweep over
    all ``N * m`` cells.
    """
    if trials < 10_000:
        raise ValueError("mc_hit_estimate needs at least 10^4 trials")
    if min(N, m, k) < 1:
        raise ValueError("N, m and k must be >= 1")
    if exhaustive:
        cells = N * m
        return float(sum(1 for j in range(k) if j % cells == 0))
    sizes = [SHARD_TRIALS] * (trials // SHARD_TRIALS)
    if trials % SHARD_TRIALS:
        sizes.append(trials % SHARD_TRIALS)
    work = [(N, m, k, n, rng.fork(f"shard-{i}")) for i, n in enumerate(sizes)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            hits = list(pool.map(lambda w: _shard_hits(*w), work))
    else:
        hits = [_shard_hits(*w) for w in work]
    return sum(hits) / trials


# ---------------------------------------------------------------- evaluation

def one_sample_t(samples: Sequence[float], baseline: float) -> tuple[Optional[float], Optional[float]]:
    """Two-sided one-sample t-test of ``samples`` against ``baseline``.

    Returns ``(None, None)`` with fewer than two samples.  With zero spread the
    statistic is undefined: p is 1.0 when the mean equals the baseline, else
    0.0, and the statistic is reported as ``None``.
    """
    if len(samples) < 2:
        return None, None
    arr = np.asarray(samples, dtype=float)
    if np.all(arr == arr[0]):
        return (0.0, 1.0) if arr[0] == baseline else (None, 0.0)
    res = stats.ttest_1samp(arr, baseline)
    return float(res.statistic), float(res.pvalue)


@dataclass
class EvalRow:
    attack: str
    method: str
    reviews: int
    accuracy_without: float
    run_accuracies: list[float]
    classifier_calls: int
    mean_sentences: float
    t_statistic: Optional[float] = None
    p_value: Optional[float] = None
    wall_seconds: float = field(default=0.0, compare=False)

    @property
    def runs(self) -> int:
        return len(self.run_accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.run_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.run_accuracies, ddof=1)) if self.runs > 1 else 0.0

    @property
    def calls_per_review(self) -> float:
        return self.classifier_calls / (self.runs * self.reviews)

    def to_json(self, timing: bool = False) -> dict:
        row = {
            "attack": self.attack,
            "method": self.method,
            "reviews": self.reviews,
            "accuracy_without_defense": self.accuracy_without,
            "accuracy_with_defense": {"mean": self.mean, "std": self.std, "runs": self.run_accuracies},
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
            "classifier_calls": self.classifier_calls,
            "calls_per_review": self.calls_per_review,
            "mean_sentences": self.mean_sentences,
        }
        if timing:
            row["wall_seconds"] = self.wall_seconds
        return row


@dataclass
class EvaluationReport:
    clean_accuracy: float
    rows: list[EvalRow]
    config: dict
    seed: int
    outcomes: dict = field(default_factory=dict, repr=False)

    def call_totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.method] = out.get(r.method, 0) + r.classifier_calls
        return out

    def call_ratio(self) -> Optional[float]:
        """RPD calls divided by IRD calls, when both were run."""
        totals = self.call_totals()
        if totals.get("rpd") and totals.get("ird"):
            return totals["rpd"] / totals["ird"]
        return None

    def to_json(self, include_outcomes: bool = False, timing: bool = False) -> dict:
        doc = {
            "clean_accuracy": self.clean_accuracy,
            "rows": [r.to_json(timing) for r in self.rows],
            "classifier_calls": self.call_totals(),
            "rpd_to_ird_call_ratio": self.call_ratio(),
            "config": self.config,
            "seed": self.seed,
        }
        if include_outcomes:
            doc["outcomes"] = self.outcomes
        return doc

    def to_table(self, timing: bool = False) -> str:
        header = ["Attack", "Method", "w/o Defense", "w/ Defense", "Runs", "p-value", "Calls/review"]
        if timing:
            header.append("Seconds")
        lines = [header]
        for r in self.rows:
            p = "n/a" if r.p_value is None else f"{r.p_value:.3g}"
            cells = [r.attack, r.method, f"{100 * r.accuracy_without:.2f}%",
                     f"{100 * r.mean:.2f}%±{100 * r.std:.2f}", str(r.runs), p, f"{r.calls_per_review:.2f}"]
            if timing:
                cells.append(f"{r.wall_seconds:.2f}")
            lines.append(cells)
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        out = []
        for n, row in enumerate(lines):
            out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if n == 0:
                out.append("  ".join("-" * w for w in widths))
        out.append("")
        out.append(f"Accuracy prior to attack: {100 * self.clean_accuracy:.2f}%")
        ratio = self.call_ratio()
        if ratio is not None:
            out.append(f"RPD/IRD classifier-call ratio: {ratio:.3f}")
        return "\n".join(out) + "\n"


def _accuracy(pred: Sequence[Label], gold: Sequence[Label]) -> float:
    return sum(p is g for p, g in zip(pred, gold)) / len(gold)


def _attacked_reviews(corpus: Sequence[Review], attacked: Iterable[dict]) -> dict[str, list[Review]]:
    by_id = {r.id: r for r in corpus}
    groups: dict[str, list[Review]] = {}
    for row in attacked:
        rid = str(row["id"])
        if rid not in by_id:
            raise IdMismatch(f"attacked review {rid!r} has no counterpart in the clean corpus")
        gold = by_id[rid].gold_label
        if gold is None:
            raise IdMismatch(f"review {rid!r} has no gold label")
        text = row.get("attacked_text", row.get("text"))
        groups.setdefault(row.get("style") or "attack", []).append(Review.from_text(rid, text, gold))
    return groups


def evaluate(
    corpus: Sequence[Review],
    attacked: Iterable[dict],
    configs: Sequence[Union[RpdConfig, IrdConfig]],
    backend: ClassifierBackend,
    lexicons: Lexicons,
    runs: int = 5,
    seed: int = 0,
    jobs: int = 1,
    fixed_seed: bool = False,
) -> EvaluationReport:
    """Accuracy without and with each defense, over ``runs`` repeated runs.

    ``attacked`` rows carry ``id``, ``attacked_text`` and ``style``; rows are
    grouped by style into report rows.  Run ``r`` of a method draws from the
    substream ``seed / method / run-r / review-id``; ``fixed_seed`` drops the
    run component so every run is identical.
    """
    if not corpus:
        raise ValueError("clean corpus is empty")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if any(r.gold_label is None for r in corpus):
        raise ValueError("every clean review needs a gold label")
    groups = _attacked_reviews(corpus, attacked)
    if not groups:
        raise ValueError("attacked corpus is empty")

    clean_pred = [v.label for v in classify_batch(backend, [r.text for r in corpus])]
    clean_acc = _accuracy(clean_pred, [r.gold_label for r in corpus])
    root = Rng(seed)
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    rows: list[EvalRow] = []
    outcomes: dict = {}
    try:
        for style in sorted(groups):
            reviews = groups[style]
            gold = [r.gold_label for r in reviews]
            attacked_pred = [v.label for v in classify_batch(backend, [r.text for r in reviews])]
            acc_without = _accuracy(attacked_pred, gold)
            mean_n = float(np.mean([len(r.sentences) for r in reviews]))
            for cfg in configs:
                accs, calls = [], 0
                started = time.perf_counter()
                for run in range(runs):
                    stream = root.fork(cfg.method) if fixed_seed else root.fork(cfg.method).fork(f"run-{run}")

                    def one(review, stream=stream):
                        return defend(review, cfg, backend, lexicons, stream.fork(review.id))

                    results = list(pool.map(one, reviews)) if pool else [one(r) for r in reviews]
                    accs.append(_accuracy([o.final_label for o in results], gold))
                    calls += sum(o.classifier_calls for o in results)
                    outcomes[f"{style}/{cfg.method}/run-{run}"] = [
                        {"id": o.review_id, "final_label": o.final_label.value,
                         "gold": g.value, "certainty": o.certainty}
                        for o, g in zip(results, gold)
                    ]
                elapsed = time.perf_counter() - started
                t, p = one_sample_t(accs, clean_acc)
                rows.append(EvalRow(style, cfg.method, len(reviews), acc_without, accs, calls,
                                    mean_n, t, p, elapsed))
    finally:
        if pool:
            pool.shutdown()

    config = {"runs": runs, "fixed_seed": fixed_seed,
              "defenses": [_describe(c) for c in configs]}
    return EvaluationReport(clean_acc, rows, config, seed, outcomes)


def _describe(cfg) -> dict:
    d = {"method": cfg.method, "k": cfg.k, "kinds": [k.value for k in cfg.kinds]}
    if isinstance(cfg, RpdConfig):
        d["l"] = cfg.l
    return d
