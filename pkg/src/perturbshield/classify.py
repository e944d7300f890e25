"""Binary sentiment classifiers behind a single ``classify_batch`` interface.

Three backends ship with the package:

* :class:`NaiveBayesBackend` wraps a multinomial naive Bayes model trained
  with :func:`train_nb`.
* :class:`RemoteBackend` posts batches to an HTTP service speaking the
  ``/v1/classify`` JSON protocol.
* :class:`CountingStub` returns a fixed (or rule-derived) verdict and counts
  every text it is asked about.
"""
from __future__ import annotations

import json
import logging
import math
import threading
import time
import urllib.error
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence

from .textcore import Label, split_core

log = logging.getLogger(__name__)

MODEL_FORMAT = "perturbshield-naive-bayes"
MODEL_VERSION = 1


class BackendError(RuntimeError):
    pass


class BackendUnavailable(BackendError):
    pass


class ProtocolError(BackendError):
    pass


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    label: Label
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def prob(self, label: Label) -> float:
        """Probability mass this verdict puts on ``label``."""
        return self.score if self.label is label else 1.0 - self.score

    def to_json(self) -> dict:
        return {"label": self.label.value, "score": self.score}


class ClassifierBackend(Protocol):
    def classify_batch(self, texts: Sequence[str]) -> list[Verdict]: ...


def classify_batch(backend: ClassifierBackend, texts: Sequence[str]) -> list[Verdict]:
    texts = list(texts)
    verdicts = backend.classify_batch(texts)
    if len(verdicts) != len(texts):
        raise ProtocolError(f"backend returned {len(verdicts)} verdicts for {len(texts)} texts")
    return verdicts


def classify(backend: ClassifierBackend, text: str) -> Verdict:
    return classify_batch(backend, [text])[0]


# ---------------------------------------------------------------- naive Bayes

def nb_tokens(text: str) -> list[str]:
    """Lowercased token cores, punctuation stripped."""
    out = []
    for w in text.split():
        core = split_core(w)[1].lower()
        if core:
            out.append(core)
    return out


@dataclass(frozen=True)
class NaiveBayesModel:
    alpha: float
    log_prior: Mapping[Label, float]
    log_likelihood: Mapping[Label, Mapping[str, float]]
    vocabulary: tuple[str, ...]
    tie_label: Label = Label.NEGATIVE

    def joint(self, text: str) -> dict[Label, float]:
        scores = dict(self.log_prior)
        for w in nb_tokens(text):
            for label in scores:
                ll = self.log_likelihood[label].get(w)
                if ll is not None:
                    scores[label] += ll
        return scores

    def classify(self, text: str) -> Verdict:
        j = self.joint(text)
        neg, pos = j[Label.NEGATIVE], j[Label.POSITIVE]
        if neg == pos:
            return Verdict(self.tie_label, 0.5)
        winner = Label.POSITIVE if pos > neg else Label.NEGATIVE
        margin = abs(pos - neg)
        return Verdict(winner, 1.0 / (1.0 + math.exp(-margin)))

    def to_json(self) -> dict:
        labels = sorted(self.log_prior)
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "alpha": self.alpha,
            "tie_label": self.tie_label.value,
            "labels": [l.value for l in labels],
            "log_prior": [self.log_prior[l] for l in labels],
            "vocabulary": list(self.vocabulary),
            "log_likelihood": [[self.log_likelihood[l][w] for w in self.vocabulary] for l in labels],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NaiveBayesModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a naive Bayes model file")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        labels = [Label.parse(l) for l in doc["labels"]]
        vocab = tuple(doc["vocabulary"])
        return cls(
            alpha=float(doc["alpha"]),
            log_prior={l: float(p) for l, p in zip(labels, doc["log_prior"])},
            log_likelihood={l: dict(zip(vocab, map(float, row))) for l, row in zip(labels, doc["log_likelihood"])},
            vocabulary=vocab,
            tie_label=Label.parse(doc.get("tie_label", "negative")),
        )

    def save(self, path: "str | Path") -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: "str | Path") -> "NaiveBayesModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def train_nb(
    corpus: Iterable[tuple[str, "Label | str"]],
    alpha: float = 1.0,
    tie_label: Label = Label.NEGATIVE,
) -> NaiveBayesModel:
    """Multinomial naive Bayes with Laplace smoothing ``alpha`` over lowercased words."""
    if not alpha > 0:
        raise TrainingError(f"smoothing alpha must be > 0, got {alpha}")
    docs = {Label.NEGATIVE: 0, Label.POSITIVE: 0}
    counts = {Label.NEGATIVE: Counter(), Label.POSITIVE: Counter()}
    for text, label in corpus:
        label = Label.parse(label)
        docs[label] += 1
        counts[label].update(nb_tokens(text))
    total = sum(docs.values())
    if total == 0:
        raise TrainingError("training corpus is empty")
    if min(docs.values()) == 0:
        raise TrainingError("training corpus must contain both labels")
    vocab = tuple(sorted(set(counts[Label.NEGATIVE]) | set(counts[Label.POSITIVE])))
    v = len(vocab)
    log_prior = {l: math.log(docs[l] / total) for l in docs}
    log_likelihood = {}
    for l, c in counts.items():
        denom = math.log(sum(c.values()) + alpha * v)
        log_likelihood[l] = {w: math.log(c[w] + alpha) - denom for w in vocab}
    return NaiveBayesModel(alpha, log_prior, log_likelihood, vocab, tie_label)


class NaiveBayesBackend:
    concurrent_safe = True

    def __init__(self, model: NaiveBayesModel):
        self.model = model

    def classify_batch(self, texts: Sequence[str]) -> list[Verdict]:
        return [self.model.classify(t) for t in texts]


# ---------------------------------------------------------------- stub

class CountingStub:
    """Fixed-label backend that counts invocations.

    ``rule`` (text -> Verdict or Label) overrides the fixed label when given.
    """

    concurrent_safe = True

    def __init__(self, label: "Label | str" = Label.POSITIVE, score: float = 1.0,
                 rule: Optional[Callable[[str], "Verdict | Label"]] = None):
        self.verdict = Verdict(Label.parse(label), score)
        self.rule = rule
        self._lock = threading.Lock()
        self.calls = 0
        self.batches = 0

    def _one(self, text: str) -> Verdict:
        if self.rule is None:
            return self.verdict
        out = self.rule(text)
        return out if isinstance(out, Verdict) else Verdict(Label.parse(out), self.verdict.score)

    def classify_batch(self, texts: Sequence[str]) -> list[Verdict]:
        with self._lock:
            self.calls += len(texts)
            self.batches += 1
        return [self._one(t) for t in texts]

    def reset(self) -> None:
        with self._lock:
            self.calls = 0
            self.batches = 0


# ---------------------------------------------------------------- remote

class RemoteBackend:
    """Client for ``POST {url}/v1/classify`` with ``{"texts": [...]}`` bodies.

    Texts are sent in batches of ``batch_size`` with at most ``max_in_flight``
    concurrent requests.  Failed requests (network errors, non-200) are
    retried ``retries`` times with exponential backoff; exhaustion raises
    :class:`BackendUnavailable`.  A 200 response that does not parse raises
    :class:`ProtocolError` immediately.
    """

    concurrent_safe = True

    def __init__(self, url: str, batch_size: int = 32, max_in_flight: int = 4,
                 timeout: float = 10.0, retries: int = 3, backoff: float = 0.25):
        if batch_size < 1 or max_in_flight < 1:
            raise ValueError("batch_size and max_in_flight must be >= 1")
        url = url.rstrip("/")
        self.endpoint = url if url.endswith("/v1/classify") else url + "/v1/classify"
        self.batch_size = batch_size
        self.max_in_flight = max_in_flight
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _post(self, texts: list[str], context: str) -> list[Verdict]:
        body = json.dumps({"texts": texts}).encode("utf-8")
        last_error = "no attempt"
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(
                self.endpoint, data=body, method="POST",
                headers={"Content-Type": "application/json"},
            )
            try:
                with self._slots, urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    status = resp.status
                    payload = resp.read()
            except urllib.error.HTTPError as exc:
                last_error = f"HTTP {exc.code}"
                log.warning("%s: %s (attempt %d)", context, last_error, attempt + 1)
                continue
            except (urllib.error.URLError, OSError) as exc:
                last_error = str(getattr(exc, "reason", exc))
                log.warning("%s: %s (attempt %d)", context, last_error, attempt + 1)
                continue
            if status != 200:
                last_error = f"HTTP {status}"
                continue
            return self._parse(payload, len(texts), context)
        raise BackendUnavailable(f"{context}: {self.endpoint} failed after {self.retries + 1} attempts ({last_error})")

    @staticmethod
    def _parse(payload: bytes, expected: int, context: str) -> list[Verdict]:
        try:
            doc = json.loads(payload)
            results = doc["results"]
            if len(results) != expected:
                raise ValueError(f"{len(results)} results for {expected} texts")
            return [Verdict(Label.parse(r["label"]), float(r["score"])) for r in results]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"{context}: malformed response ({exc})") from exc

    def classify_batch(self, texts: Sequence[str]) -> list[Verdict]:
        texts = list(texts)
        chunks = [texts[i:i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        if not chunks:
            return []
        jobs = [(c, f"batch {n + 1}/{len(chunks)} ({len(c)} texts)") for n, c in enumerate(chunks)]
        if len(chunks) == 1:
            results = [self._post(*jobs[0])]
        else:
            with ThreadPoolExecutor(max_workers=min(self.max_in_flight, len(chunks))) as pool:
                results = list(pool.map(lambda job: self._post(*job), jobs))
        return [v for chunk in results for v in chunk]
