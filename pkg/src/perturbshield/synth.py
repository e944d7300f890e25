"""Seeded synthetic movie-review corpus with matching word resources.

Generative model
----------------
* A review has a label and 10-14 sentences drawn from fixed templates.  Each
  template has one or two sentiment slots; everything else is neutral filler
  drawn independently of the label.
* A sentiment slot takes a word of the review's polarity with probability
  ``1 - noise`` and of the opposite polarity otherwise.
* Each polarity has *common* words (subject to the noise above, so they are
  only moderately indicative) and *exclusive* words that only ever appear in
  reviews of their own polarity (so a classifier learns them as strong cues).
* Synonym groups pair three common words of one polarity with one exclusive
  word of the other polarity.  This is the weakness an attacker exploits: a
  synonym swap can replace a mild positive cue with a strong negative one.
  Neutral filler words have ordinary polarity-free synonym groups.

The spell lexicon holds every vocabulary word with its frequency in a
generated reference corpus.

Naive Bayes trained on this world needs light smoothing (``NB_ALPHA``) to
learn the exclusive words as strong cues.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .lexicon import SpellLexicon, SynonymLexicon, write_spell_lexicon, write_synonym_lexicon
from .rng import Rng
from .textcore import Label, Review, reviews_to_rows, write_jsonl

__all__ = ["NB_ALPHA", "SynthConfig", "SyntheticWorld", "make_world", "write_bundle"]

# Each group: three common words of the group's polarity, then one exclusive
# word of the opposite polarity.
POSITIVE_GROUPS = [
    ("good", "fine", "solid", "passable"),
    ("great", "grand", "terrific", "overblown"),
    ("funny", "amusing", "comical", "silly"),
    ("beautiful", "lovely", "gorgeous", "pretty"),
    ("clever", "smart", "witty", "gimmicky"),
    ("moving", "touching", "poignant", "maudlin"),
    ("exciting", "thrilling", "gripping", "frantic"),
    ("charming", "delightful", "endearing", "cutesy"),
]
NEGATIVE_GROUPS = [
    ("bad", "poor", "awful", "naughty"),
    ("boring", "dull", "tedious", "restful"),
    ("stupid", "dumb", "foolish", "innocent"),
    ("ugly", "hideous", "unsightly", "striking"),
    ("slow", "sluggish", "plodding", "unhurried"),
    ("weak", "feeble", "flimsy", "delicate"),
    ("messy", "sloppy", "chaotic", "lively"),
    ("predictable", "formulaic", "routine", "classic"),
]
NEUTRAL_GROUPS = [
    ("film", "movie", "picture", "feature"),
    ("story", "plot", "narrative"),
    ("actor", "performer", "player"),
    ("scene", "sequence", "segment"),
    ("ending", "finale", "conclusion"),
    ("director", "filmmaker"),
    ("music", "score", "soundtrack"),
    ("friend", "pal", "buddy"),
    ("watched", "viewed", "saw"),
    ("thought", "felt", "believed"),
]

FILLERS = {
    "noun": ["story", "plot", "acting", "script", "ending", "music", "dialogue", "pacing",
             "casting", "direction", "editing", "cast", "lead", "villain", "score", "setting",
             "camera", "scene", "actor", "soundtrack", "narrative", "finale"],
    "film": ["film", "movie", "picture", "feature"],
    "time": ["week", "night", "weekend", "month", "summer", "winter"],
    "person": ["director", "writer", "cast", "crew", "filmmaker", "performer"],
    "relative": ["friend", "brother", "sister", "wife", "husband", "mother", "father", "pal", "buddy"],
    "verb": ["watched", "viewed", "saw"],
    "think": ["thought", "felt", "believed"],
}

TEMPLATES = [
    "The {noun} was {A} and the {noun} was {A}.",
    "I found the {noun} {A} from start to finish.",
    "This {film} has a {A} {noun} and some {A} moments.",
    "Honestly the {noun} seemed {A} to me.",
    "We {verb} it last {time} and the {noun} was {A}.",
    "The {noun} from the {person} is {A} in every {noun}.",
    "It is a {A} {film} with a {A} {noun}.",
    "My {relative} {think} the {noun} was {A}.",
    "The {person} made the {noun} feel {A} at times.",
    "After the {noun} we {think} the whole {film} was {A}.",
]


NB_ALPHA = 1e-4


@dataclass(frozen=True)
class SynthConfig:
    noise: float = 0.1
    exclusive_rate: float = 0.015
    min_sentences: int = 10
    max_sentences: int = 14


class SyntheticWorld:
    def __init__(self, cfg: SynthConfig = SynthConfig()):
        self.cfg = cfg
        self.common = {
            Label.POSITIVE: [w for g in POSITIVE_GROUPS for w in g[:3]],
            Label.NEGATIVE: [w for g in NEGATIVE_GROUPS for w in g[:3]],
        }
        # exclusive words of a polarity live in the other polarity's groups
        self.exclusive = {
            Label.POSITIVE: [g[3] for g in NEGATIVE_GROUPS],
            Label.NEGATIVE: [g[3] for g in POSITIVE_GROUPS],
        }
        self.synonyms = SynonymLexicon.from_groups(POSITIVE_GROUPS + NEGATIVE_GROUPS + NEUTRAL_GROUPS)

    def _sentiment_word(self, label: Label, rng: Rng) -> str:
        if rng.random() < self.cfg.exclusive_rate:
            return rng.choice(self.exclusive[label])
        if rng.random() < self.cfg.noise:
            label = label.other()
        return rng.choice(self.common[label])

    def sentence(self, label: Label, rng: Rng) -> str:
        template = rng.choice(TEMPLATES)
        out = []
        for part in template.split(" "):
            prefix, _, rest = part.partition("{")
            if not rest:
                out.append(part)
                continue
            slot, _, suffix = rest.partition("}")
            word = self._sentiment_word(label, rng) if slot == "A" else rng.choice(FILLERS[slot])
            out.append(prefix + word + suffix)
        return " ".join(out)

    def review(self, rid: str, label: Label, rng: Rng) -> Review:
        n = self.cfg.min_sentences + rng.randbelow(self.cfg.max_sentences - self.cfg.min_sentences + 1)
        text = " ".join(self.sentence(label, rng) for _ in range(n))
        return Review.from_text(rid, text, label)

    def corpus(self, n: int, rng: Rng, prefix: str = "r") -> list[Review]:
        """``n`` reviews with alternating labels, each from its own substream."""
        labels = (Label.POSITIVE, Label.NEGATIVE)
        return [self.review(f"{prefix}{i:05d}", labels[i % 2], rng.fork(f"{prefix}{i}")) for i in range(n)]

    def spell_lexicon(self, rng: Rng, reference_size: int = 500) -> SpellLexicon:
        counts: Counter = Counter()
        for r in self.corpus(reference_size, rng, prefix="ref"):
            for s in r.sentences:
                for t in s.tokens:
                    if t.is_word:
                        counts[t.core.lower()] += 1
        vocab = set(counts)
        for g in POSITIVE_GROUPS + NEGATIVE_GROUPS + NEUTRAL_GROUPS:
            vocab.update(g)
        for words in FILLERS.values():
            vocab.update(words)
        return SpellLexicon({w: counts.get(w, 0) + 1 for w in sorted(vocab)})


def make_world(cfg: Optional[SynthConfig] = None) -> SyntheticWorld:
    return SyntheticWorld(cfg or SynthConfig())


def write_bundle(out_dir: "str | Path", seed: int = 0, n_train: int = 2000, n_test: int = 500,
                 cfg: Optional[SynthConfig] = None) -> dict[str, Path]:
    """Write train/test corpora and both lexicons under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = make_world(cfg)
    rng = Rng(seed)
    paths = {
        "train": out / "train.jsonl",
        "test": out / "test.jsonl",
        "spell": out / "spell.txt",
        "synonyms": out / "synonyms.txt",
    }
    write_jsonl(paths["train"], reviews_to_rows(world.corpus(n_train, rng.fork("train"), "train")))
    write_jsonl(paths["test"], reviews_to_rows(world.corpus(n_test, rng.fork("test"), "test")))
    write_spell_lexicon(paths["spell"], world.spell_lexicon(rng.fork("spell")).entries)
    write_synonym_lexicon(paths["synonyms"], world.synonyms.groups)
    return paths
