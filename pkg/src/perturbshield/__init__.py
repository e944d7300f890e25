"""Randomized input-perturbation defenses for binary sentiment classifiers."""
from .classify import CountingStub, NaiveBayesBackend, NaiveBayesModel, RemoteBackend, Verdict, train_nb
from .defense import DefenseOutcome, IrdConfig, RpdConfig, defend_ird, defend_rpd, majority_vote
from .lexicon import SpellLexicon, SynonymLexicon, load_spell_lexicon, load_synonym_lexicon
from .perturb import CorrectionKind, Lexicons
from .rng import Rng
from .textcore import Label, Review

__version__ = "0.1.0"
