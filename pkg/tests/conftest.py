import pytest

from perturbshield.lexicon import SpellLexicon, SynonymLexicon
from perturbshield.perturb import Lexicons
from perturbshield.rng import Rng
from perturbshield.synth import make_world

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def record():
    """Record one acceptance criterion; the summary prints a line per call."""
    def _record(name, ok, detail=""):
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"
    return _record


@pytest.fixture(scope="session")
def world():
    return make_world()


@pytest.fixture(scope="session")
def world_lexicons(world):
    return Lexicons(world.spell_lexicon(Rng(11)), world.synonyms)


@pytest.fixture
def small_spell():
    return SpellLexicon({"movie": 1000, "move": 900, "great": 500, "good": 800, "so": 50, "very": 70})


@pytest.fixture
def small_synonyms():
    return SynonymLexicon.from_groups([
        ("good", "well", "decent"),
        ("great", "superb"),
        ("film", "movie"),
    ])


@pytest.fixture
def small_lexicons(small_spell, small_synonyms):
    return Lexicons(small_spell, small_synonyms)


@pytest.fixture(scope="session")
def world_model(world):
    from perturbshield.classify import train_nb
    from perturbshield.synth import NB_ALPHA
    train = world.corpus(600, Rng(1).fork("train"), "train")
    return train_nb([(r.text, r.gold_label) for r in train], alpha=NB_ALPHA)
