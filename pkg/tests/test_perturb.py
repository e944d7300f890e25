from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from perturbshield.perturb import (
    ALL_KINDS,
    NO_CANDIDATE,
    CorrectionKind,
    EmptySentence,
    Lexicons,
    PlanStep,
    apply_plan,
    drop_word,
    parse_kinds,
    plan_replicate,
    spell_correct,
    synonym_sub,
)
from perturbshield.lexicon import SpellLexicon
from perturbshield.rng import Rng
from perturbshield.textcore import Sentence, reassemble, tokenize

from test_lexicon import neighbourhood


SMALL_SPELL = SpellLexicon({"movie": 1000, "move": 900, "great": 500, "good": 800, "so": 50, "very": 70})


class FixedRng:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


def sentence(text, index=0):
    return Sentence(index, tuple(tokenize(text)))


def brute_force_correction(entries, word):
    alphabet = sorted({c for w in entries for c in w} | set(word))
    hood = neighbourhood(word, alphabet, 2)
    near = [w for w in entries if w in hood]
    if not near:
        return word
    return sorted(near, key=lambda w: (-entries[w], w))[0]


def test_spell_correct_in_lexicon_unchanged(small_spell):
    assert spell_correct(small_spell, "movie") == "movie"


def test_spell_correct_moive(small_spell):
    expected = brute_force_correction(small_spell.entries, "moive")
    assert expected == "movie"
    assert spell_correct(small_spell, "moive") == "movie"


def test_spell_correct_nothing_nearby(small_spell):
    assert spell_correct(small_spell, "xqzv") == "xqzv"


def test_spell_correct_keeps_capitalization(small_spell):
    assert spell_correct(small_spell, "Moive") == "Movie"
    assert spell_correct(small_spell, "MOIVE") == "MOVIE"


def test_spell_correct_frequency_tie_goes_to_smallest():
    lex = SpellLexicon({"cat": 5, "bat": 5, "hat": 1})
    assert spell_correct(lex, "zat") == "bat"


@settings(max_examples=200)
@given(st.text(alphabet="abegimorstvy", min_size=2, max_size=7))
def test_spell_correct_matches_oracle_and_is_idempotent(word):
    small_spell = SMALL_SPELL
    once = spell_correct(small_spell, word)
    assert once == brute_force_correction(small_spell.entries, word)
    assert spell_correct(small_spell, once) == once


def test_synonym_sub_forced_first(small_synonyms):
    assert synonym_sub(small_synonyms, "good", FixedRng(0.0)) == "decent"  # sorted: decent, well
    assert synonym_sub(small_synonyms, "good", FixedRng(0.99)) == "well"


def test_synonym_sub_unknown(small_synonyms):
    assert synonym_sub(small_synonyms, "zzzq", Rng(0)) is NO_CANDIDATE


def test_synonym_sub_uniform(small_synonyms):
    rng = Rng(2024)
    counts = Counter(synonym_sub(small_synonyms, "good", rng) for _ in range(10_000))
    assert set(counts) == {"well", "decent"}
    for c in counts.values():
        assert abs(c - 5000) <= 200


def test_drop_word_examples():
    toks = tokenize("not bad")
    toks[0] = drop_word(toks[0])
    assert reassemble(toks) == "bad"
    toks = tokenize("ok")
    toks[0] = drop_word(toks[0])
    assert reassemble(toks) == ""


def test_plan_distinct_indices():
    s = sentence("one two three four five six seven eight nine ten")
    plan = plan_replicate(s, 5, Rng(1))
    idx = [st.token_index for st in plan]
    assert len(idx) == 5 and len(set(idx)) == 5


def test_plan_clamps_to_eligible():
    s = sentence("I am so happy a b now")  # eligible: am, so, happy, now
    plan = plan_replicate(Sentence(0, tuple(tokenize("we so x y fine"))), 5, Rng(1))
    assert len(plan) == 3
    assert len(plan_replicate(s, 10, Rng(1))) == 4


def test_plan_deterministic():
    s = sentence("one two three four five six seven eight nine ten")
    assert plan_replicate(s, 5, Rng(9)) == plan_replicate(s, 5, Rng(9))
    assert plan_replicate(s, 5, Rng(9)) != plan_replicate(s, 5, Rng(10))


def test_plan_empty_sentence():
    with pytest.raises(EmptySentence):
        plan_replicate(sentence("a I ! 7"), 3, Rng(0))


def test_plan_only_eligible_and_enabled_kinds():
    s = sentence("I saw a very good film , truly")
    kinds = (CorrectionKind.DROP, CorrectionKind.SYNONYM)
    for seed in range(50):
        plan = plan_replicate(s, 3, Rng(seed), kinds)
        for step in plan:
            assert s.tokens[step.token_index].eligible
            assert step.kind in kinds
            assert step.kind not in step.fallbacks
            assert set(step.fallbacks) <= set(kinds)


def test_plan_with_replacement_draws_exactly_k():
    s = sentence("good film")
    assert len(plan_replicate(s, 5, Rng(0), replace=True)) == 5


def test_token_selection_uniform():
    s = sentence("a one two three four five I six seven eight")
    eligible = s.eligible_indices
    n = 20_000
    counts = Counter()
    for seed in range(n):
        for step in plan_replicate(s, 1, Rng(seed)):
            counts[step.token_index] += 1
    p = 1 / len(eligible)
    sigma = (n * p * (1 - p)) ** 0.5
    assert set(counts) == set(eligible)
    for i in eligible:
        assert abs(counts[i] - n * p) < 3 * sigma


def test_kind_selection_uniform():
    s = sentence("one two three four five")
    n = 9000
    counts = Counter(step.kind for seed in range(n // 3) for step in plan_replicate(s, 3, Rng(seed)))
    sigma = (n * (1 / 3) * (2 / 3)) ** 0.5
    for kind in ALL_KINDS:
        assert abs(counts[kind] - n / 3) < 3 * sigma


def test_apply_spell_step(small_lexicons):
    s = sentence("moive was great")
    rep = apply_plan(s, [PlanStep(0, 0, CorrectionKind.SPELL)], small_lexicons)
    assert rep.text == "movie was great"
    assert rep.audit == ({"token_index": 0, "kind": "spell", "before": "moive", "after": "movie"},)


def test_apply_empty_plan_is_identity(small_lexicons):
    s = sentence("so   very good")
    assert apply_plan(s, [], small_lexicons).text == "so very good"


def test_apply_drop_step(small_lexicons):
    s = sentence("so very good")
    assert apply_plan(s, [PlanStep(0, 1, CorrectionKind.DROP)], small_lexicons).text == "so good"


def test_apply_synonym_keeps_punctuation_and_case(small_lexicons):
    s = sentence("Good!")
    rep = apply_plan(s, [PlanStep(0, 0, CorrectionKind.SYNONYM, u=0.0)], small_lexicons)
    assert rep.text == "Decent!"


def test_synonym_fallback_to_next_kind(small_lexicons):
    s = sentence("very nice")
    step = PlanStep(0, 1, CorrectionKind.SYNONYM, 0.3, (CorrectionKind.DROP, CorrectionKind.SPELL))
    rep = apply_plan(s, [step], small_lexicons)
    assert rep.text == "very"
    assert rep.audit[0]["kind"] == "drop" and rep.audit[0]["requested"] == "synonym"


def test_synonym_without_fallback_leaves_token(small_lexicons):
    s = sentence("very nice")
    rep = apply_plan(s, [PlanStep(0, 1, CorrectionKind.SYNONYM, 0.3, ())], small_lexicons)
    assert rep.text == "very nice"
    assert rep.audit[0]["before"] == rep.audit[0]["after"] == "nice"


def test_apply_does_not_mutate_source(small_lexicons):
    s = sentence("so very good")
    before = s.tokens
    apply_plan(s, plan_replicate(s, 3, Rng(4)), small_lexicons)
    assert s.tokens == before and s.text == "so very good"


def test_apply_rejects_foreign_step(small_lexicons):
    with pytest.raises(ValueError):
        apply_plan(sentence("so good"), [PlanStep(3, 0, CorrectionKind.DROP)], small_lexicons)


def test_replicate_text_determined_by_seed(small_lexicons):
    s = sentence("the good film was very good and so was the movie")
    a = apply_plan(s, plan_replicate(s, 4, Rng(77)), small_lexicons)
    b = apply_plan(s, plan_replicate(s, 4, Rng(77)), small_lexicons)
    assert a == b


def test_audit_row_shape(small_lexicons):
    s = sentence("so very good", index=2)
    rep = apply_plan(s, [PlanStep(2, 1, CorrectionKind.DROP)], small_lexicons)
    row = rep.audit_row("r1", 4)
    assert row == {"review_id": "r1", "sentence_index": 2, "replicate_index": 4,
                   "steps": [{"token_index": 1, "kind": "drop", "before": "very", "after": ""}]}


def test_parse_kinds():
    assert parse_kinds("drop,spell") == (CorrectionKind.SPELL, CorrectionKind.DROP)
    with pytest.raises(ValueError):
        parse_kinds("spell,shout")
    with pytest.raises(ValueError):
        parse_kinds("")


def test_missing_spell_lexicon_is_an_error():
    with pytest.raises(ValueError):
        apply_plan(sentence("so good"), [PlanStep(0, 1, CorrectionKind.SPELL)], Lexicons())
