import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from perturbshield.analysis import (
    IdMismatch,
    InvalidBudget,
    InvalidParams,
    ProbInputs,
    evaluate,
    mc_hit_estimate,
    mc_standard_error,
    one_sample_t,
    p_attack,
    p_ird,
    p_rpd,
    p_rpd_rearranged,
    ird_dominates_attack,
)
from perturbshield.classify import CountingStub
from perturbshield.defense import IrdConfig, RpdConfig
from perturbshield.rng import Rng
from perturbshield.textcore import Label, Review


def test_p_attack_example():
    assert p_attack(ProbInputs(10, 20, a=5), exact=True) == Fraction(1, 40)
    assert p_attack(ProbInputs(10, 20, a=5)) == 0.025


def test_p_attack_full_budget_and_zero():
    assert p_attack(ProbInputs(3, 4, a=12), exact=True) == 1
    assert p_attack(ProbInputs(3, 4, a=0), exact=True) == 0
    with pytest.raises(InvalidBudget):
        p_attack(ProbInputs(3, 4, a=13))


def test_p_ird_example():
    assert p_ird(ProbInputs(10, 20, k=41), exact=True) == Fraction(41, 200)
    assert p_ird(ProbInputs(10, 20, k=41)) == pytest.approx(0.205, abs=0)


def test_p_rpd_examples():
    assert p_rpd(ProbInputs(1, 5, l=1, k=2), exact=True) == 10
    assert p_rpd(ProbInputs(4, 9, l=3, k=9), exact=True) == 12
    assert p_rpd(ProbInputs(4, 9, l=3, k=0), exact=True) == 12
    assert p_rpd(ProbInputs(2, 6, l=7, k=3), exact=True) == 2 * 7 * math.comb(6, 3)
    with pytest.raises(InvalidParams):
        p_rpd(ProbInputs(2, 4, l=7, k=5))


def test_p_rpd_fractional_m_uses_generalized_binomial():
    m = Fraction(11, 2)
    expected = m * (m - 1) / 2
    assert p_rpd(ProbInputs(2, m, l=1, k=2), exact=True) == 2 * expected


def test_p_rpd_rearranged_example():
    # N^2 m^2 l (m-1)(m-2) / 3!  for N=2, m=5, l=7, k=3
    assert p_rpd_rearranged(ProbInputs(2, 5, l=7, k=3), exact=True) == Fraction(4 * 25 * 7 * 4 * 3, 6)


def test_invalid_params():
    for kw in ({"N": 0, "m": 3}, {"N": 2, "m": 0}, {"N": 2, "m": 3, "a": -1}, {"N": 2, "m": 3, "l": 0}):
        with pytest.raises(InvalidParams):
            ProbInputs(**kw)
    with pytest.raises(InvalidParams):
        p_ird(ProbInputs(2, 3, k=0))


tuples = st.tuples(st.integers(1, 40), st.integers(1, 60), st.integers(0, 200), st.integers(1, 200))


@settings(max_examples=1000)
@given(tuples)
def test_ird_dominates_attack(t):
    N, m, a, k = t
    a = min(a, N * m)
    inp = ProbInputs(N, m, a=a, k=k)
    assert ird_dominates_attack(inp)
    if k > a:
        assert p_ird(inp, exact=True) > p_attack(inp, exact=True)


@given(st.integers(1, 30), st.integers(1, 40), st.integers(1, 100))
def test_p_ird_monotone(N, m, k):
    inp = ProbInputs(N, m, k=k)
    assert p_ird(ProbInputs(N, m, k=k + 1), exact=True) > p_ird(inp, exact=True)
    assert p_ird(ProbInputs(N + 1, m, k=k), exact=True) < p_ird(inp, exact=True)
    assert p_ird(ProbInputs(N, m + 1, k=k), exact=True) < p_ird(inp, exact=True)


def test_from_review():
    r = Review.from_text("x", "Great movie here. I loved it!")
    inp = ProbInputs.from_review(r, a=1, k=2)
    assert inp.N == 2 and inp.m == Fraction(6, 2) and inp.W == 6


def test_mc_converges():
    N, m, k = 5, 8, 10
    trials = 100_000
    est = mc_hit_estimate(N, m, k, trials, Rng(1))
    assert abs(est - k / (N * m)) < 3 * mc_standard_error(N, m, k, trials)


def test_mc_jobs_independent():
    a = mc_hit_estimate(4, 6, 7, 50_000, Rng(3), jobs=1)
    b = mc_hit_estimate(4, 6, 7, 50_000, Rng(3), jobs=4)
    assert a == b


def test_mc_degenerate_and_exhaustive():
    assert mc_hit_estimate(1, 1, 1, 10_000, Rng(0)) == 1.0
    assert mc_hit_estimate(3, 4, 12, 10_000, Rng(0), exhaustive=True) == 1.0
    with pytest.raises(ValueError):
        mc_hit_estimate(3, 4, 12, 999, Rng(0))


def test_one_sample_t():
    assert one_sample_t([0.8], 0.9) == (None, None)
    assert one_sample_t([0.9, 0.9, 0.9], 0.9) == (0.0, 1.0)
    assert one_sample_t([0.8, 0.8], 0.9) == (None, 0.0)
    t, p = one_sample_t([0.1, 0.2, 0.3], 0.2)
    assert t == pytest.approx(0.0) and p == pytest.approx(1.0)
    # hand value: mean 0.2, s = 0.1, n = 3 -> t = (0.2 - 0.1) / (0.1 / sqrt 3)
    t, _ = one_sample_t([0.1, 0.2, 0.3], 0.1)
    assert t == pytest.approx(math.sqrt(3))


# ---------------------------------------------------------------- evaluate

def corpus_and_rows(n=6):
    corpus = [Review.from_text(f"r{i}", "The film was good. I liked the cast.", "positive") for i in range(n)]
    rows = [{"id": r.id, "attacked_text": r.text, "style": "charbug"} for r in corpus]
    return corpus, rows


def test_evaluate_perfect_stub(small_lexicons):
    corpus, rows = corpus_and_rows()
    rep = evaluate(corpus, rows, [RpdConfig(), IrdConfig()], CountingStub("positive"), small_lexicons, runs=3)
    assert rep.clean_accuracy == 1.0
    for row in rep.rows:
        assert row.run_accuracies == [1.0, 1.0, 1.0]
        assert row.std == 0.0 and row.p_value == 1.0
    # two sentences: RPD 2 * 7 calls, IRD 41 calls per review
    assert rep.call_totals() == {"rpd": 3 * 6 * 14, "ird": 3 * 6 * 41}
    assert rep.call_ratio() == pytest.approx(14 / 41)


def test_evaluate_fixed_seed_zero_spread(small_lexicons):
    corpus, rows = corpus_and_rows()
    stub = CountingStub(rule=lambda t: "positive" if "good" in t else "negative")
    rep = evaluate(corpus, rows, [IrdConfig(k=3)], stub, small_lexicons, runs=4, fixed_seed=True)
    assert len(set(rep.rows[0].run_accuracies)) == 1 and rep.rows[0].std == 0.0


def test_evaluate_accuracy_recomputable_from_outcomes(small_lexicons):
    corpus, rows = corpus_and_rows(8)
    stub = CountingStub(rule=lambda t: "positive" if "good" in t else "negative")
    rep = evaluate(corpus, rows, [RpdConfig(l=3, k=2), IrdConfig(k=5)], stub, small_lexicons, runs=3, seed=7)
    for row in rep.rows:
        for run, acc in enumerate(row.run_accuracies):
            outs = rep.outcomes[f"{row.attack}/{row.method}/run-{run}"]
            assert acc == sum(o["final_label"] == o["gold"] for o in outs) / len(outs)


def test_evaluate_deterministic_across_jobs(small_lexicons):
    corpus, rows = corpus_and_rows(8)
    stub = CountingStub(rule=lambda t: "positive" if "good" in t else "negative")
    a = evaluate(corpus, rows, [IrdConfig(k=3)], stub, small_lexicons, runs=3, jobs=1)
    b = evaluate(corpus, rows, [IrdConfig(k=3)], stub, small_lexicons, runs=3, jobs=4)
    assert a.to_json(include_outcomes=True) == b.to_json(include_outcomes=True)


def test_evaluate_id_mismatch(small_lexicons):
    corpus, rows = corpus_and_rows()
    rows.append({"id": "ghost", "attacked_text": "x", "style": "charbug"})
    with pytest.raises(IdMismatch):
        evaluate(corpus, rows, [IrdConfig()], CountingStub(), small_lexicons)


def test_table_mentions_every_row(small_lexicons):
    corpus, rows = corpus_and_rows()
    rep = evaluate(corpus, rows, [RpdConfig(), IrdConfig()], CountingStub("positive"), small_lexicons, runs=2)
    table = rep.to_table()
    assert "rpd" in table and "ird" in table and "100.00%" in table
    assert "wall_seconds" not in str(rep.to_json())
    assert "wall_seconds" in str(rep.to_json(timing=True))
