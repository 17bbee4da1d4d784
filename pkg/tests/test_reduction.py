from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from selmer_ratios import families as fm
from selmer_ratios.arith import primes_up_to
from selmer_ratios.curves import CurveModel, reduce12, short_form
from selmer_ratios.reduction import (
    ADDITIVE,
    GOOD,
    MULT,
    ExcludedPrimeError,
    ReductionRecord,
    chain_ratio,
    classify,
    local_log_ratio,
    n_class,
    node_is_split,
    tamagawa_multiplicative,
)

PRIMES = [p for p in primes_up_to(150) if p >= 5]


def _mult(p, v, split):
    return ReductionRecord(p, MULT, split, v, tamagawa_multiplicative(v, split))


def test_classify_examples():
    assert classify(short_form(CurveModel.from_coefficients([0, 0, 0, -1, 0])), 5).kind == GOOD
    S = reduce12(*fm.evaluate_f(fm.get("G(1,5)"), 11, 1))
    rec = classify(S, 11)
    assert rec.kind == MULT and rec.v_disc == 5


def test_classify_additive():
    # y^2 = x^3 + 7 x + 7 has both a and b divisible by 7
    assert classify(reduce12(7, 7), 7).kind == ADDITIVE


def test_classify_rejects_small_primes():
    with pytest.raises(ExcludedPrimeError, match="excluded prime"):
        classify(reduce12(1, 1), 3)


def test_n_class_examples():
    assert n_class(_mult(11, 1, True), _mult(11, 5, True), 5) == 5
    assert n_class(_mult(7, 1, False), _mult(7, 3, False), 3) == 1
    assert n_class(_mult(7, 1, False), _mult(7, 2, False), 2) == 2


def test_n_class_at_degree_prime():
    with pytest.raises(ExcludedPrimeError, match="p \\| deg"):
        n_class(_mult(5, 1, True), _mult(5, 5, True), 5)


def test_local_log_ratio_examples():
    good = ReductionRecord(13, GOOD, None, 0, 1)
    assert local_log_ratio(good, good, 3) == 1
    assert local_log_ratio(_mult(13, 2, True), _mult(13, 6, True), 3) == 3
    # the pseudo ratio ignores the parity rule
    assert local_log_ratio(_mult(13, 2, False), _mult(13, 4, False), 2, pseudo=True) == 2
    assert local_log_ratio(_mult(13, 2, False), _mult(13, 4, False), 2) == 1


def test_record_invariants():
    with pytest.raises(ValueError):
        ReductionRecord(5, GOOD, None, 2, 1)
    with pytest.raises(ValueError):
        ReductionRecord(5, MULT, None, 2, 1)


def test_chain_ratio_multiplies_steps():
    assert chain_ratio([1, 2, 6], True, [2, 3]) == 6
    assert chain_ratio([2, 1, 3], False, [2, 3]) == Fraction(1, 2)
    assert chain_ratio([2, 1, 3], False, [2, 3], pseudo_even=True) == Fraction(1, 2)
    assert chain_ratio([2, 4], False, [2], pseudo_even=True) == 2
    with pytest.raises(ValueError):
        chain_ratio([1, 2], True, [2, 3])


@given(st.sampled_from(PRIMES), st.integers(1, 10**6), st.integers(-5, 5), st.integers(-5, 5))
def test_split_test_matches_point_count(p, x0, k, l):
    x0 %= p
    if x0 == 0:
        return
    # (x - x0)^2 (x + 2 x0) has a node at x0
    a = -3 * x0 * x0 + k * p
    b = 2 * x0**3 + l * p
    affine = sum(1 for x in range(p) for y in range(p) if (y * y - x**3 - a * x - b) % p == 0)
    assert affine in (p - 1, p + 1)
    assert node_is_split(a, b, p) == (affine == p - 1)


@given(st.integers(1, 40), st.booleans())
def test_tamagawa_rule(v, split):
    c = tamagawa_multiplicative(v, split)
    assert c == (v if split else 2 - v % 2)
