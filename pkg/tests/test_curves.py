from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from selmer_ratios.curves import (
    CurveModel,
    NotOnCurveError,
    ShortModel,
    SingularCurveError,
    add,
    height,
    invariants,
    minimal_valuation,
    multiple,
    negate,
    order_of,
    reduce12,
    short_form,
)

# y^2 + y = x^3 - x has rank 1 generated by (0, 0)
RANK_ONE = CurveModel.from_coefficients([0, 0, 1, -1, 0], point=(0, 0))
P0 = RANK_ONE.marked_point


def test_invariant_examples():
    inv = invariants(CurveModel.from_coefficients([0, 0, 0, -1, 0]))
    assert (inv.disc, inv.c4) == (64, 48)
    assert invariants(CurveModel.from_coefficients([0, 0, 0, 0, 1])).disc == -432


def test_scaling_multiplies_discriminant_by_u12():
    E = CurveModel.from_coefficients([1, -1, 1, -3, 5])
    u = 2
    F = CurveModel.from_coefficients([E.a1 * u, E.a2 * u**2, E.a3 * u**3, E.a4 * u**4, E.a6 * u**6])
    assert invariants(F).disc == u**12 * invariants(E).disc


def test_singular_model_rejected():
    with pytest.raises(SingularCurveError, match="singular"):
        CurveModel.from_coefficients([0, 0, 0, 0, 0])
    with pytest.raises(SingularCurveError):
        ShortModel(-3, 2)


def test_marked_point_must_lie_on_curve_and_have_its_order():
    with pytest.raises(NotOnCurveError):
        CurveModel.from_coefficients([0, 0, 0, -1, 0], point=(2, 2))
    with pytest.raises(ValueError):
        CurveModel.from_coefficients([0, 0, 0, -1, 0], point=(0, 0), order=4)
    E = CurveModel.from_coefficients([0, 0, 0, -1, 0], point=(0, 0), order=2)
    assert order_of(E, E.marked_point) == 2


def test_short_form_examples():
    assert reduce12(2**4, 2**6).key == (1, 1)


@given(st.integers(-500, 500), st.integers(-500, 500))
def test_short_form_fixes_reduced_short_models(a, b):
    if (a, b) == (0, 0) or 4 * a**3 + 27 * b * b == 0:
        return
    if reduce12(a, b).key != (a, b):
        return
    assert short_form(CurveModel.from_coefficients([0, 0, 0, a, b])).key == (a, b)


def test_short_form_of_a_long_model():
    E = CurveModel.from_coefficients([0, 0, 1, -1, 0])
    S = short_form(E)
    inv = invariants(E)
    # same j-invariant, and the reduced model has no twelfth-power content
    assert Fraction(S.a**3 * -110592, S.disc) == inv.j
    assert reduce12(S.a, S.b) == S


def test_height_examples():
    assert height(reduce12(1, 1)) == 1
    assert height(reduce12(2, 3)) == 9
    assert height(reduce12(0, 1)) == 1
    with pytest.raises(ValueError):
        height(ShortModel(16, 64))


def test_off_curve_input_rejected():
    with pytest.raises(NotOnCurveError):
        add(RANK_ONE, (Fraction(1), Fraction(1)), P0)
    with pytest.raises(NotOnCurveError):
        multiple(RANK_ONE, (Fraction(1), Fraction(1)), 2)


def test_inverse_and_identity():
    assert add(RANK_ONE, P0, negate(RANK_ONE, P0)) is None
    assert add(RANK_ONE, None, P0) == P0
    assert multiple(RANK_ONE, P0, 0) is None


small = st.integers(-4, 4)


@given(small, small, small)
def test_group_law_is_associative(i, j, k):
    P, Q, R = (multiple(RANK_ONE, P0, n) for n in (i, j, k))
    assert add(RANK_ONE, add(RANK_ONE, P, Q), R) == add(RANK_ONE, P, add(RANK_ONE, Q, R))
    assert add(RANK_ONE, P, Q) == add(RANK_ONE, Q, P)
    assert add(RANK_ONE, P, Q) == multiple(RANK_ONE, P0, i + j)


nonzero = st.integers(-(10**6), 10**6)


@given(nonzero, nonzero, st.integers(1, 30))
def test_height_is_invariant_under_twelfth_power_scaling(a, b, u):
    if a == 0 and b == 0 or 4 * a**3 + 27 * b * b == 0:
        return
    S = reduce12(a, b)
    T = reduce12(u**4 * a, u**6 * b)
    assert S == T
    assert height(S) == height(T)


def test_minimal_valuation_good_prime():
    S = reduce12(-1, 0)
    assert minimal_valuation(S, 5)[0] == 0


def test_minimal_valuation_removes_twelfth_powers():
    # y^2 = x^3 + 7^4 x + 7^6 is a twist-free rescaling of y^2 = x^3 + x + 1
    vd, vc4 = minimal_valuation(ShortModel(7**4, 7**6), 7)
    assert (vd, vc4) == minimal_valuation(ShortModel(1, 1), 7)
    with pytest.raises(ValueError, match="excluded prime"):
        minimal_valuation(ShortModel(1, 1), 3)
