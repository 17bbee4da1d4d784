from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from selmer_ratios import families as fm
from selmer_ratios.curves import CurveModel, _add, invariants, multiple, on_curve, order_of
from selmer_ratios.isogeny import (
    KernelOrderError,
    base_curve,
    composite_chain,
    discriminant_suite,
    dual_discriminant_check,
    example_polynomial_check,
    family_kernel,
    j_invariant,
    short_discriminant_check,
    velu_map,
    velu_quotient,
)

WITH_MODEL = [G.id for G in fm.registry() if G.base_model is not None]


def test_trivial_kernel_is_identity():
    E = CurveModel.from_coefficients([0, 0, 0, -1, 0])
    assert velu_quotient(E, None, 1) == E


def test_wrong_order_rejected():
    E = CurveModel.from_coefficients([0, 0, 0, -1, 0])
    T = (Fraction(0), Fraction(0))
    with pytest.raises(KernelOrderError):
        velu_quotient(E, T, 4)
    with pytest.raises(KernelOrderError):
        composite_chain(E, T, 3)


def test_two_isogeny_of_known_curve():
    # y^2 = x^3 - x modulo <(0,0)> is y^2 = x^3 + 4x, up to the Velu normalisation
    E = CurveModel.from_coefficients([0, 0, 0, -1, 0])
    F = velu_quotient(E, (Fraction(0), Fraction(0)), 2)
    assert j_invariant(F) == 1728 * 4 * 4**3 / (4 * 4**3)
    assert invariants(F).disc == -16 * 4 * 4**3


def test_g15_velu_check_has_no_failures():
    rep = dual_discriminant_check(fm.get("G(1,5)"), "C5", samples=100)
    assert rep.passed and rep.samples == 100 and not rep.failures
    assert len(rep.units) == 1


def test_g15_example_polynomials():
    rep = example_polynomial_check(fm.get("G(1,5)"), "C5", samples=20)
    assert rep.passed


def test_degenerate_points_are_skipped():
    G = fm.get("G(1,5)")
    rep = dual_discriminant_check(G, "C5", samples=60, bound=2)
    assert rep.skipped
    for A, B in rep.skipped:
        assert fm.table_discriminant(G, "O", A, B) == 0
    assert rep.passed


@pytest.mark.parametrize("fid", WITH_MODEL)
def test_short_form_discriminant_per_family(fid):
    assert short_discriminant_check(fm.get(fid), samples=30).passed


def test_suite_covers_every_kernel():
    reports = discriminant_suite(samples=5)
    kinds = {(r.family, r.phi) for r in reports}
    for fid in WITH_MODEL:
        G = fm.get(fid)
        for phi in G.base_model.kernels:
            assert (fid, phi) in kinds
    assert all(r.passed for r in reports)


@pytest.mark.parametrize("fid,phi,steps", [("G(1,6)", "C6", 2), ("G(1,9)", "C9", 2), ("G(1,5)", "C5", 1)])
def test_composite_chain_matches_direct_quotient(fid, phi, steps):
    G = fm.get(fid)
    E, K, n = family_kernel(G, phi, 3, 7)
    chain = composite_chain(E, K, n)
    assert len(chain) == steps + 1
    assert j_invariant(chain[-1]) == j_invariant(velu_quotient(E, K, n))


@given(st.integers(-20, 20), st.integers(1, 20))
def test_velu_map_is_a_homomorphism_on_torsion(A, B):
    G = fm.get("G(1,8)")
    try:
        E = base_curve(G, A, B)
    except (ValueError, ZeroDivisionError):
        return
    P = (Fraction(G.base_model.kernel_point("C2", A, B)[0][0]), Fraction(G.base_model.kernel_point("C2", A, B)[0][1]))
    if order_of(E, P, 8) != 8:
        return
    K = multiple(E, P, 4)
    F = velu_quotient(E, K, 2)
    img = [velu_map(E, K, 2, multiple(E, P, k)) for k in range(8)]
    assert all(on_curve(F, R) for R in img)
    for i in range(8):
        for j in range(8):
            assert _add(F, img[i], img[j]) == img[(i + j) % 8]
