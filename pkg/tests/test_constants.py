import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from selmer_ratios import families as fm
from selmer_ratios.constants import (
    LogValue,
    SubgroupError,
    assemble,
    audit_printed_constants,
    derive_cn,
    full_group,
    log_ratio_exact,
    mult_coefficient,
)

L = LogValue(Fraction(0), Fraction(1))  # log_6 2
ROWS = [(G.id, phi) for G in fm.registry() for phi in G.isogeny_densities]


@pytest.fixture(scope="module")
def audit():
    return audit_printed_constants()


def test_derive_cn_g17_quadratic_residues():
    c = derive_cn("G(1,7)", "C7", (1, 2, 4))
    assert c[Fraction(7)] == 1
    assert c[Fraction(1, 7)] == 3


def test_derive_cn_g19_c3_full_group():
    row = assemble("G(1,9)", "C3")
    assert row.c_plus == Fraction(3, 2)


def test_derive_cn_trivial_subgroup_is_the_q1_row():
    G = fm.get("G(1,7)")
    table = G.isogeny_densities["C7"]
    (row,) = [r for r in table.rows if 1 in r.classes]
    assert derive_cn(G, "C7", (1,)) == {r: f.leading() for r, f in zip(table.alphabet, row.kappa)}


def test_non_subgroup_rejected():
    with pytest.raises(SubgroupError):
        derive_cn("G(1,7)", "C7", (1, 3))


@pytest.mark.parametrize(
    "fid,phi,group,cE,cV,theta",
    [
        ("G(1,7)", "C7", None, Fraction(-5, 2), Fraction(7, 2), Fraction(-3, 4)),
        ("G(1,9)", "C9", (1,), 0, 6, 3),
        ("G(1,2)", "C2", None, 0, 2, 1),
        ("G(2,2)", "C2", None, Fraction(-3, 2), Fraction(5, 2), Fraction(-1, 4)),
    ],
)
def test_assemble_examples(fid, phi, group, cE, cV, theta):
    row = assemble(fid, phi, group)
    assert (row.c_E, row.c_V, row.theta) == (LogValue.of(cE), LogValue.of(cV), LogValue.of(theta))


def test_assemble_degree_six_exact_form():
    row = assemble("G(1,6)", "C6")
    half = LogValue(Fraction(1, 2))
    printed = half * (3 + 2 * L * L + 3 * (1 - 2 * L) * (1 - 2 * L))
    assert row.c_V == printed == LogValue(Fraction(3), Fraction(-6), Fraction(7))
    assert row.c_E == LogValue(Fraction(-1), Fraction(1))
    assert LogValue.parse("1/2*(3 + 2*log6(2)^2 + 3*log6(3/2)^2)") == row.c_V


@pytest.mark.parametrize("fid,phi", ROWS)
def test_variance_is_sum_of_squares(fid, phi):
    row = assemble(fid, phi)
    assert row.c_E == sum((n * c for n, c in row.c_n.items()), LogValue())
    assert row.c_V == sum((n * n * c for n, c in row.c_n.items()), LogValue())
    assert row.theta == row.c_E + row.c_V / 2
    assert sum(row.c_n.values()) == mult_coefficient(fm.get(fid), full_group(fm.get(fid)))


def test_all_zero_coefficients_give_zero_constants(monkeypatch):
    from selmer_ratios import constants

    table = fm.get("G(1,5)").isogeny_densities["C5"]
    monkeypatch.setattr(constants, "derive_cn", lambda *a, **k: {r: Fraction(0) for r in table.alphabet})
    row = constants.assemble("G(1,5)", "C5")
    assert row.c_E == row.c_V == row.theta == LogValue()


def test_audit_flags(audit):
    flagged = set(audit.flagged_rows())
    assert ("G(4,4)", "C2", "{1}") in flagged
    assert ("G(1,7)", "C7", "(Z/7Z)^x") not in flagged
    assert ("G(1,9)", "C9", "{1}") not in flagged
    assert audit.mismatches > 0
    assert audit.unexplained_rows() == []


def test_audit_g44_identity_failure(audit):
    recs = [r for r in audit.records if r.family == "G(4,4)" and r.subgroup == "{1}" and not r.passed]
    quantities = {r.quantity for r in recs}
    assert "identity theta = c_E + c_V/2" in quantities
    assert "c_V" in quantities


def test_audit_g22_identity_holds(audit):
    recs = [r for r in audit.records if r.family == "G(2,2)"]
    assert recs and all(r.passed for r in recs)


def test_audit_records_are_machine_readable(audit):
    d = audit.records[0].as_dict()
    assert set(d) == {"family", "phi", "subgroup", "quantity", "derived", "printed", "pass", "note"}


def test_subgroup_label_alias():
    G = fm.get("G(1,6)")
    labels = {(pc.phi, pc.subgroup_label, pc.subgroup_printed) for pc in G.constants}
    assert ("C6", "(Z/6Z)^x", "(Z/3Z)^x") in labels


fractions = st.fractions(min_value=-50, max_value=50, max_denominator=20)
logvals = st.builds(LogValue, fractions, fractions, fractions)
linear = st.builds(lambda a, b: LogValue(a, b), fractions, fractions)


@given(logvals, logvals, logvals)
def test_logvalue_addition_is_a_group(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert x + y == y + x
    assert x - x == LogValue()
    assert (x - y) + y == x


@given(linear, linear, fractions)
def test_logvalue_product_matches_floats(x, y, k):
    assert math.isclose(float(x * y), float(x) * float(y), rel_tol=1e-9, abs_tol=1e-6)
    assert x * y == y * x
    assert (x * k) / k == x if k else True


@given(logvals)
def test_logvalue_text_roundtrip(x):
    assert LogValue.parse(str(x)) == x


@given(st.integers(-4, 4), st.integers(-4, 4))
def test_log_ratio_exact_degree_six(i, j):
    r = Fraction(2) ** i * Fraction(3) ** j
    assert math.isclose(float(log_ratio_exact(r, 6)), math.log(r) / math.log(6), abs_tol=1e-12)


def test_log_ratio_exact_prime_power():
    assert log_ratio_exact(Fraction(3), 9) == LogValue(Fraction(1, 2))
    assert log_ratio_exact(Fraction(1, 4), 4) == LogValue(Fraction(-1))
    with pytest.raises(ValueError):
        log_ratio_exact(Fraction(2), 9)
