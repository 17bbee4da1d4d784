"""Re-derive the stored base models' invariants symbolically.

The integral base models in families.yaml were obtained from Tate normal forms
E(b, c): y^2 + (1-c)xy - by = x^3 - bx^2, with the torsion parameter t replaced by
a Moebius substitution t = (pA + qB)/(rA + sB) chosen so that the cusps of the
family go to the rational roots of its discriminant, then rescaled by a weighted
unit to clear denominators. This script does not search for the substitution
again; it checks the outcome:

  * -27 c4 and -54 c6 of the model equal k^4 f4 and k^6 f6 with k = 6/u,
  * the model discriminant equals the stored O row,
  * the marked points lie on the model and have the recorded order.

Usage: python3 scripts/derive_models.py [FAMILY ...]
"""

import random
import sys
from fractions import Fraction

import sympy

from selmer_ratios import families
from selmer_ratios.curves import CurveModel, SingularCurveError, order_of

A, B = sympy.symbols("A B")


def sym(text: str) -> sympy.Expr:
    return sympy.expand(sympy.sympify(text.replace("^", "**"), locals={"A": A, "B": B}))


def invariants(a1, a2, a3, a4, a6):
    b2 = a1**2 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3**2 + 4 * a6
    b8 = a1**2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3**2 - a4**2
    c4 = b2**2 - 24 * b4
    c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
    disc = -(b2**2) * b8 - 8 * b4**3 - 27 * b6**2 + 9 * b2 * b4 * b6
    return sympy.expand(c4), sympy.expand(c6), sympy.expand(disc)


def check(G) -> list[str]:
    problems = []
    coeffs = [sym(c.text) for c in G.base_model.coefficients]
    c4, c6, disc = invariants(*coeffs)
    k = 6 / sympy.Rational(G.u.numerator, G.u.denominator)
    if sympy.expand(-27 * c4 - k**4 * sym(G.f4.text)) != 0:
        problems.append("c4 does not match f4")
    if sympy.expand(-54 * c6 - k**6 * sym(G.f6.text)) != 0:
        problems.append("c6 does not match f6")
    row = G.discriminants["O"]
    target = sympy.Rational(row.unit.numerator, row.unit.denominator)
    for g, e in row.factors:
        target *= sym(g.text) ** e
    if sympy.expand(disc - target) != 0:
        problems.append(f"discriminant differs from the O row by {sympy.cancel(disc / target)}")

    rng = random.Random(G.id)
    for name, pt in G.base_model.points.items():
        x, y = sym(pt.x.text), sym(pt.y.text)
        a1, a2, a3, a4, a6 = coeffs
        on = sympy.expand(y**2 + a1 * x * y + a3 * y - (x**3 + a2 * x**2 + a4 * x + a6))
        if on != 0:
            problems.append(f"point {name} is not on the model")
            continue
        for _ in range(5):
            Av, Bv = rng.randint(-40, 40), rng.randint(-40, 40)
            if G.discriminants["O"](Av, Bv) == 0:
                continue
            try:
                E = CurveModel.from_coefficients(G.base_model.at(Av, Bv))
            except SingularCurveError:
                continue
            P = (Fraction(pt.x(Av, Bv)), Fraction(pt.y(Av, Bv)))
            n = order_of(E, P, pt.order + 1)
            if n != pt.order:
                problems.append(f"point {name} has order {n} at ({Av},{Bv}), expected {pt.order}")
    return problems


def main(argv: list[str]) -> int:
    bad = 0
    for G in families.registry():
        if argv and G.id not in argv:
            continue
        if G.base_model is None:
            print(f"{G.id:8s} no base model")
            continue
        problems = check(G)
        bad += bool(problems)
        print(f"{G.id:8s} u={G.u}  " + ("ok" if not problems else "; ".join(problems)))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
