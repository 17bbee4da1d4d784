"""Weierstrass models over Q: invariants, group law, short forms, heights, local minimality."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from sympy import integer_nthroot

from .arith import factorize, primes_up_to, valuation

Point = Optional[tuple[Fraction, Fraction]]  # None is the point at infinity


class SingularCurveError(ValueError):
    pass


class NotOnCurveError(ValueError):
    pass


def _q(x: int | Fraction) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Invariants:
    b2: Fraction
    b4: Fraction
    b6: Fraction
    b8: Fraction
    c4: Fraction
    c6: Fraction
    disc: Fraction

    @property
    def j(self) -> Fraction:
        return self.c4**3 / self.disc


@dataclass(frozen=True)
class CurveModel:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 with an optional marked point of given order."""

    a1: Fraction
    a2: Fraction
    a3: Fraction
    a4: Fraction
    a6: Fraction
    marked_point: Point = None
    marked_order: int | None = None

    @classmethod
    def from_coefficients(
        cls, coeffs: Sequence[int | Fraction], point: Sequence[int | Fraction] | None = None, order: int | None = None
    ) -> "CurveModel":
        a1, a2, a3, a4, a6 = (_q(c) for c in coeffs)
        pt = None if point is None else (_q(point[0]), _q(point[1]))
        E = cls(a1, a2, a3, a4, a6, pt, order)
        invariants(E)  # rejects singular input
        if pt is not None:
            if not on_curve(E, pt):
                raise NotOnCurveError(f"marked point {pt} is not on the curve")
            if order is not None and exact_order(E, pt, order) is False:
                raise ValueError(f"marked point does not have exact order {order}")
        return E

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)


def invariants(E: CurveModel) -> Invariants:
    a1, a2, a3, a4, a6 = E.coefficients
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    c4 = b2 * b2 - 24 * b4
    c6 = -b2**3 + 36 * b2 * b4 - 216 * b6
    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    if disc == 0:
        raise SingularCurveError("singular model (discriminant 0)")
    return Invariants(b2, b4, b6, b8, c4, c6, disc)


def on_curve(E: CurveModel, P: Point) -> bool:
    if P is None:
        return True
    x, y = P
    a1, a2, a3, a4, a6 = E.coefficients
    return y * y + a1 * x * y + a3 * y == x**3 + a2 * x * x + a4 * x + a6


def negate(E: CurveModel, P: Point) -> Point:
    if P is None:
        return None
    x, y = P
    return (x, -y - E.a1 * x - E.a3)


def add(E: CurveModel, P: Point, Q: Point) -> Point:
    for R in (P, Q):
        if not on_curve(E, R):
            raise NotOnCurveError(f"{R} is not on the curve")
    return _add(E, P, Q)


def _add(E: CurveModel, P: Point, Q: Point) -> Point:
    if P is None:
        return Q
    if Q is None:
        return P
    a1, a2, a3, a4, a6 = E.coefficients
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if y1 + y2 + a1 * x2 + a3 == 0:
            return None
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / (2 * y1 + a1 * x1 + a3)
    else:
        lam = (y2 - y1) / (x2 - x1)
    nu = y1 - lam * x1
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = -(lam + a1) * x3 - nu - a3
    return (x3, y3)


def multiple(E: CurveModel, P: Point, k: int) -> Point:
    if not on_curve(E, P):
        raise NotOnCurveError(f"{P} is not on the curve")
    if k < 0:
        return multiple(E, negate(E, P), -k)
    acc: Point = None
    base = P
    while k:
        if k & 1:
            acc = _add(E, acc, base)
        base = _add(E, base, base)
        k >>= 1
    return acc


def order_of(E: CurveModel, P: Point, limit: int = 16) -> int | None:
    """Order of P if it is at most ``limit`` (torsion over Q never exceeds 12)."""
    Q = P
    for k in range(1, limit + 1):
        if Q is None:
            return k
        Q = _add(E, Q, P)
        if Q is None:
            return k + 1
    return None


def exact_order(E: CurveModel, P: Point, n: int) -> bool:
    return order_of(E, P, max(n, 1)) == n if P is not None else n == 1


# --------------------------------------------------------------------------- short models


@dataclass(frozen=True)
class ShortModel:
    a: int
    b: int
    minimal12: bool = False

    def __post_init__(self) -> None:
        if 4 * self.a**3 + 27 * self.b**2 == 0:
            raise SingularCurveError(f"4a^3 + 27b^2 = 0 for {(self.a, self.b)}")

    @property
    def disc(self) -> int:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b)


TRIAL_LIMIT = 100_000


def _iroot(n: int, k: int) -> int:
    return int(integer_nthroot(n, k)[0])


def twelfth_power_content(a: int, b: int) -> int:
    """Largest u > 0 with u^4 | a and u^6 | b."""
    if a == 0 and b == 0:
        raise ValueError("(0, 0) has no twelfth-power content")
    bounds = []
    if a:
        bounds.append(_iroot(abs(a), 4))
    if b:
        bounds.append(_iroot(abs(b), 6))
    bound = min(bounds)
    u = 1
    if bound <= TRIAL_LIMIT:
        for p in primes_up_to(bound):
            p4, p6 = p**4, p**6
            while a % p4 == 0 and b % p6 == 0:
                a //= p4
                b //= p6
                u *= p
        return u
    g = math.gcd(a, b)
    for p, _ in factorize(g).factors:
        p4, p6 = p**4, p**6
        while a % p4 == 0 and b % p6 == 0:
            a //= p4
            b //= p6
            u *= p
    return u


def reduce12(a: int, b: int) -> ShortModel:
    u = twelfth_power_content(a, b)
    return ShortModel(a // u**4, b // u**6, True)


def short_form(E: CurveModel) -> ShortModel:
    """Integral, twelfth-power-reduced y^2 = x^3 + a x + b isomorphic to E."""
    inv = invariants(E)
    a, b = -27 * inv.c4, -54 * inv.c6
    # clear denominators with u^4, u^6
    den = 1
    for p, e in factorize(math.lcm(a.denominator, b.denominator)).factors:
        k = max(-(-valuation(a.denominator, p) // 4) if a else 0, -(-valuation(b.denominator, p) // 6) if b else 0)
        den *= p**k
    A, B = a * den**4, b * den**6
    assert A.denominator == 1 and B.denominator == 1
    return reduce12(int(A), int(B))


def height(S: ShortModel) -> int:
    if not S.minimal12:
        if twelfth_power_content(S.a, S.b) != 1:
            raise ValueError("height needs a twelfth-power-reduced model")
    return max(abs(S.a) ** 3, S.b**2)


def _v(n: int | Fraction, p: int) -> float | int:
    return math.inf if n == 0 else valuation(n, p)


def minimal_valuations_from(c4: Fraction | int, c6: Fraction | int, disc: Fraction | int, p: int) -> tuple[int, int]:
    """(v(Delta_min), v(c4_min)) at p >= 5 from any model's invariants."""
    if p < 5:
        raise ValueError("excluded prime: minimal valuations are only computed for p >= 5")
    vd, v4, v6 = _v(disc, p), _v(c4, p), _v(c6, p)
    # inf // k is nan, so vanishing invariants are left out of the minimum
    t = min(int(v) // k for v, k in ((v4, 4), (v6, 6), (vd, 12)) if v != math.inf)
    vc4 = v4 - 4 * t if v4 != math.inf else math.inf
    return int(vd - 12 * t), vc4  # type: ignore[return-value]


def minimal_valuation(S: ShortModel, p: int) -> tuple[int, int | float]:
    """(v_p(Delta_min), v_p(c4_min)) for p >= 5; c4 = -48a so v_p(c4) = v_p(a)."""
    return minimal_valuations_from(-48 * S.a, -864 * S.b, S.disc, p)
