"""Reduction type, Tamagawa numbers and local Tamagawa ratios at primes p >= 5."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .arith import is_square_mod
from .curves import ShortModel, minimal_valuation

GOOD, MULT, ADDITIVE = "good", "multiplicative", "additive"


class ExcludedPrimeError(ValueError):
    pass


@dataclass(frozen=True)
class ReductionRecord:
    p: int
    kind: str
    split: bool | None
    v_disc: int
    tamagawa: int | None
    n_class: Fraction | None = None

    def __post_init__(self) -> None:
        if (self.kind == GOOD) != (self.v_disc == 0):
            raise ValueError("good reduction iff the minimal discriminant is a unit")
        if (self.split is not None) != (self.kind == MULT):
            raise ValueError("split is defined exactly for multiplicative reduction")


def tamagawa_multiplicative(v_disc: int, split: bool) -> int:
    """c_p at multiplicative reduction: v(Delta) if split, else 1 or 2 by parity."""
    if split:
        return v_disc
    return 2 if v_disc % 2 == 0 else 1


def classify(S: ShortModel, p: int) -> ReductionRecord:
    if p < 5:
        raise ExcludedPrimeError(f"excluded prime {p}: classification only for p >= 5")
    vd, vc4 = minimal_valuation(S, p)
    if vd == 0:
        return ReductionRecord(p, GOOD, None, 0, 1)
    if vc4 != 0:
        # Additive Tamagawa numbers (<= 4) play no part in the ratios here.
        return ReductionRecord(p, ADDITIVE, None, vd, None)
    # Minimal model at p is S scaled by p^-t; the square class of -2ab is unchanged by that.
    split = node_is_split(S.a, S.b, p)
    return ReductionRecord(p, MULT, split, vd, tamagawa_multiplicative(vd, split))


def node_is_split(a: int, b: int, p: int) -> bool:
    """Split test for the node of y^2 = x^3 + a x + b mod p (a, b units).

    The node sits at x0 = -3b / (2a); the tangent slopes are the square roots of
    3 x0 = -9b / (2a), which is a square iff -2ab is.
    """
    return is_square_mod(-2 * a * b, p, strict=True)


def step_ratio(v: int, v_next: int, split: bool, degree: int, pseudo: bool = False) -> Fraction:
    """c(E')/c(E) for one isogeny step of prime degree at a multiplicative prime."""
    if pseudo:
        return Fraction(v_next, v)
    return Fraction(tamagawa_multiplicative(v_next, split), tamagawa_multiplicative(v, split))


def chain_ratio(vs: Sequence[int], split: bool, degrees: Sequence[int], pseudo_even: bool = False) -> Fraction:
    """Product of step ratios along a chain of prime-degree isogenies.

    ``vs`` are the minimal discriminant valuations along the chain (len(degrees) + 1).
    With ``pseudo_even`` the degree-2 steps use v'/v instead of the Tamagawa ratio.
    """
    if len(vs) != len(degrees) + 1:
        raise ValueError("need one valuation per curve in the chain")
    r = Fraction(1)
    for (v, w), d in zip(zip(vs, vs[1:]), degrees):
        r *= step_ratio(v, w, split, d, pseudo=pseudo_even and d == 2)
    return r


def n_class(rec: ReductionRecord, rec_prime: ReductionRecord, degree: int) -> Fraction:
    """Local Tamagawa ratio c(E')/c(E) for a prime-degree step (the n-class is log_degree of it)."""
    if rec.p != rec_prime.p:
        raise ValueError("records at different primes")
    if rec.p % degree == 0 or degree % rec.p == 0:
        raise ExcludedPrimeError("ratio rule undefined at p | deg(phi)")
    if rec.kind == GOOD:
        return Fraction(1)
    if rec.kind != MULT or rec_prime.kind != MULT:
        raise ValueError("n-class needs multiplicative reduction on both sides")
    return step_ratio(rec.v_disc, rec_prime.v_disc, bool(rec.split), degree)


def local_log_ratio(rec: ReductionRecord, rec_prime: ReductionRecord, degree: int, pseudo: bool = False) -> Fraction:
    """Exact r = c(E')/c(E); good primes give 1, pseudo mode gives v(Delta')/v(Delta)."""
    if rec.kind == GOOD:
        return Fraction(1)
    if pseudo and rec.kind == MULT:
        return Fraction(rec_prime.v_disc, rec.v_disc)
    return n_class(rec, rec_prime, degree)


def log_ratio(r: Fraction, degree: int) -> float:
    """s_v = log_degree(r), only for reporting."""
    return math.log(r) / math.log(degree)
