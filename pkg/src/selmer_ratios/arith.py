"""Exact integer and rational helpers: valuations, factorization, residues, prime streams."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from sympy import isprime as _isprime
from sympy.ntheory import pollard_rho as _pollard_rho

TRIAL_BOUND = 100_000
RHO_STEPS = 200_000
RHO_RETRIES = 8


class FactorizationBudgetError(ArithmeticError):
    """Raised when a number resists trial division and the capped rho search."""


class ZeroResidueError(ValueError):
    """Raised by strict residue tests when the tested value vanishes mod q."""


@dataclass(frozen=True)
class Factorization:
    value: int
    sign: int
    factors: tuple[tuple[int, int], ...]

    def product(self) -> int:
        out = self.sign
        for p, e in self.factors:
            out *= p**e
        return out

    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def exponent(self, p: int) -> int:
        for r, e in self.factors:
            if r == p:
                return e
        return 0


def valuation(n: int | Fraction, p: int) -> int:
    """Exponent of the prime ``p`` in the rational ``n``."""
    if n == 0:
        raise ValueError("valuation undefined for 0")
    if p < 2:
        raise ValueError(f"not a prime: {p}")
    n = Fraction(n)
    return _int_val(n.numerator, p) - _int_val(n.denominator, p)


def _int_val(n: int, p: int) -> int:
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


@lru_cache(maxsize=None)
def primes_up_to(bound: int) -> tuple[int, ...]:
    if bound < 2:
        return ()
    sieve = bytearray([1]) * (bound + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(bound) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, bound + 1, i)))
    return tuple(i for i, flag in enumerate(sieve) if flag)


def is_prime(n: int) -> bool:
    return n >= 2 and bool(_isprime(n))


def factorize(n: int, trial_bound: int = TRIAL_BOUND, rho_steps: int = RHO_STEPS) -> Factorization:
    """Complete factorization of a nonzero integer.

    Trial division runs up to ``trial_bound``; whatever survives is split with a
    capped Pollard rho. If the cap is hit the call fails rather than returning a
    partial answer.
    """
    if n == 0:
        raise ValueError("cannot factor 0")
    sign = -1 if n < 0 else 1
    m = abs(n)
    found: dict[int, int] = {}
    for p in primes_up_to(trial_bound):
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            found[p] = e
    if m > 1:
        for p in _split(m, rho_steps):
            found[p] = found.get(p, 0) + 1
    return Factorization(n, sign, tuple(sorted(found.items())))


def _split(m: int, rho_steps: int) -> list[int]:
    stack = [m]
    out: list[int] = []
    while stack:
        x = stack.pop()
        if x == 1:
            continue
        if is_prime(x):
            out.append(x)
            continue
        r = math.isqrt(x)
        if r * r == x:
            stack += [r, r]
            continue
        d = None
        for seed in range(RHO_RETRIES):
            d = _pollard_rho(x, s=2 + seed, a=1 + seed, retries=0, max_steps=rho_steps, seed=1234 + seed)
            if d and 1 < d < x:
                break
            d = None
        if d is None:
            raise FactorizationBudgetError(f"factorization budget exceeded for {x}")
        stack += [d, x // d]
    return out


def legendre(a: int, q: int) -> int:
    """Legendre symbol (a | q) for an odd prime q."""
    if q == 2:
        raise ValueError("residue tests need an odd prime; exclude q = 2")
    r = pow(a % q, (q - 1) // 2, q)
    return -1 if r == q - 1 else r


def is_square_mod(a: int, q: int, strict: bool = False) -> bool:
    """True iff ``a`` is a nonzero square mod the odd prime ``q``.

    A zero residue answers False; with ``strict`` it raises ZeroResidueError so
    callers that only expect units can tell the cases apart.
    """
    s = legendre(a, q)
    if s == 0 and strict:
        raise ZeroResidueError(f"{a} vanishes mod {q}")
    return s == 1


def primes_in_class(m: int, a: int, bound: int) -> list[int]:
    if m < 1:
        raise ValueError("modulus must be positive")
    if m > 1 and math.gcd(a, m) != 1:
        warnings.warn(f"gcd({a}, {m}) != 1: the class holds at most one prime", stacklevel=2)
        return []
    return [p for p in primes_up_to(bound) if p % m == a % m]


def mertens_ap(m: int, a: int, bound: int) -> float:
    return math.fsum(1.0 / p for p in primes_in_class(m, a, bound))


def units_mod(m: int) -> list[int]:
    return [a for a in range(m) if math.gcd(a, m) == 1] if m > 1 else [0]


def is_subgroup(residues: Iterable[int], m: int) -> bool:
    group = {r % m for r in residues}
    if not group or any(math.gcd(r, m) != 1 for r in group) and m > 1:
        return False
    return all((x * y) % m in group for x in group for y in group)
