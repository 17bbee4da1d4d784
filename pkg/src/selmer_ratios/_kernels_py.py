"""Pure-Python versions of the compiled kernels (same signatures, same output order)."""

from __future__ import annotations

import math

import numpy as np

from .curves import twelfth_power_content

BACKEND = "python"


def grid_eval(polys: list, q: int) -> np.ndarray:
    out = np.empty((len(polys), q * q), dtype=np.int64)
    for idx, (ei, ej, c) in enumerate(polys):
        terms = [(int(i), int(j), int(z) % q) for i, j, z in zip(ei, ej, c)]
        row = out[idx]
        for A in range(q):
            pa = [pow(A, i, q) for i, _, _ in terms]
            for B in range(q):
                s = 0
                for (i, j, z), ai in zip(terms, pa):
                    s += z * ai * pow(B, j, q)
                row[A * q + B] = s % q
    return out


def weighted_reduced(A: int, B: int, w0: int, w1: int) -> bool:
    g = math.gcd(A, B)
    d = 2
    while d * d <= g:
        if g % d == 0:
            if A % d**w0 == 0 and B % d**w1 == 0:
                return False
            while g % d == 0:
                g //= d
        d += 1
    return not (g > 1 and A % g**w0 == 0 and B % g**w1 == 0)


def _eval(terms: tuple, A: int, B: int) -> int:
    return sum(c * A**i * B**j for i, j, c in terms)


def image_pair(f4: tuple, f6: tuple, A: int, B: int) -> tuple[int, int]:
    """Reduced (a, b) for one source pair, exact at any size."""
    a, b = _eval(f4, A, B), _eval(f6, A, B)
    u = twelfth_power_content(a, b)
    return a // u**4, b // u**6


def _terms(f) -> tuple:
    return tuple((int(i), int(j), int(c)) for i, j, c in zip(*f))


def enumerate_box(f4, f6, w0: int, w1: int, Amax: int, Bmax: int, amax: int, bmax: int, A_lo: int, A_hi: int):
    t4, t6 = _terms(f4), _terms(f6)
    out_a, out_b, out_A, out_B = [], [], [], []
    for A in range(A_lo, A_hi + 1):
        for B in range(-Bmax, Bmax + 1):
            if (A == 0 and B == 0) or not weighted_reduced(A, B, w0, w1):
                continue
            a, b = image_pair(t4, t6, A, B)
            if abs(a) > amax or abs(b) > bmax:
                continue
            out_a.append(a)
            out_b.append(b)
            out_A.append(A)
            out_B.append(B)
    arr = lambda xs: np.array(xs, dtype=object if any(abs(x) >= 2**62 for x in xs) else np.int64)  # noqa: E731
    return arr(out_a), arr(out_b), arr(out_A), arr(out_B), [], []
