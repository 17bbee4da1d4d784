# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: grid evaluation mod q and the height-box enumeration."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t
from libc.math cimport fabs, pow as cpow
from libcpp.vector cimport vector

cnp.import_array()

cdef extern from *:
    ctypedef long long int128 "__int128"

BACKEND = "cython"

cdef double SAFE = 4.0e18
cdef double SAFE128 = 1.0e37
cdef int64_t SAT = 9000000000000000000LL


def grid_eval(list polys, long q):
    """Values mod q of each polynomial on the grid (A, B) in F_q^2, flattened as A*q + B.

    ``polys`` holds (exp_A, exp_B, coeff) int64 triples of arrays; coefficients may be any size.
    """
    cdef Py_ssize_t k = len(polys)
    cdef Py_ssize_t n = q * q
    out = np.empty((k, n), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef int maxe = 0
    for ei, ej, _ in polys:
        if len(ei):
            maxe = max(maxe, int(np.max(ei)), int(np.max(ej)))
    tab = np.empty((q, maxe + 1), dtype=np.int64)
    cdef int64_t[:, ::1] pw = tab
    cdef long x, e, A, B, t, nt
    cdef int64_t s
    for x in range(q):
        pw[x, 0] = 1 % q
        for e in range(1, maxe + 1):
            pw[x, e] = (pw[x, e - 1] * x) % q
    cdef int64_t[::1] vi, vj, vc
    cdef Py_ssize_t idx
    for idx in range(k):
        ei, ej, c = polys[idx]
        vi = np.ascontiguousarray(ei, dtype=np.int64)
        vj = np.ascontiguousarray(ej, dtype=np.int64)
        vc = np.ascontiguousarray([int(z) % q for z in c], dtype=np.int64)
        nt = vi.shape[0]
        for A in range(q):
            for B in range(q):
                s = 0
                for t in range(nt):
                    s = (s + vc[t] * ((pw[A, vi[t]] * pw[B, vj[t]]) % q)) % q
                o[idx, A * q + B] = s
    return out


cdef inline int64_t _gcd(int64_t a, int64_t b) nogil:
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        a, b = b, a % b
    return a


cdef inline int64_t _ipow_sat(int64_t d, int e) nogil:
    cdef int64_t r = 1
    cdef int i
    for i in range(e):
        if r > SAT // d:
            return SAT
        r *= d
    return r


cdef bint _weighted_reduced(int64_t A, int64_t B, int w0, int w1) nogil:
    cdef int64_t g = _gcd(A, B)
    cdef int64_t d = 2
    if g == 1:
        return True
    while d * d <= g:
        if g % d == 0:
            if A % _ipow_sat(d, w0) == 0 and B % _ipow_sat(d, w1) == 0:
                return False
            while g % d == 0:
                g //= d
        d += 1
    if g > 1:
        if A % _ipow_sat(g, w0) == 0 and B % _ipow_sat(g, w1) == 0:
            return False
    return True


cdef inline int64_t _iroot_floor(int64_t n, int k) nogil:
    cdef int64_t r = <int64_t> cpow(<double> n, 1.0 / k)
    while r > 0 and _ipow_sat(r, k) > n:
        r -= 1
    while _ipow_sat(r + 1, k) <= n:
        r += 1
    return r


cdef int64_t _content12(int64_t a, int64_t b) nogil:
    """Largest u with u^4 | a, u^6 | b for |a|, |b| < 2^62, (a, b) != (0, 0)."""
    cdef int64_t g = _gcd(a, b)
    cdef int64_t aa = a if a >= 0 else -a
    cdef int64_t bb = b if b >= 0 else -b
    cdef int64_t bound, d, d4, d6
    cdef int64_t u = 1
    if g == 1:
        return 1
    if aa and bb:
        bound = min(_iroot_floor(aa, 4), _iroot_floor(bb, 6))
    elif aa:
        bound = _iroot_floor(aa, 4)
    else:
        bound = _iroot_floor(bb, 6)
    d = 2
    # u^4 divides g, so the search stops once d^4 passes what is left of g
    while d <= bound and _ipow_sat(d, 4) <= g:
        if g % d == 0:
            d4 = d * d * d * d
            d6 = _ipow_sat(d, 6)
            while a % d4 == 0 and (b == 0 or (d6 < SAT and b % d6 == 0)):
                a //= d4
                if b:
                    b //= d6
                u *= d
            while g % d == 0:
                g //= d
        d += 1
    return u


cdef inline int128 _pow128(int64_t x, int64_t e) nogil:
    cdef int128 r = 1
    cdef int64_t k
    for k in range(e):
        r *= x
    return r


cdef inline int128 _abs128(int128 x) nogil:
    return -x if x < 0 else x


cdef int128 _gcd128(int128 a, int128 b) nogil:
    a = _abs128(a)
    b = _abs128(b)
    while b:
        a, b = b, a % b
    return a


cdef int64_t _content12_128(int128 a, int128 b) nogil:
    """Same as _content12 for values beyond int64 (|a|, |b| < 1e37)."""
    cdef int128 g = _gcd128(a, b)
    cdef double aa = <double> _abs128(a)
    cdef double bb = <double> _abs128(b)
    cdef double bound
    cdef int128 d, d4, d6
    cdef int64_t u = 1
    if g == 1:
        return 1
    if a != 0 and b != 0:
        bound = min(cpow(aa, 0.25), cpow(bb, 1.0 / 6))
    elif a != 0:
        bound = cpow(aa, 0.25)
    else:
        bound = cpow(bb, 1.0 / 6)
    d = 2
    while <double> d <= bound + 1.0 and d * d * d * d <= g:
        if g % d == 0:
            d4 = d * d * d * d
            d6 = d4 * d * d
            while a % d4 == 0 and (b == 0 or b % d6 == 0):
                a //= d4
                if b != 0:
                    b //= d6
                u *= <int64_t> d
            while g % d == 0:
                g //= d
        d += 1
    return u


def enumerate_box(f4, f6, int w0, int w1, long long Amax, long long Bmax,
                  long long amax, long long bmax, long long A_lo, long long A_hi):
    """Weighted-reduced (A, B) in [A_lo, A_hi] x [-Bmax, Bmax] whose reduced image (a, b)
    satisfies |a| <= amax and |b| <= bmax. Bounds are capped at SAT by the caller; a
    capped bound sends reduced values past int64 to the overflow list.

    Values are exact in int64, or in 128-bit arithmetic when a bound says int64 might
    overflow. Returns int64 arrays (a, b, A, B) in iteration order plus the (A, B)
    pairs that might overflow even 128 bits; the caller finishes those exactly.
    """
    cdef int64_t[::1] i4 = np.ascontiguousarray(f4[0], dtype=np.int64)
    cdef int64_t[::1] j4 = np.ascontiguousarray(f4[1], dtype=np.int64)
    cdef int64_t[::1] c4 = np.ascontiguousarray(f4[2], dtype=np.int64)
    cdef int64_t[::1] i6 = np.ascontiguousarray(f6[0], dtype=np.int64)
    cdef int64_t[::1] j6 = np.ascontiguousarray(f6[1], dtype=np.int64)
    cdef int64_t[::1] c6 = np.ascontiguousarray(f6[2], dtype=np.int64)
    cdef int n4 = i4.shape[0], n6 = i6.shape[0]
    cdef int maxe = 0, t
    for t in range(n4):
        maxe = max(maxe, <int> i4[t], <int> j4[t])
    for t in range(n6):
        maxe = max(maxe, <int> i6[t], <int> j6[t])
    cdef vector[int64_t] pa_i, pb_i
    cdef vector[double] pa_d, pb_d
    pa_i.resize(maxe + 1)
    pb_i.resize(maxe + 1)
    pa_d.resize(maxe + 1)
    pb_d.resize(maxe + 1)
    cdef vector[int64_t] out_a, out_b, out_A, out_B
    overflow = []
    wide = []
    cdef int64_t A, B, a, b, u, u2
    cdef int128 a2, b2, w2
    cdef int128 LIM = <int128> SAT
    cdef double bound4, bound6
    cdef int e
    for A in range(A_lo, A_hi + 1):
        pa_i[0] = 1
        pa_d[0] = 1.0
        for e in range(1, maxe + 1):
            pa_d[e] = pa_d[e - 1] * fabs(<double> A)
            pa_i[e] = pa_i[e - 1] * A if pa_d[e] < SAFE else 0
        for B in range(-Bmax, Bmax + 1):
            if A == 0 and B == 0:
                continue
            if not _weighted_reduced(A, B, w0, w1):
                continue
            pb_i[0] = 1
            pb_d[0] = 1.0
            for e in range(1, maxe + 1):
                pb_d[e] = pb_d[e - 1] * fabs(<double> B)
                pb_i[e] = pb_i[e - 1] * B if pb_d[e] < SAFE else 0
            bound4 = 0.0
            for t in range(n4):
                bound4 += fabs(<double> c4[t]) * pa_d[i4[t]] * pb_d[j4[t]]
            bound6 = 0.0
            for t in range(n6):
                bound6 += fabs(<double> c6[t]) * pa_d[i6[t]] * pb_d[j6[t]]
            if bound4 >= SAFE128 or bound6 >= SAFE128:
                overflow.append((A, B))
                continue
            if bound4 >= SAFE or bound6 >= SAFE:
                a2 = 0
                for t in range(n4):
                    a2 += (<int128> c4[t]) * _pow128(A, i4[t]) * _pow128(B, j4[t])
                b2 = 0
                for t in range(n6):
                    b2 += (<int128> c6[t]) * _pow128(A, i6[t]) * _pow128(B, j6[t])
                u = _content12_128(a2, b2)
                if u > 1:
                    w2 = (<int128> u) * u
                    a2 //= w2 * w2
                    b2 //= w2 * w2 * w2
                if _abs128(a2) > LIM or _abs128(b2) > LIM:
                    # a bound at SAT was capped by the caller: hand back the exact
                    # value as (high, low) 64-bit halves and let Python compare
                    if amax >= SAT or bmax >= SAT:
                        wide.append((<int64_t> (a2 >> 64), <uint64_t> a2,
                                     <int64_t> (b2 >> 64), <uint64_t> b2, A, B))
                    continue
                a = <int64_t> a2
                b = <int64_t> b2
                if a > amax or -a > amax or b > bmax or -b > bmax:
                    continue
                out_a.push_back(a)
                out_b.push_back(b)
                out_A.push_back(A)
                out_B.push_back(B)
                continue
            a = 0
            for t in range(n4):
                a += c4[t] * (pa_i[i4[t]] * pb_i[j4[t]])
            b = 0
            for t in range(n6):
                b += c6[t] * (pa_i[i6[t]] * pb_i[j6[t]])
            u = _content12(a, b)
            if u > 1:
                u2 = u * u
                a //= u2 * u2
                b //= u2 * u2 * u2
            if a > amax or -a > amax or b > bmax or -b > bmax:
                continue
            out_a.push_back(a)
            out_b.push_back(b)
            out_A.push_back(A)
            out_B.push_back(B)
    cdef Py_ssize_t m = out_a.size()
    ra = np.empty(m, dtype=np.int64)
    rb = np.empty(m, dtype=np.int64)
    rA = np.empty(m, dtype=np.int64)
    rB = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] va = ra, vb = rb, vA = rA, vB = rB
    cdef Py_ssize_t k
    for k in range(m):
        va[k] = out_a[k]
        vb[k] = out_b[k]
        vA[k] = out_A[k]
        vB[k] = out_B[k]
    return ra, rb, rA, rB, overflow, wide
