"""Velu quotients by rational cyclic kernels, prime-step chains, and table cross-checks."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Iterator
from fractions import Fraction

from sympy import factorint

from . import families as fam_mod
from .curves import CurveModel, Point, _add, invariants, multiple, negate, on_curve, order_of
from .families import FamilyDescriptor, twelfth_root_23

log = logging.getLogger(__name__)


class KernelOrderError(ValueError):
    pass


@dataclass(frozen=True)
class _KernelSums:
    reps: tuple[tuple[Fraction, Fraction, Fraction, Fraction, Fraction, Fraction], ...]  # x, y, gx, gy, t, u
    t: Fraction
    w: Fraction


def kernel_points(E: CurveModel, P: Point, n: int) -> list[Point]:
    """[P, 2P, ..., (n-1)P], checking that P has exact order n."""
    if not on_curve(E, P):
        raise KernelOrderError("kernel generator is not on the curve")
    pts: list[Point] = []
    Q = P
    for _ in range(1, n):
        if Q is None:
            raise KernelOrderError(f"point has order smaller than {n}")
        pts.append(Q)
        Q = _add(E, Q, P)
    if Q is not None:
        raise KernelOrderError(f"point does not have order {n}")
    return pts


def _sums(E: CurveModel, P: Point, n: int) -> _KernelSums:
    a1, a2, a3, a4, _ = E.coefficients
    pts = kernel_points(E, P, n)
    seen: set[tuple[Fraction, Fraction]] = set()
    reps = []
    for Q in pts:
        assert Q is not None
        x, y = Q
        if not (isinstance(x, Fraction) and isinstance(y, Fraction)):
            raise TypeError("kernel points must be rational")
        if Q in seen:
            continue
        negQ = negate(E, Q)
        seen.add(Q)
        seen.add(negQ)  # type: ignore[arg-type]
        gx = 3 * x * x + 2 * a2 * x + a4 - a1 * y
        gy = -2 * y - a1 * x - a3
        t = gx if negQ == Q else 2 * gx - a1 * gy
        u = gy * gy
        reps.append((x, y, gx, gy, t, u))
    t = sum((r[4] for r in reps), Fraction(0))
    w = sum((r[5] + r[0] * r[4] for r in reps), Fraction(0))
    return _KernelSums(tuple(reps), t, w)


def velu_quotient(E: CurveModel, P: Point, n: int) -> CurveModel:
    """E / <P> for a rational point P of exact order n (n = 1 returns E)."""
    if n == 1:
        if P is not None:
            raise KernelOrderError("order 1 needs the point at infinity")
        return E
    s = _sums(E, P, n)
    b2 = invariants(E).b2
    a1, a2, a3, a4, a6 = E.coefficients
    return CurveModel(a1, a2, a3, a4 - 5 * s.t, a6 - b2 * s.t - 7 * s.w)


def velu_map(E: CurveModel, P: Point, n: int, R: Point) -> Point:
    """Image of R under the Velu isogeny with kernel <P>."""
    if R is None:
        return None
    s = _sums(E, P, n)
    a1, _, a3, _, _ = E.coefficients
    x, y = R
    kernel = {Q for Q in kernel_points(E, P, n)}
    if R in kernel:
        return None
    X, Y = x, y
    for xq, yq, gx, gy, t, u in s.reps:
        d = x - xq
        X += t / d + u / (d * d)
        Y -= u * (2 * y + a1 * x + a3) / d**3 + t * (a1 * d + y - yq) / (d * d) + (a1 * u - gx * gy) / (d * d)
    return (X, Y)


def _prime_steps(n: int) -> list[int]:
    out: list[int] = []
    for p, e in sorted(factorint(n).items()):
        out += [p] * e
    return out


def composite_chain(E: CurveModel, P: Point, n: int, steps: list[int] | None = None) -> list[CurveModel]:
    """[E, E_1, ..., E_k]: the quotient by <P> realised as prime-degree Velu steps.

    ``steps`` fixes the order of the prime degrees (default ascending).
    """
    if order_of(E, P, n) != n:
        raise KernelOrderError(f"point does not have order {n}")
    steps = list(steps) if steps is not None else _prime_steps(n)
    prod = 1
    for s in steps:
        prod *= s
    if prod != n:
        raise ValueError(f"steps {steps} do not multiply to {n}")
    chain = [E]
    cur, gen, remaining = E, P, n
    for ell in steps:
        K = multiple(cur, gen, remaining // ell)
        nxt = velu_quotient(cur, K, ell)
        gen = velu_map(cur, K, ell, gen)
        remaining //= ell
        if remaining > 1 and order_of(nxt, gen, remaining) != remaining:
            raise KernelOrderError("image of the generator lost order along the chain")
        cur = nxt
        chain.append(cur)
    return chain


def j_invariant(E: CurveModel) -> Fraction:
    return invariants(E).j


# --------------------------------------------------------------------------- table checks


def base_curve(G: FamilyDescriptor, A: int, B: int) -> CurveModel:
    if G.base_model is None:
        raise ValueError(f"{G.id} has no base model in the data file")
    return CurveModel.from_coefficients(G.base_model.at(A, B))


def family_kernel(G: FamilyDescriptor, phi: str, A: int, B: int) -> tuple[CurveModel, Point, int]:
    """(E, generator of ker phi, its order) at (A, B)."""
    E = base_curve(G, A, B)
    assert G.base_model is not None
    (x, y), mult = G.base_model.kernel_point(phi, A, B)
    P = (Fraction(x), Fraction(y))
    name = G.base_model.kernels[phi][0]
    order = G.base_model.points[name].order
    K = multiple(E, P, mult)
    return E, K, order // mult


@dataclass
class DiscriminantReport:
    family: str
    phi: str
    samples: int = 0
    skipped: list[tuple[int, int]] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    units: set[Fraction] = field(default_factory=set)

    @property
    def passed(self) -> bool:
        return not self.failures and len(self.units) <= 1 and self.samples > 0

    def as_records(self) -> list[dict]:
        return [
            {
                "family": self.family,
                "phi": self.phi,
                "samples": self.samples,
                "skipped": len(self.skipped),
                "failures": len(self.failures),
                "u": ",".join(str(u) for u in sorted(self.units)),
                "pass": self.passed,
            }
        ]


def sample_points(rng: random.Random, samples: int, bound: int) -> list[tuple[int, int]]:
    pts = []
    while len(pts) < samples:
        A, B = rng.randint(-bound, bound), rng.randint(-bound, bound)
        if (A, B) != (0, 0):
            pts.append((A, B))
    return pts


def _stream(rng: random.Random, rep: DiscriminantReport, samples: int, bound: int) -> Iterator[tuple[int, int]]:
    """Random points until ``samples`` of them have been evaluated; degenerate ones are skipped."""
    draws = 0
    while rep.samples < samples:
        draws += 1
        if draws > 50 * samples + 100:
            raise RuntimeError(f"{rep.family} {rep.phi}: too many degenerate samples in the box |A|,|B| <= {bound}")
        yield sample_points(rng, 1, bound)[0]


def dual_discriminant_check(
    G: FamilyDescriptor, phi: str, samples: int = 100, bound: int = 50, seed: int = 0
) -> DiscriminantReport:
    """Compare Delta(E / ker phi) with the table row phi at random (A, B)."""
    rep = DiscriminantReport(G.id, phi)
    rng = random.Random(f"{G.id}/{phi}/{seed}")
    row = G.discriminants[phi]
    degree = G.phi_degree(phi)
    chain = G.isogeny_densities[phi].chain if phi in G.isogeny_densities else (phi,)
    for A, B in _stream(rng, rep, samples, bound):
        table = row(A, B)
        if table == 0 or G.discriminants["O"](A, B) == 0:
            rep.skipped.append((A, B))
            log.debug("%s %s: degenerate sample %s skipped", G.id, phi, (A, B))
            continue
        E, K, order = family_kernel(G, phi, A, B)
        if order != degree:
            raise KernelOrderError(f"{G.id} {phi}: kernel order {order} != degree {degree}")
        if len(chain) > 1:
            Ep = composite_chain(E, K, order)[-1]
        else:
            Ep = velu_quotient(E, K, order)
        rep.samples += 1
        u = twelfth_root_23(invariants(Ep).disc / table)
        if u is None:
            rep.failures.append({"A": A, "B": B, "ratio": str(invariants(Ep).disc / table)})
        else:
            rep.units.add(u)
    return rep


def short_discriminant_check(G: FamilyDescriptor, samples: int = 100, bound: int = 50, seed: int = 0) -> DiscriminantReport:
    """-16(4a^3 + 27b^2) against u^12 times the {O} row with the family's fixed u."""
    rep = DiscriminantReport(G.id, "O")
    rng = random.Random(f"{G.id}/short/{seed}")
    row = G.discriminants["O"]
    for A, B in _stream(rng, rep, samples, bound):
        a, b = fam_mod.evaluate_f(G, A, B)
        lhs = fam_mod.short_discriminant(a, b)
        rhs = row(A, B)
        if rhs == 0:
            rep.skipped.append((A, B))
            if lhs != 0:
                rep.failures.append({"A": A, "B": B, "ratio": "table vanishes, short form does not"})
            continue
        rep.samples += 1
        if Fraction(lhs) != G.u**12 * rhs:
            rep.failures.append({"A": A, "B": B, "ratio": str(Fraction(lhs) / rhs)})
        rep.units.add(G.u)
    return rep


def example_polynomial_check(G: FamilyDescriptor, phi: str, samples: int = 20, bound: int = 50, seed: int = 0) -> DiscriminantReport:
    """Short form of the Velu quotient against a printed isogenous family (f4', f6').

    Passes when one rational mu gives (-27 c4', -54 c6') = (mu^4 f4', mu^6 f6') at every sample.
    """
    rep = DiscriminantReport(G.id, f"{phi} example")
    g4, g6 = G.isogenous_example[phi]
    rng = random.Random(f"{G.id}/example/{seed}")
    for A, B in _stream(rng, rep, samples, bound):
        if G.discriminants[phi](A, B) == 0 or G.discriminants["O"](A, B) == 0:
            rep.skipped.append((A, B))
            continue
        E, K, order = family_kernel(G, phi, A, B)
        inv = invariants(velu_quotient(E, K, order))
        a, b = -27 * inv.c4, -54 * inv.c6
        t4, t6 = g4(A, B), g6(A, B)
        rep.samples += 1
        if t4 == 0 or t6 == 0:
            ok = (a == 0) == (t4 == 0) and (b == 0) == (t6 == 0)
            if not ok:
                rep.failures.append({"A": A, "B": B, "ratio": "zero pattern differs"})
            continue
        # mu^2 = (b/t6) / (a/t4)
        mu2 = (b / t6) / (a / t4)
        if (a / t4) != mu2**2:
            rep.failures.append({"A": A, "B": B, "ratio": f"a/t4={a / t4}, b/t6={b / t6}"})
            continue
        rep.units.add(mu2)
    return rep


def discriminant_suite(samples: int = 100, bound: int = 50, seed: int = 0, families: list[str] | None = None) -> list[DiscriminantReport]:
    """Short-form check for every family, Velu check for every recorded kernel, and the printed isogenous example."""
    out = []
    for G in fam_mod.registry():
        if families and G.id not in families:
            continue
        out.append(short_discriminant_check(G, samples, bound, seed))
        if G.base_model is None:
            continue
        for phi in G.base_model.kernels:
            out.append(dual_discriminant_check(G, phi, samples, bound, seed))
        for phi in G.isogenous_example:
            out.append(example_polynomial_check(G, phi, min(samples, 20), bound, seed))
    return out
