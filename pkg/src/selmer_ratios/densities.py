"""Exact finite-field census reproducing the local-density tables.

Counting convention: each source pair (A, B) in F_q^2 is one unit of mass, so a
count divided by q^2 is the measure of the corresponding residue disc of
source pairs. Distinct image pairs (a, b) are recorded alongside as a
diagnostic.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import kernels
from .arith import is_prime, primes_up_to
from .families import (
    BadPrimeError,
    FamilyDescriptor,
    REDUCTION_CONDITIONS,
    WeightedPolynomial,
    _prediction,
    get,
    registry,
)
from .reduction import chain_ratio

MAX_MULTILEVEL_PAIRS = 4_000_000


class CensusError(ValueError):
    pass


@dataclass
class DensityCensus:
    family: str
    phi: str | None
    q: int
    counts: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)
    printed: dict = field(default_factory=dict)
    image_counts: dict = field(default_factory=dict)
    class_conflicts: int = 0
    collisions: int = 0

    def measured(self, condition) -> Fraction:
        return Fraction(self.counts[condition], self.q * self.q)


def _term_arrays(p: WeightedPolynomial) -> tuple:
    if not p.terms:
        return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), [])
    i, j, c = zip(*p.terms)
    return (np.array(i, dtype=np.int64), np.array(j, dtype=np.int64), list(c))


def _factor_table(G: FamilyDescriptor, rows: Iterable[str]) -> tuple[list[WeightedPolynomial], dict[str, list[int]]]:
    """Union of discriminant factors over ``rows`` and each row's exponent vector on it."""
    polys: dict[str, WeightedPolynomial] = {}
    for r in rows:
        for g, _ in G.discriminants[r].factors:
            polys.setdefault(g.text, g)
    texts = list(polys)
    exps = {}
    for r in rows:
        m = {g.text: e for g, e in G.discriminants[r].factors}
        exps[r] = [m.get(t, 0) for t in texts]
    return [polys[t] for t in texts], exps


def admissible(G: FamilyDescriptor, q: int, phi: str | None = None, allow_ramified: bool = False) -> bool:
    if not is_prime(q) or q < 5:
        return False
    if allow_ramified and phi in (None, "O"):
        return True
    return q not in G.excluded_primes(phi)


def _squares(q: int) -> np.ndarray:
    sq = np.zeros(q, dtype=bool)
    sq[(np.arange(1, q, dtype=np.int64) ** 2) % q] = True
    return sq


def census(G: FamilyDescriptor, phi: str | None, q: int, allow_ramified: bool = False) -> DensityCensus:
    """Count source pairs mod q by reduction condition (and n-class when ``phi`` is given)."""
    if not admissible(G, q, phi, allow_ramified):
        raise CensusError(f"q = {q} is excluded for {G.id} {phi or ''}".strip())
    chain = ()
    if phi not in (None, "O"):
        if phi not in G.isogeny_densities:
            raise KeyError(f"{G.id} has no density table for {phi}; available: {sorted(G.isogeny_densities)}")
        chain = G.isogeny_densities[phi].chain
    rows = ["O", *chain]
    factors, exps = _factor_table(G, rows)
    grid = kernels.grid_eval([_term_arrays(G.f4), _term_arrays(G.f6)] + [_term_arrays(g) for g in factors], q)
    a, b, gv = grid[0], grid[1], grid[2:]
    disc = (4 * a * a % q * a + 27 * b * b) % q
    good = disc != 0
    add0 = (a == 0) & (b == 0)
    mult = (disc == 0) & (a != 0)
    split = mult & _squares(q)[(-2 * a * b) % q]

    res = DensityCensus(G.id, phi, q)
    res.counts = {"good": int(good.sum()), "mult": int(mult.sum()), "split": int(split.sum()), "additive": int(add0.sum())}
    for name, mask in (("good", good), ("mult", mult), ("split", split), ("additive", add0)):
        res.image_counts[name] = len(set(zip(a[mask].tolist(), b[mask].tolist())))

    try:
        local = G.local_row(q)
    except BadPrimeError:
        local = None
    if local is not None:
        for c in REDUCTION_CONDITIONS:
            res.predictions[c] = local.kappa[c](q)
            res.printed[c] = local.printed[c](q)

    if not chain:
        return res

    table = G.isogeny_densities[phi]
    degrees = []
    prev = 1
    for r in chain:
        d = G.phi_degree(r)
        degrees.append(d // prev)
        prev = d
    vanish = gv == 0
    nvan = vanish.sum(axis=0)
    res.collisions = int((mult & (nvan != 1)).sum())
    which = np.argmax(vanish, axis=0)
    ratios = np.zeros(q * q, dtype=np.int64)  # index into alphabet, -1 when unassigned
    ratios[:] = -1
    for i in range(len(factors)):
        vs = [exps[r][i] for r in rows]
        if vs[0] == 0:
            continue
        for is_split in (False, True):
            sel = mult & (nvan == 1) & (which == i) & (split == is_split)
            if not sel.any():
                continue
            r = chain_ratio(vs, is_split, degrees)
            try:
                ratios[sel] = table.alphabet.index(r)
            except ValueError:
                raise CensusError(f"ratio {r} outside the alphabet of {G.id} {phi}") from None
    for k, r in enumerate(table.alphabet):
        mask = ratios == k
        res.counts[r] = int(mask.sum())
        res.image_counts[r] = len(set(zip(a[mask].tolist(), b[mask].tolist())))
    # image pairs whose source pairs fall in different n-classes
    pairs: dict[tuple[int, int], set] = {}
    for x, y, n in zip(a[mult].tolist(), b[mult].tolist(), ratios[mult].tolist()):
        pairs.setdefault((x, y), set()).add(n)
    res.class_conflicts = sum(1 for v in pairs.values() if len(v) > 1)
    try:
        row = table.row_for(q)
        for k, r in enumerate(table.alphabet):
            res.predictions[r] = row.kappa[k](q)
            res.printed[r] = row.printed[k](q)
    except BadPrimeError:
        pass
    return res


def measured_additive(G: FamilyDescriptor, c: DensityCensus) -> Fraction:
    """Level-0 additive mass minus the non-reduced source pairs, q^-(w0+w1)."""
    return Fraction(c.counts["additive"], c.q**2) - Fraction(1, c.q**G.weight_sum)


def census_additive_multilevel(G: FamilyDescriptor, q: int, depth: int) -> Fraction:
    """Additive measure seen at resolution q^depth.

    Source pairs mod q^depth are kept when their reduction mod q lands in the
    level-0 additive locus and they are not visibly non-reduced, i.e. not
    (A = 0 mod q^min(w0,depth) and B = 0 mod q^min(w1,depth)).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    Q = q**depth
    if Q * Q > MAX_MULTILEVEL_PAIRS:
        raise CensusError(f"depth budget exceeded: {Q}^2 source pairs")
    grid = kernels.grid_eval([_term_arrays(G.f4), _term_arrays(G.f6)], q)
    locus = ((grid[0] == 0) & (grid[1] == 0)).reshape(q, q)
    A = np.arange(Q, dtype=np.int64)
    in_locus = locus[(A % q)[:, None], (A % q)[None, :]]
    ka, kb = q ** min(G.weights[0], depth), q ** min(G.weights[1], depth)
    nonred = ((A % ka) == 0)[:, None] & ((A % kb) == 0)[None, :]
    return Fraction(int((in_locus & ~nonred).sum()), Q * Q)


def additive_truncated_prediction(G: FamilyDescriptor, q: int, depth: int) -> Fraction:
    """Table additive density with the non-reduced tail cut at resolution q^depth."""
    w0, w1 = G.weights
    full = G.local_row(q).kappa["additive"](q)
    return full + Fraction(1, q ** (w0 + w1)) - Fraction(1, q ** (min(w0, depth) + min(w1, depth)))


# --------------------------------------------------------------------------- table verification


@dataclass(frozen=True)
class CheckRecord:
    family: str
    phi: str
    q: int
    condition: str
    counted: Fraction | None
    predicted: Fraction | None
    passed: bool
    kind: str = "census"
    printed: Fraction | None = None

    @property
    def erratum(self) -> bool:
        """The check passes only against a recorded correction of the printed value."""
        return self.printed is not None and self.printed != self.predicted

    def as_dict(self) -> dict:
        def frac(x: Fraction | None) -> tuple[str, str]:
            return ("", "") if x is None else (str(x.numerator), str(x.denominator))

        cn, cd = frac(self.counted)
        pn, pd = frac(self.predicted)
        return {
            "family": self.family,
            "phi": self.phi,
            "q": self.q,
            "condition": self.condition,
            "kind": self.kind,
            "counted_num": cn,
            "counted_den": cd,
            "predicted_num": pn,
            "predicted_den": pd,
            "printed": "" if self.printed is None else str(self.printed),
            "erratum": self.erratum,
            "pass": self.passed,
        }


def _cond_label(c) -> str:
    return c if isinstance(c, str) else f"r={c}"


def check_family_prime(fid: str, q: int, phis: tuple[str | None, ...], ramified: bool = False) -> list[CheckRecord]:
    G = get(fid)
    out: list[CheckRecord] = []
    w = G.weight_sum
    for phi in phis:
        label = phi or "O"
        if not admissible(G, q, phi, allow_ramified=ramified):
            continue
        c = census(G, phi, q, allow_ramified=ramified)
        if phi is None:
            if not c.predictions:
                continue
            for cond in REDUCTION_CONDITIONS:
                counted = measured_additive(G, c) if cond == "additive" else c.measured(cond)
                pred = c.predictions[cond]
                out.append(CheckRecord(G.id, label, q, cond, counted, pred, counted == pred, printed=c.printed[cond]))
            p = c.predictions
            total = p["good"] + p["additive"] + p["mult"]
            target = 1 - Fraction(1, q**w)
            out.append(CheckRecord(G.id, label, q, "sum-rule", total, target, total == target, "identity"))
            out.append(CheckRecord(G.id, label, q, "split<=mult", p["split"], p["mult"], p["split"] <= p["mult"], "identity"))
        else:
            table = G.isogeny_densities[phi]
            if not c.predictions:
                continue
            for r in table.alphabet:
                counted, pred = c.measured(r), c.predictions[r]
                out.append(CheckRecord(G.id, label, q, _cond_label(r), counted, pred, counted == pred, printed=c.printed[r]))
            total = sum((c.predictions[r] for r in table.alphabet), Fraction(0))
            mult = _prediction(G, "mult", q, None)
            out.append(CheckRecord(G.id, label, q, "n-partition", total, mult, total == mult, "identity"))
            out.append(CheckRecord(G.id, label, q, "collisions", Fraction(c.collisions), Fraction(0), c.collisions == 0, "diagnostic"))
    return out


def _tasks(q_max: int, family: str | None, phi: str | None, ramified: bool) -> list[tuple[str, int, tuple]]:
    fams = [get(family)] if family else list(registry())
    tasks = []
    for G in fams:
        if phi is None:
            phis: tuple = (None, *G.isogeny_densities)
        elif phi == "O":
            phis = (None,)
        else:
            if phi not in G.isogeny_densities:
                raise KeyError(f"{G.id} has no density table for {phi}; available: {sorted(G.isogeny_densities)}")
            phis = (phi,)
        for q in primes_up_to(q_max):
            if q >= 5:
                tasks.append((G.id, q, phis, ramified))
    return tasks


def _run(task: tuple) -> list[CheckRecord]:
    return check_family_prime(*task)


def verify_tables(
    q_max: int, family: str | None = None, phi: str | None = None, workers: int | None = None, ramified: bool = False
) -> list[CheckRecord]:
    """Census versus tables for every family, admissible q <= q_max and printed condition.

    Records come back in (family, q, phi) order whatever the worker count.
    """
    tasks = _tasks(q_max, family, phi, ramified)
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(tasks) < 2:
        chunks = [_run(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run, tasks, chunksize=4))
    return [r for chunk in chunks for r in chunk]


def ramified_records(q_max: int, family: str | None = None) -> list[CheckRecord]:
    """Census at primes dividing the level (q >= 5), for rows printed for those classes."""
    out = []
    for fid, q, phis, _ in _tasks(q_max, family, "O", True):
        G = get(fid)
        if q in G.excluded_primes(None) and any(q in r.classes and r.classes.ramified for r in G.local_densities):
            out += [
                CheckRecord(r.family, r.phi, r.q, r.condition, r.counted, r.predicted, r.passed, "ramified", r.printed)
                for r in check_family_prime(fid, q, (None,), True)
            ]
    return out


# --------------------------------------------------------------------------- higher-level n-classes


def _eval_mod(p: WeightedPolynomial, A: np.ndarray, B: np.ndarray, Q: int) -> np.ndarray:
    out = np.zeros(np.broadcast(A, B).shape, dtype=np.int64)
    for i, j, c in p.terms:
        out = (out + (c % Q) * (pow_mod(A, i, Q) * pow_mod(B, j, Q) % Q)) % Q
    return out


def pow_mod(x: np.ndarray, e: int, Q: int) -> np.ndarray:
    r = np.ones_like(x)
    for _ in range(e):
        r = r * x % Q
    return r


def nclass_multilevel(G: FamilyDescriptor, phi: str, q: int, depth: int) -> dict:
    """Share of each n-class among source pairs mod q^depth using true valuations.

    The level-0 census assumes v(Delta) equals the factor exponent. Here the
    valuation k of the vanishing factor is read mod q^depth (capped at depth),
    so v = k*e along the chain and the Tamagawa rule sees its true parity.
    """
    if not admissible(G, q, phi):
        raise CensusError(f"q = {q} is excluded for {G.id} {phi}")
    Q = q**depth
    if Q * Q > MAX_MULTILEVEL_PAIRS:
        raise CensusError(f"depth budget exceeded: {Q}^2 source pairs")
    table = G.isogeny_densities[phi]
    rows = ["O", *table.chain]
    factors, exps = _factor_table(G, rows)
    degrees, prev = [], 1
    for r in table.chain:
        d = G.phi_degree(r)
        degrees.append(d // prev)
        prev = d
    sq = _squares(q)
    counts = {r: 0 for r in table.alphabet}
    B = np.arange(Q, dtype=np.int64)[None, :]
    for A0 in range(0, Q, max(1, MAX_MULTILEVEL_PAIRS // (4 * Q))):
        A = np.arange(A0, min(Q, A0 + max(1, MAX_MULTILEVEL_PAIRS // (4 * Q))), dtype=np.int64)[:, None]
        a = _eval_mod(G.f4, A, B, q)
        b = _eval_mod(G.f6, A, B, q)
        mult = ((4 * a * a % q * a + 27 * b * b) % q == 0) & (a != 0)
        split = sq[(-2 * a * b) % q]
        vals = [_eval_mod(g, A, B, Q) for g in factors]
        for i, g in enumerate(vals):
            if exps["O"][i] == 0:
                continue
            on = mult & (g % q == 0)
            if not on.any():
                continue
            k = np.zeros(g.shape, dtype=np.int64)
            rest = g.copy()
            for _ in range(depth):
                hit = (rest % q == 0) & on
                k += hit
                rest = np.where(hit, rest // q, rest)
            for kk in range(1, depth + 1):
                for is_split in (False, True):
                    sel = on & (k == kk) & (split == is_split)
                    n = int(sel.sum())
                    if n:
                        r = chain_ratio([kk * exps[row][i] for row in rows], is_split, degrees)
                        counts[r] = counts.get(r, 0) + n
    return {r: Fraction(c, Q * Q) for r, c in counts.items()}
