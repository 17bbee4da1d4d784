"""Height-ordered family samples, logarithmic Selmer ratios and their empirical distribution."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from sympy import integer_nthroot

from . import kernels
from .arith import FactorizationBudgetError, factorize
from .constants import LogValue, assemble, check_subgroup, full_group, log_ratio_exact
from .curves import invariants, minimal_valuations_from
from .densities import MAX_MULTILEVEL_PAIRS, _term_arrays, nclass_multilevel
from .families import BadPrimeError, FamilyDescriptor, get
from .isogeny import _prime_steps, composite_chain, family_kernel
from .reduction import ADDITIVE, GOOD, MULT, chain_ratio, node_is_split, tamagawa_multiplicative

DEFAULT_TRACKED = (5, 7, 11, 13)
DROP_LIMIT = 0.001


class UnsupportedFamilyError(ValueError):
    pass


# --------------------------------------------------------------------------- enumeration


@dataclass(frozen=True)
class SampledCurve:
    a: int
    b: int
    A: int
    B: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b)

    @property
    def height(self) -> int:
        return max(abs(self.a) ** 3, self.b * self.b)


@dataclass
class FamilySample:
    family: str
    height_bound: int
    margin: Fraction
    box: tuple[int, int]
    curves: list[SampledCurve]
    source_pairs: int = 0

    def keys(self) -> set[tuple[int, int]]:
        return {c.key for c in self.curves}


def box_bounds(G: FamilyDescriptor, X: int, margin: Fraction | int = 2) -> tuple[int, int]:
    """floor(margin^w * X^(w / 12 delta)) for each weight, computed exactly."""
    m = Fraction(margin)
    k = 12 * G.delta
    out = []
    for w in G.weights:
        root = int(integer_nthroot(m.numerator ** (w * k) * X**w, k)[0])
        out.append(root // m.denominator**w)
    return out[0], out[1]


def _ranges(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, hi - lo + 1))
    step = -(-(hi - lo + 1) // parts)
    return [(s, min(s + step - 1, hi)) for s in range(lo, hi + 1, step)]


def _box_task(args: tuple) -> tuple:
    fid, Amax, Bmax, amax, bmax, lo, hi = args
    G = get(fid)
    return kernels.enumerate_box(
        _term_arrays(G.f4), _term_arrays(G.f6), G.weights[0], G.weights[1], Amax, Bmax, amax, bmax, lo, hi
    )


def enumerate_family(G: FamilyDescriptor | str, X: int, margin: Fraction | int = 2, workers: int = 1) -> FamilySample:
    """Curves of height <= X reached from weighted-reduced source pairs in the margin box.

    Curves are deduplicated by reduced model, keeping the first source pair in
    (A, B) order; the result does not depend on ``workers``.
    """
    if isinstance(G, str):
        G = get(G)
    if Fraction(margin) < 1:
        raise ValueError("margin must be >= 1")
    if X < 1:
        raise ValueError("height bound must be positive")
    Amax, Bmax = box_bounds(G, X, margin)
    amax, bmax = int(integer_nthroot(X, 3)[0]), math.isqrt(X)
    tasks = [(G.id, Amax, Bmax, amax, bmax, lo, hi) for lo, hi in _ranges(-Amax, Amax, 4 * max(workers, 1))]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_box_task, tasks))
    else:
        parts = [_box_task(t) for t in tasks]
    seen: set[tuple[int, int]] = set()
    curves: list[SampledCurve] = []
    total = 0
    for a, b, A, B in parts:
        total += len(a)
        for x, y, s, t in zip(a.tolist(), b.tolist(), A.tolist(), B.tolist()):
            if 4 * x**3 + 27 * y * y == 0 or (x, y) in seen:
                continue
            seen.add((x, y))
            curves.append(SampledCurve(int(x), int(y), int(s), int(t)))
    return FamilySample(G.id, X, Fraction(margin), (Amax, Bmax), curves, total)


# --------------------------------------------------------------------------- Selmer ratios


@dataclass(frozen=True)
class LocalRecord:
    """Reduction data at one prime: valuations along the isogeny chain and both ratios."""

    p: int
    kind: str
    split: bool | None
    valuations: tuple[int, ...]
    tamagawa_ratio: Fraction | None  # c(E')/c(E), decides the n-class
    selmer_ratio: Fraction  # the factor entering s(E)

    @property
    def tamagawa(self) -> int | None:
        if self.kind != MULT:
            return None
        return tamagawa_multiplicative(self.valuations[0], bool(self.split))


@dataclass
class SelmerRatio:
    degree: int
    records: list[LocalRecord]
    prime_cap: int | None = None

    @property
    def ratios(self) -> dict[Fraction, int]:
        """Multiplicity of each local ratio over the multiplicative primes."""
        out: dict[Fraction, int] = {}
        for r in self.records:
            if r.kind == MULT:
                out[r.selmer_ratio] = out.get(r.selmer_ratio, 0) + 1
        return dict(sorted(out.items()))

    @property
    def s(self) -> LogValue:
        total = LogValue()
        for r, k in self.ratios.items():
            total = total + log_ratio_exact(r, self.degree) * k
        return total

    def record_at(self, p: int) -> LocalRecord | None:
        for r in self.records:
            if r.p == p:
                return r
        return None


def _require_model(G: FamilyDescriptor, phi: str) -> None:
    if G.base_model is None:
        raise UnsupportedFamilyError(f"{G.id} has no base model; Selmer ratios need an explicit kernel")
    if phi not in G.base_model.kernels:
        raise UnsupportedFamilyError(f"{G.id} has no kernel for {phi}; available: {sorted(G.base_model.kernels)}")


def selmer_log_ratio(
    G: FamilyDescriptor | str,
    phi: str,
    A: int,
    B: int,
    prime_cap: int | None = None,
    trial_bound: int = 100_000,
    rho_steps: int = 200_000,
) -> SelmerRatio:
    """Local data of the family curve at (A, B) and s(E) = log_d of the Selmer ratio.

    Primes dividing 6 * level * deg are skipped. At multiplicative primes the
    isogeny chain is built with Velu and each step contributes the Tamagawa
    ratio, except degree-2 steps, which contribute v(Delta')/v(Delta).
    Raises FactorizationBudgetError when a discriminant factor cannot be split.
    """
    if isinstance(G, str):
        G = get(G)
    _require_model(G, phi)
    excluded = G.excluded_primes(phi)
    candidates: set[int] = set()
    for g, _ in G.discriminants["O"].factors:
        v = g(A, B)
        if v == 0:
            raise ValueError(f"({A}, {B}) lies on the discriminant locus of {G.id}")
        for p, _ in factorize(v, trial_bound, rho_steps).factors:
            if p not in excluded and (prime_cap is None or p <= prime_cap):
                candidates.add(p)
    E, K, order = family_kernel(G, phi, A, B)
    degrees = _prime_steps(order)
    chain = composite_chain(E, K, order) if order > 1 else [E]
    invs = [invariants(C) for C in chain]
    a, b = G.f4(A, B), G.f6(A, B)
    records = []
    for p in sorted(candidates):
        vd, vc4 = minimal_valuations_from(invs[0].c4, invs[0].c6, invs[0].disc, p)
        if vd == 0:
            records.append(LocalRecord(p, GOOD, None, (0,), None, Fraction(1)))
            continue
        if vc4 != 0:
            # additive primes contribute nothing to s(E)
            records.append(LocalRecord(p, ADDITIVE, None, (vd,), None, Fraction(1)))
            continue
        vs = (vd,) + tuple(minimal_valuations_from(i.c4, i.c6, i.disc, p)[0] for i in invs[1:])
        t = max(min(_val(a, p) // 4, _val(b, p) // 6), 0)
        split = node_is_split(a // p ** (4 * t), b // p ** (6 * t), p)
        records.append(
            LocalRecord(
                p, MULT, split, vs,
                chain_ratio(vs, split, degrees),
                chain_ratio(vs, split, degrees, pseudo_even=True),
            )
        )
    return SelmerRatio(G.isogeny_densities[phi].degree if phi in G.isogeny_densities else order, records, prime_cap)


def _val(n: int, p: int) -> int:
    if n == 0:
        return 10**9
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def classify_at(G: FamilyDescriptor, phi: str, ratio: SelmerRatio, q: int) -> str | Fraction:
    """'excluded', 'good', 'additive' or the Tamagawa ratio (the n-class) at q."""
    if q in G.excluded_primes(phi):
        return "excluded"
    rec = ratio.record_at(q)
    if rec is None or rec.kind == GOOD:
        return "good"
    if rec.kind == ADDITIVE:
        return "additive"
    assert rec.tamagawa_ratio is not None
    return rec.tamagawa_ratio


# --------------------------------------------------------------------------- report


@dataclass
class FrequencyCell:
    q: int
    condition: str
    count: int
    n: int
    predicted: Fraction | None
    refined: Fraction | None = None  # same share with true valuations (mod q^depth census)

    @property
    def empirical(self) -> float:
        return self.count / self.n

    @property
    def sigma(self) -> float | None:
        if self.predicted is None:
            return None
        p = float(self.predicted)
        return math.sqrt(max(p * (1 - p), 0.0) / self.n)

    @property
    def z(self) -> float | None:
        s = self.sigma
        if s is None:
            return None
        diff = self.empirical - float(self.predicted)  # type: ignore[arg-type]
        if s == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / s

    @property
    def within(self) -> bool | None:
        z = self.z
        return None if z is None else abs(z) <= 3

    @property
    def z_refined(self) -> float | None:
        if self.refined is None:
            return None
        p = float(self.refined)
        s = math.sqrt(max(p * (1 - p), 0.0) / self.n)
        diff = self.empirical - p
        if s == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / s


@dataclass
class CurveRow:
    curve: SampledCurve
    s: LogValue
    ratios: dict[Fraction, int]
    classes: dict[int, str]


@dataclass
class StatsReport:
    family: str
    phi: str
    subgroup: tuple[int, ...]
    height_bound: int
    margin: Fraction
    prime_cap: int | None
    tracked: tuple[int, ...]
    n: int
    dropped: int
    loglog: float
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    c_E: LogValue
    c_V: LogValue
    theta: LogValue
    proxy: float
    frequencies: list[FrequencyCell]
    rows: list[CurveRow] = field(default_factory=list)

    @property
    def excess_kurtosis(self) -> float:
        return self.kurtosis - 3

    @property
    def predicted_mean(self) -> float:
        return float(self.c_E) * self.loglog

    @property
    def predicted_variance(self) -> float:
        return float(self.c_V) * self.loglog

    @property
    def dropped_fraction(self) -> float:
        return self.dropped / max(self.n + self.dropped, 1)

    def frequency_pass_rate(self) -> float:
        judged = [c.within for c in self.frequencies if c.within is not None]
        return sum(judged) / len(judged) if judged else 1.0

    def to_dict(self) -> dict:
        def frac(x: Fraction | None) -> dict | None:
            return None if x is None else {"num": str(x.numerator), "den": str(x.denominator)}

        return {
            "family": self.family,
            "phi": self.phi,
            "subgroup": list(self.subgroup),
            "height_bound": str(self.height_bound),
            "margin": frac(self.margin),
            "prime_cap": self.prime_cap,
            "prime_cap_note": "all primes dividing the discriminant" if self.prime_cap is None
            else f"primes above {self.prime_cap} ignored",
            "tracked_primes": list(self.tracked),
            "N": self.n,
            "dropped": self.dropped,
            "dropped_fraction": _fmt(self.dropped_fraction),
            "loglog_B": _fmt(self.loglog),
            "moments": {
                "mean": _fmt(self.mean),
                "variance": _fmt(self.variance),
                "skewness": _fmt(self.skewness),
                "kurtosis": _fmt(self.kurtosis),
                "excess_kurtosis": _fmt(self.excess_kurtosis),
            },
            "predicted": {
                "c_E": str(self.c_E),
                "c_V": str(self.c_V),
                "theta": str(self.theta),
                "mean": _fmt(self.predicted_mean),
                "variance": _fmt(self.predicted_variance),
                "variance_over_loglog": _fmt(self.variance / self.loglog if self.loglog > 0 else math.nan),
                "caveat": "O(1) terms dominate at this height; ratios are diagnostics only",
            },
            "lower_bound_proxy": _fmt(self.proxy),
            "frequencies": [
                {
                    "q": c.q,
                    "condition": c.condition,
                    "count": c.count,
                    "empirical": _fmt(c.empirical),
                    "predicted": frac(c.predicted),
                    "z": None if c.z is None else _fmt(c.z),
                    "within_3_sigma": c.within,
                    "refined": frac(c.refined),
                    "z_refined": None if c.z_refined is None else _fmt(c.z_refined),
                }
                for c in self.frequencies
            ],
            "frequency_pass_rate": _fmt(self.frequency_pass_rate()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def curves_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["a", "b", "height", "A", "B", "s", "ratios"])
        for r in self.rows:
            c = r.curve
            w.writerow([c.a, c.b, c.height, c.A, c.B, str(r.s), ";".join(f"{k}:{v}" for k, v in r.ratios.items())])
        return out.getvalue()


def _fmt(x: float) -> str:
    return format(x, ".10g")


def _ratio_task(args: tuple) -> tuple:
    fid, phi, A, B, cap = args
    try:
        return selmer_log_ratio(fid, phi, A, B, prime_cap=cap), None
    except FactorizationBudgetError as e:
        return None, str(e)


def _moments(xs: Sequence[float]) -> tuple[float, float, float, float]:
    n = len(xs)
    mean = math.fsum(xs) / n
    dev = [x - mean for x in xs]
    m2 = math.fsum(d * d for d in dev) / n
    m3 = math.fsum(d**3 for d in dev) / n
    m4 = math.fsum(d**4 for d in dev) / n
    if m2 == 0:
        return mean, 0.0, 0.0, 0.0
    return mean, m2, m3 / m2**1.5, m4 / m2**2


def predicted_frequency(G: FamilyDescriptor, phi: str, q: int, condition: str | Fraction) -> Fraction | None:
    """kappa(q) / (1 - q^-(w0+w1)): the share among reduced source pairs."""
    scale = 1 - Fraction(1, q**G.weight_sum)
    try:
        if isinstance(condition, Fraction):
            table = G.isogeny_densities[phi]
            row = table.row_for(q)
            return row.kappa[table.alphabet.index(condition)](q) / scale
        return G.local_row(q).kappa[condition](q) / scale
    except (BadPrimeError, KeyError, ValueError):
        return None


def refined_frequencies(G: FamilyDescriptor, phi: str, q: int) -> dict:
    """n-class shares among reduced source pairs from the deepest affordable mod q^D census."""
    depth = 1
    while (q ** (depth + 1)) ** 2 <= MAX_MULTILEVEL_PAIRS and depth < 3:
        depth += 1
    scale = 1 - Fraction(1, q**G.weight_sum)
    return {r: v / scale for r, v in nclass_multilevel(G, phi, q, depth).items()}


def report(
    G: FamilyDescriptor | str,
    phi: str,
    X: int,
    subgroup: Sequence[int] | None = None,
    prime_cap: int | None = None,
    margin: Fraction | int = 2,
    tracked: Iterable[int] = DEFAULT_TRACKED,
    workers: int = 1,
    sample: FamilySample | None = None,
    refine: bool = True,
) -> StatsReport:
    if isinstance(G, str):
        G = get(G)
    _require_model(G, phi)
    if phi not in G.isogeny_densities:
        raise KeyError(f"{G.id} has no density table for {phi}; available: {sorted(G.isogeny_densities)}")
    group = check_subgroup(G, full_group(G) if subgroup is None else subgroup)
    sample = sample or enumerate_family(G, X, margin, workers)
    tasks = [(G.id, phi, c.A, c.B, prime_cap) for c in sample.curves]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_ratio_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_ratio_task(t) for t in tasks]

    table = G.isogeny_densities[phi]
    d = table.degree
    tracked = tuple(sorted(set(tracked)))
    rows: list[CurveRow] = []
    dropped = 0
    for c, (res, err) in zip(sample.curves, results):
        if res is None:
            dropped += 1
            continue
        classes = {q: _label(classify_at(G, phi, res, q)) for q in tracked}
        rows.append(CurveRow(c, res.s, res.ratios, classes))
    n = len(rows)
    if n == 0:
        raise ValueError(f"no curves of height <= {X} in the sample for {G.id}")
    s_vals = [float(r.s) for r in rows]
    mean, var, skew, kurt = _moments(s_vals)
    proxy = math.fsum(max(d ** (s - 1), 1.0) for s in s_vals) / n
    const = assemble(G, phi, group)

    cells: list[FrequencyCell] = []
    for q in tracked:
        if q in G.excluded_primes(phi):
            cells.append(FrequencyCell(q, "excluded", n, n, None))
            continue
        refined = refined_frequencies(G, phi, q) if refine else {}
        conds: list[str | Fraction] = ["good", "additive", *table.alphabet]
        for cond in conds:
            label = _label(cond)
            count = sum(1 for r in rows if r.classes[q] == label)
            cells.append(FrequencyCell(q, label, count, n, predicted_frequency(G, phi, q, cond), refined.get(cond)))
    loglog = math.log(math.log(X)) if X > math.e else 0.0
    return StatsReport(
        G.id, phi, group, X, Fraction(margin), prime_cap, tracked, n, dropped, loglog,
        mean, var, skew, kurt, const.c_E, const.c_V, const.theta, proxy, cells, rows,
    )


def _label(cond: str | Fraction) -> str:
    return cond if isinstance(cond, str) else f"r={cond}"


def count_ladder(G: FamilyDescriptor | str, heights: Sequence[int], margin: Fraction | int = 2, workers: int = 1) -> list[tuple[int, int]]:
    """(B, N(B)) over a ladder of height bounds."""
    return [(X, len(enumerate_family(G, X, margin, workers).curves)) for X in heights]


def count_exponent(ladder: Sequence[tuple[int, int]]) -> float:
    """Least-squares slope of log N against log B."""
    x = np.log([float(b) for b, _ in ladder])
    y = np.log([float(n) for _, n in ladder])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
