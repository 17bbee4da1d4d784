"""Mean, variance and theta constants assembled from the density tables.

Logarithms base 6 are kept exact as vectors over (1, l, l^2) with l = log_6 2;
log_6 3 = 1 - l and log_6(3/2) = 1 - 2l. For every other degree the log-ratios
are rational and only the constant slot is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import sympy

from .arith import is_subgroup, units_mod
from .families import FamilyDataError, FamilyDescriptor, IsogenyDensity, PrintedConstants, get, registry

_L = sympy.Symbol("l")


class SubgroupError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class LogValue:
    """c0 + c1*l + c2*l^2 with l = log_6 2 (c1 = c2 = 0 away from degree 6)."""

    c0: Fraction = Fraction(0)
    c1: Fraction = Fraction(0)
    c2: Fraction = Fraction(0)

    @classmethod
    def of(cls, x) -> "LogValue":
        return x if isinstance(x, LogValue) else cls(Fraction(x))

    def __add__(self, other) -> "LogValue":
        o = LogValue.of(other)
        return LogValue(self.c0 + o.c0, self.c1 + o.c1, self.c2 + o.c2)

    __radd__ = __add__

    def __neg__(self) -> "LogValue":
        return LogValue(-self.c0, -self.c1, -self.c2)

    def __sub__(self, other) -> "LogValue":
        return self + (-LogValue.of(other))

    def __rsub__(self, other) -> "LogValue":
        return LogValue.of(other) + (-self)

    def __mul__(self, other) -> "LogValue":
        o = LogValue.of(other)
        if (self.c2 and (o.c1 or o.c2)) or (o.c2 and self.c1):
            raise ValueError("product leaves the span of 1, l, l^2")
        return LogValue(
            self.c0 * o.c0,
            self.c0 * o.c1 + self.c1 * o.c0,
            self.c0 * o.c2 + self.c1 * o.c1 + self.c2 * o.c0,
        )

    __rmul__ = __mul__

    def __truediv__(self, k) -> "LogValue":
        k = Fraction(k)
        return LogValue(self.c0 / k, self.c1 / k, self.c2 / k)

    def is_rational(self) -> bool:
        return self.c1 == 0 and self.c2 == 0

    def __float__(self) -> float:
        l = math.log(2) / math.log(6)
        return float(self.c0) + float(self.c1) * l + float(self.c2) * l * l

    def __str__(self) -> str:
        if self.is_rational():
            return str(self.c0)
        parts = []
        for c, m in ((self.c0, ""), (self.c1, "log6(2)"), (self.c2, "log6(2)^2")):
            if c == 0:
                continue
            if m and abs(c) == 1:
                parts.append(("-" if c < 0 else "+") + m)
            else:
                parts.append(f"{'+' if c > 0 else '-'}{abs(c)}{'*' + m if m else ''}")
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s

    @classmethod
    def parse(cls, text: str) -> "LogValue":
        """Printed value such as ``1/2*(3 + 2*log6(2)^2 + 3*log6(3/2)^2)``."""
        t = str(text).replace("^", "**")
        t = t.replace("log6(3/2)", "(1 - 2*l)").replace("log6(2)", "l").replace("log6(3)", "(1 - l)")
        expr = sympy.expand(sympy.sympify(t, locals={"l": _L}))
        poly = sympy.Poly(expr, _L)
        if poly.degree() > 2:
            raise ValueError(f"{text!r} has degree > 2 in log6(2)")
        co = [Fraction(0)] * 3
        for (k,), c in poly.terms():
            co[k] = Fraction(int(sympy.numer(c)), int(sympy.denom(c)))
        return cls(*co)


def log_ratio_exact(r: Fraction, d: int) -> LogValue:
    """n = log_d r for a local Tamagawa ratio r of an isogeny of degree d."""
    r = Fraction(r)
    if d == 6:
        i = _exp_of(r, 2)
        j = _exp_of(r, 3)
        if Fraction(2) ** i * Fraction(3) ** j != r:
            raise ValueError(f"{r} is not a 6-smooth ratio")
        return LogValue(Fraction(j), Fraction(i - j))
    p, m = _prime_power(d)
    k = _exp_of(r, p)
    if Fraction(p) ** k != r:
        raise ValueError(f"{r} is not a power of {p}")
    return LogValue(Fraction(k, m))


def _exp_of(r: Fraction, p: int) -> int:
    k = 0
    n, dd = r.numerator, r.denominator
    while n % p == 0:
        n //= p
        k += 1
    while dd % p == 0:
        dd //= p
        k -= 1
    return k


def _prime_power(d: int) -> tuple[int, int]:
    f = sympy.factorint(d)
    if len(f) != 1:
        raise ValueError(f"degree {d} is neither 6 nor a prime power")
    (p, m), = f.items()
    return int(p), int(m)


@dataclass
class ConstantsRow:
    family: str
    phi: str
    subgroup: tuple[int, ...]
    c_n: dict
    c_E: LogValue
    c_V: LogValue
    theta: LogValue
    source: str = "derived"
    mismatch: str | None = None
    ratios: dict = field(default_factory=dict)

    @property
    def c_plus(self) -> Fraction:
        return self.c_n.get(LogValue(Fraction(1)), Fraction(0))

    @property
    def c_minus(self) -> Fraction:
        return self.c_n.get(LogValue(Fraction(-1)), Fraction(0))


def _table(G: FamilyDescriptor, phi: str) -> IsogenyDensity:
    try:
        return G.isogeny_densities[phi]
    except KeyError:
        raise KeyError(f"{G.id} has no density table for {phi}; available: {sorted(G.isogeny_densities)}") from None


def check_subgroup(G: FamilyDescriptor, subgroup: Iterable[int]) -> tuple[int, ...]:
    m = G.modulus
    group = tuple(sorted({int(a) % m for a in subgroup}))
    if m <= 2:
        # the unit group is trivial, so only odd residues make sense
        if not group or any(a % 2 == 0 for a in subgroup) and m == 2:
            raise SubgroupError(f"{list(subgroup)} is not a subgroup of (Z/{m}Z)^x")
        return (1,)
    if not is_subgroup(group, m):
        raise SubgroupError(f"{list(group)} is not a subgroup of (Z/{m}Z)^x")
    return group


def full_group(G: FamilyDescriptor) -> tuple[int, ...]:
    return tuple(units_mod(G.modulus)) if G.modulus > 2 else (1,)


def derive_cn(G: FamilyDescriptor | str, phi: str, subgroup: Sequence[int] | None = None, printed: bool = False) -> dict:
    """c_r for each ratio r of the alphabet: mean over the subgroup of lim q*kappa_r.

    With ``printed`` the uncorrected table rows are used.
    """
    if isinstance(G, str):
        G = get(G)
    table = _table(G, phi)
    group = check_subgroup(G, full_group(G) if subgroup is None else subgroup)
    acc = [Fraction(0)] * len(table.alphabet)
    for a in group:
        rows = [row for row in table.rows if a in row.classes]
        if not rows:
            raise FamilyDataError(f"{G.id} {phi}: no density row for residue {a} mod {G.modulus}")
        kap = rows[0].printed if printed else rows[0].kappa
        for k, f in enumerate(kap):
            acc[k] += f.leading()
    return {r: c / len(group) for r, c in zip(table.alphabet, acc)}


def mult_coefficient(G: FamilyDescriptor, subgroup: Sequence[int]) -> Fraction:
    """Mean over the subgroup of lim q*kappa_mult; the c_n must add up to it."""
    group = check_subgroup(G, subgroup)
    acc = Fraction(0)
    for a in group:
        rows = [row for row in G.local_densities if a in row.classes]
        if not rows:
            raise FamilyDataError(f"{G.id}: no local density row for residue {a} mod {G.modulus}")
        acc += rows[0].kappa["mult"].leading()
    return acc / len(group)


def assemble(G: FamilyDescriptor | str, phi: str, subgroup: Sequence[int] | None = None, printed: bool = False) -> ConstantsRow:
    if isinstance(G, str):
        G = get(G)
    table = _table(G, phi)
    by_ratio = derive_cn(G, phi, subgroup, printed=printed)
    c_n: dict[LogValue, Fraction] = {}
    c_E, c_V = LogValue(), LogValue()
    for r, c in by_ratio.items():
        n = log_ratio_exact(r, table.degree)
        c_n[n] = c_n.get(n, Fraction(0)) + c
        c_E = c_E + n * c
        c_V = c_V + (n * n) * c
    group = check_subgroup(G, full_group(G) if subgroup is None else subgroup)
    return ConstantsRow(
        G.id, phi, group, c_n, c_E, c_V, c_E + c_V / 2,
        source="printed-tables" if printed else "derived", ratios=by_ratio,
    )


# --------------------------------------------------------------------------- audit


TRACE_QUANTITY = "printed density rows reproduce printed constants"


@dataclass(frozen=True)
class AuditRecord:
    family: str
    phi: str
    subgroup: str
    quantity: str
    derived: str
    printed: str
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "phi": self.phi,
            "subgroup": self.subgroup,
            "quantity": self.quantity,
            "derived": self.derived,
            "printed": self.printed,
            "pass": self.passed,
            "note": self.note,
        }


@dataclass
class AuditReport:
    records: list[AuditRecord]

    def flagged_rows(self) -> list[tuple[str, str, str]]:
        seen: dict[tuple[str, str, str], None] = {}
        for r in self.records:
            if not r.passed:
                seen.setdefault((r.family, r.phi, r.subgroup), None)
        return list(seen)

    def rows(self) -> list[tuple[str, str, str]]:
        return list(dict.fromkeys((r.family, r.phi, r.subgroup) for r in self.records))

    @property
    def mismatches(self) -> int:
        return sum(not r.passed for r in self.records)

    def inconsistent_rows(self) -> list[tuple[str, str, str]]:
        """Flagged rows whose printed values contradict themselves or come from a corrected density row."""
        out: dict[tuple[str, str, str], None] = {}
        flagged = set(self.flagged_rows())
        for r in self.records:
            key = (r.family, r.phi, r.subgroup)
            if r.quantity.startswith("identity") and not r.passed:
                out.setdefault(key, None)
            elif r.quantity == TRACE_QUANTITY and r.derived == "yes" and key in flagged:
                out.setdefault(key, None)
        return [k for k in self.flagged_rows() if k in out]

    def unexplained_rows(self) -> list[tuple[str, str, str]]:
        bad = set(self.inconsistent_rows())
        return [k for k in self.flagged_rows() if k not in bad]


def _printed_quantities(pc: PrintedConstants, alphabet_n: Sequence[LogValue]) -> dict[str, LogValue]:
    out = {k: LogValue.parse(v) for k, v in pc.values.items()}
    if pc.c_n is not None:
        for n, v in zip(alphabet_n, pc.c_n):
            out[f"c[{n}]"] = LogValue.parse(v)
    return out


def _derived_quantities(row: ConstantsRow, alphabet_n: Sequence[LogValue]) -> dict[str, LogValue]:
    out = {
        "c_minus": LogValue(row.c_minus),
        "c_plus": LogValue(row.c_plus),
        "c_E": row.c_E,
        "c_V": row.c_V,
        "theta": row.theta,
    }
    for n in alphabet_n:
        out[f"c[{n}]"] = LogValue(row.c_n.get(n, Fraction(0)))
    return out


def audit_family(G: FamilyDescriptor) -> list[AuditRecord]:
    out: list[AuditRecord] = []
    for pc in G.constants:
        table = _table(G, pc.phi)
        alphabet_n = list(dict.fromkeys(log_ratio_exact(r, table.degree) for r in table.alphabet))
        label = pc.subgroup_label
        printed = _printed_quantities(pc, alphabet_n)
        derived = _derived_quantities(assemble(G, pc.phi, pc.subgroup), alphabet_n)
        for q, pv in printed.items():
            dv = derived[q]
            out.append(AuditRecord(G.id, pc.phi, label, q, str(dv), str(pv), dv == pv))
        if {"c_E", "c_V", "theta"} <= printed.keys():
            lhs = printed["c_E"] + printed["c_V"] / 2
            out.append(
                AuditRecord(G.id, pc.phi, label, "identity theta = c_E + c_V/2", str(lhs), str(printed["theta"]),
                            lhs == printed["theta"], "printed values only")
            )
        if {"c_plus", "c_minus", "c_E", "c_V"} <= printed.keys():
            cp, cm = printed["c_plus"], printed["c_minus"]
            out.append(AuditRecord(G.id, pc.phi, label, "identity c_E = c_plus - c_minus", str(cp - cm),
                                   str(printed["c_E"]), cp - cm == printed["c_E"], "printed values only"))
            out.append(AuditRecord(G.id, pc.phi, label, "identity c_V = c_plus + c_minus", str(cp + cm),
                                   str(printed["c_V"]), cp + cm == printed["c_V"], "printed values only"))
        if pc.c_n is not None:
            total = sum((LogValue.parse(v) for v in pc.c_n), LogValue())
            mult = LogValue(mult_coefficient(G, pc.subgroup))
            out.append(AuditRecord(G.id, pc.phi, label, "identity sum c_n = mult coefficient", str(mult), str(total),
                                   total == mult, "printed c_n against the local mult densities"))
        if any(row.printed != row.kappa for row in table.rows):
            # trace the printed constants back to the uncorrected density rows
            try:
                alt = _derived_quantities(assemble(G, pc.phi, pc.subgroup, printed=True), alphabet_n)
            except FamilyDataError:
                alt = None
            if alt is not None:
                same = all(alt[q] == pv for q, pv in printed.items())
                out.append(AuditRecord(G.id, pc.phi, label, TRACE_QUANTITY,
                                       "yes" if same else "no", "yes", True,
                                       "density row carries an erratum; informational"))
    return out


def audit_printed_constants(families: Iterable[str] | None = None) -> AuditReport:
    fams = [get(f) for f in families] if families else list(registry())
    recs: list[AuditRecord] = []
    for G in fams:
        recs += audit_family(G)
    return AuditReport(recs)
