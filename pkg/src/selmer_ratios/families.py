"""Registry of the 19 genus-zero torsion families and the tables attached to them.

Everything lives in ``data/families.yaml``; this module parses it once, applies
recorded errata (keeping the printed values next to the corrected ones) and
validates the structural invariants before handing out immutable descriptors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Any, Iterable, Mapping, Sequence

import sympy
import yaml

_A, _B, _Q, _D = sympy.symbols("A B q d")

FAMILY_IDS = (
    "G(1,1)", "G(1,2)", "G(1,3)", "G(1,4)", "G(1,5)", "G(1,6)", "G(1,7)",
    "G(1,8)", "G(1,9)", "G(1,10)", "G(1,12)", "G(2,2)", "G(2,4)", "G(2,6)",
    "G(2,8)", "G(3,3)", "G(3,6)", "G(4,4)", "G(5,5)",
)

REDUCTION_CONDITIONS = ("good", "additive", "mult", "split")


class FamilyDataError(ValueError):
    """The family data file is malformed or violates an invariant."""


class BadPrimeError(ValueError):
    """A density was requested at a prime the tables do not cover."""


def _sympify(text: str) -> sympy.Expr:
    return sympy.sympify(str(text).replace("^", "**"), locals={"A": _A, "B": _B, "q": _Q, "d": _D})


@dataclass(frozen=True)
class WeightedPolynomial:
    """Integer polynomial in (A, B) stored as (i, j, coeff) terms."""

    terms: tuple[tuple[int, int, int], ...]
    weights: tuple[int, int]
    text: str = ""

    @classmethod
    def parse(cls, text: str, weights: Sequence[int]) -> "WeightedPolynomial":
        expr = sympy.expand(_sympify(text))
        if expr == 0:
            return cls((), (weights[0], weights[1]), str(text))
        poly = sympy.Poly(expr, _A, _B)
        terms = []
        for (i, j), c in poly.terms():
            if not c.is_integer:
                raise FamilyDataError(f"non-integer coefficient {c} in {text!r}")
            terms.append((int(i), int(j), int(c)))
        return cls(tuple(sorted(terms)), (weights[0], weights[1]), str(text))

    @property
    def degrees(self) -> set[int]:
        w0, w1 = self.weights
        return {i * w0 + j * w1 for i, j, _ in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees) <= 1

    @property
    def degree(self) -> int:
        degs = self.degrees
        if len(degs) != 1:
            raise FamilyDataError(f"{self.text!r} is not weighted homogeneous")
        return next(iter(degs))

    @property
    def max_exponents(self) -> tuple[int, int]:
        if not self.terms:
            return (0, 0)
        return max(i for i, _, _ in self.terms), max(j for _, j, _ in self.terms)

    def __call__(self, A: int, B: int) -> int:
        ia, jb = self.max_exponents
        pa = [1] * (ia + 1)
        pb = [1] * (jb + 1)
        for k in range(1, ia + 1):
            pa[k] = pa[k - 1] * A
        for k in range(1, jb + 1):
            pb[k] = pb[k - 1] * B
        return sum(c * pa[i] * pb[j] for i, j, c in self.terms)

    def evaluate(self, A: Any, B: Any) -> Any:
        """Evaluate over any ring (Fractions, sympy symbols, ...)."""
        return sum(c * A**i * B**j for i, j, c in self.terms)

    def mod(self, A: int, B: int, q: int) -> int:
        return sum(c * pow(A, i, q) * pow(B, j, q) for i, j, c in self.terms) % q


@dataclass(frozen=True)
class RationalFunction:
    """Exact rational function of q given by integer coefficient lists (highest first)."""

    num: tuple[int, ...]
    den: tuple[int, ...]
    text: str

    @classmethod
    def parse(cls, text: str) -> "RationalFunction":
        expr = sympy.together(_sympify(text))
        n, d = sympy.fraction(expr)
        pn, pd = sympy.Poly(n, _Q), sympy.Poly(d, _Q)
        if pd.is_zero:
            raise FamilyDataError(f"zero denominator in {text!r}")
        coeffs_n = [Fraction(str(c)) for c in pn.all_coeffs()]
        coeffs_d = [Fraction(str(c)) for c in pd.all_coeffs()]
        scale = math.lcm(*(c.denominator for c in coeffs_n + coeffs_d))
        return cls(
            tuple(int(c * scale) for c in coeffs_n),
            tuple(int(c * scale) for c in coeffs_d),
            str(text),
        )

    def __call__(self, q: int) -> Fraction:
        return Fraction(_horner(self.num, q), _horner(self.den, q))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.num)

    def leading(self) -> Fraction:
        """lim_{q -> oo} q * f(q); the expansions used here decay like 1/q."""
        if self.is_zero():
            return Fraction(0)
        num = _strip(self.num)
        gap = (len(self.den) - 1) - (len(num) - 1)
        if gap < 1:
            raise FamilyDataError(f"{self.text!r} does not decay")
        if gap > 1:
            return Fraction(0)
        return Fraction(num[0], self.den[0])


def _strip(coeffs: tuple[int, ...]) -> tuple[int, ...]:
    k = 0
    while k < len(coeffs) - 1 and coeffs[k] == 0:
        k += 1
    return coeffs[k:]


def _horner(coeffs: Iterable[int], x: int) -> int:
    acc = 0
    for c in coeffs:
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class ResidueClass:
    """Residues mod ``modulus`` as printed in a table row (``"2,5 mod 9"``, ``"all"``)."""

    modulus: int
    residues: frozenset[int]
    label: str

    @classmethod
    def parse(cls, label: str) -> "ResidueClass":
        text = label.strip()
        if text == "all":
            return cls(1, frozenset({0}), text)
        m = re.fullmatch(r"(.+?)\s+mod\s+(\d+)", text)
        if not m:
            raise FamilyDataError(f"unreadable residue class {label!r}")
        mod = int(m.group(2))
        out: set[int] = set()
        for part in m.group(1).split(","):
            part = part.strip()
            if part.startswith("±"):
                r = int(part[1:])
                out |= {r % mod, -r % mod}
            else:
                out.add(int(part) % mod)
        return cls(mod, frozenset(out), text)

    def __contains__(self, q: int) -> bool:
        return q % self.modulus in self.residues

    @property
    def ramified(self) -> bool:
        return self.modulus > 1 and any(math.gcd(r, self.modulus) != 1 for r in self.residues)


@dataclass(frozen=True)
class DiscriminantRow:
    unit: Fraction
    factors: tuple[tuple[WeightedPolynomial, int], ...]
    derived: bool = False
    printed_unit: Fraction | None = None
    printed_factors: tuple[tuple[str, int], ...] = ()
    note: str = ""

    def __call__(self, A: int, B: int) -> Fraction:
        out = Fraction(self.unit)
        for g, e in self.factors:
            out *= g(A, B) ** e
        return out

    def exponent_vector(self) -> tuple[int, ...]:
        return tuple(e for _, e in self.factors)

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(g.text for g, _ in self.factors)


@dataclass(frozen=True)
class LocalDensityRow:
    classes: ResidueClass
    kappa: Mapping[str, RationalFunction]
    printed: Mapping[str, RationalFunction]
    note: str = ""


@dataclass(frozen=True)
class IsogenyDensityRow:
    classes: ResidueClass
    kappa: tuple[RationalFunction, ...]
    printed: tuple[RationalFunction, ...]
    note: str = ""


@dataclass(frozen=True)
class IsogenyDensity:
    phi: str
    degree: int
    alphabet: tuple[Fraction, ...]
    rows: tuple[IsogenyDensityRow, ...]
    chain: tuple[str, ...]

    def row_for(self, q: int) -> IsogenyDensityRow:
        for row in self.rows:
            if q in row.classes:
                return row
        raise BadPrimeError(f"density undefined at bad prime {q} for {self.phi}")


@dataclass(frozen=True)
class PrintedConstants:
    phi: str
    subgroup: tuple[int, ...]
    subgroup_label: str
    subgroup_printed: str
    values: Mapping[str, str]
    c_n: tuple[str, ...] | None


@dataclass(frozen=True)
class MarkedPoint:
    name: str
    x: WeightedPolynomial
    y: WeightedPolynomial
    order: int


@dataclass(frozen=True)
class BaseModel:
    coefficients: tuple[WeightedPolynomial, ...]
    points: Mapping[str, MarkedPoint]
    kernels: Mapping[str, tuple[str, int]]

    def at(self, A: int, B: int) -> tuple[int, ...]:
        return tuple(c(A, B) for c in self.coefficients)

    def kernel_point(self, phi: str, A: int, B: int) -> tuple[tuple[int, int], int]:
        """Generator of the kernel of ``phi`` at (A, B) and its order."""
        try:
            name, mult = self.kernels[phi]
        except KeyError:
            raise KeyError(f"no kernel recorded for {phi}; available: {sorted(self.kernels)}") from None
        pt = self.points[name]
        return (pt.x(A, B), pt.y(A, B)), mult


@dataclass(frozen=True)
class Erratum:
    location: str
    printed: Any
    corrected: Any
    note: str


@dataclass(frozen=True)
class FamilyDescriptor:
    id: str
    M: int
    level: int
    weights: tuple[int, int]
    weights_printed: tuple[int, int]
    delta: int
    alpha: Fraction
    beta_text: str
    modulus: int
    modulus_printed: int
    f4: WeightedPolynomial
    f6: WeightedPolynomial
    f6_printed: WeightedPolynomial
    base_model: BaseModel | None
    discriminants: Mapping[str, DiscriminantRow]
    local_densities: tuple[LocalDensityRow, ...]
    isogeny_densities: Mapping[str, IsogenyDensity]
    constants: tuple[PrintedConstants, ...]
    isogenous_example: Mapping[str, tuple[WeightedPolynomial, WeightedPolynomial]]
    errata: tuple[Erratum, ...]
    u: Fraction = Fraction(1)
    extra: Mapping[str, Any] = field(default_factory=dict)

    @property
    def weight_sum(self) -> int:
        return self.weights[0] + self.weights[1]

    def beta(self, d: int = 1) -> Fraction:
        return Fraction(str(sympy.nsimplify(_sympify(self.beta_text).subs(_D, d))))

    def isogenies(self) -> list[str]:
        return [k for k in self.discriminants if k != "O"]

    def phi_degree(self, phi: str) -> int:
        if phi == "O":
            return 1
        if phi in self.isogeny_densities:
            return self.isogeny_densities[phi].degree
        m = re.fullmatch(r"C(\d+)", phi)
        if not m:
            raise KeyError(phi)
        return int(m.group(1))

    def excluded_primes(self, phi: str | None = None) -> set[int]:
        deg = 1 if phi in (None, "O") else self.phi_degree(phi)
        n = 6 * self.level * deg
        return {p for p in range(2, n + 1) if n % p == 0 and all(p % r for r in range(2, math.isqrt(p) + 1))}

    def local_row(self, q: int) -> LocalDensityRow:
        for row in self.local_densities:
            if q in row.classes:
                return row
        raise BadPrimeError(f"density undefined at bad prime {q} for {self.id}")


# --------------------------------------------------------------------------- loading


def _data_text() -> str:
    return resources.files("selmer_ratios").joinpath("data/families.yaml").read_text(encoding="utf-8")


def _parse_id(fid: str) -> tuple[int, int]:
    m = re.fullmatch(r"G\((\d+),(\d+)\)", fid)
    if not m:
        raise FamilyDataError(f"bad family id {fid!r}")
    return int(m.group(1)), int(m.group(2))


def _unit(text: Any) -> Fraction:
    val = sympy.nsimplify(_sympify(str(text)))
    return Fraction(str(val))


def _subgroup(label: str, m: int) -> tuple[int, ...]:
    label = label.strip()
    if label.startswith("(Z/"):
        return tuple(a for a in range(m) if math.gcd(a, m) == 1) if m > 1 else (1,)
    inner = label.strip("{}")
    return tuple(sorted(int(x) % max(m, 1) if m > 1 else int(x) for x in inner.split(",")))


def _load_family(rec: Mapping[str, Any]) -> FamilyDescriptor:
    fid = rec["id"]
    where = fid
    try:
        M, level = _parse_id(fid)
        weights = tuple(int(w) for w in rec["weights"])
        errata: list[Erratum] = []

        def poly(text: str) -> WeightedPolynomial:
            return WeightedPolynomial.parse(text, weights)

        f4 = poly(rec["f4"])
        f6_printed = poly(rec["f6"])
        f6 = f6_printed
        fam_err = rec.get("erratum") or {}
        if "f6" in fam_err:
            f6 = poly(fam_err["f6"])
            errata.append(Erratum(f"{fid} f6", rec["f6"], fam_err["f6"], fam_err.get("note", "")))

        where = f"{fid} discriminants"
        discs: dict[str, DiscriminantRow] = {}
        for phi, row in rec.get("discriminants", {}).items():
            printed_unit = _unit(row["unit"])
            printed_factors = tuple((str(t), int(e)) for t, e in row["factors"])
            unit, factors, note = printed_unit, printed_factors, ""
            err = row.get("erratum")
            if err:
                note = err.get("note", "")
                if "unit" in err:
                    unit = _unit(err["unit"])
                    errata.append(Erratum(f"{fid} discriminant {phi} unit", row["unit"], err["unit"], note))
                if "factors" in err:
                    factors = tuple((str(t), int(e)) for t, e in err["factors"])
                    errata.append(Erratum(f"{fid} discriminant {phi} factors", row["factors"], err["factors"], note))
            discs[phi] = DiscriminantRow(
                unit=unit,
                factors=tuple((poly(t), e) for t, e in factors),
                derived=bool(row.get("derived", False)),
                printed_unit=printed_unit,
                printed_factors=printed_factors,
                note=note,
            )

        where = f"{fid} local_densities"
        local_rows = []
        for row in rec.get("local_densities", []):
            printed = {c: RationalFunction.parse(row[c]) for c in REDUCTION_CONDITIONS}
            kappa = dict(printed)
            err = row.get("erratum") or {}
            for c in REDUCTION_CONDITIONS:
                if c in err:
                    kappa[c] = RationalFunction.parse(err[c])
                    errata.append(Erratum(f"{fid} local {row['classes']} {c}", row[c], err[c], err.get("note", "")))
            local_rows.append(LocalDensityRow(ResidueClass.parse(row["classes"]), kappa, printed, err.get("note", "")))

        where = f"{fid} isogeny_densities"
        iso: dict[str, IsogenyDensity] = {}
        for phi, spec in (rec.get("isogeny_densities") or {}).items():
            alphabet = tuple(Fraction(a) for a in spec["alphabet"])
            rows = []
            for row in spec["rows"]:
                printed = tuple(RationalFunction.parse(k) for k in row["kappa"])
                kappa = printed
                err = row.get("erratum") or {}
                if "kappa" in err:
                    kappa = tuple(RationalFunction.parse(k) for k in err["kappa"])
                    errata.append(Erratum(f"{fid} {phi} {row['classes']} kappa", row["kappa"], err["kappa"], err.get("note", "")))
                if len(kappa) != len(alphabet):
                    raise FamilyDataError("kappa row length differs from alphabet")
                rows.append(IsogenyDensityRow(ResidueClass.parse(row["classes"]), kappa, printed, err.get("note", "")))
            iso[phi] = IsogenyDensity(
                phi=phi,
                degree=int(spec["degree"]),
                alphabet=alphabet,
                rows=tuple(rows),
                chain=tuple(spec.get("chain") or (phi,)),
            )

        modulus = int(rec["modulus"])
        where = f"{fid} constants"
        consts = []
        for row in rec.get("constants") or []:
            label = row["subgroup"]
            consts.append(
                PrintedConstants(
                    phi=row["phi"],
                    subgroup=_subgroup(label, modulus),
                    subgroup_label=label,
                    subgroup_printed=row.get("subgroup_printed", label),
                    values={k: str(row[k]) for k in ("c_minus", "c_plus", "c_E", "c_V", "theta") if k in row},
                    c_n=tuple(str(c) for c in row["c_n"]) if "c_n" in row else None,
                )
            )

        where = f"{fid} base_model"
        base = None
        if rec.get("base_model"):
            bm = rec["base_model"]
            coeffs = tuple(poly(c) for c in bm["coefficients"])
            if len(coeffs) != 5:
                raise FamilyDataError("base model needs [a1, a2, a3, a4, a6]")
            points = {
                name: MarkedPoint(name, poly(p["x"]), poly(p["y"]), int(p["order"]))
                for name, p in (bm.get("points") or {}).items()
            }
            kernels = {phi: (str(k[0]), int(k[1])) for phi, k in (bm.get("kernels") or {}).items()}
            for phi, (name, _) in kernels.items():
                if name not in points:
                    raise FamilyDataError(f"kernel {phi} names unknown point {name}")
            base = BaseModel(coeffs, points, kernels)

        example = {
            phi: (poly(v["f4"]), poly(v["f6"])) for phi, v in (rec.get("isogenous_example") or {}).items()
        }

        where = f"{fid} invariants"
        for name, p in (("f4", f4), ("f6", f6)):
            if not p.is_homogeneous():
                raise FamilyDataError(f"{name} not weighted homogeneous for weights {weights}")
        if f4.degree % 4:
            raise FamilyDataError("f4 degree not divisible by 4")
        delta = f4.degree // 4
        if f6.degree != 6 * delta:
            raise FamilyDataError("f6 degree is not 6*delta")
        if math.gcd(weights[0] * weights[1], delta) != 1:
            raise FamilyDataError("gcd(w0*w1, delta) != 1")
        alpha = Fraction(sum(weights), 12 * delta)
        if alpha != Fraction(str(rec["alpha"])):
            raise FamilyDataError(f"alpha {rec['alpha']} != (w0+w1)/(12 delta) = {alpha}")
        for phi, row in discs.items():
            for g, _ in row.factors:
                if not g.is_homogeneous():
                    raise FamilyDataError(f"discriminant factor {g.text} of {phi} not homogeneous")
            deg = sum(g.degree * e for g, e in row.factors)
            if deg != 12 * delta:
                raise FamilyDataError(f"discriminant row {phi} has weighted degree {deg}, expected {12 * delta}")

        fam = FamilyDescriptor(
            id=fid,
            M=M,
            level=level,
            weights=(weights[0], weights[1]),
            weights_printed=tuple(rec.get("weights_printed", weights)),
            delta=delta,
            alpha=alpha,
            beta_text=str(rec["beta"]),
            modulus=modulus,
            modulus_printed=int(rec.get("modulus_printed", modulus)),
            f4=f4,
            f6=f6,
            f6_printed=f6_printed,
            base_model=base,
            discriminants=discs,
            local_densities=tuple(local_rows),
            isogeny_densities=iso,
            constants=tuple(consts),
            isogenous_example=example,
            errata=tuple(errata),
            extra={k: rec[k] for k in ("alpha_printed_id",) if k in rec},
        )
        u = _discriminant_unit(fam)
        return _replace_u(fam, u)
    except FamilyDataError as exc:
        raise FamilyDataError(f"{where}: {exc}") from None
    except (KeyError, TypeError, ValueError, sympy.SympifyError) as exc:
        raise FamilyDataError(f"{where}: {type(exc).__name__}: {exc}") from None


def _replace_u(fam: FamilyDescriptor, u: Fraction) -> FamilyDescriptor:
    from dataclasses import replace

    return replace(fam, u=u)


def short_discriminant(a: int, b: int) -> int:
    return -16 * (4 * a**3 + 27 * b**2)


def twelfth_root_23(r: Fraction) -> Fraction | None:
    """u with u^12 = r and u supported on {2, 3}, or None."""
    if r <= 0:
        return None
    u = Fraction(1)
    for part, sign in ((r.numerator, 1), (r.denominator, -1)):
        rest = part
        for p in (2, 3):
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            if e % 12:
                return None
            u *= Fraction(p) ** (sign * (e // 12))
        if rest != 1:
            return None
    return u


def _identity_points(fam: FamilyDescriptor) -> list[tuple[int, int]]:
    # A weighted-homogeneous polynomial is fixed by its restriction to B = 1, a
    # polynomial in A of degree <= 12*delta/w0, so that many + 1 points prove an identity.
    n = 12 * fam.delta // fam.weights[0] + 2
    return [(a, 1) for a in range(2, n + 2)]


def _discriminant_unit(fam: FamilyDescriptor) -> Fraction:
    row = fam.discriminants.get("O")
    if row is None:
        raise FamilyDataError("missing {O} discriminant row")
    ratio: Fraction | None = None
    for A, B in _identity_points(fam):
        lhs = short_discriminant(fam.f4(A, B), fam.f6(A, B))
        rhs = row(A, B)
        if rhs == 0:
            if lhs != 0:
                raise FamilyDataError(f"short-form discriminant nonzero where table vanishes at {(A, B)}")
            continue
        r = Fraction(lhs) / rhs
        if ratio is None:
            ratio = r
        elif r != ratio:
            raise FamilyDataError(f"short-form discriminant is not a constant multiple of the table at {(A, B)}")
    if ratio is None:
        raise FamilyDataError("table discriminant vanishes identically")
    u = twelfth_root_23(ratio)
    if u is None:
        raise FamilyDataError(f"discriminant ratio {ratio} is not a 12th power supported on {{2,3}}")
    return u


@lru_cache(maxsize=None)
def _registry() -> tuple[FamilyDescriptor, ...]:
    try:
        data = yaml.safe_load(_data_text())
    except yaml.YAMLError as exc:
        raise FamilyDataError(f"data file: {exc}") from None
    if not isinstance(data, dict) or data.get("version") != 1:
        raise FamilyDataError("data file: unsupported schema version")
    fams = tuple(_load_family(rec) for rec in data["families"])
    ids = tuple(f.id for f in fams)
    if sorted(ids) != sorted(FAMILY_IDS):
        raise FamilyDataError(f"data file: family set {ids} differs from the 19 expected ids")
    return fams


def registry() -> tuple[FamilyDescriptor, ...]:
    return _registry()


def get(fid: str) -> FamilyDescriptor:
    key = fid.replace(" ", "")
    for fam in _registry():
        if fam.id == key:
            return fam
    raise KeyError(f"unknown family {fid!r}; valid: {', '.join(FAMILY_IDS)}")


def evaluate_f(G: FamilyDescriptor, A: int, B: int) -> tuple[int, int]:
    """Short Weierstrass coefficients (f4(A,B), f6(A,B))."""
    if A == 0 and B == 0:
        raise ValueError("(A, B) = (0, 0) is not a point of the family")
    return G.f4(A, B), G.f6(A, B)


def table_discriminant(G: FamilyDescriptor, phi: str, A: int, B: int) -> int:
    try:
        row = G.discriminants[phi]
    except KeyError:
        raise KeyError(f"{G.id} has no discriminant row {phi!r}; available: {sorted(G.discriminants)}") from None
    val = row(A, B)
    if val.denominator != 1:
        raise ValueError(f"table discriminant {val} is not integral")
    return int(val)


def density_prediction(G: FamilyDescriptor, condition: str | Fraction, q: int, phi: str | None = None) -> Fraction:
    """Closed-form kappa at the prime q.

    ``condition`` is one of good/additive/mult/split, or (with ``phi``) a
    Tamagawa ratio r from the isogeny alphabet (the n-class n = log_deg r).
    """
    if q in G.excluded_primes(phi):
        raise BadPrimeError(f"density undefined at bad prime {q} (divides 6*level*deg)")
    return _prediction(G, condition, q, phi)


def _prediction(G: FamilyDescriptor, condition: str | Fraction, q: int, phi: str | None) -> Fraction:
    if phi is None or phi == "O":
        if condition not in REDUCTION_CONDITIONS:
            raise ValueError(f"unknown condition {condition!r}")
        return G.local_row(q).kappa[str(condition)](q)
    if phi not in G.isogeny_densities:
        raise KeyError(f"{G.id} has no density table for {phi}; available: {sorted(G.isogeny_densities)}")
    table = G.isogeny_densities[phi]
    r = Fraction(condition)
    try:
        idx = table.alphabet.index(r)
    except ValueError:
        raise ValueError(f"ratio {r} not in alphabet {[str(a) for a in table.alphabet]}") from None
    return table.row_for(q).kappa[idx](q)


def parse_condition(text: str) -> str | Fraction:
    text = text.strip().lower()
    if text in REDUCTION_CONDITIONS:
        return text
    if text.startswith("r="):
        text = text[2:]
    return Fraction(text)
