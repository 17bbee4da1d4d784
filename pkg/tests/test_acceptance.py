"""Acceptance suite: one PASS/FAIL line per criterion, shown in the terminal summary.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest. The statistical
criteria take several minutes in total. Where a criterion is out of reach at desk scale the
check itself is kept as a strict xfail, so it is reported rather than softened.
"""

import math
import sys

import pytest

from selmer_ratios import families as fm
from selmer_ratios import stats
from selmer_ratios.cli import run
from selmer_ratios.constants import LogValue, assemble, audit_printed_constants
from selmer_ratios.densities import verify_tables
from selmer_ratios.families import FamilyDataError
from selmer_ratios.isogeny import discriminant_suite

pytestmark = pytest.mark.slow

ERRATA = [
    ("G(1,12)", "C2", "r=1"),
    ("G(1,2)", "O", "good"),
    ("G(2,6)", "C3", "r=1"),
    ("G(2,6)", "C3", "r=3"),
    ("G(2,6)", "O", "good"),
]

FREQUENCY_RUNS = {
    "G(1,2)": ("C2", 2 * 10**6),
    "G(1,3)": ("C3", 7 * 10**11),
    "G(1,5)": ("C5", 2 * 10**29),
}

# six rungs each, a factor of ten apart; each ladder takes about a minute
LADDERS = {
    "G(1,2)": [10**k for k in range(5, 11)],
    "G(1,3)": [10**k for k in range(11, 17)],
    "G(2,2)": [10**k for k in range(11, 17)],
}

SHAPE_HEIGHT = 10**7


def _line(log, k, ok, detail):
    text = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    log.append(text)
    print(text)


@pytest.fixture(scope="module")
def table_records():
    return verify_tables(200, workers=1)


@pytest.fixture(scope="module")
def audit():
    return audit_printed_constants()


@pytest.fixture(scope="module")
def frequency_reports():
    return {fid: stats.report(fid, phi, X, refine=(fid == "G(1,2)")) for fid, (phi, X) in FREQUENCY_RUNS.items()}


@pytest.fixture(scope="module")
def shape_report():
    return stats.report("G(1,2)", "C2", SHAPE_HEIGHT, refine=False)


def _nclass_cells(rep):
    return [c for c in rep.frequencies if c.condition.startswith("r=") and c.within is not None]


def _rate(cells, use_refined=False):
    if use_refined:
        hits = [abs(c.z_refined) <= 3 for c in cells if c.z_refined is not None]
    else:
        hits = [c.within for c in cells]
    return sum(hits) / len(hits)


def test_criterion_1_density_tables(acceptance_log, table_records):
    census = [r for r in table_records if r.kind == "census"]
    failed = [r for r in census if not r.passed]
    errata = sorted({(r.family, r.phi, r.condition) for r in census if r.erratum})
    covered = {r.family for r in census} == {G.id for G in fm.registry()}
    ok = not failed and errata == ERRATA and covered
    _line(acceptance_log, 1, ok,
          f"{len(census)} census cells up to q=200, {len(failed)} mismatches, {len(errata)} cells match a recorded correction")
    assert covered
    assert not failed
    assert errata == ERRATA


def test_criterion_2_partition_identities(acceptance_log, table_records):
    ident = [r for r in table_records if r.kind == "identity"]
    failed = [r for r in ident if not r.passed]
    kinds = {r.condition for r in ident}
    ok = not failed and kinds == {"sum-rule", "split<=mult", "n-partition"}
    _line(acceptance_log, 2, ok, f"{len(ident)} identities ({', '.join(sorted(kinds))}), {len(failed)} failures")
    assert not failed
    assert kinds == {"sum-rule", "split<=mult", "n-partition"}


def _prime_degree_rows():
    """Rows printing c_- and c_+: (family, phi, label, derived, printed, traced-from-printed-rows)."""
    out = []
    for G in fm.registry():
        for pc in G.constants:
            if "c_plus" not in pc.values:
                continue
            printed = (LogValue.parse(pc.values["c_minus"]), LogValue.parse(pc.values["c_plus"]))
            row = assemble(G, pc.phi, pc.subgroup)
            derived = (LogValue(row.c_minus), LogValue(row.c_plus))
            try:
                raw = assemble(G, pc.phi, pc.subgroup, printed=True)
                traced = (LogValue(raw.c_minus), LogValue(raw.c_plus)) == printed
            except FamilyDataError:
                traced = None
            out.append((G.id, pc.phi, pc.subgroup_label, derived, printed, traced))
    return out


def test_criterion_3_constants(acceptance_log, audit):
    inconsistent = set(audit.inconsistent_rows())
    flagged = set(audit.flagged_rows())
    rows = _prime_degree_rows()
    off = [(f, p, s) for f, p, s, d, pr, _ in rows if d != pr]
    # a prime-degree row may differ only when the audit traces it to a corrected density row
    untraced = [(f, p, s) for f, p, s, d, pr, t in rows if d != pr and not (t and (f, p, s) in inconsistent)]
    stray = [r for r in audit.records if not r.passed and (r.family, r.phi, r.subgroup) not in inconsistent]
    must_flag = ("G(4,4)", "C2", "{1}")
    must_not = [("G(1,7)", "C7", "(Z/7Z)^x"), ("G(1,9)", "C9", "{1}")]
    ok = not untraced and not stray and must_flag in flagged and not any(r in flagged for r in must_not)
    _line(acceptance_log, 3, ok,
          f"{len(rows) - len(off)}/{len(rows)} prime-degree rows exact; {len(off)} follow from a corrected density row "
          f"({', '.join(f'{f} {p} {s}' for f, p, s in off)}); {len(audit.rows())} audited rows, "
          f"{len(flagged)} flagged as inconsistent, {len(stray)} unexplained")
    assert not untraced
    assert not stray
    assert must_flag in flagged
    for r in must_not:
        assert r not in flagged


def test_criterion_4_discriminants(acceptance_log):
    reports = discriminant_suite(samples=100, bound=50, seed=0)
    failed = [r for r in reports if not r.passed]
    example = [r for r in reports if r.family == "G(1,5)" and r.phi.endswith("example")]
    full = all(r.samples == 100 for r in reports if not r.phi.endswith("example"))
    ok = not failed and full and example and all(r.samples == 20 for r in example)
    _line(acceptance_log, 4, ok,
          f"{len(reports)} checks, {sum(r.samples for r in reports)} samples, {len(failed)} failing checks")
    assert not failed
    assert full
    assert example and all(r.samples == 20 for r in example)


def test_criterion_5_count_exponent(acceptance_log):
    parts, ok = [], True
    for fid, heights in LADDERS.items():
        ladder = stats.count_ladder(fid, heights)
        slope = stats.count_exponent(ladder)
        alpha = float(fm.get(fid).alpha)
        rel = abs(slope / alpha - 1)
        ok &= rel <= 0.15
        parts.append(f"{fid} slope {slope:.4f} vs {alpha:.4f} ({rel:.1%})")
    _line(acceptance_log, 5, ok, "; ".join(parts))
    assert ok


def test_criterion_6_frequencies(acceptance_log, frequency_reports):
    parts, ok = [], True
    for fid, rep in frequency_reports.items():
        cells = _nclass_cells(rep)
        rate = _rate(cells)
        ok &= rep.n >= 5000 and rate >= 0.9
        parts.append(f"{fid} N={rep.n} {sum(c.within for c in cells)}/{len(cells)}")
    g12 = _nclass_cells(frequency_reports["G(1,2)"])
    parts.append(f"G(1,2) against the mod q^k census {_rate(g12, True):.0%}")
    _line(acceptance_log, 6, ok, "; ".join(parts))
    for fid in ("G(1,3)", "G(1,5)"):
        rep = frequency_reports[fid]
        assert rep.n >= 5000
        assert _rate(_nclass_cells(rep)) >= 0.9
    assert frequency_reports["G(1,2)"].n >= 5000
    # the level-0 densities ignore curves whose reduced model sits deeper in q; the refined census does not
    assert _rate(g12, True) >= 0.9


@pytest.mark.xfail(strict=True, reason="level-0 densities miss non-minimal G(1,2) models at this height; see notes")
def test_criterion_6_g12_against_level0_densities(frequency_reports):
    assert _rate(_nclass_cells(frequency_reports["G(1,2)"])) >= 0.9


def test_criterion_7_shape(acceptance_log, shape_report):
    r = shape_report
    ratio = r.variance / r.loglog
    c_V = float(r.c_V)
    moments_ok = -0.8 <= r.skewness <= 0.8 and 2.0 <= r.kurtosis <= 4.0
    variance_ok = c_V / 3 <= ratio <= 3 * c_V
    _line(acceptance_log, 7, moments_ok and variance_ok,
          f"G(1,2) B={r.height_bound:.0e} N={r.n}: skewness {r.skewness:.3f}, kurtosis {r.kurtosis:.3f}, "
          f"variance/loglog B {ratio:.3f} vs c_V={c_V:g} (trend check only, O(1) terms dominate at this height)")
    assert r.n > 10_000
    assert -0.8 <= r.skewness <= 0.8
    assert 2.0 <= r.kurtosis <= 4.0
    assert math.isfinite(ratio) and ratio > 0


@pytest.mark.xfail(strict=True, reason="variance/loglog B is far below c_V/3 at feasible heights; see notes")
def test_criterion_7_variance_scale(shape_report):
    ratio = shape_report.variance / shape_report.loglog
    assert float(shape_report.c_V) / 3 <= ratio <= 3 * float(shape_report.c_V)


DETERMINISM_RUNS = [
    ["verify-densities", "--qmax", "30"],
    ["verify-constants"],
    ["verify-discriminants", "--samples", "10"],
    ["velu-check", "--family", "G(1,5)", "--phi", "C5", "--samples", "10"],
    ["enumerate", "--family", "G(1,3)", "--height", "1e9", "--curves"],
    ["stats", "--family", "G(1,3)", "--phi", "C3", "--height", "1e9"],
    ["audit"],
]


def test_criterion_8_determinism(acceptance_log, tmp_path):
    diffs = []
    for i, argv in enumerate(DETERMINISM_RUNS):
        outs = []
        for workers in (1, 2):
            path = tmp_path / f"{i}-{workers}.json"
            run([*argv, "--workers", str(workers), "--out", str(path)])
            outs.append(path.read_bytes())
        if outs[0] != outs[1] or not outs[0]:
            diffs.append(argv[0])
    _line(acceptance_log, 8, not diffs,
          f"{len(DETERMINISM_RUNS)} subcommands at 1 and 2 workers, {len(diffs)} differ" + (f": {diffs}" if diffs else ""))
    assert not diffs


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
