import json

import pytest

from selmer_ratios.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run


def _run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = run([*argv, "--out", str(out), "--workers", "1"])
    doc = json.loads(out.read_text()) if out.exists() else None
    return code, doc


def test_verify_densities_q50(tmp_path):
    code, doc = _run(["verify-densities", "--qmax", "50"], tmp_path)
    assert code == EXIT_OK
    assert doc["failures"] == 0 and doc["checks"] > 1000


def test_verify_densities_single_row(tmp_path):
    code, doc = _run(["verify-densities", "--qmax", "40", "--family", "G(1,5)", "--phi", "C5", "--records"], tmp_path)
    assert code == EXIT_OK
    assert {r["phi"] for r in doc["records"]} == {"C5"}
    assert all(r["counted_num"] == r["predicted_num"] for r in doc["records"] if r["kind"] == "census")


def test_audit_reports_known_mismatches(tmp_path):
    code, doc = _run(["audit"], tmp_path)
    assert code == EXIT_OK
    assert doc["mismatches"] > 0
    assert ["G(4,4)", "C2", "{1}"] in doc["flagged_rows"]
    assert doc["unexplained_rows"] == []


def test_verify_constants(tmp_path):
    code, doc = _run(["verify-constants", "--family", "G(1,7)"], tmp_path)
    assert code == EXIT_OK and doc["reproduced"] == doc["rows"]


def test_verify_discriminants(tmp_path):
    code, doc = _run(["verify-discriminants", "--samples", "10"], tmp_path)
    assert code == EXIT_OK and doc["failures"] == 0


def test_velu_check(tmp_path):
    code, doc = _run(["velu-check", "--family", "G(1,5)", "--phi", "C5", "--samples", "20"], tmp_path)
    assert code == EXIT_OK
    assert [r["pass"] for r in doc["records"]] == [True, True]


def test_enumerate(tmp_path):
    code, doc = _run(["enumerate", "--family", "G(1,1)", "--height", "1", "--margin", "2", "--curves"], tmp_path)
    assert code == EXIT_OK and doc["N"] == 8
    assert {(c["a"], c["b"]) for c in doc["curves"]} >= {("1", "1"), ("-1", "0")}


def test_stats_writes_report_and_csv(tmp_path):
    csv = tmp_path / "curves.csv"
    code, doc = _run(
        ["stats", "--family", "G(1,2)", "--phi", "C2", "--height", "1e5", "--curves-csv", str(csv)], tmp_path
    )
    assert code == EXIT_OK
    assert doc["predicted"]["c_E"] == "0" and doc["predicted"]["c_V"] == "2"
    assert csv.read_text().count("\n") == doc["N"] + 1


@pytest.mark.slow
def test_stats_example_height(tmp_path):
    code, doc = _run(["stats", "--family", "G(1,2)", "--phi", "C2", "--height", "1000000000"], tmp_path)
    assert code == EXIT_OK
    assert (doc["predicted"]["c_E"], doc["predicted"]["c_V"]) == ("0", "2")


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["stats", "--family", "G(9,9)", "--phi", "C2", "--height", "100"], "valid families: G(1,1)"),
        (["stats", "--family", "G(1,5)", "--phi", "C7", "--height", "100"], "valid: C5"),
        (["velu-check", "--family", "G(1,1)", "--phi", "C2"], "no base model"),
        (["verify-densities", "--qmax", "30", "--family", "G(1,3)", "--phi", "C5"], "valid: O, C3"),
        (["stats", "--family", "G(1,7)", "--phi", "C7", "--height", "100", "--subgroup", "1,3"], "not a subgroup"),
        (["enumerate", "--family", "G(1,2)", "--height", "12.5"], "positive integer"),
        (["verify-densities"], "--qmax"),
        (["frobnicate"], "invalid choice"),
    ],
)
def test_usage_errors(argv, needle, tmp_path, capsys):
    code = run([*argv, "--out", str(tmp_path / "x.json")])
    assert code == EXIT_USAGE
    assert needle in capsys.readouterr().err
    assert not (tmp_path / "x.json").exists()


def test_failure_exit_code(monkeypatch, tmp_path):
    from selmer_ratios import cli

    real = cli.verify_tables

    def broken(*args, **kwargs):
        recs = real(*args, **kwargs)
        recs[0] = type(recs[0])(**{**recs[0].__dict__, "passed": False})
        return recs

    monkeypatch.setattr(cli, "verify_tables", broken)
    code, doc = _run(["verify-densities", "--qmax", "11", "--family", "G(1,3)"], tmp_path)
    assert code == EXIT_FAIL and doc["failures"] == 1


def test_reports_are_byte_identical_across_workers(tmp_path):
    paths = []
    for w in ("1", "2"):
        p = tmp_path / f"r{w}.json"
        assert run(["stats", "--family", "G(1,3)", "--phi", "C3", "--height", "1e7", "--workers", w, "--out", str(p)]) == 0
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_stdout_when_no_out(capsys):
    assert run(["verify-constants", "--family", "G(2,2)", "--workers", "1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["command"] == "verify-constants"
