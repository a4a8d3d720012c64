import csv
import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

import finslerwarp.cli as cli
import finslerwarp.equivalence as eq

SCHEMA = json.loads(resources.files("finslerwarp").joinpath("schema/output.schema.json").read_text())
RIEMANN_CHECK = ["check", "--catalog", "riemann_warp,f=r", "--n", "3", "--volume", "bh",
                 "--r-range", "1:3:9", "--s-range", "-1.5:1.5:17"]
INTERIOR = ["--r", "1.1,2.4", "--s", "-0.7,0.9"]


def invoke(argv, capsysbinary):
    code = cli.main(argv)
    out, err = capsysbinary.readouterr()
    return code, out, err


def run_json(argv, capsysbinary):
    code, out, err = invoke(argv, capsysbinary)
    assert code == 0, err.decode()
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


def test_check_example(capsysbinary):
    doc = run_json(RIEMANN_CHECK, capsysbinary)
    res = doc["results"]
    assert res["verdict_S"] is True and res["verdict_E"] is True
    assert all(abs(row["c_S"]) <= 1e-8 and abs(row["c_E"]) <= 1e-8 for row in res["rows"])
    assert doc["provenance"]["seed"] == cli.DEFAULT_SEED


def test_volume_example(capsysbinary):
    row = run_json(["volume", "--catalog", "euclid", "--n", "3", "--r", "1"], capsysbinary)["results"]["rows"][0]
    assert row["k_bh"] == pytest.approx(2.0, rel=1e-12)
    assert row["sigma_bh"] == pytest.approx(1.0, rel=1e-12)
    assert row["g_bh"] == pytest.approx(0.0, abs=1e-12)
    assert {"g_bh_paper", "g_ht", "g_ht_paper", "sigma_ht"} <= set(row)


def test_oracle_compare_example(capsysbinary):
    doc = run_json(["oracle-compare", "--w", "s^2+r^2", "--n", "3", "--r", "2", "--s", "1"], capsysbinary)
    rows = {row["quantity"]: row for row in doc["results"]["rows"]}
    assert rows["Phi"]["printed"] == -2.03125
    assert rows["Phi"]["definitional"] == pytest.approx(-1.0, abs=1e-12)
    assert rows["Phi"]["oracle"] == pytest.approx(-1.0, abs=1e-5)
    assert rows["sigma"]["abs_gap"] <= 8e-2
    assert any(e["quantity"] == "Phi" and e["gap"] == pytest.approx(1.03125) for e in doc["results"]["errata"])


@pytest.mark.parametrize(
    "argv",
    [
        ["inspect", "--catalog", "euclid", "--r-range", "1:2:3", "--s-range", "-1:1:3"],
        ["curvature", "--catalog", "randers_warp,f=r,eps=0.5", *INTERIOR],
        ["curvature", "--w", "s^2+r^2", "--r", "2", "--v", "1,1,0", "--mode", "printed"],
        ["volume", "--phi", "sqrt(s^2+r^2)+0.3*s", "--r", "1,2", "--volume", "ht"],
        ["check", "--catalog", "randers_warp,f=1+r^2,eps=0.3", "--r-range", "1:2:3"],
        ["oracle-compare", "--catalog", "randers_warp,f=r,eps=0.5", "--r", "1.3", "--s", "0.4", "--mc-samples", "20000"],
        ["sweep", "--catalog", "euclid", "--quantity", "tau", "--format", "json", "--r", "1", "--s", "0"],
    ],
    ids=lambda a: a[0],
)
def test_every_subcommand_validates_and_round_trips(argv, capsysbinary):
    code, out, _ = invoke(argv, capsysbinary)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    assert doc["schema_version"] == "1" and set(doc) == {"schema_version", "request", "results", "provenance"}
    assert cli.render(doc, "json") == out


def test_sweep_csv_has_one_row_per_grid_point(capsysbinary):
    code, out, _ = invoke(["sweep", "--w", "s^2+r^2", "--quantity", "Psi", "--r-range", "1:3:4", "--s-range",
                           "-1:1:5"], capsysbinary)
    assert code == 0
    assert b"\r\n" in out
    rows = list(csv.DictReader(io.StringIO(out.decode())))
    assert len(rows) == 4 * 5
    assert rows[0].keys() == {"r", "s", "quantity", "value"}
    assert float(rows[0]["r"]) == 1.0 and float(rows[0]["s"]) == -1.0


def test_csv_quotes_nested_values(capsysbinary):
    code, out, _ = invoke(["curvature", "--catalog", "euclid", "--r", "1", "--s", "0", "--format", "csv"],
                          capsysbinary)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out.decode())))
    assert json.loads(row["E"]) == [[0.0] * 3] * 3


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--catalog", "randers_warp,f=r,eps=0.5", "--r-range", "1:2.5:4", "--volume", "ht"],
        ["oracle-compare", "--catalog", "randers_warp,f=r,eps=0.5", "--r", "1.7", "--s", "0.3",
         "--mc-samples", "50000", "--seed", "11"],
    ],
    ids=["check", "oracle-compare"],
)
def test_outputs_are_byte_identical(argv, capsysbinary, monkeypatch):
    monkeypatch.setenv("FINSLERWARP_THREADS", "1")
    first = invoke(argv, capsysbinary)
    monkeypatch.setenv("FINSLERWARP_THREADS", "4")
    second = invoke(argv, capsysbinary)
    third = invoke(argv, capsysbinary)
    assert first == second == third
    assert first[0] == 0


def test_seed_changes_monte_carlo_only(capsysbinary):
    base = ["oracle-compare", "--catalog", "euclid", "--r", "1.5", "--s", "0.2", "--mc-samples", "20000"]
    a = run_json(base + ["--seed", "1"], capsysbinary)["results"]["rows"]
    b = run_json(base + ["--seed", "2"], capsysbinary)["results"]["rows"]
    for x, y in zip(a, b):
        if x["quantity"] == "sigma":
            assert x["oracle"] != y["oracle"]
        else:
            assert x == y


@pytest.mark.parametrize(
    "argv, code",
    [
        (["bogus"], "usage"),
        (["check"], "usage"),
        (["check", "--w", "s^2+1", "--phi", "1"], "usage"),
        (["check", "--w", "s^2+"], "syntax_error"),
        (["check", "--w", "s^2+q"], "unknown_identifier"),
        (["check", "--w", "s^2-1"], "validity_failure"),
        (["check", "--w", "s^2+1", "--r-range", "1:2"], "usage"),
        (["check", "--w", "s^2+1", "--r-range", "2:1:3"], "usage"),
        (["check", "--w", "s^2+1", "--r", "1", "--r-range", "1:2:3"], "usage"),
        (["check", "--w", "s^2+1", "--r", "9"], "invalid_input"),
        (["curvature", "--w", "s^2+1", "--r", "1"], "usage"),
        (["curvature", "--w", "s^2+1", "--r", "1", "--v", "1,0"], "usage"),
        (["check", "--catalog", "nosuch"], "invalid_input"),
    ],
)
def test_errors_exit_one_with_structured_stderr(argv, code, capsysbinary):
    status, out, err = invoke(argv, capsysbinary)
    assert status == 1 and out == b""
    payload = json.loads(err)
    jsonschema.validate(payload, SCHEMA)
    assert payload["error"]["code"] == code


def test_bad_thread_setting(capsysbinary, monkeypatch):
    monkeypatch.setenv("FINSLERWARP_THREADS", "many")
    status, _, err = invoke(RIEMANN_CHECK, capsysbinary)
    assert status == 1 and json.loads(err)["error"]["code"] == "usage"


def test_forward_violation_exits_two(capsysbinary, monkeypatch):
    real = eq.e_residual

    def broken(spec, c, r, s, mode="definitional"):
        rb, ra = real(spec, c, r, s, mode)
        return rb + 1.0, ra

    monkeypatch.setattr(eq, "e_residual", broken)
    status, out, err = invoke(RIEMANN_CHECK, capsysbinary)
    assert status == 2 and out == b""
    payload = json.loads(err)
    jsonschema.validate(payload, SCHEMA)
    assert payload["error"]["code"] == "forward_implication_violation"


def test_negative_values_are_accepted(capsysbinary):
    doc = run_json(["inspect", "--catalog", "euclid", "--r", "1", "--s", "-1.5,0.5", "--s-domain", "-3:3"],
                   capsysbinary)
    assert doc["request"]["s"] == [-1.5, 0.5]
    assert doc["request"]["metric"]["s_domain"] == [-3.0, 3.0]
    doc = run_json(["inspect", "--catalog", "euclid", "--r", "1", "--s-range", "-1:-0.5:2"], capsysbinary)
    assert doc["request"]["s"] == [-1.0, -0.5]


def test_out_writes_the_same_bytes(tmp_path, capsysbinary):
    target = tmp_path / "check.json"
    code, out, _ = invoke(RIEMANN_CHECK + ["--out", str(target)], capsysbinary)
    assert code == 0 and out == b""
    _, direct, _ = invoke(RIEMANN_CHECK, capsysbinary)
    assert target.read_bytes() == direct


def test_unwritable_output_reports_the_path(tmp_path, capsysbinary):
    bad = tmp_path / "missing" / "out.json"
    status, _, err = invoke(RIEMANN_CHECK + ["--out", str(bad)], capsysbinary)
    payload = json.loads(err)
    assert status == 1 and payload["error"]["code"] == "io_error" and payload["error"]["path"] == str(bad)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "finslerwarp.cli", *RIEMANN_CHECK], capture_output=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["verdict_S"] is True
