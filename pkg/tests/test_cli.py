import csv
import json
from pathlib import Path

import jsonschema
import pytest

from g2cert import cli
from g2cert.models import builtin

DATA = Path(__file__).parent / "data"
HC_FILE = DATA / "hilbert_cartan.json"

REPORT_SCHEMA = {
    "type": "object",
    "required": ["version", "model", "seed", "checks", "summary"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": 1},
        "model": {"type": "string"},
        "seed": {"type": "integer"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "status", "details", "elapsed_ms"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "status": {"enum": ["pass", "fail", "error"]},
                    "details": {"type": "object"},
                    "elapsed_ms": {"type": "integer"},
                },
            },
        },
        "summary": {
            "type": "object",
            "required": ["passed", "failed", "errors"],
            "additionalProperties": False,
            "properties": {k: {"type": "integer"} for k in ("passed", "failed", "errors")},
        },
    },
}


@pytest.fixture(scope="module")
def flat_report():
    return cli.run(cli.CheckPlan("flat_cartan"))


def hc_data():
    return json.loads(HC_FILE.read_text())


def write(tmp_path, data, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


# ------------------------------------------------------------------ plans
def test_plan_validation():
    with pytest.raises(cli.UnknownCheck):
        cli.CheckPlan("flat_cartan", ["bogus_check"])
    with pytest.raises(ValueError):
        cli.CheckPlan("flat_cartan", points=2)
    with pytest.raises(ValueError):
        cli.CheckPlan("flat_cartan", seed=-1)
    with pytest.raises(ValueError):
        cli.CheckPlan("flat_cartan", seed=2**64)
    with pytest.raises(ValueError):
        cli.CheckPlan("flat_cartan", threads=0)
    cli.CheckPlan("flat_cartan", seed=2**64 - 1)


def test_full_flat_suite(flat_report):
    jsonschema.validate(flat_report, REPORT_SCHEMA)
    assert flat_report["summary"] == {"passed": 9, "failed": 0, "errors": 0}
    assert [c["name"] for c in flat_report["checks"]] == cli.DEFAULT_CHECKS["flat_cartan"]
    assert cli.exit_code(flat_report) == 0


def test_structure_table_details(flat_report):
    st = flat_report["checks"][0]
    assert st["name"] == "structure_table" and st["status"] == "pass"
    assert st["details"]["verified"] == 91 and st["details"]["mismatches"] == []


def test_chazy_k23_structure_table():
    r = cli.run(cli.CheckPlan("chazy_k23", ["structure_table"]))
    assert r["checks"][0]["status"] == "pass"


def test_model_file_default_checks():
    r = cli.run(cli.CheckPlan("hilbert_cartan", model_file=str(HC_FILE)))
    assert r["summary"]["failed"] == 0 and r["summary"]["errors"] == 0


def test_not_applicable_is_error():
    r = cli.run(cli.CheckPlan("hilbert_cartan", ["engel"]))
    assert r["checks"][0]["status"] == "error"
    assert "not applicable" in r["checks"][0]["details"]["error"]
    assert cli.exit_code(r) == 1


def test_unknown_model():
    with pytest.raises(cli.UnknownModel):
        cli.run(cli.CheckPlan("no_such_model"))


def test_deterministic_across_threads():
    plan = dict(model="flat_cartan", checks=["structure_table", "jacobi", "killing", "weights", "numeric_float_bracket"])
    a = cli.run(cli.CheckPlan(**plan, threads=1))
    b = cli.run(cli.CheckPlan(**plan, threads=4))
    ja = json.dumps(cli.strip_timing(a), sort_keys=True)
    jb = json.dumps(cli.strip_timing(b), sort_keys=True)
    assert ja == jb


def test_summary_counts_match_checks(flat_report):
    sm = flat_report["summary"]
    assert sm["passed"] + sm["failed"] + sm["errors"] == len(flat_report["checks"])


# ------------------------------------------------------------------ output
def test_emit_json_and_md(tmp_path, flat_report):
    cli.emit(flat_report, "json", tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back == flat_report
    cli.emit(flat_report, "md", tmp_path / "r.md")
    md = (tmp_path / "r.md").read_text()
    assert md.startswith("# g2cert report: flat_cartan")
    assert "| structure_table | pass |" in md
    with pytest.raises(ValueError):
        cli.emit(flat_report, "xml", tmp_path / "r.xml")


def test_emit_empty_report(tmp_path):
    rep = {"version": 1, "model": "m", "seed": 0, "checks": [], "summary": {"passed": 0, "failed": 0, "errors": 0}}
    cli.emit(rep, "json", tmp_path / "e.json")
    jsonschema.validate(json.loads((tmp_path / "e.json").read_text()), REPORT_SCHEMA)
    assert cli.exit_code(rep) == 0


# ------------------------------------------------------------ model files
def test_hilbert_cartan_round_trip():
    m = cli.load_model(HC_FILE)
    assert cli.models_equal(m, builtin("hilbert_cartan"))
    assert not cli.models_equal(m, builtin("flat_cartan"))


def test_four_coordinates_schema_error(tmp_path):
    d = hc_data()
    d["coords"] = d["coords"][:4]
    with pytest.raises(cli.SchemaError) as exc:
        cli.load_model(write(tmp_path, d))
    assert exc.value.path.endswith("#coords")


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d["forms"].pop("omega3"), "forms"),
    (lambda d: d["fields"]["X1"].append("0"), "fields/X1"),
    (lambda d: d.update(extra=1), "<root>"),
    (lambda d: d["constants"][0].update(relation=[1, "3"]), "constants/0/relation/0"),
])
def test_schema_error_paths(tmp_path, mutate, where):
    d = hc_data()
    mutate(d)
    with pytest.raises(cli.SchemaError) as exc:
        cli.load_model(write(tmp_path, d))
    assert exc.value.path.split("#", 1)[1] == where


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(cli.SchemaError):
        cli.load_model(p)


def test_annihilation_failure(tmp_path):
    d = hc_data()
    d["forms"]["omega3"] = ["0", "0", "1", "0", "0"]
    d["fields"]["X2"] = ["1", "p", "1", "q", "0"]
    with pytest.raises(cli.AnnihilationFailure):
        cli.load_model(write(tmp_path, d))


def test_expression_syntax_error(tmp_path):
    from g2cert.symcore.errors import SymcoreError

    d = hc_data()
    d["fields"]["X2"][1] = "p +"
    with pytest.raises(SymcoreError):
        cli.load_model(write(tmp_path, d))


def test_failing_check_serializes_witness(tmp_path):
    d = hc_data()
    d["cfuncs"][1] = "12*y + 4*x*p - 4*q^2*x"
    p = write(tmp_path, d)
    r = cli.run(cli.CheckPlan("hc_printed", ["theta_span", "seeds_annihilated"], model_file=str(p)))
    assert [c["status"] for c in r["checks"]] == ["fail", "fail"]
    assert r["checks"][0]["details"]["residual"]
    assert r["checks"][1]["details"]["nonzero"]
    assert cli.exit_code(r) == 1
    jsonschema.validate(r, REPORT_SCHEMA)


# ------------------------------------------------------------------ main
def test_main_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert "hilbert_cartan" in out and "numeric_float_bracket" in out


def test_main_verify(tmp_path, capsys):
    js, md = tmp_path / "r.json", tmp_path / "r.md"
    code = cli.main(["verify", "flat_cartan", "--check", "structure_table", "--check", "jacobi",
                     "--json", str(js), "--md", str(md)])
    assert code == 0
    rep = json.loads(js.read_text())
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert [c["name"] for c in rep["checks"]] == ["structure_table", "jacobi"]
    assert md.exists()
    assert "passed 2, failed 0, errors 0" in capsys.readouterr().out


def test_main_exit_codes(tmp_path, capsys):
    assert cli.main(["verify", "flat_cartan", "--check", "bogus"]) == 2
    assert cli.main(["verify", "nope"]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["verify", "hilbert_cartan", "--check", "engel"]) == 1
    d = hc_data()
    d["coords"] = d["coords"][:4]
    assert cli.main(["verify", "x", "--model-file", str(write(tmp_path, d))]) == 2
    assert "coords" in capsys.readouterr().err


def test_main_model_file(tmp_path):
    js = tmp_path / "r.json"
    code = cli.main(["verify", "hilbert_cartan", "--model-file", str(HC_FILE), "--check", "theta_span", "--json", str(js)])
    assert code == 0
    assert json.loads(js.read_text())["checks"][0]["status"] == "pass"


def test_main_chazy_integrate(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert cli.main(["chazy", "integrate", "--k", "3/2", "--init", "1,0,0", "--range", "0:3", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x", "P", "Q", "R"]
    x, P = float(rows[-1][0]), float(rows[-1][1])
    assert x == 3.0 and P == pytest.approx(2.0, rel=1e-8)
    out2 = tmp_path / "t2.csv"
    assert cli.main(["chazy", "integrate", "--k", "2/3", "--init", "0.1,0.2,0.3", "--range", "0:1",
                     "--step", "0.1", "--out", str(out2)]) == 0
    assert len(list(csv.reader(out2.open()))) == 12


def test_main_chazy_blowup(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert cli.main(["chazy", "integrate", "--k", "3/2", "--init", "1,0,0", "--range", "0:10", "--out", str(out)]) == 1
    assert "integration stopped" in capsys.readouterr().err
    assert not out.exists()


def test_main_chazy_usage_errors(tmp_path):
    out = str(tmp_path / "t.csv")
    assert cli.main(["chazy", "integrate", "--k", "3/2", "--init", "1,0", "--range", "0:1", "--out", out]) == 2
    assert cli.main(["chazy", "integrate", "--k", "3/2", "--init", "1,0,0", "--range", "0:1",
                     "--step", "0.1", "--rtol", "1e-6", "--out", out]) == 2


def test_main_noth_residual(capsys):
    assert cli.main(["noth-residual", "--model", "lame_spin32", "--params", "alpha=1,beta=0,g3=4", "--samples", "50"]) == 0
    r = json.loads(capsys.readouterr().out)
    assert r["passed"] and r["samples"] == 50 and r["max"] < 1e-6
    assert cli.main(["noth-residual", "--model", "flat_cartan"]) == 2
    assert cli.main(["noth-residual", "--model", "lame_spin32", "--params", "zeta=1"]) == 2
