import json

import pytest

from cgmkit import fixture_text
from cgmkit.cli import EXIT_BUDGET, EXIT_OK, EXIT_UNREALIZABLE, EXIT_USAGE, main


@pytest.fixture()
def fixture_path(tmp_path):
    p = tmp_path / "fixture.cgm"
    p.write_text(fixture_text())
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_empty_model(tmp_path, capsys):
    p = tmp_path / "empty.cgm"
    p.write_text("")
    code, out, _ = run(capsys, "check", str(p))
    assert code == EXIT_OK
    assert "realizable" in out


def test_optimize_weight_prints_value(fixture_path, capsys):
    code, out, _ = run(capsys, "optimize", fixture_path, "--lex", "Weight")
    assert code == EXIT_OK
    assert "-65/1" in out


def test_optimize_json_outcome(fixture_path, capsys):
    code, out, _ = run(capsys, "--json", "optimize", fixture_path, "--lex",
                       "Weight,workTime,cost")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["status"] == "realizable"
    assert data["realization"]["objectiveValues"] == ["-65/1", "2/1", "0/1"]


def test_core_exit_and_listing(tmp_path, capsys):
    p = tmp_path / "contradiction.cgm"
    p.write_text("goal G; goal H; refine R: G <- H; assert G true; assert H false;")
    code, out, _ = run(capsys, "core", str(p))
    assert code == EXIT_UNREALIZABLE
    assert "UserAssertion(G:true)" in out
    assert "UserAssertion(H:false)" in out


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cgm"
    p.write_text("goal 123;;;")
    code, _, err = run(capsys, "check", str(p))
    assert code == EXIT_USAGE
    assert "expected" in err


def test_usage_error(capsys):
    assert main(["optimize"]) == EXIT_USAGE


def test_budget_exit_code(fixture_path, capsys):
    code, out, _ = run(capsys, "--timeout", "0.000001", "optimize", fixture_path,
                       "--lex", "Weight")
    assert code == EXIT_BUDGET


def test_budget_json_outcome(fixture_path, capsys):
    code, out, _ = run(capsys, "--json", "--timeout", "0.000001", "optimize",
                       fixture_path, "--lex", "Weight")
    assert code == EXIT_BUDGET
    assert json.loads(out)["status"] == "budget"


def test_enumerate_limit(fixture_path, capsys):
    code, out, _ = run(capsys, "enumerate", fixture_path, "--limit", "3")
    assert code == EXIT_OK
    assert "3 realization(s)" in out


def test_entail_lists_forced(fixture_path, capsys):
    code, out, _ = run(capsys, "--json", "entail", fixture_path,
                       "--antecedent", "LowCost")
    assert code == EXIT_OK
    data = json.loads(out)
    assert "UseHotelsAndConventionCenters" in data["forcedFalse"]


def test_export_smtlib(fixture_path, capsys):
    code, out, _ = run(capsys, "export", fixture_path, "--lex", "Weight")
    assert code == EXIT_OK
    assert "(set-logic QF_LRA)" in out
    assert "(< cost 100)" in out  # strict atom exported verbatim
    assert "(minimize Weight)" in out
    assert out.strip().endswith("(get-objectives)")


def test_export_empty_model_scaffolding(tmp_path, capsys):
    p = tmp_path / "empty.cgm"
    p.write_text("")
    code, out, _ = run(capsys, "export", str(p))
    assert code == EXIT_OK
    assert "(check-sat)" in out
    assert "(minimize" not in out


def test_json_model_input(tmp_path, capsys):
    from cgmkit import load_fixture
    from cgmkit.dsl import model_to_json_text

    p = tmp_path / "fixture.json"
    p.write_text(model_to_json_text(load_fixture()))
    code, out, _ = run(capsys, "--json", "optimize", str(p), "--lex", "Weight")
    assert code == EXIT_OK
    assert json.loads(out)["realization"]["objectiveValues"] == ["-65/1"]


def test_evolve_roundtrip(tmp_path, fixture_path, capsys):
    code, out, _ = run(capsys, "--json", "optimize", fixture_path, "--lex", "Weight")
    realization = json.loads(out)["realization"]
    rpath = tmp_path / "r.json"
    rpath.write_text(json.dumps(realization))
    code, out, _ = run(capsys, "--json", "evolve", fixture_path, fixture_path,
                       "--realization", str(rpath), "--mode", "Hamming")
    assert code == EXIT_OK
    assert json.loads(out)["realization"]["objectiveValues"] == ["0/1"]


def test_bench_csv_to_stdout(capsys):
    code, out, _ = run(capsys, "bench", "--n", "2", "--variant", "reduced",
                       "--instances", "2", "--timeout", "60")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("config_id,instance")
    assert any(line.startswith("config_id,mode") for line in lines)


def test_bench_write_instances(tmp_path, capsys):
    code, _, err = run(capsys, "bench", "--n", "2", "--variant", "full",
                       "--out", str(tmp_path / "out"))
    assert code == EXIT_OK
    assert (tmp_path / "out" / "manifest.json").exists()


def test_format_roundtrip(fixture_path, capsys):
    code, out, _ = run(capsys, "format", fixture_path)
    assert code == EXIT_OK
    from cgmkit.dsl import parse_model
    from cgmkit import load_fixture

    assert parse_model(out) == load_fixture()
