"""Tests for the command line: exit codes, report formats and seed stability"""

import json

import pytest

from src.cli import EXIT_CONFIGURATION, EXIT_DOMAIN, EXIT_OK, EXIT_VERIFICATION, LocalisationRunner, main
from src.errors import ConfigurationError
from src.report import ReportFormatter
from src.scenario import load_scenario, parse_scenario


def write_scenario(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def line_scenario(**extra):
    payload = {
        "name": "line",
        "d": 1,
        "species": [{"name": "phi", "statistics": "boson", "dimension": [1, 2], "components": ["phi"]}],
        "d_plus": 2,
        "geometry": {"L": 4, "N": 2},
        "patch": {"anchor": [0], "radii": [5]},
    }
    payload.update(extra)
    return payload


class TestEnumerate:
    def test_four_dimensional_count(self, scenario_path, capsys):
        assert main(["enumerate", "--scenario", scenario_path("scalar_d4_enumerate")]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["command"] == "enumerate"
        assert report["results"]["count"] == 67
        assert report["results"]["minimal_irrelevant_dimension"] == [5, 1]

    def test_csv_columns(self, scenario_path, capsys):
        assert main(["enumerate", "--scenario", scenario_path("boson_d1"), "--format", "csv"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "monomial,dimension,relevance"
        assert lines[1] == "1,0,relevant"

    def test_text_format(self, scenario_path, capsys):
        assert main(["enumerate", "--scenario", scenario_path("boson_d1"), "--format", "text"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("=== enumerate: boson_d1 ===")
        assert out.rstrip().endswith("result: ok")

    def test_out_file(self, scenario_path, tmp_path, capsys):
        target = tmp_path / "report.json"
        assert main(["enumerate", "--scenario", scenario_path("boson_d1"), "--out", str(target)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        assert json.loads(target.read_text(encoding="utf-8"))["results"]["count"] == 7


class TestLoc:
    def test_local_functional(self, tmp_path, capsys):
        path = write_scenario(tmp_path, line_scenario(
            X=[[0]],
            functional=[{"coeff": {"re": 2, "im": -1}, "factors": [[0, "phi"], [0, "phi"]]}],
        ))
        assert main(["loc", "--scenario", path]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        results = report["results"]
        assert results["base_point"] == [0]
        assert results["polynomial"] == [{
            "monomial": [["phi", {}], ["phi", {}]],
            "coeff": {"re": [2, 1], "im": [-1, 1]},
        }]
        assert report["verification"]["passed"]
        assert report["verification"]["checks"][0]["name"] == "defining_property"

    def test_verify_off_has_no_checks(self, tmp_path, capsys):
        path = write_scenario(tmp_path, line_scenario(
            X=[[0], [1]],
            functional=[{"coeff": 1, "factors": [[0, "phi"], [1, "phi"]]}],
        ))
        assert main(["loc", "--scenario", path, "--verify", "off"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["verification"]["checks"] == []

    def test_graded(self, scenario_path, capsys):
        assert main(["loc", "--scenario", scenario_path("graded")]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        graded = report["results"]["graded"]
        assert set(graded) == {"empty", "a", "b", "ab"}
        assert graded["b"] == []
        assert graded["ab"][0] == {"factors": [], "coeff": [7, 1]}
        names = [c["name"] for c in report["verification"]["checks"]]
        assert "defining_property[empty]" in names

    def test_csv_rows(self, tmp_path, capsys):
        path = write_scenario(tmp_path, line_scenario(
            X=[[0]],
            functional=[{"coeff": {"re": 2, "im": -1}, "factors": [[0, "phi"], [0, "phi"]]}],
        ))
        assert main(["loc", "--scenario", path, "--format", "csv"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines == ["monomial,re_num,re_den,im_num,im_den", "phi phi,2,1,-1,1"]

    def test_stencil_outside_patch_is_domain_error(self, tmp_path):
        path = write_scenario(tmp_path, line_scenario(
            X=[[5]],
            functional=[{"coeff": 1, "factors": [[5, "phi"]]}],
        ))
        assert main(["loc", "--scenario", path]) == EXIT_DOMAIN


class TestConfiguration:
    def test_missing_file(self, tmp_path):
        assert main(["enumerate", "--scenario", str(tmp_path / "absent.json")]) == EXIT_CONFIGURATION

    def test_schema_violation(self, tmp_path):
        payload = line_scenario()
        del payload["d_plus"]
        path = write_scenario(tmp_path, payload)
        assert main(["enumerate", "--scenario", path]) == EXIT_CONFIGURATION

    def test_schema_error_message(self):
        payload = line_scenario(strategy="average")
        with pytest.raises(ConfigurationError) as info:
            parse_scenario(payload)
        assert "strategy" in str(info.value)

    def test_point_outside_patch(self, tmp_path):
        path = write_scenario(tmp_path, line_scenario(X=[[6]]))
        assert main(["loc", "--scenario", path]) == EXIT_CONFIGURATION

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        assert main(["enumerate", "--scenario", str(path)]) == EXIT_CONFIGURATION

    def test_contract_needs_section(self, scenario_path):
        assert main(["contract", "--scenario", scenario_path("boson_d1")]) == EXIT_CONFIGURATION

    def test_unknown_command(self, scenario_path):
        runner = LocalisationRunner(load_scenario(scenario_path("boson_d1")), seed=1)
        with pytest.raises(ConfigurationError):
            runner.run("plot")


class TestVerify:
    def test_corrupted_table_names_monomial(self, scenario_path, capsys):
        assert main(["verify", "--scenario", scenario_path("corrupted_p_hat")]) == EXIT_VERIFICATION
        report = json.loads(capsys.readouterr().out)
        assert not report["verification"]["passed"]
        check = report["verification"]["checks"][0]
        assert check["name"] == "p_hat_table"
        assert check["counterexample"]["condition"] == "i"
        assert "phi" in check["counterexample"]["monomial"]

    def test_corrupted_table_fails_loc(self, scenario_path):
        assert main(["loc", "--scenario", scenario_path("corrupted_p_hat")]) == EXIT_VERIFICATION

    def test_seed_stability(self, tmp_path, capsys):
        path = write_scenario(tmp_path, line_scenario(options={"samples": 2}))
        assert main(["verify", "--scenario", path, "--seed", "11"]) == EXIT_OK
        first = capsys.readouterr().out
        assert main(["verify", "--scenario", path, "--seed", "11"]) == EXIT_OK
        second = capsys.readouterr().out
        assert first == second
        report = json.loads(first)
        assert report["seed"] == 11
        assert report["verification"]["passed"]


class TestContract:
    def test_slope(self, scenario_path, capsys):
        assert main(["contract", "--scenario", scenario_path("contract")]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["results"]["slope"] == pytest.approx(-3.0)
        assert report["verification"]["checks"][0]["name"] == "contraction_slope"


def test_formatter_rejects_unknown_format(scenario_path):
    report = LocalisationRunner(load_scenario(scenario_path("boson_d1"))).run("enumerate")
    with pytest.raises(ConfigurationError):
        ReportFormatter().render(report, "xml")
