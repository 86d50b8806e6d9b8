import io

import orjson
import pandas as pd
import pytest

from answercheck.cli import EXIT_INCONCLUSIVE, EXIT_INCORRECT, EXIT_OK, EXIT_PARSE, EXIT_USAGE, run
from test_grid import DECADE_M


class TestCheck:
    def test_correct(self, capsys):
        assert run(["check", "2^x", "e^(x*log(2))"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "correct (symbolic stage)" in out
        assert "difference: 0" in out

    def test_incorrect_with_leading_minus(self, capsys):
        assert run(["check", "sin(x)", "-sin(x)"]) == EXIT_INCORRECT
        assert "witness: f(" in capsys.readouterr().out

    def test_parse_error(self, capsys):
        assert run(["check", "sin(", "x"]) == EXIT_PARSE
        assert "invalid expression" in capsys.readouterr().err

    def test_parse_error_as_json(self, capsys):
        assert run(["check", "--json", "sin(", "x"]) == EXIT_PARSE
        error = orjson.loads(capsys.readouterr().err)
        assert error["status"] == "error"
        assert error["code"] == EXIT_PARSE

    def test_json_report(self, capsys):
        code = run(["check", "sin(x)^2", "1-cos(x)^2", "--points", "10", "--seed", "11", "--json"])
        assert code == EXIT_OK
        report = orjson.loads(capsys.readouterr().out)
        assert report["schema_version"] == "1.0"
        assert report["verdict"] == "correct_with_bound"
        assert report["seed"] == 11
        assert report["witness"] is None
        assert len(report["segments"]) == 3
        assert {"a", "b", "M", "points_tested", "resampled"} <= set(report["segments"][0])

    def test_explicit_negative_segment(self, capsys):
        code = run(["check", "x", "-x", "--segment", "-20:-10", "--format", "json"])
        assert code == EXIT_INCORRECT
        report = orjson.loads(capsys.readouterr().out)
        assert -20 <= report["witness"]["x"] <= -10

    def test_inconclusive_exit_code(self, capsys):
        args = ["check", "sin(log(-x))^2", "1-cos(log(-x))^2", "--points", "5", "--json"]
        assert run(args) == EXIT_INCONCLUSIVE
        assert orjson.loads(capsys.readouterr().out)["accepted"] is True
        assert run(args + ["--strict"]) == EXIT_INCONCLUSIVE
        assert orjson.loads(capsys.readouterr().out)["accepted"] is False

    def test_long_input(self, capsys):
        code = run(["check", "+".join(["x"] * 1200), "1200*x+sin(x)", "--format", "json"])
        assert code == EXIT_INCORRECT
        report = orjson.loads(capsys.readouterr().out)
        assert report["difference"] == "-sin(x)"

    def test_declared_variable(self, capsys):
        assert run(["check", "t^2", "t*t", "--var", "t"]) == EXIT_OK

    def test_variable_mismatch(self, capsys):
        assert run(["check", "x", "t"]) == EXIT_PARSE


class TestProb:
    def test_fewer_zeros_than_points(self, capsys):
        assert run(["prob", "--M", "9007199", "--m", "10", "--k", "5"]) == EXIT_OK
        assert "p = 0.0" in capsys.readouterr().out

    def test_log_of_a_huge_grid(self, capsys):
        assert run(["prob", "--M", "2^52", "--m", "10", "--k", "1e6", "--log"]) == EXIT_OK
        assert float(capsys.readouterr().out) == pytest.approx(-222.2815, abs=0.01)

    def test_exact_json(self, capsys):
        assert run(["prob", "--M", "5", "--m", "2", "--k", "3", "--format", "json"]) == EXIT_OK
        payload = orjson.loads(capsys.readouterr().out)
        assert payload["exact"] == "3/10"
        assert payload["value"] == pytest.approx(0.3)

    def test_m_above_M_is_a_usage_error(self, capsys):
        assert run(["prob", "--M", "5", "--m", "10", "--k", "1"]) == EXIT_USAGE


class TestGrid:
    def test_thousand(self, capsys):
        assert run(["grid", "--a", "1000", "--b", "1005"]) == EXIT_OK
        assert "M = 44811936590751" in capsys.readouterr().out

    def test_negative_bounds(self, capsys):
        assert run(["grid", "--a", "-15", "--b", "-10", "--format", "json"]) == EXIT_OK
        assert orjson.loads(capsys.readouterr().out)["M"] == DECADE_M[0]

    def test_straddling_segment(self, capsys):
        assert run(["grid", "--a", "-1", "--b", "1"]) == EXIT_USAGE

    def test_table1(self, capsys):
        assert run(["table1"]) == EXIT_OK
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert frame["M"].tolist() == DECADE_M

    def test_decades_alias(self, capsys):
        assert run(["decades"]) == EXIT_OK
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert frame["M"].tolist() == DECADE_M

    def test_grid_curve(self, capsys):
        assert run(["grid-curve", "--a-list", "10,100,1000"]) == EXIT_OK
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert frame["M"].tolist() == DECADE_M[:3]


class TestCurves:
    def test_k_axis(self, capsys):
        args = ["curves", "--a", "10", "--b", "20", "--k-from", "1e6", "--k-to", "1e7", "--steps", "10"]
        assert run(args) == EXIT_OK
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert sorted(frame["m"].unique().tolist()) == [10, 20, 25, 50, 100]
        for _, rows in frame.groupby("m"):
            assert rows["log_p"].is_monotonic_increasing
        for _, rows in frame.groupby("k"):
            assert rows["log_p"].is_monotonic_decreasing

    def test_m_axis_is_concave(self, capsys):
        args = ["curves", "--a", "10", "--b", "20", "--axis", "m", "--k-list", "1000000", "--m-to", "30"]
        assert run(args) == EXIT_OK
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        second = frame["log_p"].diff().diff().dropna()
        assert (second <= 1e-9).all()

    def test_writes_a_file(self, tmp_path, capsys):
        out = tmp_path / "curves.csv"
        args = ["curves", "--a", "10", "--b", "20", "--k-from", "1e6", "--k-to", "2e6", "--steps", "3",
                "--out", str(out)]
        assert run(args) == EXIT_OK
        assert len(pd.read_csv(out)) == 15

    def test_k_axis_needs_a_range(self, capsys):
        assert run(["curves", "--a", "10", "--b", "20"]) == EXIT_USAGE


class TestOtherCommands:
    def test_simulate(self, capsys):
        assert run(["simulate", "--M", "100", "--m", "2", "--k", "100", "--trials", "1000", "--format", "json"]) == EXIT_OK
        result = orjson.loads(capsys.readouterr().out)
        assert result["rate"] == 1.0
        assert result["formula"] == 1.0

    def test_min_points(self, capsys):
        assert run(["min-points", "--M", "100", "--k", "0", "--target", "0.5"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "1"

    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == EXIT_USAGE

    def test_missing_arguments(self, capsys):
        assert run(["grid", "--a", "1"]) == EXIT_USAGE

    def test_help(self, capsys):
        assert run(["--help"]) == EXIT_OK
