import io
import json
import math

import pandas as pd
import pytest

from stablenv.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, run


def read_csv(text: str) -> pd.DataFrame:
    return pd.read_csv(io.StringIO(text))


def test_ml(capsys):
    assert run(["ml", "--alpha", "2", "--z", "1"]) == EXIT_OK
    frame = read_csv(capsys.readouterr().out)
    assert list(frame.columns) == ["a", "z", "order", "value"]
    assert frame["value"][0] == pytest.approx(math.cosh(1.0), rel=1e-15)


def test_bias(capsys):
    assert run(["bias", "--points", "3"]) == EXIT_OK
    frame = read_csv(capsys.readouterr().out)
    assert list(frame["a"]) == [1.0, 1.5, 2.0]
    assert list(frame["gamma"]) == pytest.approx([1.0, math.pi / 4.0, 0.5], abs=1e-12)
    assert list(frame["g_closed"]) == pytest.approx(list(frame["g_integral"]), abs=1e-8)


def test_density_at_origin(capsys):
    assert run(["density", "--alpha", "2", "--x-min", "0", "--x-max", "0", "--points", "1"]) == EXIT_OK
    frame = read_csv(capsys.readouterr().out)
    assert frame["density"][0] == pytest.approx(1.0, rel=1e-12)
    assert frame["cdf"][0] == pytest.approx(0.5, abs=1e-12)


def test_json_tables(capsys):
    assert run(["slope-laws", "--alpha", "2", "--u", "1", "--format", "json"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    row = document["rows"][0]
    assert row["upward_lt"] == pytest.approx(1.0 / math.cosh(1.0), rel=1e-12)
    assert row["upward_mean"] == pytest.approx(0.5)
    assert row["downward_height_mean"] == pytest.approx(2.0)


def test_transforms(capsys):
    assert run(["transforms", "--alpha", "2", "--u", "1"]) == EXIT_OK
    frame = read_csv(capsys.readouterr().out)
    assert frame["drawup_time"][0] == pytest.approx(1.0 / math.cosh(1.0), rel=1e-12)
    assert frame["up_excursion"][0] * frame["up_run"][0] == pytest.approx(1.0 / math.cosh(1.0), rel=1e-10)


def test_output_is_reproducible(tmp_path):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    arguments = ["density", "--alpha", "1.5", "--x-min", "-2", "--x-max", "2", "--points", "9"]
    assert run(arguments + ["-o", str(first)]) == EXIT_OK
    assert run(arguments + ["-o", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_usage_errors():
    assert run(["no-such-command"]) == EXIT_USAGE
    assert run(["ml", "--z", "1"]) == EXIT_USAGE
    assert run(["density", "--alpha", "1.5", "--stehfest-terms", "7"]) == EXIT_USAGE


def test_numerical_errors():
    assert run(["ml", "--alpha", "1.5", "--z", "100000"]) == EXIT_NUMERICAL
    assert run(["bias", "--alpha-min", "1", "--alpha-max", "3", "--points", "3"]) == EXIT_NUMERICAL
    assert run(["density", "--alpha", "2", "--x-min", "60", "--x-max", "60", "--points", "1"]) == EXIT_NUMERICAL


def test_verify_subset(capsys):
    assert run(["verify", "--fast", "--only", "bias_endpoints", "g_forms", "kesten_reduction"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["passed"] is True
    assert [check["name"] for check in document["checks"]] == ["bias_endpoints", "kesten_reduction", "g_forms"]


def test_simulate(tmp_path):
    report_file = tmp_path / "report.json"
    extrema_file = tmp_path / "extrema.csv"
    slopes_file = tmp_path / "slopes.csv"
    arguments = [
        "simulate", "--alpha", "2", "--paths", "100", "--step", "0.01", "--seed", "3",
        "-o", str(report_file), "--dump-extrema", str(extrema_file), "--dump-slopes", str(slopes_file),
    ]
    assert run(arguments) == EXIT_OK
    document = json.loads(report_file.read_text())
    assert document["config"]["seed"] == 3
    assert document["comparisons"]["b1_negative_fraction"]["analytic"] == pytest.approx(0.5)
    extrema = pd.read_csv(extrema_file)
    assert set(extrema["kind"]) <= {"min", "max"}
    slopes = pd.read_csv(slopes_file)
    assert slopes["is_central"].sum() == 1


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_walk_demo(capsys):
    arguments = ["walk-demo", "--alpha", "1.5", "--steps", "64", "--envs", "4", "--sites", "100", "--format", "json"]
    assert run(arguments) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document["left_fraction"]["n"] == 4
    assert document["config"]["n_steps"] == 64


def test_simulate_stable_environment(tmp_path):
    report_file = tmp_path / "report.json"
    arguments = ["simulate", "--alpha", "1.5", "--paths", "100", "--step", "0.01", "--seed", "3", "-o", str(report_file)]
    assert run(arguments) == EXIT_OK
    document = json.loads(report_file.read_text())
    assert document["comparisons"]["b1_negative_fraction"]["analytic"] == pytest.approx(math.pi / 4.0)
    assert 0.0 <= document["ks"] <= 1.0


def test_transforms_far_in_the_tail(capsys):
    assert run(["transforms", "--alpha", "1.5", "--u", "800"]) == EXIT_OK
    frame = read_csv(capsys.readouterr().out)
    assert 0.0 < frame["undershoot"][0] <= 1.0
    assert 0.0 < frame["down_excursion"][0] < 1.0
