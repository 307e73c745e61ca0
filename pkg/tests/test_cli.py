import csv
import json
import subprocess
import sys

import pytest

from nh3trend.cli import run_cli


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("net")
    assert run_cli(["simulate", "--stations", "25", "--months", "48", "--seed", "4", "--out", str(d)]) == 0
    assert run_cli(["calibrate", "--reference", str(d / "reference.csv"), "--triplets", str(d / "triplets.csv"),
                    "--raw", str(d / "raw.csv"), "--impute-stub", "--out", str(d)]) == 0
    return d


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_unknown_subcommand(capsys):
    assert run_cli(["frobnicate"]) == 1


def test_no_subcommand():
    assert run_cli([]) == 1


def test_bad_option_value():
    assert run_cli(["trend", "--series", "x.csv", "--alpha", "1.5"]) == 1


def test_help():
    assert run_cli(["--help"]) == 0


def test_simulate_outputs(bundle):
    for name in ("reference.csv", "triplets.csv", "raw.csv", "ground_truth.json", "calibration_fits.csv",
                 "calibration_intervals.csv", "calibrated.csv", "calibrated_imputed.csv", "error_model.json"):
        assert (bundle / name).is_file(), name
    truth = json.loads((bundle / "ground_truth.json").read_text())
    assert truth["seed"] == 4 and len(truth["trends"]) == 31


def test_trend_adjusted_csv(bundle, tmp_path):
    rc = run_cli(["trend", "--series", str(bundle / "calibrated.csv"), "--alpha", "0.05", "--sigma-nu", "1.635",
                  "--adjusted", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_csv(tmp_path / "trends_calibrated.csv")
    assert len(rows) == 25
    assert all(float(r["p_adjusted"]) >= float(r["p_naive"]) for r in rows)


def test_trend_to_stdout(bundle, capsys):
    assert run_cli(["trend", "--series", str(bundle / "raw.csv")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("station_id,provenance,n_used")
    assert len(lines) == 26


def test_trend_with_error_model(bundle, tmp_path):
    assert run_cli(["trend", "--series", str(bundle / "calibrated.csv"), "--error-model",
                    str(bundle / "error_model.json"), "--out", str(tmp_path)]) == 0


def test_sweep_length(tmp_path):
    with open(tmp_path / "s.csv", "w", encoding="utf-8") as fh:
        fh.write("station_id,year,month,value,provenance\n")
        for k in range(36):
            fh.write(f"M1,{2010 + k // 12},{k % 12 + 1},{5 + 0.1 * k + (k % 3)},calibrated\n")
    assert run_cli(["sweep", "--series", str(tmp_path / "s.csv"), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 24
    assert rows[0]["start"] == "2010-01" and rows[-1]["start"] == "2011-12"


def test_sweep_unknown_station(bundle):
    assert run_cli(["sweep", "--series", str(bundle / "raw.csv"), "--station", "NOPE"]) == 2


def test_missing_file_is_data_error(tmp_path):
    assert run_cli(["trend", "--series", str(tmp_path / "absent.csv")]) == 2


def test_malformed_file_is_data_error(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("station_id,year,month,value,provenance\nM1,2010,1,abc,raw\n")
    assert run_cli(["trend", "--series", str(tmp_path / "bad.csv")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_census_compare_report(bundle, tmp_path):
    for name in ("raw", "calibrated", "calibrated_imputed"):
        assert run_cli(["trend", "--series", str(bundle / f"{name}.csv"), "--out", str(tmp_path)]) == 0
    trends = [str(tmp_path / f"trends_{n}.csv") for n in ("raw", "calibrated", "calibrated_imputed")]
    assert run_cli(["census", "--trends", *trends, "--format", "text", "--out", str(tmp_path)]) == 0
    assert "Trend census" in (tmp_path / "census.txt").read_text()
    assert run_cli(["compare", "--a", trends[0], "--b", trends[1], "--format", "csv", "--out", str(tmp_path)]) == 0
    assert run_cli(["report", "--trends", *trends, "--adjusted", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["comparison_p_values"] == "adjusted"
    assert len(rep["comparisons"]) == 3
    assert len(read_csv(tmp_path / "deltas.csv")) == 25


def test_report_same_dataset_twice(bundle, tmp_path):
    assert run_cli(["trend", "--series", str(bundle / "raw.csv"), "--out", str(tmp_path)]) == 0
    t = str(tmp_path / "trends_raw.csv")
    assert run_cli(["report", "--trends", t, t]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nh3trend", "simulate", "--stations", "2", "--months", "12",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "raw.csv").is_file()
