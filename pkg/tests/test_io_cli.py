import json
from pathlib import Path

import numpy as np
import pytest

from rarecast import cli, io, pipeline
from rarecast.errors import CsvFormatError, ModelFormatError, UnsupportedVersionError
from rarecast.inference import DecisionConfig, SmoothingConfig
from rarecast.model import build_design, predict_probs
from rarecast.synth import SynthConfig, generate
from rarecast.timeseries import FailureLog
from rarecast.trainer import TrainConfig

FIXTURES = Path(__file__).parent / "fixtures" / "malformed"
SMALL = ["--duration", "4000", "--failures", "12"]


def _write(path, text):
    path.write_text(text)
    return path


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    assert cli.main(["synth", "--seed", "3", *SMALL, "--out-dir", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def small_model(small_data):
    model = small_data / "model.json"
    code = cli.main(
        ["train", "--sensors", str(small_data / "sensors.csv"), "--failures", str(small_data / "failures.csv"),
         "--weighting", "simple", "--q", "5", "--model-out", str(model)]
    )
    assert code == 0
    return model


class TestSensorCsv:
    def test_small_file(self, tmp_path):
        path = _write(tmp_path / "s.csv", "timestamp,a,b\n0,1,2\n1,3,4\n2,5,6\n")
        sensors = io.load_sensors(path)
        assert [s.name for s in sensors] == ["a", "b"]
        assert all(len(s) == 3 for s in sensors)
        np.testing.assert_array_equal(sensors[1].values, [2, 4, 6])

    def test_forward_fill(self):
        sensors = io.load_sensors(FIXTURES / "missing_cell.csv", "forward")
        np.testing.assert_array_equal(sensors[0].values, [1.0, 1.0, 1.2])

    def test_forward_fill_needs_first_row(self, tmp_path):
        path = _write(tmp_path / "s.csv", "timestamp,a\n0,\n1,2\n")
        with pytest.raises(CsvFormatError, match="first row"):
            io.load_sensors(path, "forward")

    def test_out_of_order_names_line(self):
        with pytest.raises(CsvFormatError, match="line 5.*not after"):
            io.load_sensors(FIXTURES / "out_of_order.csv")

    @pytest.mark.parametrize("fixture", sorted(p.name for p in FIXTURES.glob("*.csv")))
    def test_malformed_rejected(self, fixture):
        with pytest.raises(CsvFormatError):
            io.load_sensors(FIXTURES / fixture)

    @pytest.mark.parametrize("fixture", sorted(p.name for p in FIXTURES.glob("*.csv")))
    def test_malformed_exit_code(self, fixture, tmp_path):
        code = cli.main(["correlate", "--sensors", str(FIXTURES / fixture)])
        assert code == 2

    def test_iso_timestamps(self, tmp_path):
        path = _write(
            tmp_path / "s.csv",
            "timestamp,a\n2024-01-01T00:00:00Z,1\n2024-01-01T00:05:00Z,2\n2024-01-01T00:10:00Z,3\n",
        )
        sensors, axis = io.read_sensor_csv(path)
        assert sensors[0].granularity == 5.0
        fpath = _write(tmp_path / "f.csv", "start,end\n2024-01-01T00:05:00Z,2024-01-01T00:05:00Z\n")
        assert io.load_failures(fpath, axis) == FailureLog(((1, 1),))

    def test_round_trip(self, tmp_path):
        sensors, failures = generate(SynthConfig(duration_steps=2000, failure_count=5, sensor_count=2))
        io.write_sensor_csv(tmp_path / "s.csv", sensors)
        io.write_failure_csv(tmp_path / "f.csv", failures)
        loaded, axis = io.read_sensor_csv(tmp_path / "s.csv")
        for a, b in zip(sensors, loaded):
            np.testing.assert_array_equal(a.values, b.values)
        assert io.load_failures(tmp_path / "f.csv", axis) == failures


class TestFailureCsv:
    def _axis(self, n=100):
        return io.TimeAxis(0, 1, False, n)

    def test_overlap_rejected(self, tmp_path):
        path = _write(tmp_path / "f.csv", "start,end\n10,20\n15,30\n")
        with pytest.raises(CsvFormatError):
            io.load_failures(path, self._axis())

    def test_outside_range(self, tmp_path):
        path = _write(tmp_path / "f.csv", "start,end\n90,120\n")
        with pytest.raises(CsvFormatError, match="outside"):
            io.load_failures(path, self._axis())

    def test_header_only(self, tmp_path):
        assert len(io.load_failures(_write(tmp_path / "f.csv", "start,end\n"), self._axis())) == 0


class TestModelFile:
    def _model(self):
        sensors, failures = generate(SynthConfig(duration_steps=3000, failure_count=8, seed=1))
        ds = pipeline.prepare_dataset(sensors, failures, 30)
        return pipeline.train_model(ds, 4, TrainConfig(weighting_mode="simple", max_epochs=200)), ds

    def test_round_trip_bit_exact(self, tmp_path):
        outcome, ds = self._model()
        io.save_model(tmp_path / "m.json", outcome.model)
        loaded = io.load_model(tmp_path / "m.json")
        design = build_design(ds, loaded.params.lag)
        np.testing.assert_array_equal(predict_probs(loaded.params, design), predict_probs(outcome.model.params, design))
        assert loaded.weights == outcome.model.weights
        assert loaded.smoothing == outcome.model.smoothing and loaded.decision == outcome.model.decision
        assert loaded.training["mode"] == "simple"

    def _doc(self, tmp_path):
        outcome, _ = self._model()
        io.save_model(tmp_path / "m.json", outcome.model)
        return json.loads((tmp_path / "m.json").read_text())

    def test_corrupted_field_named(self, tmp_path):
        doc = self._doc(tmp_path)
        doc["c"] = "oops"
        _write(tmp_path / "bad.json", json.dumps(doc))
        with pytest.raises(ModelFormatError, match="'c'"):
            io.load_model(tmp_path / "bad.json")

    def test_missing_field_named(self, tmp_path):
        doc = self._doc(tmp_path)
        del doc["smoothing_L"]
        _write(tmp_path / "bad.json", json.dumps(doc))
        with pytest.raises(ModelFormatError, match="smoothing_L"):
            io.load_model(tmp_path / "bad.json")

    def test_old_version(self, tmp_path):
        doc = self._doc(tmp_path)
        doc["format_version"] = 0
        _write(tmp_path / "old.json", json.dumps(doc))
        with pytest.raises(UnsupportedVersionError):
            io.load_model(tmp_path / "old.json")

    def test_not_json(self, tmp_path):
        with pytest.raises(ModelFormatError):
            io.load_model(_write(tmp_path / "x.json", "{nope"))


class TestCli:
    def test_unknown_flag(self, capsys):
        assert cli.main(["train", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_command(self, capsys):
        assert cli.main([]) == 1

    def test_end_to_end_report(self, small_data, small_model, tmp_path):
        report = tmp_path / "r.txt"
        code = cli.main(
            ["evaluate", "--model", str(small_model), "--sensors", str(small_data / "sensors.csv"),
             "--failures", str(small_data / "failures.csv"), "--report-out", str(report)]
        )
        assert code == 0
        fields = io.parse_report(report.read_text())
        for key in (*io.MetricsReport.FIELDS, "tp", "fp", "tn", "fn"):
            assert fields[key] != ""

    def test_predict_writes_trace(self, small_data, small_model, tmp_path):
        trace = tmp_path / "t.csv"
        assert cli.main(["predict", "--model", str(small_model), "--sensors", str(small_data / "sensors.csv"),
                         "--trace-out", str(trace)]) == 0
        lines = trace.read_text().splitlines()
        assert lines[0] == "origin_step,raw_prob,smoothed_prob,decision"
        assert len(lines) == 1 + 4000 - 5

    def test_single_class_exit_2(self, tmp_path, capsys):
        _write(tmp_path / "s.csv", "timestamp,a\n" + "".join(f"{t},{t % 7}\n" for t in range(200)))
        _write(tmp_path / "f.csv", "start,end\n")
        code = cli.main(["train", "--sensors", str(tmp_path / "s.csv"), "--failures", str(tmp_path / "f.csv"),
                         "--delta-t", "1", "--model-out", str(tmp_path / "m.json")])
        assert code == 2
        assert "both classes" in capsys.readouterr().err

    def test_divergence_exit_3(self, small_data, tmp_path):
        code = cli.main(["train", "--sensors", str(small_data / "sensors.csv"), "--failures",
                         str(small_data / "failures.csv"), "--lr", "1e6", "--model-out", str(tmp_path / "m.json")])
        assert code == 3

    def test_missing_file_exit_2(self, tmp_path):
        assert cli.main(["correlate", "--sensors", str(tmp_path / "nope.csv")]) == 2

    def test_cli_matches_library(self, small_data, tmp_path):
        sensors_csv, failures_csv = small_data / "sensors.csv", small_data / "failures.csv"
        report = tmp_path / "r.txt"
        args = ["train", "--sensors", str(sensors_csv), "--failures", str(failures_csv), "--weighting", "none",
                "--q", "5", "--delta-t", "30", "--model-out", str(tmp_path / "m.json")]
        assert cli.main(args) == 0
        assert cli.main(["evaluate", "--model", str(tmp_path / "m.json"), "--sensors", str(sensors_csv),
                         "--failures", str(failures_csv), "--report-out", str(report)]) == 0

        sensors, axis = io.read_sensor_csv(sensors_csv)
        ds = pipeline.prepare_dataset(sensors, io.load_failures(failures_csv, axis), 30)
        outcome = pipeline.train_model(ds, 5, TrainConfig(weighting_mode="none"), SmoothingConfig(10), DecisionConfig(0.9))
        cli_fields = io.parse_report(report.read_text())
        lib_fields = io.parse_report(io.format_report(outcome.report))
        for key, value in lib_fields.items():
            assert cli_fields[key] == value

    def test_delta_t_days(self, small_data, tmp_path):
        model = tmp_path / "m.json"
        assert cli.main(["train", "--sensors", str(small_data / "sensors.csv"), "--failures",
                         str(small_data / "failures.csv"), "--delta-t-days", "0.0125", "--max-epochs", "50",
                         "--model-out", str(model)]) == 0
        assert io.load_model(model).params.delta_t_steps == 18

    def test_sweep_and_select(self, small_data, small_model, capsys):
        data = ["--sensors", str(small_data / "sensors.csv"), "--failures", str(small_data / "failures.csv")]
        assert cli.main(["sweep-threshold", "--model", str(small_model), *data, "--thresholds", "0.5,0.9"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("threshold,accuracy") and len(out) == 3
        assert cli.main(["select-q", *data, "--candidates", "0,2", "--max-epochs", "100"]) == 0
        assert "chosen_q:" in capsys.readouterr().out
