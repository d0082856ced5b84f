"""
Tests for configuration, series, event and report files.
"""

import json
import math
import struct

import numpy as np
import pytest

from conftest import make_fit
from noon_gyro.errors import FileParseError, OutputError, ValidationError
from noon_gyro.estimation.fitting import fit_rate_model
from noon_gyro.fileio.atomic import write_text_atomic
from noon_gyro.fileio.config import RunConfig, config_hash, dump_config, load_config
from noon_gyro.fileio.event_files import read_events, write_events, write_events_text
from noon_gyro.fileio.report_files import (
    FitReport,
    fit_curve_table,
    precision_tables,
    read_fit_report,
    render_summary,
    time_trace_table,
    write_json_document,
    write_table,
)
from noon_gyro.fileio.series_files import parse_series, read_series, write_series
from noon_gyro.metrics.precision_report import build_report
from noon_gyro.tagging.events import EventStream

PS = 1e-12


def streams(resolution=PS):
    return [
        EventStream(channel=1, ticks=np.array([5, 40, 41], dtype=np.int64), resolution=resolution),
        EventStream(channel=2, ticks=np.array([5, 7], dtype=np.int64), resolution=resolution),
    ]


class TestConfig:
    def test_defaults(self):
        config = load_config()
        assert config.bin_duration(1) == 5e-3
        assert config.model(2).bin_duration == 20e-3
        assert config.profile(2).total_duration > 300
        assert config.seed == 0

    def test_empty_object_is_complete(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{}")
        assert load_config(path) == RunConfig()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"seeed": 3}))
        with pytest.raises(ValidationError):
            load_config(path)

    def test_bin_duration_must_match_tagger_resolution(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"bin_duration_n1": 1e-10}))
        with pytest.raises(ValidationError):
            load_config(path)

    def test_bootstrap_needs_enough_resamples(self):
        with pytest.raises(ValueError):
            RunConfig(bootstrap_resamples=50)

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{\n  "seed": 1,\n  "wobble_relative_amplitude": ,\n}\n')
        with pytest.raises(FileParseError) as info:
            load_config(path)
        assert info.value.line == 3

    def test_hash_and_round_trip(self, tmp_path):
        config = RunConfig(seed=7)
        assert config_hash(config) == config_hash(RunConfig(seed=7))
        assert config_hash(config) != config_hash(RunConfig(seed=8))
        assert len(config_hash(config)) == 16
        path = dump_config(config, tmp_path / "dumped.json")
        assert load_config(path) == config

    def test_package_exports(self):
        from noon_gyro import estimation, fileio, metrics

        assert fileio.load_config is load_config
        assert estimation.fit_rate_model is fit_rate_model
        assert metrics.build_report is build_report

    def test_unknown_run(self):
        with pytest.raises(ValidationError):
            RunConfig().model(3)


class TestSeriesFiles:
    def test_round_trip(self, tmp_path, poisson_n1):
        path = write_series(tmp_path / "series.txt", poisson_n1)
        loaded = read_series(path)
        assert loaded.bin_duration == poisson_n1.bin_duration
        for column in ("mid_times", "counts", "reference_omega", "target_omega"):
            assert np.array_equal(getattr(loaded, column), getattr(poisson_n1, column))
        assert loaded.metadata == {"photon_number": 1, "seed": 11}
        assert loaded.photon_number == 1

    def test_missing_magic(self):
        with pytest.raises(FileParseError) as info:
            parse_series("mid_time,count,reference_omega,target_omega\n")
        assert info.value.line == 1

    def test_bad_row_reports_line(self):
        text = (
            "# noon-gyro series v1\n"
            "# bin_duration=0.02\n"
            "mid_time,count,reference_omega,target_omega\n"
            "0.01,5,0.0,0.0\n"
            "0.03,five,0.0,0.0\n"
        )
        with pytest.raises(FileParseError) as info:
            parse_series(text)
        assert info.value.line == 5

    def test_missing_bin_duration(self):
        with pytest.raises(FileParseError):
            parse_series("# noon-gyro series v1\nmid_time,count,reference_omega,target_omega\n")

    def test_negative_counts_rejected(self):
        text = (
            "# noon-gyro series v1\n"
            "# bin_duration=0.02\n"
            "mid_time,count,reference_omega,target_omega\n"
            "0.01,-1,0.0,0.0\n"
        )
        with pytest.raises(FileParseError):
            parse_series(text)


class TestEventFiles:
    def test_binary_layout(self, tmp_path):
        path = write_events(tmp_path / "events.ntag", streams())
        data = path.read_bytes()
        assert data[:16] == b"NTAG" + struct.pack("<HHQ", 1, 0, 1000)
        assert len(data) == 16 + 5 * 12
        # first record: channel 1 at tick 5, ahead of channel 2 at the same tick
        assert data[16:28] == b"\x01\x00\x00\x00" + struct.pack("<Q", 5)
        assert data[28] == 2

    def test_binary_round_trip(self, tmp_path):
        path = write_events(tmp_path / "events.ntag", streams(156.25e-12))
        s1, s2 = read_events(path)
        assert s1.ticks.tolist() == [5, 40, 41]
        assert s2.ticks.tolist() == [5, 7]
        assert s1.resolution == pytest.approx(156.25e-12)

    def test_text_round_trip(self, tmp_path):
        path = write_events_text(tmp_path / "events.txt", streams())
        assert path.read_text().splitlines()[:2] == ["# resolution_fs=1000", "1,5"]
        s1, s2 = read_events(path)
        assert s1.ticks.tolist() == [5, 40, 41] and s2.ticks.tolist() == [5, 7]

    def test_text_without_resolution(self, tmp_path):
        path = tmp_path / "events.txt"
        path.write_text("1,10\n2,12\n")
        with pytest.raises(FileParseError):
            read_events(path)
        s1, s2 = read_events(path, resolution=PS)
        assert (len(s1), len(s2)) == (1, 1)

    def test_truncated_record(self, tmp_path):
        path = write_events(tmp_path / "events.ntag", streams())
        path.write_bytes(path.read_bytes()[: 16 + 12 + 5])
        with pytest.raises(FileParseError) as info:
            read_events(path)
        assert info.value.offset == 28

    def test_bad_channel(self, tmp_path):
        path = write_events(tmp_path / "events.ntag", streams())
        data = bytearray(path.read_bytes())
        data[28] = 7
        path.write_bytes(bytes(data))
        with pytest.raises(FileParseError) as info:
            read_events(path)
        assert info.value.offset == 28

    def test_bad_text_line(self, tmp_path):
        path = tmp_path / "events.txt"
        path.write_text("# resolution_fs=1000\n1,10\n3,11\n")
        with pytest.raises(FileParseError) as info:
            read_events(path)
        assert info.value.line == 3

    def test_empty_binary_file(self, tmp_path):
        path = write_events(tmp_path / "events.ntag", [EventStream(1, np.empty(0), PS)])
        s1, s2 = read_events(path)
        assert len(s1) == len(s2) == 0


class TestReports:
    def test_fit_report_round_trip(self, tmp_path, poisson_n2):
        fit = fit_rate_model(poisson_n2, 2)
        report = FitReport(series="series_n2.txt", fit=fit, band_coverage=0.99)
        path = write_json_document(tmp_path / "fit_n2.json", report)
        loaded = read_fit_report(path)
        assert loaded.fit.params == fit.params
        assert loaded.fit.standard_errors == fit.standard_errors

    def test_infinite_errors_survive(self, tmp_path, experiment_n1):
        fit = make_fit(experiment_n1).model_copy(
            update={"standard_errors": {"photons_per_bin": math.inf, "background_per_bin": 1.0,
                                        "scale_factor": math.inf, "phase_offset": math.inf}}
        )
        path = write_json_document(tmp_path / "fit.json", FitReport(series="s", fit=fit))
        assert "Infinity" in path.read_text()
        assert math.isinf(read_fit_report(path).fit.error_of("scale_factor"))

    def test_corrupt_report(self, tmp_path):
        path = tmp_path / "fit.json"
        path.write_text("{\n  \"kind\": \n")
        with pytest.raises(FileParseError) as info:
            read_fit_report(path)
        assert info.value.line is not None

    def test_tables(self, tmp_path, noiseless_n2, experiment_n2):
        curve = fit_curve_table(noiseless_n2, experiment_n2)
        assert list(curve.columns) == ["omega", "count", "fit", "band_low", "band_high"]
        assert np.allclose(curve["fit"], noiseless_n2.counts)
        trace = time_trace_table(noiseless_n2)
        assert len(trace) == len(noiseless_n2)
        tables = precision_tables(noiseless_n2, experiment_n2, draws=50)
        assert set(tables) == {"points", "blocks", "curve"}
        assert len(tables["curve"]) == 400
        path = write_table(tmp_path / "curve.csv", tables["curve"])
        assert path.read_text().splitlines()[0] == "omega,propagated,numerical,sql"

    def test_summary(self, experiment_n1, experiment_n2, noiseless_n1, noiseless_n2):
        report = build_report(make_fit(experiment_n1), make_fit(experiment_n2), noiseless_n1, noiseless_n2)
        text = render_summary(report)
        assert "Run N=1" in text and "Run N=2" in text
        assert "Super-resolution ratio" in text
        for name in report.checks:
            assert name in text

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OutputError):
            write_text_atomic(blocker / "inside.txt", "data")
