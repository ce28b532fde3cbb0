"""Command-line interface: commands, config files, exit codes."""

import json

import numpy as np
import pytest

from rfloc.cli import main
from rfloc.core import SensorConfig
from rfloc.io import (
    read_dataset_csv,
    read_sensor_config_json,
    write_dataset_csv,
    write_scenario_json,
    write_sensor_config_json,
)
from rfloc.simulate import Scenario, SoopSource
from rfloc.core import Position, validate_dataset

from conftest import toy_dataset


@pytest.fixture
def small_scene(tmp_path):
    scenario = Scenario(
        room_dims=(4.0, 4.0, 2.5),
        sources=(
            SoopSource(
                position=Position(0.2, 0.2, 1.0),
                center_frequency_mhz=91.2,
                bandwidth_mhz=0.2,
                tx_power_dbm=-30.0,
                path_loss_exponent=2.5,
            ),
            SoopSource(
                position=Position(3.8, 3.5, 1.5),
                center_frequency_mhz=93.6,
                bandwidth_mhz=0.2,
                tx_power_dbm=-28.0,
                path_loss_exponent=3.0,
            ),
        ),
        objects=(),
        noise_sigma_db=0.3,
        rng_seed=0,
    )
    s_path = tmp_path / "scene.json"
    c_path = tmp_path / "sensor.json"
    write_scenario_json(scenario, str(s_path))
    write_sensor_config_json(
        SensorConfig(band_mhz=(91.2, 93.6), step_mhz=2.4, sample_rate_hz=2.4e6,
                     samples_per_position=3),
        str(c_path),
    )
    return str(s_path), str(c_path)


def _write_toy(tmp_path, name="data.csv", n=60, m=4, seed=0):
    path = tmp_path / name
    write_dataset_csv(toy_dataset(n=n, m=m, seed=seed), str(path))
    return str(path)


class TestSimulate:
    def test_custom_scenario_grid(self, tmp_path, small_scene, capsys):
        scene, sensor = small_scene
        out = tmp_path / "d.csv"
        rc = main([
            "simulate", "--scenario", scene, "--sensor-config", sensor,
            "--grid", "2,2,1.0", "--heights", "0.0,1.0",
            "--out", str(out), "--seed", "3",
        ])
        assert rc == 0
        ds = read_dataset_csv(str(out))
        assert ds.n == 2 * 2 * 2 * 3
        assert ds.frequencies_mhz == (91.2, 93.6)
        assert "wrote" in capsys.readouterr().out

    def test_seed_flag_controls_noise(self, tmp_path, small_scene):
        scene, sensor = small_scene
        outs = []
        for seed in ("3", "4"):
            out = tmp_path / f"d{seed}.csv"
            assert main([
                "simulate", "--scenario", scene, "--sensor-config", sensor,
                "--grid", "2,2,1.0", "--out", str(out), "--seed", seed,
            ]) == 0
            outs.append(read_dataset_csv(str(out)))
        assert not np.array_equal(outs[0].features, outs[1].features)

    def test_reference_scenario_shape(self, tmp_path):
        out = tmp_path / "ref.csv"
        assert main(["simulate", "--reference-scenario", "--out", str(out), "--seed", "0"]) == 0
        ds = read_dataset_csv(str(out))
        assert ds.features.shape == (6000, 5)

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert main(["simulate", "--reference-scenario", "--out", str(p), "--seed", "7"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_scenario_choice_must_be_unique(self, tmp_path, small_scene, capsys):
        scene, sensor = small_scene
        out = tmp_path / "d.csv"
        rc = main([
            "simulate", "--scenario", scene, "--reference-scenario",
            "--out", str(out), "--seed", "0",
        ])
        assert rc == 2
        assert "exactly one" in capsys.readouterr().err
        assert main(["simulate", "--out", str(out), "--seed", "0"]) == 2

    def test_seed_is_required(self, tmp_path, capsys):
        rc = main(["simulate", "--reference-scenario", "--out", str(tmp_path / "d.csv")])
        assert rc == 2
        assert "--seed" in capsys.readouterr().err


class TestSplit:
    def test_fractions_and_files(self, tmp_path):
        data = _write_toy(tmp_path, n=50)
        tr, te = tmp_path / "tr.csv", tmp_path / "te.csv"
        rc = main([
            "split", "--data", data, "--out-train", str(tr), "--out-test", str(te),
            "--seed", "0",
        ])
        assert rc == 0
        assert read_dataset_csv(str(tr)).n == 35
        assert read_dataset_csv(str(te)).n == 15

    def test_missing_input_is_runtime_error(self, tmp_path, capsys):
        rc = main([
            "split", "--data", str(tmp_path / "nope.csv"),
            "--out-train", str(tmp_path / "a.csv"), "--out-test", str(tmp_path / "b.csv"),
            "--seed", "0",
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_fraction_bounds(self, tmp_path, capsys):
        data = _write_toy(tmp_path)
        rc = main([
            "split", "--data", data, "--train-fraction", "1.5",
            "--out-train", str(tmp_path / "a.csv"), "--out-test", str(tmp_path / "b.csv"),
            "--seed", "0",
        ])
        assert rc == 2


class TestBenchmark:
    def test_reports_csv_and_table(self, tmp_path, capsys):
        data = _write_toy(tmp_path)
        out = tmp_path / "bench.csv"
        rc = main([
            "benchmark", "--data", data, "--models", "knr,dtr",
            "--out", str(out), "--seed", "0",
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "model,rmse_m,r2,ce95_m,fit_time_s"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["knr", "dtr"]
        assert "model" in capsys.readouterr().out

    def test_unknown_model_is_usage_error(self, tmp_path, capsys):
        data = _write_toy(tmp_path)
        rc = main([
            "benchmark", "--data", data, "--models", "nope",
            "--out", str(tmp_path / "b.csv"), "--seed", "0",
        ])
        assert rc == 2
        assert "valid ids" in capsys.readouterr().err


class TestSelectBand:
    def _column_data(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(80, 4))
        Y = np.column_stack([X[:, 0], X[:, 0] * 2.0, rng.normal(size=80)])
        ds = validate_dataset(X, Y, (91.2, 93.6, 96.0, 98.4))
        path = tmp_path / "cols.csv"
        write_dataset_csv(ds, str(path))
        return str(path)

    def test_outputs_and_reduced_config(self, tmp_path):
        data = self._column_data(tmp_path)
        imp, cfg = tmp_path / "imp.csv", tmp_path / "rated.json"
        rc = main([
            "select-band", "--data", data, "--model", "knr", "--top-k", "2",
            "--out-importance", str(imp), "--out-config", str(cfg), "--seed", "0",
        ])
        assert rc == 0
        lines = imp.read_text().splitlines()
        assert lines[0] == "frequency_mhz,score_m"
        assert len(lines) == 5
        rated = read_sensor_config_json(str(cfg))
        assert rated.n_frequencies == 2
        assert 91.2 in rated.band_mhz  # the informative column must survive
        assert rated.reconfig_index == 1

    def test_top_k_bounds(self, tmp_path, capsys):
        data = self._column_data(tmp_path)
        args = lambda k: [
            "select-band", "--data", data, "--top-k", k,
            "--out-importance", str(tmp_path / "i.csv"),
            "--out-config", str(tmp_path / "c.json"), "--seed", "0",
        ]
        assert main(args("0")) == 2
        assert main(args("9")) == 1
        assert "exceeds" in capsys.readouterr().err


class TestPca:
    def test_writes_scores(self, tmp_path, capsys):
        data = _write_toy(tmp_path)
        out = tmp_path / "pca.csv"
        rc = main(["pca", "--data", data, "--n-components", "2", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "pc1,pc2,x,y,z"
        assert len(lines) == 61
        assert "explained variance" in capsys.readouterr().out

    def test_component_count_validated(self, tmp_path):
        data = _write_toy(tmp_path)
        assert main(["pca", "--data", data, "--n-components", "0",
                     "--out", str(tmp_path / "p.csv")]) == 2


class TestIngestRtlPower:
    def _scan(self, tmp_path):
        p = tmp_path / "scan.csv"
        p.write_text(
            "2024-05-01, 10:00:00, 91000000, 91400000, 200000, 16, -40.0, -41.0, -42.0\n"
            "2024-05-01, 10:00:10, 91000000, 91400000, 200000, 16, -43.0, -44.0, -45.0\n"
        )
        return str(p)

    def test_appends_scan_rows(self, tmp_path, capsys):
        scan = self._scan(tmp_path)
        out = tmp_path / "field.csv"
        rc = main([
            "ingest-rtlpower", "--scan", scan, "--position", "1.0,2.0,0.0",
            "--out", str(out),
        ])
        assert rc == 0
        ds = read_dataset_csv(str(out))
        assert ds.features.shape == (2, 3)
        assert ds.frequencies_mhz == (91.0, 91.2, 91.4)
        assert np.array_equal(ds.labels[0], [1.0, 2.0, 0.0])
        assert "appended 2 rows" in capsys.readouterr().out

    def test_band_subset(self, tmp_path):
        scan = self._scan(tmp_path)
        out = tmp_path / "field.csv"
        rc = main([
            "ingest-rtlpower", "--scan", scan, "--position", "0,0,0",
            "--band", "91.2", "--step-mhz", "2.4", "--out", str(out),
        ])
        assert rc == 0
        ds = read_dataset_csv(str(out))
        assert ds.frequencies_mhz == (91.2,)
        assert ds.features[0, 0] == -41.0

    def test_malformed_scan_reports_line(self, tmp_path, capsys):
        p = tmp_path / "scan.csv"
        p.write_text("2024-05-01, 10:00:00, 91000000, 91400000, 200000, 16, oops\n")
        rc = main([
            "ingest-rtlpower", "--scan", str(p), "--position", "0,0,0",
            "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == 1
        assert "line 1" in capsys.readouterr().err

    def test_position_must_be_triple(self, tmp_path, capsys):
        rc = main([
            "ingest-rtlpower", "--scan", self._scan(tmp_path), "--position", "1,2",
            "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == 2
        assert "three comma-separated" in capsys.readouterr().err


class TestConfigFile:
    def test_options_from_config(self, tmp_path):
        data = _write_toy(tmp_path)
        out = tmp_path / "pca.csv"
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"data": data, "out": str(out), "n-components": 2}))
        assert main(["pca", "--config", str(cfg)]) == 0
        assert out.read_text().splitlines()[0] == "pc1,pc2,x,y,z"

    def test_flags_override_config(self, tmp_path):
        data = _write_toy(tmp_path)
        out = tmp_path / "pca.csv"
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"data": data, "out": str(out), "n-components": 2}))
        assert main(["pca", "--config", str(cfg), "--n-components", "1"]) == 0
        assert out.read_text().splitlines()[0] == "pc1,x,y,z"

    def test_invalid_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text("[1, 2]")
        rc = main(["pca", "--config", str(cfg)])
        assert rc == 1
        assert "JSON object" in capsys.readouterr().err


def test_unknown_command_exits_with_usage(capsys):
    assert main(["frobnicate"]) == 2
