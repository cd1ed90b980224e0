import csv
import json

import numpy as np
import pytest
import yaml

from noisygrad.bench.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from noisygrad.bench.config import PRESETS, ExperimentConfig, apply_overrides, build_model, dump_config, load_config
from noisygrad.bench.iat import empirical_tau, iat_csv, iat_table
from noisygrad.bench.plot import make_plot
from noisygrad.bench.sweep import CSV_COLUMNS, read_sweep_csv
from noisygrad.exceptions import ConfigError


def small_config(out):
    return {
        "name": "tiny",
        "model": {"kind": "gaussian", "n_data": 50, "dim": 1, "eta": 0.5, "omega": 1.0},
        "methods": ["nogin", "sgld"],
        "grid": {"h": [0.2, 1.5], "n": [5, 50]},
        "stepsize_multipliers": {"sgld": 2.0},
        "chains": 2,
        "epochs": 40.0,
        "seed": 3,
        "out": str(out),
        "method_params": {"nogin": {"include_current_batch": False}},
        "reference": {"h": 0.8, "samples": 20_000, "chains": 20, "burn_in": 100, "thin": 1},
    }


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(small_config(tmp_path / "out")))
    return path


class TestConfig:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_validate_and_roundtrip(self, name, tmp_path):
        cfg = load_config(name)
        path = tmp_path / "p.yaml"
        path.write_text(dump_config(cfg))
        assert load_config(str(path)).to_dict() == cfg.to_dict()

    @pytest.mark.parametrize("patch", [
        {"bogus": 1},
        {"methods": ["hmc"]},
        {"methods": []},
        {"grid": {"h": [0.1], "n": [51]}},
        {"grid": {"h": [-0.1], "n": [5]}},
        {"grid": {"h": [0.1]}},
        {"chains": 0},
        {"seed": -1},
        {"observables": ["median"]},
        {"model": {"kind": "spline"}},
        {"reference": {"h": 0.0}},
        {"stepsize_multipliers": {"sgld": 0.0}},
        {"method_params": {"sgld": 3}},
    ])
    def test_invalid(self, patch, tmp_path):
        data = small_config(tmp_path)
        data.update(patch)
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(data)

    def test_unknown_source(self):
        with pytest.raises(ConfigError):
            load_config("no-such-preset-or-file")

    def test_overrides(self, tmp_path):
        cfg = apply_overrides(ExperimentConfig.from_dict(small_config(tmp_path)), seed=9, out="x")
        assert cfg.seed == 9 and cfg.out == "x"

    def test_cells_and_stepsizes(self):
        cfg = load_config("gmix-paper")
        assert len(cfg.cells()) == 12
        assert cfg.stepsize("sgld", 0.04) == pytest.approx(0.0008)
        assert cfg.stepsize("nogin", 0.04) == 0.04

    def test_model_data_depend_on_seed_only(self):
        spec = load_config("gmix-paper").model
        assert build_model(spec, 1).model_hash() == build_model(spec, 1).model_hash()
        assert build_model(spec, 1).model_hash() != build_model(spec, 2).model_hash()


class TestPipeline:
    def test_reference_sweep_plot(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(cfg_path)]) == EXIT_CONFIG  # no reference yet
        assert main(["reference", "--config", str(cfg_path)]) == EXIT_OK
        ref = json.loads(next((out / "reference").glob("*.json")).read_text())
        assert ref["mean"][0] == pytest.approx(build_model(load_config(str(cfg_path)).model, 3).posterior_mean[0], abs=0.05)
        assert ref["variance"][0] == pytest.approx(1.0, rel=0.05)
        assert 0.2 <= ref["acceptance_rate"] <= 0.9

        assert main(["sweep", "--config", str(cfg_path)]) == EXIT_OK
        first = (out / "sweep.csv").read_bytes()
        assert main(["sweep", "--config", str(cfg_path), "--threads", "2"]) == EXIT_OK
        assert (out / "sweep.csv").read_bytes() == first

        rows = read_sweep_csv(out / "sweep.csv")
        assert first.decode().splitlines()[0] == ",".join(CSV_COLUMNS)
        summary = json.loads((out / "summary.json").read_text())
        cells = summary["cells"]
        assert len(cells) == 2 * 4 * 2
        # sgld runs at h = 3 here, beyond its limit of 2 on this target; nogin stays below its own
        assert not any(c["stable"] for c in cells if c["method"] == "sgld" and c["h"] == 1.5)
        assert all(c["stable"] for c in cells if c["method"] == "nogin")
        for c in cells:
            assert c["evaluations"] == pytest.approx(c["epochs"] * 50)
        last = {}
        for r in rows:
            last[(r["method"], r["h"], r["n"], r["chain"])] = r["mse"]
        for c in cells:
            if c["final_mse"]["variance"] is not None:
                assert last[(c["method"], c["h"], c["n"], c["chain"])] == pytest.approx(c["final_mse"]["variance"], rel=1e-11)

        assert main(["plot", "--kind", "mse_curves", str(out)]) == EXIT_OK
        assert main(["plot", "--kind", "heatmap", "--out", str(out)]) == EXIT_OK
        svg = (out / "plots" / "heatmap.svg").read_bytes()
        assert main(["plot", "--kind", "heatmap", str(out)]) == EXIT_OK
        assert (out / "plots" / "heatmap.svg").read_bytes() == svg
        with open(out / "plots" / "heatmap.csv") as fh:
            table = list(csv.DictReader(fh))
        nogin = [t for t in table if t["method"] == "nogin" and t["h"] == "0.2" and t["n"] == "5"][0]
        expect = np.mean([c["final_mse"]["variance"] for c in cells
                          if c["method"] == "nogin" and c["h"] == 0.2 and c["n"] == 5])
        assert float(nogin["final_mse"]) == pytest.approx(expect, rel=1e-11)
        assert any(t["stable"] == "0" and t["final_mse"] == "" for t in table)
        with open(out / "plots" / "mse_curves.csv") as fh:
            curves = list(csv.DictReader(fh))
        assert {t["method"] for t in curves} == {"nogin", "sgld"}

    def test_plot_rejects_mixed_models(self, tmp_path):
        for i, seed in enumerate((1, 2)):
            d = tmp_path / str(i)
            d.mkdir()
            (d / "summary.json").write_text(json.dumps({"model_hash": str(seed), "cells": []}))
            (d / "sweep.csv").write_text(",".join(CSV_COLUMNS) + "\n")
        with pytest.raises(ConfigError):
            make_plot([tmp_path / "0", tmp_path / "1"], "heatmap")


class TestCli:
    def test_show_config(self, capsys):
        assert main(["show-config", "--config", "gmix-paper"]) == EXIT_OK
        assert yaml.safe_load(capsys.readouterr().out)["name"] == "gmix-paper"

    def test_flags_after_subcommand(self, capsys):
        assert main(["show-config", "--config", "blr-desk", "--seed", "5"]) == EXIT_OK
        assert yaml.safe_load(capsys.readouterr().out)["seed"] == 5

    def test_missing_config(self, capsys):
        assert main(["sweep"]) == EXIT_CONFIG
        assert "config" in capsys.readouterr().err

    def test_bad_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("grid: [unclosed\n")
        assert main(["reference", "--config", str(path)]) == EXIT_CONFIG

    def test_unstable_oracle_exit_code(self):
        assert main(["iat-oracle", "--h", "2.5", "--gamma", "1", "--sigma2", "0.5"]) == EXIT_NUMERICAL

    def test_selftest(self, capsys):
        assert main(["selftest"]) == EXIT_OK
        assert capsys.readouterr().out.count("PASS") == 5

    def test_iat_table_and_plot(self, tmp_path, capsys):
        assert main(["iat-oracle", "--h", "0.1", "--gamma", "1", "--sigma2", "50", "100",
                     "--steps", "5000", "--chains", "8", "--out", str(tmp_path)]) == EXIT_OK
        text = capsys.readouterr().out
        assert "oracle_tau" in text
        assert main(["plot", "--kind", "iat_scaling", str(tmp_path / "iat.csv")]) == EXIT_OK
        assert (tmp_path / "plots" / "iat_scaling.svg").exists()


def test_iat_table_reports_oscillation():
    rows = iat_table([0.05], [0.0], [50.0])
    assert rows[0].oracle_tau is None
    assert iat_csv(rows).splitlines()[1].split(",")[3] == ""


def test_empirical_tau_rejects_oscillatory():
    with pytest.raises(ValueError):
        empirical_tau(0.05, 0.0, 50.0, 1000)
