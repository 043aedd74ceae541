import json
import math
from pathlib import Path

import numpy as np
import pytest

from radnls import cli, core, evolution, fieldio, groundstate


class TestFieldFormats:
    def test_binary_round_trip_bit_exact(self, grid, corpus, tmp_path):
        f = corpus[0]
        path = tmp_path / "f.rfb"
        fieldio.save_field_binary(f, path)
        back = fieldio.load_field_binary(path)
        assert np.array_equal(back.values, f.values)
        assert back.grid.key == f.grid.key

    def test_binary_rejects_garbage(self, tmp_path):
        p = tmp_path / "junk.rfb"
        p.write_bytes(b"not a snapshot")
        with pytest.raises(ValueError):
            fieldio.load_field_binary(p)

    def test_text_round_trip(self, grid, corpus, tmp_path):
        f = corpus[1]
        path = tmp_path / "f.txt"
        fieldio.save_field_text(f, path)
        back = fieldio.load_field_text(path, grid)
        assert np.array_equal(back.values, f.values)   # repr round-trips floats

    def test_trajectory_round_trip(self, grid, tmp_path):
        f = core.field_from_function(grid, lambda r: np.exp(-(r**2)))
        cfg = evolution.SimulationConfig(dimension=4, mu=0, r_max=grid.r_max,
                                         n=grid.n, dt=1e-3, t_final=0.01, cadence=5)
        traj = evolution.evolve(cfg, f)
        fieldio.save_trajectory(traj, tmp_path / "run")
        back = fieldio.load_trajectory(tmp_path / "run")
        assert back.times == traj.times
        assert back.mass_log == traj.mass_log
        for a, b in zip(back.fields, traj.fields):
            assert np.array_equal(a.values, b.values)

    def test_ground_state_cache(self, ground, tmp_path):
        fieldio.save_ground_state(ground, tmp_path, 1e-8)
        again = fieldio.load_ground_state(tmp_path, ground.grid, 1e-8)
        assert again is not None
        assert again.mass == ground.mass
        assert np.array_equal(again.profile.values, ground.profile.values)
        assert fieldio.load_ground_state(tmp_path, ground.grid, 1e-6) is None


@pytest.fixture()
def out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RADNLS_OUTPUT_ROOT", str(tmp_path))
    return tmp_path


def write_cfg(tmp_path, payload):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(payload))
    return str(p)


SMALL_GRID = {"r_max": 15.0, "n": 384}


class TestCli:
    def test_ground_state_certification(self, out_env, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"grid": SMALL_GRID, "output_dir": "gs"})
        rc = cli.main(["--config", cfg, "ground-state"])
        assert rc == 0
        cert = json.loads((out_env / "gs" / "ground_state_certification.json").read_text())
        assert cert["residual"] < 1e-8
        assert abs(cert["pohozaev_kinetic_ratio"] - 2 / 3) < 1e-4
        assert abs(cert["energy_over_kinetic"]) < 1e-4
        assert abs(cert["gn_ratio"] - 1.0) < 1e-3
        assert cert["mass_agreement"] < 1e-4
        assert "config_hash" in cert and "artifact_version" in cert

    def test_dimension_out_of_range_exits_2(self, out_env, capsys):
        rc = cli.main(["--dimension", "1", "ground-state"])
        assert rc == 2

    def test_unwritable_output_exits_3(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("RADNLS_OUTPUT_ROOT", raising=False)
        cfg = write_cfg(tmp_path, {"grid": SMALL_GRID,
                                   "output_dir": "/proc/radnls-denied/out"})
        rc = cli.main(["--config", cfg, "ground-state"])
        assert rc == 3

    def test_evolve_and_diagnose(self, out_env, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "grid": SMALL_GRID,
            "time": {"dt": 1e-3, "T": 0.05, "cadence": 1},
            "initial": {"kind": "sw"},
            "diagnostics": [{"kind": "concentration"}, {"kind": "virial", "R": 8.0}],
            "output_dir": "run"})
        assert cli.main(["--config", cfg, "evolve"]) == 0
        summary = json.loads((out_env / "run" / "evolve_summary.json").read_text())
        assert summary["mass_drift"] < 1e-8
        assert summary["sw_final_l2_error"] < 1e-4
        assert cli.main(["--config", cfg, "diagnose",
                         str(out_env / "run" / "trajectory")]) == 0
        assert (out_env / "run" / "diagnose_summary.json").exists()

    def test_free_flow_virial_diagnose(self, out_env, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "grid": SMALL_GRID, "mu": 0,
            "time": {"dt": 1e-3, "T": 0.06, "cadence": 1},
            "initial": {"kind": "gaussian"},
            "diagnostics": [{"kind": "virial"}],
            "output_dir": "free"})
        assert cli.main(["--config", cfg, "evolve"]) == 0
        assert cli.main(["--config", cfg, "diagnose",
                         str(out_env / "free" / "trajectory")]) == 0
        summary = json.loads((out_env / "free" / "diagnose_summary.json").read_text())
        assert summary["results"]["virial"]["passed"]
        assert summary["results"]["virial"]["worst_rel"] < 0.05

    def test_missing_trajectory_exits_3(self, out_env, tmp_path):
        cfg = write_cfg(tmp_path, {"output_dir": "x"})
        rc = cli.main(["--config", cfg, "diagnose", str(out_env / "nowhere")])
        assert rc == 3

    def test_unknown_diagnostic_exits_2(self, out_env, tmp_path):
        run_cfg = write_cfg(tmp_path, {
            "grid": SMALL_GRID, "time": {"dt": 1e-3, "T": 0.01, "cadence": 1},
            "output_dir": "run2"})
        assert cli.main(["--config", run_cfg, "evolve"]) == 0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"grid": SMALL_GRID, "output_dir": "run2",
                                   "diagnostics": [{"kind": "nope"}]}))
        rc = cli.main(["--config", str(bad), "diagnose",
                       str(out_env / "run2" / "trajectory")])
        assert rc == 2

    def test_guard_trip_exits_4(self, out_env, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "grid": SMALL_GRID,
            "time": {"dt": 1e-3, "T": 1.0, "cadence": 10},
            "initial": {"kind": "gaussian", "params": {"amplitude": 20.0, "width": 1.0}},
            "output_dir": "blow"})
        rc = cli.main(["--config", cfg, "evolve"])
        assert rc == 4
        manifest = json.loads((out_env / "blow" / "trajectory" / "manifest.json").read_text())
        assert manifest["guard_event"] is not None

    def test_lemma_reports(self, out_env, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "lemma": {"params": {"s": 1.25, "gamma": 0.2, "c1": 1.0, "m0": 1.0,
                                 "beta_prime": 1e-16, "a_bound": 1.0}},
            "output_dir": "lem", "format": "csv"})
        assert cli.main(["--config", cfg, "lemma"]) == 0
        report = json.loads((out_env / "lem" / "lemma_report.json").read_text())
        assert report["control"]["applicable"] is True
        assert report["control"]["overall_pass"] is True
        assert (out_env / "lem" / "lemma_table.csv").exists()

    def test_lemma_inapplicable_is_not_failure(self, out_env, tmp_path):
        cfg = write_cfg(tmp_path, {
            "lemma": {"params": {"s": 1.25, "gamma": 0.2, "c1": 1.0, "m0": 1.0,
                                 "beta_prime": 0.5, "a_bound": 10.0}},
            "output_dir": "lem2"})
        assert cli.main(["--config", cfg, "lemma"]) == 0
        report = json.loads((out_env / "lem2" / "lemma_report.json").read_text())
        assert report["control"]["applicable"] is False

    def test_unknown_config_key_exits_2(self, out_env, tmp_path):
        cfg = write_cfg(tmp_path, {"no_such_key": 1})
        assert cli.main(["--config", cfg, "ground-state"]) == 2

    def test_reproducible_outputs(self, out_env, tmp_path):
        cfg = write_cfg(tmp_path, {
            "lemma": {"params": {"s": 1.5, "gamma": 0.3, "c1": 2.0, "m0": 1.0,
                                 "beta_prime": 1e-9, "a_bound": 2.0}},
            "output_dir": "rep", "seed": 42})
        assert cli.main(["--config", cfg, "lemma"]) == 0
        first = (out_env / "rep" / "lemma_report.json").read_bytes()
        assert cli.main(["--config", cfg, "lemma"]) == 0
        assert (out_env / "rep" / "lemma_report.json").read_bytes() == first
