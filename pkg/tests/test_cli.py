import csv
import json

import numpy as np
import pytest

from hnls.cli import EXIT_ABORT, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from hnls.io import read_trajectory_binary

pytestmark = pytest.mark.filterwarnings("ignore::hnls.solver.BoundaryContaminationWarning")

CONFIG = {
    "grid": {"half_width": 20, "n_points": 256},
    "params": {"a": 1, "b": 0.5, "lambda": 1, "beta": 1, "delta": 0},
    "damping": {"profile": "plateau_with_hole", "d0": 1, "R0": 5},
    "initial": {"kind": "gaussian", "amplitude": 1, "width": 2, "center": 0},
    "time": {"t_final": 0.1, "dt": 0.001, "snapshot_stride": 10},
    "outputs": {"directory": "out", "formats": ["binary", "csv"]},
}


@pytest.fixture
def write_config(tmp_path):
    def write(**sections):
        raw = json.loads(json.dumps(CONFIG))
        for key, val in sections.items():
            if isinstance(val, dict) and isinstance(raw.get(key), dict):
                raw[key].update(val)
            else:
                raw[key] = val
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(raw, indent=1) + "\n")
        return path
    return write


class TestSimulate:
    def test_outputs_and_manifest(self, write_config, tmp_path):
        path = write_config()
        assert main(["simulate", str(path)]) == EXIT_OK
        out = tmp_path / "out"
        tr = read_trajectory_binary(out / "trajectory.bin")
        assert tr.states.shape == (11, 256)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"] == path.read_text()
        assert (out / "config.json").read_bytes() == path.read_bytes()
        assert {"trajectory.bin", "trajectory.csv", "series.csv"} <= set(manifest["files"])
        assert manifest["library_version"]

    def test_deterministic(self, write_config, tmp_path):
        path = write_config()
        main(["simulate", str(path), "--out", str(tmp_path / "a")])
        main(["simulate", str(path), "--out", str(tmp_path / "b")])
        for name in ("trajectory.bin", "series.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_dt_error(self, write_config, capsys):
        assert main(["simulate", str(write_config(time={"dt": 0.2}))]) == EXIT_VALIDATION
        assert "time.dt" in capsys.readouterr().err

    def test_condition_a_message(self, write_config, capsys):
        assert main(["simulate", str(write_config(damping={"d0": -1}))]) == EXIT_VALIDATION
        assert "Condition A" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["simulate", str(tmp_path / "nope.json")]) == EXIT_IO

    def test_abort(self, write_config):
        path = write_config(params={"lambda": -50, "beta": 50},
                            initial={"amplitude": 50}, time={"t_final": 1.0, "dt": 0.05})
        assert main(["simulate", str(path)]) == EXIT_ABORT


class TestIdentities:
    def test_selected(self, write_config, tmp_path, capsys):
        path = write_config()
        assert main(["identities", str(path), "--identity", "mass_balance_3_22"]) == EXIT_OK
        assert "mass_balance_3_22" in capsys.readouterr().out
        assert (tmp_path / "out" / "identity_mass_balance_3_22.csv").exists()

    def test_beta_zero_energy(self, write_config, capsys):
        path = write_config(params={"beta": 0})
        assert main(["identities", str(path), "--identity", "energy_3_32"]) == EXIT_VALIDATION
        assert "beta must be nonzero" in capsys.readouterr().err

    def test_unknown_lists_valid(self, write_config, capsys):
        assert main(["identities", str(write_config()), "--identity", "virial"]) == EXIT_VALIDATION
        err = capsys.readouterr().err
        assert "mass_2_15" in err and "weighted_smoothing_3_39" in err

    def test_suite(self, write_config, tmp_path):
        path = write_config(weight={"alpha": 0.75, "eps": 0.5})
        assert main(["identities", str(path)]) == EXIT_OK
        assert len(list((tmp_path / "out").glob("identity_*.csv"))) == 10


class TestKernel:
    def test_tabulate_and_certify(self, tmp_path):
        out = tmp_path / "k"
        code = main(["kernel", "--a", "0", "--x-min", "-10", "--x-max", "5", "--samples", "31",
                     "--certify", "--out", str(out)])
        assert code == EXIT_OK
        rows = list(csv.reader((out / "kernel.csv").open()))
        assert len(rows) == 32
        assert set(json.loads((out / "envelope.json").read_text())) == {"left", "right"}

    def test_empty_range(self, tmp_path):
        assert main(["kernel", "--x-min", "1", "--x-max", "1", "--out", str(tmp_path)]) == EXIT_VALIDATION


class TestDecayStability:
    def test_decay(self, write_config, tmp_path):
        path = write_config(damping={"profile": "constant", "d0": 0.5},
                            time={"t_final": 1.0, "dt": 0.002, "snapshot_stride": 10})
        assert main(["decay", str(path)]) == EXIT_OK
        rep = json.loads((tmp_path / "out" / "decay.json").read_text())
        assert rep["gamma_hat"] == pytest.approx(1.0, abs=1e-3)

    def test_zero_perturbation(self, write_config, tmp_path):
        assert main(["stability", str(write_config()), "--perturbation", "0"]) == EXIT_OK
        data = np.loadtxt(tmp_path / "out" / "gap.csv", delimiter=",", skiprows=1)
        assert np.all(data[:, 1] == 0)

    def test_perturbation(self, write_config, tmp_path):
        assert main(["stability", str(write_config())]) == EXIT_OK
        data = np.loadtxt(tmp_path / "out" / "gap.csv", delimiter=",", skiprows=1)
        assert data[0, 2] == 1.0 and np.all(data[:, 2] > 0)


class TestSweep:
    def test_beta_sweep(self, write_config, tmp_path):
        path = write_config(outputs={"formats": ["binary"]})
        assert main(["sweep", str(path), "--vary", "params.beta=0.5,1,2"]) == EXIT_OK
        root = tmp_path / "out"
        dirs = sorted(p.name for p in root.iterdir() if p.is_dir())
        assert dirs == ["params.beta=0.5", "params.beta=1", "params.beta=2"]
        rows = list(csv.DictReader((root / "index.csv").open()))
        assert [r["status"] for r in rows] == ["ok"] * 3
        sub = json.loads((root / "params.beta=2" / "manifest.json").read_text())
        assert json.loads(sub["config"])["params"]["beta"] == 2

    def test_parallel_matches_serial(self, write_config, tmp_path, monkeypatch):
        path = write_config(outputs={"formats": ["binary"]})
        main(["sweep", str(path), "--vary", "params.lambda=0,1", "--out", str(tmp_path / "s")])
        monkeypatch.setenv("HNLS_THREADS", "2")
        main(["sweep", str(path), "--vary", "params.lambda=0,1", "--out", str(tmp_path / "p")])
        for d in ("params.lambda=0", "params.lambda=1"):
            a = (tmp_path / "s" / d / "trajectory.bin").read_bytes()
            assert a == (tmp_path / "p" / d / "trajectory.bin").read_bytes()

    def test_bad_threads(self, write_config, monkeypatch):
        monkeypatch.setenv("HNLS_THREADS", "zero")
        assert main(["sweep", str(write_config()), "--vary", "params.beta=1,2"]) == EXIT_VALIDATION

    def test_bad_vary(self, write_config):
        assert main(["sweep", str(write_config()), "--vary", "params.beta"]) == EXIT_VALIDATION
