import csv
import json

import pytest

from chipletdse.cli import main

SMALL_DOC = {
    "package": {
        "name": "small",
        "interposer_width_mm": 20.0,
        "interposer_height_mm": 20.0,
        "min_spacing_mm": 1.0,
        "ambient_c": 45.0,
    },
    "chiplets": [
        {"name": "a", "width_mm": 6, "height_mm": 6, "power_w": 12.0,
         "kind": "compute", "ports": [{"peer": "b", "weight": 2.0}]},
        {"name": "b", "width_mm": 5, "height_mm": 5, "power_w": 6.0,
         "kind": "compute", "ports": [{"peer": "c", "weight": 1.0}]},
        {"name": "c", "width_mm": 4, "height_mm": 4, "power_w": 3.0,
         "kind": "memory"},
        {"name": "d", "width_mm": 4, "height_mm": 4, "power_w": 2.0,
         "kind": "io"},
    ],
    "anneal": {"k0": 0.1, "decay": 0.9, "tol_c": 0.1, "max_iterations": 15,
               "moves_per_iteration": 5, "seed": 2, "coarse_cell_mm": 2.0,
               "fine_cell_mm": 2.0},
    "tiles": [
        {"name": "t0", "frequency_hz": 2e9, "voltage_v": 1.0, "activity": 0.1,
         "load_capacitance_f": 1e-9, "area_mm2": 50.0},
        {"name": "t1", "frequency_hz": 1e9, "voltage_v": 0.9, "activity": 0.2,
         "load_capacitance_f": 2e-9, "area_mm2": 30.0},
    ],
    "configs": [
        {"name": "C1", "cost": 129.6854, "throughput": 1.95e9, "latency": 30.311},
        {"name": "C2", "cost": 177.3822, "throughput": 1.97e9, "latency": 43.234},
        {"name": "C3", "cost": 136.7064, "throughput": 1.92e9, "latency": 30.763},
    ],
    "process": {"n_connections": 1000},
}


@pytest.fixture()
def spec_path(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_DOC))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestCostCommand:
    def test_writes_report_and_manifest(self, spec_path, tmp_path, capsys):
        out = tmp_path / "cost"
        assert main(["cost", "--spec", spec_path, "--out", str(out)]) == 0
        rows = read_csv(out / "cost.csv")
        assert rows[0] == ["die", "area_mm2", "gross_dies_or_connections",
                           "yield", "cost"]
        assert [r[0] for r in rows[1:]] == ["a", "b", "c", "d", "PACKAGE"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "cost"
        assert spec_path in manifest["inputs"]
        assert "package_cost" in capsys.readouterr().out

    def test_missing_spec_fails_with_path(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.json")
        assert main(["cost", "--spec", missing, "--out", str(tmp_path / "o")]) == 1
        assert "nope.json" in capsys.readouterr().err


class TestPowerCommand:
    def test_system_row(self, spec_path, tmp_path, capsys):
        out = tmp_path / "power"
        assert main(["power", "--spec", spec_path, "--out", str(out)]) == 0
        rows = read_csv(out / "power.csv")
        assert [r[0] for r in rows[1:]] == ["t0", "t1", "SYSTEM"]
        assert "system_power_w" in capsys.readouterr().out

    def test_spec_without_tiles_fails(self, tmp_path, capsys):
        doc = {k: v for k, v in SMALL_DOC.items() if k != "tiles"}
        path = tmp_path / "notiles.json"
        path.write_text(json.dumps(doc))
        assert main(["power", "--spec", str(path), "--out", str(tmp_path / "o")]) == 1
        assert "tiles" in capsys.readouterr().err


class TestPerfCommand:
    def test_from_spec_configs(self, spec_path, tmp_path, capsys):
        out = tmp_path / "perf"
        assert main(["perf", "--spec", spec_path, "--out", str(out)]) == 0
        rows = read_csv(out / "perf.csv")
        assert [r[0] for r in rows[1:]] == ["C1", "C3", "C2"]
        assert "best_config = C1" in capsys.readouterr().out

    def test_from_csv(self, tmp_path):
        cfg = tmp_path / "configs.csv"
        cfg.write_text("name,cost,throughput,latency\n"
                       "X,100,1e9,10\nY,100,1e9,20\n")
        out = tmp_path / "perf"
        assert main(["perf", "--configs", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out / "perf.csv")
        assert [r[0] for r in rows[1:]] == ["X", "Y"]


class TestPhyCommand:
    def test_defaults(self, tmp_path, capsys):
        out = tmp_path / "phy"
        assert main(["phy", "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        values = dict(line.split(" = ") for line in printed.strip().splitlines())
        assert float(values["max_trace_length_mm"]) == pytest.approx(36.518, rel=5e-3)
        assert float(values["c_per_length_pf_m"]) == pytest.approx(388.99, rel=5e-3)
        assert len(read_csv(out / "bandwidth_curve.csv")) == 101

    def test_faster_clock_shortens_reach(self, tmp_path, capsys):
        assert main(["phy", "--clock", "8e9", "--out", str(tmp_path / "p")]) == 0
        printed = capsys.readouterr().out
        values = dict(line.split(" = ") for line in printed.strip().splitlines())
        assert float(values["max_trace_length_mm"]) < 36.518 / 1.9


class TestThermalCommand:
    def test_field_csv(self, spec_path, tmp_path, capsys):
        out = tmp_path / "thermal"
        assert main(["thermal", "--spec", spec_path, "--out", str(out),
                     "--resolution", "2.0"]) == 0
        rows = read_csv(out / "temperature_field.csv")
        # default stack: 8 layers on a 10x10 grid
        assert len(rows) == 1 + 8 * 10 * 10
        printed = capsys.readouterr().out
        assert "peak_chiplet_c" in printed


class TestPlaceCommand:
    def test_outputs_and_determinism(self, spec_path, tmp_path):
        out1, out2 = tmp_path / "p1", tmp_path / "p2"
        assert main(["place", "--spec", spec_path, "--out", str(out1)]) == 0
        assert main(["place", "--spec", spec_path, "--out", str(out2)]) == 0
        for name in ("floorplan.json", "floorplan.svg", "history.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        doc = json.loads((out1 / "floorplan.json").read_text())
        assert len(doc["placements"]) == 4
        assert "<svg" in (out1 / "floorplan.svg").read_text()

    def test_seed_override_changes_history(self, spec_path, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(["place", "--spec", spec_path, "--out", str(out1)]) == 0
        assert main(["place", "--spec", spec_path, "--out", str(out2),
                     "--seed", "7"]) == 0
        assert (out1 / "history.csv").read_bytes() != (out2 / "history.csv").read_bytes()
        m2 = json.loads((out2 / "manifest.json").read_text())
        assert m2["seed"] == 7


class TestCalibrateAndSweepCommands:
    def test_calibrate_duplicate_candidates(self, spec_path, tmp_path):
        out = tmp_path / "cal"
        assert main(["calibrate-k", "--spec", spec_path, "--out", str(out),
                     "--k", "0.1,0.1"]) == 0
        rows = read_csv(out / "k_calibration.csv")
        assert rows[1] == rows[2]

    def test_sweep_flags_infeasible(self, spec_path, tmp_path, capsys):
        out = tmp_path / "sweep"
        assert main(["sweep", "--spec", spec_path, "--out", str(out),
                     "--sides", "10,20"]) == 0
        rows = read_csv(out / "interposer_sweep.csv")
        assert rows[1][3] == "false" and rows[2][3] == "true"
        assert "infeasible" in capsys.readouterr().out


class TestRerunCommand:
    def test_rerun_reproduces_outputs(self, spec_path, tmp_path):
        out = tmp_path / "run"
        assert main(["place", "--spec", spec_path, "--out", str(out)]) == 0
        before = {name: (out / name).read_bytes()
                  for name in ("floorplan.json", "floorplan.svg", "history.csv")}
        assert main(["rerun", str(out / "manifest.json")]) == 0
        for name, blob in before.items():
            assert (out / name).read_bytes() == blob

    def test_missing_manifest(self, tmp_path, capsys):
        assert main(["rerun", str(tmp_path / "gone.json")]) == 1
        assert "gone.json" in capsys.readouterr().err
