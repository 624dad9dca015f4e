import csv
import json

import pytest

from cred.cli import main
from cred.systems import single_area_toy, synthesize_samples


@pytest.fixture
def toy_path(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(single_area_toy()))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestAnalyze:
    def test_writes_eigenvalues_and_sensitivities(self, toy_path, tmp_path):
        out = tmp_path / "out"
        assert main(["analyze", "--scenario", str(toy_path), "--out", str(out)]) == 0
        eigs = read_csv(out / "eigenvalues.csv")
        assert eigs[0] == ["index", "re", "im"]
        assert float(eigs[1][1]) == pytest.approx(-1.0, abs=1e-9)
        assert float(eigs[2][2]) == pytest.approx(2.0, abs=1e-9)
        sens = read_csv(out / "sensitivities.csv")
        assert sens[0] == ["eigen_index", "area", "d_re", "d_im"]
        row = next(r for r in sens[1:] if r[0] == "1")
        assert float(row[2]) == pytest.approx(0.5, abs=1e-9)
        assert float(row[3]) == pytest.approx(0.25, abs=1e-9)


class TestLinearize:
    def test_writes_segments_and_audit(self, toy_path, tmp_path):
        out = tmp_path / "out"
        assert main(["linearize", "--scenario", str(toy_path), "--out", str(out)]) == 0
        segs = read_csv(out / "segments.csv")
        assert segs[0] == ["eigen_index", "area", "abscissa", "eig_re", "eig_im",
                           "slope_re", "slope_im"]
        assert len(segs) == 2  # single anchor on the linear toy
        audit = read_csv(out / "linearize_audit.csv")
        errors = [float(r[3]) for r in audit[1:]]
        assert max(errors) <= 0.02


class TestSimulate:
    def test_trajectory_csv_and_labels(self, toy_path, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["simulate", "--scenario", str(toy_path), "--out", str(out),
                     "--worst-case", "--t-end", "40"])
        assert code == 0
        printed = capsys.readouterr().out
        assert "growing" in printed
        rows = read_csv(out / "trajectory.csv")
        assert rows[0] == ["t", "omega_0", "delta_0"]

        code = main(["simulate", "--scenario", str(toy_path), "--out", str(out),
                     "--worst-case", "--kc", "3.0", "--t-end", "40"])
        assert code == 0
        assert "decaying" in capsys.readouterr().out


class TestWorkflow:
    def test_end_to_end_artifacts(self, toy_path, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["workflow", "--scenario", str(toy_path), "--out", str(out),
                     "--worst-case"])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "branch: cred_applied" in stdout
        report = json.loads((out / "report.json").read_text())
        assert report["certificate"]["passed"] is True
        assert (out / "summary.csv").exists()
        assert (out / "solution.json").exists()

    def test_deterministic_outputs(self, toy_path, tmp_path):
        blobs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            main(["workflow", "--scenario", str(toy_path), "--out", str(out),
                  "--worst-case"])
            blobs.append((out / "report.json").read_bytes()
                         + (out / "solution.json").read_bytes()
                         + (out / "summary.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_samples_flow(self, toy_path, tmp_path):
        samples = tmp_path / "samples.json"
        samples.write_text(json.dumps(synthesize_samples(2.5, 0.1, 0, seed=1)))
        out = tmp_path / "out"
        code = main(["workflow", "--scenario", str(toy_path), "--out", str(out),
                     "--samples", str(samples), "--eta", "0.9"])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert 2.5 < report["robust_gains_pu_per_hz"][0] < 3.0


class TestDispatchCommand:
    def test_prints_summary(self, toy_path, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["dispatch", "--scenario", str(toy_path), "--out", str(out),
                     "--worst-case"])
        assert code == 0
        assert "increment" in capsys.readouterr().out


class TestSweepCommand:
    def test_sweep_csv(self, tmp_path):
        doc = tmp_path / "desk.json"
        doc.write_text(json.dumps(single_area_toy()))
        out = tmp_path / "out"
        code = main(["sweep", "--scenario", str(doc), "--out", str(out),
                     "--worst-case", "--axis", "vulnerable_fraction",
                     "--grid", "0.1,0.3"])
        assert code == 0
        rows = read_csv(out / "sweep.csv")
        assert rows[0][0] == "axis"
        assert len(rows) == 3


class TestExitCodes:
    def test_missing_scenario_is_input_error(self, tmp_path):
        assert main(["analyze", "--scenario", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 4

    def test_malformed_scenario_is_input_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["analyze", "--scenario", str(bad), "--out", str(tmp_path)]) == 4

    def test_infeasible_is_exit_three(self, tmp_path):
        # attacked area with no wind anywhere: no droop, no way to stabilize
        doc = single_area_toy()
        doc["areas"][0]["ibr_max_power"] = 0.0
        for p in doc["dispatch"]["periods"]:
            p["wind_available"] = [0.0]
        path = tmp_path / "doomed.json"
        path.write_text(json.dumps(doc))
        code = main(["workflow", "--scenario", str(path), "--out",
                     str(tmp_path / "out"), "--worst-case"])
        assert code == 3

    def test_validation_failure_is_exit_two(self, tmp_path):
        from cred.systems import three_area_system

        # a coarse table against the bare axis survives the solver but not
        # the exact certificate, even after the automatic rebuild
        path = tmp_path / "desk.json"
        path.write_text(json.dumps(three_area_system()))
        code = main(["workflow", "--scenario", str(path), "--out",
                     str(tmp_path / "out"), "--worst-case",
                     "--eps-lim", "0.5", "--settle-margin", "0"])
        assert code == 2
