import csv
import json
import math

import pytest
from click.testing import CliRunner

from dyncert.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, args, env=None):
    return runner.invoke(main, args, env=env, catch_exceptions=False)


class TestList:
    def test_lists_catalog(self, runner, tmp_path):
        out = tmp_path / "list.json"
        result = run(runner, ["list", "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["version"]
        assert any(e["name"] == "lyness" for e in data["entries"])


class TestCertify:
    def test_twist_passes(self, runner, tmp_path):
        out = tmp_path / "r.json"
        result = run(runner, ["certify", "--map", "twist", "--samples", "200",
                              "--seed", "42", "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["verdict"] == "PASS"
        assert data["caveat"] == "numerical evidence, not proof"
        assert data["wall_time_ms"] is None
        assert data["config"]["map"] == "twist"
        assert data["report"]["seed"] == 42

    def test_lyness_n2_default(self, runner, tmp_path):
        out = tmp_path / "r.json"
        result = run(runner, ["certify", "--map", "lyness", "--param", "n=2",
                              "--param", "a=1", "--samples", "150",
                              "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        names = [c["name"] for c in data["report"]["conditions"]]
        assert "map_invariance[F1]" in names
        assert not any(n.startswith("lie_bracket") for n in names)

    def test_fail_verdict_exit_one(self, runner, tmp_path):
        out = tmp_path / "r.json"
        result = run(runner, ["certify", "--map", "lyness", "--param", "n=3",
                              "--param", "a=1", "--param", "symmetry=1",
                              "--samples", "60", "-o", str(out)])
        assert result.exit_code == 1
        data = json.loads(out.read_text())
        assert data["verdict"] == "FAIL"
        assert "variant_search" in data
        assert len(data["variant_search"]) > 0

    def test_unknown_map_exit_two(self, runner):
        result = run(runner, ["certify", "--map", "nope"])
        assert result.exit_code == 2

    def test_bad_param_exit_two(self, runner):
        result = run(runner, ["certify", "--map", "affine1d",
                              "--param", "a"])
        assert result.exit_code == 2

    def test_structure_file(self, runner, tmp_path):
        struct = tmp_path / "s.json"
        struct.write_text(json.dumps({
            "dim": 1,
            "fields": [["x1 + 3"]],
        }))
        out = tmp_path / "r.json"
        result = run(runner, ["certify", "--map", "affine1d",
                              "--param", "a=2", "--param", "b=3",
                              "--samples", "40",
                              "--structure-file", str(struct),
                              "-o", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text())["verdict"] == "PASS"

    def test_structure_dimension_mismatch(self, runner, tmp_path):
        struct = tmp_path / "s.json"
        struct.write_text(json.dumps({"dim": 2, "fields": [["x1", "x2"]]}))
        result = run(runner, ["certify", "--map", "affine1d",
                              "--structure-file", str(struct)])
        assert result.exit_code == 2

    def test_config_file_merged_under_flags(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"map_name": "affine1d",
                                   "samples": 30}))
        out = tmp_path / "r.json"
        result = run(runner, ["certify", "--config", str(cfg),
                              "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["config"]["map"] == "affine1d"
        assert data["config"]["samples"] == 30


class TestOrbit:
    def test_csv_five_cycle(self, runner, tmp_path):
        out = tmp_path / "orbit.csv"
        result = run(runner, ["orbit", "--map", "lyness", "--param", "n=2",
                              "--param", "a=1", "--x0", "1,2", "-N", "5",
                              "--format", "csv", "-o", str(out)])
        assert result.exit_code == 0
        text = out.read_text()
        assert "\r" not in text
        rows = list(csv.reader(text.splitlines()))
        assert rows[0] == ["k", "x1", "x2"]
        assert len(rows) == 7
        assert [float(v) for v in rows[1][1:]] == [1.0, 2.0]
        assert [float(v) for v in rows[6][1:]] == [1.0, 2.0]

    def test_json_orbit(self, runner, tmp_path):
        out = tmp_path / "orbit.json"
        result = run(runner, ["orbit", "--map", "cat_map", "--x0", "0.2,0.4",
                              "-N", "2", "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["points"][2] == pytest.approx([0.2, 0.4])

    def test_wrong_dimension_exit_two(self, runner):
        result = run(runner, ["orbit", "--map", "cat_map", "--x0", "0.5",
                              "-N", "2"])
        assert result.exit_code == 2


class TestDataCommands:
    def test_lyapunov(self, runner, tmp_path):
        out = tmp_path / "lyap.json"
        result = run(runner, ["lyapunov", "--map", "cat_map",
                              "--x0", "0.3,0.7", "-N", "2000",
                              "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        lam = math.log((3 + math.sqrt(5)) / 2)
        assert data["exponents"][0] == pytest.approx(lam, abs=5e-3)

    def test_rotation(self, runner, tmp_path):
        out = tmp_path / "rot.json"
        result = run(runner, ["rotation", "--map", "rigid_rotation",
                              "--param", f"a={math.pi / 2}",
                              "-N", "4000", "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["rotation_number"] == pytest.approx(0.25, abs=1e-3)

    def test_periodic(self, runner, tmp_path):
        out = tmp_path / "per.json"
        result = run(runner, ["periodic", "--map", "cat_map", "-k", "1",
                              "--seeds", "40", "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["structure_note"] == "no structure certified"
        assert any(p["classification"] == "hyperbolic"
                   for p in data["periodic_points"])

    def test_drift(self, runner, tmp_path):
        out = tmp_path / "drift.json"
        result = run(runner, ["drift", "--map", "lyness", "--param", "n=2",
                              "--param", "a=2", "--x0", "1,2", "-N", "1000",
                              "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["drifts"]["F1"] <= 1e-6

    def test_drift_without_integrals_exit_two(self, runner):
        result = run(runner, ["drift", "--map", "cat_map", "--x0", "0.1,0.1",
                              "-N", "10"])
        assert result.exit_code == 2

    def test_translation(self, runner, tmp_path):
        out = tmp_path / "t.json"
        result = run(runner, ["translation", "--map", "affine1d",
                              "--param", "a=2", "--param", "b=3",
                              "--x0", "1", "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["t0"][0] == pytest.approx(math.log(2.0), abs=1e-8)


class TestLiftCertify:
    def test_linear_lift_passes(self, runner, tmp_path):
        out = tmp_path / "lift.json"
        result = run(runner, ["lift-certify", "--map", "linear",
                              "--param", "blocks=2:2", "--samples", "80",
                              "-o", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["verdict"] == "PASS"
        names = [c["name"] for c in data["report"]["conditions"]]
        assert "symplecticity" in names
        assert "poisson_bracket[G1,G2]" in names


class TestDeterminism:
    def test_reports_byte_identical_across_thread_counts(self, runner,
                                                         tmp_path):
        outputs = []
        for threads in ("1", "4"):
            out = tmp_path / f"report_{threads}.json"
            result = run(runner, ["certify", "--map", "twist",
                                  "--samples", "120", "--seed", "42",
                                  "-o", str(out)],
                         env={"DYNINT_THREADS": threads})
            assert result.exit_code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_repeat_run_identical(self, runner, tmp_path):
        blobs = []
        for i in range(2):
            out = tmp_path / f"r{i}.json"
            run(runner, ["certify", "--map", "affine1d", "--samples", "60",
                         "--seed", "7", "-o", str(out)])
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]
