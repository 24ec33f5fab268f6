import csv
import io
import json
import subprocess
import sys

import pytest

from uvsdma.cli import main, parse_and_validate
from uvsdma.errors import ConfigError


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


def estimate_doc(gains=(1.0, 2.0)):
    return {
        "schema_version": 1,
        "kind": "estimate",
        "seed": 0,
        "estimate": {"sectors": [{"name": "s", "gains": list(gains), "noise": 1.0}], "lengths": [10], "trials": 4},
    }


def detect2_doc(gain_a=(8.0,), gain_b=(3.0,), symbols=20_000):
    return {
        "schema_version": 1,
        "kind": "detect2",
        "seed": 3,
        "detect2": {"problems": [{"name": "p", "gain_a": list(gain_a), "gain_b": list(gain_b), "noise": [1.0]}], "symbols": symbols},
    }


def pilot_doc(K=4):
    return {
        "schema_version": 1,
        "kind": "pilot-search",
        "seed": 0,
        "pilot_search": {"K": K, "L": 100, "sectors": [{"name": "a", "noise": 1.0, "l1": 40.0}]},
    }


class TestValidate:
    def test_bundled_configs_validate(self, configs_dir, capsys):
        for path in sorted(configs_dir.glob("*.json")):
            assert main(["validate", str(path)]) == 0, path
        assert "ok:" in capsys.readouterr().out

    def test_negative_gain_names_path(self, tmp_path, capsys):
        path = write(tmp_path, estimate_doc((1.0, -2.0)))
        assert main(["validate", path]) == 2
        err = capsys.readouterr().err
        assert "$.estimate.sectors[0].gains[1]" in err and "line" in err

    def test_unknown_key(self, tmp_path, capsys):
        doc = estimate_doc()
        doc["estimate"]["colour"] = "blue"
        assert main(["validate", write(tmp_path, doc)]) == 2
        assert "colour" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "none.json")]) == 2

    def test_bad_json_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "kind": "estimate",\n  oops\n}')
        assert main(["validate", str(path)]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate", "-c", "x.json"])
        assert exc.value.code == 2

    def test_kind_mismatch(self, tmp_path):
        assert main(["detect2", "-c", write(tmp_path, estimate_doc())]) == 2

    def test_overrides(self, tmp_path):
        path = write(tmp_path, detect2_doc())
        inv = parse_and_validate(["detect2", "-c", path, "--seed", "42", "--threads", "3"])
        assert inv.config["seed"] == 42 and inv.config["threads"] == 3
        with pytest.raises(ConfigError):
            parse_and_validate(["detect2", "-c", path, "--threads", "0"])


class TestRun:
    def test_seed_recorded(self, tmp_path):
        out = tmp_path / "out"
        assert main(["detect2", "-c", write(tmp_path, detect2_doc()), "-o", str(out), "--seed", "17"]) == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["seed"] == 17 and doc["config"]["seed"] == 17
        assert {p.name for p in out.iterdir()} == {"report.json", "detectors.csv", "analytic.csv"}

    def test_pilot_search_rows(self, tmp_path, capsys):
        assert main(["pilot-search", "-c", write(tmp_path, pilot_doc())]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 14
        assert main(["pilot-search", "-c", write(tmp_path, pilot_doc(K=2))]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["beta"] for r in rows] == ["{1}", "{1,2}"]

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["detect2", "-c", write(tmp_path, detect2_doc()), "-o", str(blocker / "sub")]) == 2

    def test_compute_error_leaves_nothing(self, tmp_path, capsys):
        out = tmp_path / "out"
        path = write(tmp_path, detect2_doc(gain_a=(3.0,), gain_b=(3.0,)))
        assert main(["detect2", "-c", path, "-o", str(out)]) == 1
        assert not out.exists()
        assert "DegenerateProblemError" in capsys.readouterr().err

    def test_same_seed_identical_csv(self, tmp_path):
        path = write(tmp_path, detect2_doc())
        for name in ("a", "b"):
            assert main(["detect2", "-c", path, "-o", str(tmp_path / name)]) == 0
        for f in ("detectors.csv", "analytic.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_json_format(self, tmp_path, capsys):
        assert main(["detect2", "-c", write(tmp_path, detect2_doc()), "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["kind"] == "detect2" and "detectors" in doc["tables"]

    def test_console_script(self, configs_dir):
        proc = subprocess.run(
            [sys.executable, "-m", "uvsdma.cli", "validate", str(configs_dir / "pmt1_gains.json")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0 and proc.stdout.startswith("ok:")
