import csv
import json
import math

import numpy as np
import pytest

from conftest import SZ, encode, qubit_scenario
from mixphase import __version__
from mixphase.cli import main
from mixphase.errors import DimensionMismatch, ParseError, SchemaError
from mixphase.scenario import gauge_demo, parse_scenario, random_windings, run_report

PI = math.pi


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="s.json"):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(p)

    return _write


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestParse:
    def test_minimal_defaults(self, monkeypatch):
        monkeypatch.delenv("PHASE_DEFAULT_STEPS", raising=False)
        doc = {
            "rho0": [[0.75, 0], [0, 0.25]],
            "evolution": {"type": "hamiltonian", "segments": [{"H": encode(0.5 * SZ), "dt": 2 * PI}]},
        }
        s = parse_scenario(json.dumps(doc))
        assert s.steps == 1024
        assert s.name == "scenario"
        assert s.interferogram == {"samples": 360, "noise_sigma": 0.0, "seed": 0}
        assert s.windings is None

    def test_env_default(self, monkeypatch):
        monkeypatch.setenv("PHASE_DEFAULT_STEPS", "77")
        doc = qubit_scenario()
        del doc["steps"]
        assert parse_scenario(json.dumps(doc)).steps == 77

    def test_missing_rho0(self):
        doc = qubit_scenario()
        del doc["rho0"]
        with pytest.raises(SchemaError, match="rho0"):
            parse_scenario(json.dumps(doc))

    def test_dimension_mismatch(self):
        doc = qubit_scenario()
        doc["evolution"]["segments"][0]["H"] = encode(np.eye(3))
        with pytest.raises(DimensionMismatch):
            parse_scenario(json.dumps(doc))

    def test_parse_error_position(self):
        with pytest.raises(ParseError, match="line 2 column"):
            parse_scenario('{"rho0": [[1]],\n  "evolution": }')

    def test_bad_entry(self):
        doc = qubit_scenario()
        doc["rho0"][0][0] = "x"
        with pytest.raises(SchemaError, match=r"rho0\[0\]\[0\]"):
            parse_scenario(json.dumps(doc))

    def test_both_variants(self):
        doc = qubit_scenario()
        doc["evolution"]["unitaries"] = []
        with pytest.raises(SchemaError):
            parse_scenario(json.dumps(doc))

    def test_samples_variant(self):
        n = 64
        t = np.linspace(0, 2 * PI, n + 1)
        us = [np.diag([np.exp(-0.5j * x), np.exp(0.5j * x)]) for x in t]
        doc = {"rho0": qubit_scenario()["rho0"], "evolution": {"type": "samples", "tau": 2 * PI, "unitaries": [encode(u) for u in us]}}
        s = parse_scenario(json.dumps(doc))
        assert s.steps == n
        assert run_report(s)["visibility"] == pytest.approx(0.5, abs=1e-3)

    def test_from_file(self, write):
        assert parse_scenario(write(qubit_scenario())).dim == 2


class TestRun:
    def test_mixed_qubit(self, write, capsys):
        code, out, _ = run_cli(["run", write(qubit_scenario())], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["gamma"] == pytest.approx(-PI / 2, abs=1e-6)
        assert rep["visibility"] == pytest.approx(0.5, abs=1e-6)
        assert rep["steps"] == 4096
        for key in ("weights", "phases", "fu_chen", "cyclicity_residual", "dynamical", "total", "decomposition_residual"):
            assert key in rep
        assert max(rep["decomposition_residual"]) <= 1e-6

    def test_chart_frame(self, write, capsys):
        code, out, _ = run_cli(["run", write(qubit_scenario()), "--frame", "chart"], capsys)
        assert json.loads(out)["fu_chen"] == pytest.approx(-3 * PI / 4, abs=1e-6)

    def test_steps_override_and_out(self, write, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, stdout, _ = run_cli(["run", write(qubit_scenario()), "--steps", "300", "--out", str(out)], capsys)
        assert code == 0 and stdout == ""
        assert json.loads(out.read_text())["steps"] == 300

    def test_non_cyclic(self, write, capsys):
        code, _, err = run_cli(["run", write(qubit_scenario(duration=PI))], capsys)
        assert code == 3
        assert "residual" in err

    def test_degenerate(self, write, capsys):
        code, _, err = run_cli(["run", write(qubit_scenario(weights=(0.5, 0.5)))], capsys)
        assert code == 4
        assert "DegenerateSpectrum" in err

    def test_validation(self, write, capsys):
        doc = qubit_scenario()
        doc["rho0"] = [[0.75, 0], [0, 0.35]]
        assert run_cli(["run", write(doc)], capsys)[0] == 2
        assert run_cli(["run", write("{not json")], capsys)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run_cli(["run", str(tmp_path / "nope.json")], capsys)[0] == 5

    def test_unwritable_out(self, write, tmp_path, capsys):
        assert run_cli(["run", write(qubit_scenario()), "--out", str(tmp_path / "x" / "r.json")], capsys)[0] == 5

    def test_byte_identical(self, write, capsys):
        p = write(qubit_scenario())
        assert run_cli(["run", p], capsys)[1] == run_cli(["run", p], capsys)[1]

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out


class TestGaugeDemo:
    def test_trivial(self, write, capsys):
        code, out, _ = run_cli(["gauge-demo", write(qubit_scenario()), "--windings", "0,0"], capsys)
        demo = json.loads(out)
        assert code == 0
        t = demo["trials"][0]
        assert t["measured_shift"] == 0.0 and t["predicted_shift"] == 0.0 and t["verdict"] == "PASS"

    def test_single_winding(self, write, capsys):
        code, out, _ = run_cli(["gauge-demo", write(qubit_scenario()), "--windings", "1,0"], capsys)
        t = json.loads(out)["trials"][0]
        assert code == 0
        assert t["measured_shift"] == pytest.approx(3 * PI / 2, abs=1e-6)
        assert t["fu_chen_factor_distance"] == pytest.approx(math.sqrt(2), abs=1e-6)
        assert t["gamma_distance"] <= 1e-9
        assert t["path_invariance_residual"] <= 1e-10

    def test_random_deterministic(self, write, capsys):
        p = write(qubit_scenario(steps=1024))
        a = run_cli(["gauge-demo", p, "--random", "100", "--seed", "7"], capsys)
        b = run_cli(["gauge-demo", p, "--random", "100", "--seed", "7"], capsys)
        assert a[0] == 0 and a[1] == b[1]
        demo = json.loads(a[1])
        assert demo["summary"]["trials"] == 100 and demo["summary"]["failed"] == 0
        assert [t["windings"] for t in demo["trials"]] == [list(n) for n in random_windings(2, 100, 7)]

    def test_table(self, write, capsys):
        code, out, _ = run_cli(["gauge-demo", write(qubit_scenario(steps=512)), "--random", "3", "--seed", "1", "--table"], capsys)
        assert code == 0 and out.strip().endswith("3/3 trials passed")

    def test_scenario_windings(self, write, capsys):
        code, out, _ = run_cli(["gauge-demo", write(qubit_scenario(steps=512, gauge={"windings": [2, -1], "profile": "linear"}))], capsys)
        assert json.loads(out)["trials"][0]["windings"] == [2, -1]

    def test_wrong_length(self, capsys, write):
        assert run_cli(["gauge-demo", write(qubit_scenario(steps=256)), "--windings", "1,2,3"], capsys)[0] == 2

    def test_failing_verdict(self):
        s = parse_scenario(json.dumps(qubit_scenario(steps=256)))
        demo = gauge_demo(s, [(1, 0)], tol=1e-18)
        assert demo["trials"][0]["verdict"] == "FAIL"


class TestInterferogram:
    def test_noiseless(self, write, tmp_path, capsys):
        out = tmp_path / "g.csv"
        code, stdout, _ = run_cli(["interferogram", write(qubit_scenario()), "--out", str(out)], capsys)
        assert code == 0
        rep = json.loads(stdout)
        ig = rep["interferogram"]
        assert ig["fit_gamma"] == pytest.approx(rep["gamma"], abs=1e-9)
        assert ig["fit_visibility"] == pytest.approx(rep["visibility"], abs=1e-9)
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["chi", "intensity"] and len(rows) == 361
        assert all(cell == format(float(cell), ".17g") for row in rows[1:] for cell in row)

    def test_noisy(self, write, tmp_path, capsys):
        doc = qubit_scenario(interferogram={"samples": 360, "noise_sigma": 0.01, "seed": 4})
        code, stdout, _ = run_cli(["interferogram", write(doc), "--out", str(tmp_path / "g.csv")], capsys)
        ig = json.loads(stdout)["interferogram"]
        assert abs(ig["fit_gamma"] + PI / 2) <= 5e-3
        assert abs(ig["fit_visibility"] - 0.5) <= 5e-3

    def test_svg_and_determinism(self, write, tmp_path, capsys):
        p = write(qubit_scenario(steps=512))
        outs = []
        for i in range(2):
            csv_p, svg_p = tmp_path / f"g{i}.csv", tmp_path / f"g{i}.svg"
            assert run_cli(["interferogram", p, "--out", str(csv_p), "--svg", str(svg_p)], capsys)[0] == 0
            outs.append((csv_p.read_bytes(), svg_p.read_bytes()))
        assert outs[0] == outs[1]
        assert outs[0][1].lstrip().startswith(b"<?xml")

    def test_unwritable(self, write, tmp_path, capsys):
        code, _, err = run_cli(["interferogram", write(qubit_scenario(steps=256)), "--out", str(tmp_path / "no" / "g.csv")], capsys)
        assert code == 5 and "g.csv" in err
