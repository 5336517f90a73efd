import json

import numpy as np
import pytest

from robin_insulation.__main__ import main
from robin_insulation.utils.config_manager import ConfigManager, parse_grid
from robin_insulation.utils.error_handling import ConfigError
from robin_insulation.utils.output_writer import config_echo, format_value, render_csv

FAST = ["--domain", "disk:1", "--mesh-h", "0.4"]


def _table(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1].startswith("# config: ")
    return [line.split(",") for line in lines[2:]]


def test_parse_grid():
    assert parse_grid("1.5, 8") == [1.5, 8.0]
    assert np.allclose(parse_grid("log:1:100:3"), [1.0, 10.0, 100.0])
    for bad in ("", "log:1:2", "log:0:1:3", "a,b"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# laboratory run\nbeta = 2.5\nmesh-h = 0.2   # coarse\nm_grid = 0.5,1\nrestarts = no\n")
    config = ConfigManager().load_settings(str(path), {"beta": "3", "mass": None})
    assert config.beta == 3.0
    assert config.mesh_h == 0.2
    assert config.m_grid == [0.5, 1.0]
    assert config.restarts is False
    assert config.mass == 1.0


@pytest.mark.parametrize("content", ["colour = blue\n", "beta = -1\n", "beta = x\n", "linear_solver = lu\n",
                                     "domain = ellipse:1\n", "mesh_h = 3\n", "just text\n"])
def test_invalid_config_files(tmp_path, content):
    path = tmp_path / "bad.cfg"
    path.write_text(content)
    with pytest.raises(ConfigError):
        ConfigManager().load_settings(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager().load_settings(str(tmp_path / "missing.cfg"))


def test_value_formatting():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.float64(2.0)) == "2"
    assert format_value(True) == "true"
    assert format_value([1.5, 8.0]) == "1.5,8"
    assert format_value(None) == ""
    assert config_echo({"b": 1, "a": 0.5, "out": "x.csv", "jobs": 4}) == "a=0.5;b=1"
    text = render_csv(("x", "y"), [(1.0, "ok")], {"beta": 2.0})
    assert "\r" not in text
    assert text.endswith("1,ok\n")


def test_solve_writes_result_and_boundary_profile(tmp_path):
    out = tmp_path / "solve.json"
    code = main(["solve", *FAST, "--beta", "1", "--mass", "0", "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text())
    assert document["schema_version"] == 1
    assert document["m"] == 0.0
    assert document["lambda_m"] > 0.0
    assert document["iterations"] == 0
    assert document["audit_violations"] == 0
    assert "out" not in document["config"]
    rows = _table(tmp_path / "solve_boundary.csv")
    assert rows[0] == ["arclength", "h", "trace_u"]
    assert all(float(h) == 0.0 for _, h, _ in rows[1:])


def test_solve_with_insulation(tmp_path):
    out = tmp_path / "insulated.json"
    assert main(["solve", *FAST, "--beta", "1", "--mass", "1", "--out", str(out)]) == 0
    document = json.loads(out.read_text())
    assert document["converged"] is True
    assert document["mass_error"] < 1e-8
    assert document["gap"] > 0.0
    trace = document["functional_trace"]
    assert all(b <= a * (1.0 + 1e-12) for a, b in zip(trace, trace[1:]))


def test_gamma_table(tmp_path):
    out = tmp_path / "gamma.csv"
    assert main(["gamma", "--beta", "1", "--h-const", "1", "--eps", "0.1,0.05,0.025", "--out", str(out)]) == 0
    rows = _table(out)
    assert rows[0] == ["eps", "lambda_eps", "lambda_limit", "gap"]
    gaps = [float(row[3]) for row in rows[1:]]
    assert len(gaps) == 3 and gaps[0] > gaps[1] > gaps[2]


def test_gamma_requires_disk(tmp_path):
    assert main(["gamma", "--domain", "rectangle:1:1", "--out", str(tmp_path / "g.csv")]) == 1


def test_usage_errors(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["solve", "--beta", "-1"]) == 1
    assert main(["solve", "--beta", "abc"]) == 1
    assert main([]) == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_sweep_is_deterministic_across_workers(tmp_path):
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    args = ["sweep", *FAST, "--beta-grid", "1.5", "--m-grid", "0,0.5"]
    assert main([*args, "--jobs", "1", "--out", str(serial)]) == 0
    assert main([*args, "--jobs", "2", "--out", str(parallel)]) == 0
    assert serial.read_bytes() == parallel.read_bytes()
    rows = _table(serial)
    assert rows[0] == ["beta", "m", "lambda_m", "radiality", "tau_mesh", "is_radial", "status"]
    assert [row[:2] for row in rows[1:]] == [["1.5", "0"], ["1.5", "0.5"]]
    assert all(row[6] == "ok" for row in rows[1:])
    assert all(float(row[4]) > 0.0 and row[5] == "true" for row in rows[1:])
    # at m = 0 the minimizer is the pure-Robin eigenfunction itself
    assert float(rows[1][3]) == pytest.approx(float(rows[1][4]), rel=1e-3)


def test_reference_table(tmp_path):
    out = tmp_path / "reference.csv"
    assert main(["reference", *FAST, "--beta", "8", "--out", str(out)]) == 0
    rows = _table(out)
    assert rows[0] == ["quantity", "level", "mesh_h", "fem", "oracle", "rel_gap"]
    assert [row[0] for row in rows[1:]] == ["lambda_D", "lambda_N", "lambda_R", "beta_star", "m_bar_oracle"]


def test_mesh_info(tmp_path, capsys):
    out = tmp_path / "disk.mesh"
    assert main(["mesh-info", *FAST, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "quantity,value" in printed
    assert "NV," in printed
    assert out.read_text().splitlines()[0].count(" ") == 2
