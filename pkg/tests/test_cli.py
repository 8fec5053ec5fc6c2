import json
import math

import numpy as np
import pytest

from nonparaxial import cli
from nonparaxial.config import ConfigError, RunConfig, load, parse_text
from nonparaxial.io import dumps, read_csv, read_field_csv, write_csv, write_field_csv
from nonparaxial.model import GridSpec, gaussian_packet

SMALL_GRID = ["--n", "512", "--x-min", "-16", "--x-max", "16"]


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def _snapshot(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_config_grammar():
    raw = parse_text(
        """
        # comment
        epsilon = 0.02 ; trailing comment
        [grid]
        n = 512
        x_min = -16
        [init]
        sigma = 1.5
        """
    )
    assert raw == {"epsilon": "0.02", "grid.n": "512", "grid.x_min": "-16", "init.sigma": "1.5"}
    cfg = RunConfig.build("propagate", raw)
    assert cfg["grid.n"] == 512 and cfg["epsilon"] == (0.02,) and cfg["grid.x_max"] == 32.0


def test_config_errors_are_aggregated():
    with pytest.raises(ConfigError) as info:
        RunConfig.build("propagate", {"grid.n": "abc", "nope": "1", "method": "magic"})
    assert len(info.value.problems) == 3
    with pytest.raises(ConfigError):
        parse_text("just words")


def test_config_file_and_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("z = 2.0\nepsilon = 0.1\n")
    cfg = load("propagate", path, {"z": "3.0"})
    assert cfg["z"] == 3.0 and cfg["epsilon"] == (0.1,)


def test_csv_round_trip(tmp_path, rng):
    g = GridSpec.centered(256, 8.0)
    vals = gaussian_packet(g, 1.0).values * np.exp(1j * rng.uniform(0, 2 * np.pi, g.n))
    f = gaussian_packet(g, 1.0).with_values(vals)
    write_field_csv(tmp_path / "f.csv", f)
    back = read_field_csv(tmp_path / "f.csv", g)
    assert np.max(np.abs(back.values - f.values)) <= 1e-15
    data = rng.standard_normal((3, 50)) * 10.0 ** rng.integers(-300, 300, (3, 50))
    write_csv(tmp_path / "t.csv", ["a", "b", "c"], list(data))
    got = read_csv(tmp_path / "t.csv")
    assert all(np.array_equal(got[c], data[i]) for i, c in enumerate("abc"))


def test_json_round_trip():
    obj = {"x": 0.1 + 0.2, "c": 1.5 - 2j, "inf": math.inf, "arr": np.array([1e-300, 3.0])}
    back = json.loads(dumps(obj))
    assert back["x"] == 0.1 + 0.2
    assert back["c"] == {"re": 1.5, "im": -2.0}
    assert back["inf"] == "inf"
    assert back["arr"] == [1e-300, 3.0]


@pytest.mark.parametrize(
    "args",
    [
        ["propagate", "--method", "spectral", *SMALL_GRID],
        ["propagate", "--method", "fphe", "--k0", "20", *SMALL_GRID],
        ["propagate", "--method", "kernel", *SMALL_GRID],
        ["propagate", "--method", "density", "--epsilon", "3", *SMALL_GRID],
        ["kernel", "--epsilon", "0.01"],
        ["kernel", "--epsilon", "0.01", "--kernel-method", "quadrature"],
        ["bounds", "--epsilon", "0.06"],
        ["modes", "--epsilon", "0.01", "--constraint", "standing", *SMALL_GRID],
        ["instanton", "--epsilon", "0.06"],
        ["berry", "--epsilon", "0.01", "--loop-l", "1.7"],
        ["berry", "--direction", "z", "--mode-n", "4", "--alpha", "0.5"],
        ["scan-negativity", "--eps-max", "4", *SMALL_GRID],
        ["compare", "--epsilon", "1e-3,2e-3,4e-3", *SMALL_GRID],
    ],
)
def test_commands_are_deterministic(tmp_path, args):
    code1, out1 = _run(tmp_path, "a", *args, "--gnuplot")
    code2, out2 = _run(tmp_path, "b", *args, "--gnuplot")
    assert code1 == code2 == 0
    assert _snapshot(out1) == _snapshot(out2)
    for p in out1.glob("*.json"):
        assert json.loads(p.read_text())["schema_version"] == 1


def test_bounds_values(tmp_path):
    _, out = _run(tmp_path, "o", "bounds", "--epsilon", "0.06")
    data = json.loads((out / "bounds.json").read_text())
    assert data["p_max"] == pytest.approx(10 / 3, rel=1e-15)
    assert data["instanton_momentum"] == pytest.approx(10 / 3, rel=1e-15)


def test_scan_output(tmp_path):
    _, out = _run(tmp_path, "o", "scan-negativity", *SMALL_GRID)
    data = json.loads((out / "scan.json").read_text())
    assert data["eps_star"] == pytest.approx(8 / 3, abs=1e-3)
    table = read_csv(out / "scan.csv")
    assert list(table) == ["epsilon", "min_density"]


def test_field_output_matches_library(tmp_path):
    from nonparaxial.propagate import spectral_step

    _, out = _run(tmp_path, "o", "propagate", "--epsilon", "0.02", "--z", "1.5", "--sigma", "1.2", *SMALL_GRID)
    g = GridSpec(512, -16.0, 16.0)
    f = read_field_csv(out / "field.csv", g)
    ref = spectral_step(gaussian_packet(g, 1.2), 1.5, 0.02).field
    assert np.array_equal(f.values, ref.values)


def test_negative_epsilon_exit_code(tmp_path):
    err = tmp_path / "err.json"
    code, out = _run(tmp_path, "o", "validate", "--epsilon", "-0.1", "--error-json", str(err))
    assert code == 3
    payload = json.loads(err.read_text())
    assert any("epsilon" in i["precondition"] for i in payload["issues"])
    report = json.loads((out / "validation.json").read_text())
    assert report["issues"][0]["module"] == "model"


def test_under_resolved_sigma(tmp_path):
    code, _ = _run(tmp_path, "o", "propagate", "--sigma", "0.01", "--n", "1024", "--x-min", "-25.6", "--x-max", "25.6")
    assert code == 3


def test_config_error_exit_code(tmp_path, capsys):
    code, _ = _run(tmp_path, "o", "propagate", "--n", "abc")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["propagate", "--bogus", "1"])
    assert info.value.code == 2


def test_missing_config_file_exit_code(tmp_path):
    code, _ = _run(tmp_path, "o", "propagate", "--config", str(tmp_path / "missing.cfg"))
    assert code == 4


def test_dry_run_warns_without_computing(tmp_path, capsys):
    code, out = _run(tmp_path, "o", "propagate", "--method", "kernel", "--epsilon", "0.5", "--z", "0.01", "--dry-run")
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["validation.json"]
    report = json.loads((out / "validation.json").read_text())
    assert report["issues"][0]["severity"] == "warning"
    assert "warning" in capsys.readouterr().out


def test_validate_clean_run(tmp_path, capsys):
    code, _ = _run(tmp_path, "o", "validate", *SMALL_GRID)
    assert code == 0
    assert "no precondition violations" in capsys.readouterr().out
