import json
import subprocess
import sys

import pytest

from seajoint.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUN, EXIT_USAGE, EXIT_VALIDATION, main
from seajoint.config import from_nested, parse_config, parse_override, to_nested, to_toml
from seajoint.errors import ConfigError
from seajoint.simulator import SimConfig

FAST = ["--set", "sim.duration=2.0"]


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# Configuration

def test_empty_file_gives_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, "empty.toml", ""))
    assert cfg.sim == SimConfig()
    assert cfg == parse_config()


def test_flag_beats_file_beats_default(tmp_path):
    path = write(tmp_path, "c.toml", "[gains]\nc = 20\n")
    assert parse_config(path).sim.gains.c == 20.0
    assert parse_config(path, ["gains.c=30"]).sim.gains.c == 30.0
    assert parse_config(None, ["gains.c=30"]).sim.gains.c == 30.0


def test_dotted_keys_and_json_are_accepted(tmp_path):
    toml_cfg = parse_config(write(tmp_path, "d.toml", 'gains.rho = 6\nreference.kind = "step"\n'))
    json_cfg = parse_config(write(tmp_path, "d.json", '{"gains": {"rho": 6}, "reference": {"kind": "step"}}'))
    assert toml_cfg == json_cfg
    assert toml_cfg.sim.gains.rho == 6.0 and toml_cfg.sim.reference.kind == "step"


def test_invariant_violation_names_key_and_location(tmp_path):
    path = write(tmp_path, "bad.toml", "[plant]\nk = -1\n")
    with pytest.raises(ConfigError) as info:
        parse_config(path)
    assert info.value.key == "plant.k"
    assert info.value.location == str(path)
    with pytest.raises(ConfigError) as info:
        parse_config(None, ["plant.k=-1"])
    assert info.value.key == "plant.k" and info.value.location == "--set"


@pytest.mark.parametrize("text, key", [
    ("[gains]\nzeta = 1\n", "gains.zeta"),
    ("[rocket]\nthrust = 1\n", "rocket"),
    ("[gains]\nc = \"ten\"\n", "gains.c"),
    ("[sim]\ndecimation = 2.5\n", "sim.decimation"),
    ("[controller]\nhold_compensation = 1\n", "controller.hold_compensation"),
    ("[geometry]\nd3 = -0.05\n", "geometry.d3"),
    ("[sweep]\naxis = \"omega\"\n", "sweep.axis"),
    ("gains = 3\n", "gains"),
    ("[gains\n", "--config"),
])
def test_rejected_files(tmp_path, text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(write(tmp_path, "x.toml", text))
    assert info.value.key == key


def test_override_literals():
    assert parse_override("gains.c=20") == ("gains.c", 20)
    assert parse_override("reference.kind=step") == ("reference.kind", "step")
    assert parse_override("controller.coupling_rate=none") == ("controller.coupling_rate", None)
    assert parse_override("sim.theta_range=[-1.0, 1.0]") == ("sim.theta_range", [-1.0, 1.0])
    with pytest.raises(ConfigError):
        parse_override("gains.c")


def test_nested_and_toml_echo_round_trip(tmp_path):
    cfg = parse_config(None, ["gains.k2=15", "reference.kind=sine", "disturbance.kind=sinusoid",
                              "disturbance.amplitude=0.2", "disturbance.frequency=2"])
    assert from_nested(to_nested(cfg)) == cfg
    assert parse_config(write(tmp_path, "echo.toml", to_toml(cfg))) == cfg


# --------------------------------------------------------------------------
# Command line

def test_simulate_writes_outputs_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--out", str(out), *FAST]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "metrics.json", "trace.csv"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["tool"] == "seajoint"
    assert manifest["overrides"] == ["sim.duration=2.0"]
    assert manifest["config"]["sim"]["duration"] == 2.0
    assert "max_abs_error_after_transient" in capsys.readouterr().out


def test_manifest_reingestion_reproduces_trace(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--out", str(first), *FAST, "--set", "gains.c=12"]) == EXIT_OK
    assert main(["simulate", "--config", str(first / "manifest.json"), "--out", str(second)]) == EXIT_OK
    assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()


def test_no_writes_outside_output_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    main(["simulate", "--out", "o1", *FAST, "--plot"])
    main(["sweep", "--out", "o2", *FAST, "--axis", "rho", "--values", "3,30"])
    main(["reduce-motor"])
    main(["validate", "--quick"])
    written = sorted(str(p.relative_to(tmp_path)) for p in tmp_path.rglob("*") if p.is_file())
    assert all(name.startswith(("o1/", "o2/")) for name in written), written
    assert {"o1/trace.svg", "o2/sweep.csv", "o2/manifest.json"} <= set(written)


def test_sweep_table(tmp_path, capsys):
    out = tmp_path / "sw"
    code = main(["sweep", "--out", str(out), *FAST, "--axis", "c", "--values", "10,20", "--jobs", "2"])
    assert code == EXIT_OK
    rows = (out / "sweep.csv").read_text().splitlines()
    assert [r.split(",")[:3] for r in rows[1:]] == [["c", "10", "ok"], ["c", "20", "ok"]]
    assert json.loads((out / "manifest.json").read_text())["sweep"]["failed_runs"] == 0


def test_reduce_motor_reports_pole_and_deviation(capsys):
    assert main(["reduce-motor"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "c_v = 47.63" in text
    assert "47.535" in text and "+0.2" in text


def test_validate_quick_is_green(capsys):
    assert main(["validate", "--quick"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS ") for line in lines)


def test_validate_reports_injected_fault(capsys):
    assert main(["validate", "--quick", "--set", "sim.dt_plant=0.1", "--set", "controller.update_period=0.1"]) \
        == EXIT_VALIDATION
    assert any(line.startswith("FAIL ") for line in capsys.readouterr().out.splitlines())


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--config", "/nonexistent/cfg.toml"], EXIT_CONFIG),
    (["simulate", "--set", "plant.k=-1"], EXIT_CONFIG),
    (["simulate", "--set", "initial.phi=1.5", *FAST], EXIT_RUN),
    (["sweep", "--values", "1,x"], EXIT_CONFIG),
    (["teleport"], EXIT_USAGE),
    ([], EXIT_USAGE),
    (["simulate", "--bogus"], EXIT_USAGE),
])
def test_exit_codes(tmp_path, monkeypatch, argv, code):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_seed_is_accepted_and_changes_nothing(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--out", str(a), *FAST])
    main(["simulate", "--out", str(b), *FAST, "--seed", "7"])
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "seajoint.cli", "reduce-motor"], capture_output=True, text=True,
                          cwd=tmp_path)
    assert proc.returncode == 0 and "c_v" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "seajoint.cli", "nope"], capture_output=True, text=True,
                          cwd=tmp_path)
    assert proc.returncode == EXIT_USAGE and "usage" in proc.stderr
