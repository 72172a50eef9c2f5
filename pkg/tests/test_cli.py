import json
import subprocess
import sys

import pytest

from semiclassical.cli import main

TINY = """\
[units]
system = natural

[scenario]
name = tiny
kind = statistical
seed = 9
hbar_divisors = 1, 10
t_final = 0.3
n_outputs = 3
n_particles = 8

[grid]
extents = 30.0
points = 128

[potential]
kind = free
mass = 1.0

[initial]
type = gaussian
center = 0.0
sigma = 1.0
velocity = 0.0
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return str(p)


def test_validate_ok(tiny_cfg, capsys):
    assert main(["validate", tiny_cfg]) == 0
    out = capsys.readouterr().out
    assert "ok: configuration valid" in out
    assert "divisor 1" in out and "divisor 10" in out
    assert "grid 128" in out


def test_validate_reports_missing_seed(tiny_cfg, tmp_path, capsys):
    bad = tmp_path / "noseed.cfg"
    bad.write_text(TINY.replace("seed = 9\n", ""))
    assert main(["validate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "configuration error [scenario.seed]" in err


def test_validate_suggests_nearest_key(tiny_cfg, capsys):
    assert main(["validate", tiny_cfg, "--set", "initial.sigm=2.0"]) == 2
    err = capsys.readouterr().err
    assert "sigma" in err and "configuration error" in err


def test_missing_file_is_a_config_error(capsys):
    assert main(["validate", "/nonexistent/path.cfg"]) == 2
    assert "cannot read scenario file" in capsys.readouterr().err


def test_malformed_set_rejected(tiny_cfg, capsys):
    assert main(["validate", tiny_cfg, "--set", "nodots"]) == 2
    assert "--set expects" in capsys.readouterr().err
    assert main(["validate", tiny_cfg, "--set", "initial=2"]) == 2


def test_run_writes_run_dir(tiny_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", tiny_cfg, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert f"wrote" in stdout
    for name in ("scenario.echo", "metrics.json", "trajectories.csv",
                 "manifest.json"):
        assert (out / name).is_file()
    assert any((out / "fields").iterdir())
    metrics = json.loads((out / "metrics.json").read_text())
    assert [r["divisor"] for r in metrics["rungs"]] == [1.0, 10.0]


def test_set_and_seed_overrides_reach_the_run(tiny_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", tiny_cfg, "--out", str(out), "--jobs", "2",
                 "--set", "scenario.n_particles=4", "--seed", "123"])
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert len(metrics["rungs"][0]["deviation_per_particle"]) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 123
    assert metrics["scenario"]["seed"] == 123


def test_unwritable_out_is_a_runtime_error(tiny_cfg, tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", tiny_cfg, "--out", str(blocker / "sub")]) == 3
    assert "runtime error" in capsys.readouterr().err


def test_module_entry_point(tiny_cfg):
    proc = subprocess.run([sys.executable, "-m", "semiclassical.cli",
                           "validate", tiny_cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ok: configuration valid" in proc.stdout
