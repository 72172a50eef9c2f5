import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclassical.trajectories import TrajectoryEnsemble


def small_ensemble():
    times = np.array([0.0, 0.5, 1.0])
    pos = np.array([
        [[0.0, 0.0], [0.5, 0.1], [1.0, 0.2]],
        [[1.0, 1.0], [1.2, 1.0], [1.2, 1.0]],
    ])
    vel = np.zeros_like(pos)
    return TrajectoryEnsemble(times, pos, vel, "bohm", absorbed_step=[-1, 1])


def test_shapes_and_flags():
    ens = small_ensemble()
    assert ens.n_particles == 2
    assert ens.dim == 2
    assert ens.alive().tolist() == [True, False]
    assert_allclose(ens.endpoints(), [[1.0, 0.2], [1.2, 1.0]])
    assert ens.position_dispersion().shape == (3, 2)
    assert ens.velocity_dispersion().shape == (3, 2)


def test_validation():
    times = np.array([0.0, 0.5, 1.0])
    good = np.zeros((2, 3, 1))
    with pytest.raises(ValueError):
        TrajectoryEnsemble(times, good, np.zeros((2, 2, 1)), "bohm")
    with pytest.raises(ValueError):
        TrajectoryEnsemble(np.array([0.0, 0.0, 1.0]), good, good, "bohm")
    with pytest.raises(ValueError):
        TrajectoryEnsemble(times, good, good, "quantum")
    bad = good.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        TrajectoryEnsemble(times, bad, good, "bohm")


def test_csv_round_trip(tmp_path):
    ens = small_ensemble()
    out = tmp_path / "trajectories.csv"
    ens.to_csv(out, hbar_divisor=10.0)
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 3
    assert set(rows[0]) == {"kind", "hbar_divisor", "particle", "t", "x1", "x2", "absorbed"}
    first = rows[0]
    assert first["kind"] == "bohm"
    assert float(first["hbar_divisor"]) == 10.0
    # full precision survives the text round trip
    assert float(rows[2]["x1"]) == 1.0
    # particle 1 is absorbed from step 1 onward
    flags = [int(r["absorbed"]) for r in rows if r["particle"] == "1"]
    assert flags == [0, 1, 1]


def test_csv_label_override(tmp_path):
    ens = small_ensemble()
    header, rows = ens.to_rows(label="bohm_spin")
    assert header == ["kind", "particle", "t", "x1", "x2", "absorbed"]
    assert rows[0][0] == "bohm_spin"


def test_json_document():
    doc = small_ensemble().to_json()
    assert doc["kind"] == "bohm"
    assert doc["n_particles"] == 2
    assert doc["absorbed_step"] == [-1, 1]
    assert len(doc["positions"][0]) == 3
