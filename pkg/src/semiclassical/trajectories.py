"""Trajectory bundles shared by the classical and Bohmian integrators."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

KINDS = ("bohm", "bohm_spin", "classical")


@dataclass(eq=False)
class TrajectoryEnsemble:
    """Positions/velocities of N particles sampled at common times.

    ``positions`` and ``velocities`` have shape (N, T, dim). ``absorbed_step``
    holds, per particle, the first time index at which it entered a
    below-floor or masked region (-1 if it never did); from that index on the
    particle's position is frozen.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    kind: str
    absorbed_step: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        n, t, _ = self.positions.shape
        if t != self.times.size or self.velocities.shape != self.positions.shape:
            raise ValueError("positions/velocities/times shapes disagree")
        if self.absorbed_step is None:
            self.absorbed_step = np.full(n, -1, dtype=int)
        self.absorbed_step = np.asarray(self.absorbed_step, dtype=int)
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[2]

    def alive(self) -> np.ndarray:
        return self.absorbed_step < 0

    def endpoints(self) -> np.ndarray:
        return self.positions[:, -1, :]

    def position_dispersion(self) -> np.ndarray:
        """Per-time std of positions over particles, shape (T, dim)."""
        return self.positions.std(axis=0)

    def velocity_dispersion(self) -> np.ndarray:
        return self.velocities.std(axis=0)

    def to_rows(self, label=None, hbar_divisor=None):
        """Flatten to (header, rows) for CSV export; full double precision."""
        header = ["kind", "particle", "t"]
        if hbar_divisor is not None:
            header.insert(1, "hbar_divisor")
        header += [f"x{a + 1}" for a in range(self.dim)]
        header.append("absorbed")
        kind = label or self.kind
        rows = []
        for p in range(self.n_particles):
            ab = self.absorbed_step[p]
            for i, t in enumerate(self.times):
                row = [kind, p, repr(float(t))]
                if hbar_divisor is not None:
                    row.insert(1, repr(float(hbar_divisor)))
                row += [repr(float(c)) for c in self.positions[p, i]]
                row.append(1 if (0 <= ab <= i) else 0)
                rows.append(row)
        return header, rows

    def to_csv(self, path, label=None, hbar_divisor=None):
        header, rows = self.to_rows(label=label, hbar_divisor=hbar_divisor)
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(str(c) for c in row) + "\n")

    def to_json(self, path=None):
        doc = {
            "kind": self.kind,
            "n_particles": int(self.n_particles),
            "dim": int(self.dim),
            "times": self.times.tolist(),
            "positions": self.positions.tolist(),
            "velocities": self.velocities.tolist(),
            "absorbed_step": self.absorbed_step.tolist(),
        }
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True)
        return doc
