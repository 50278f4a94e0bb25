"""Ensemble probe of the linear energy inequality ``||u||_S <~ ||u[0]|| + ||Box u||_N``."""
from __future__ import annotations

import csv
from dataclasses import dataclass

from .norms import data_norm, n_norm, s_norm


@dataclass
class EnergyProbeRow:
    seed: int
    lhs: float
    rhs: float

    @property
    def ratio(self):
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else float("inf")
        return self.lhs / self.rhs


def energy_inequality_probe(grid, samples, pairs=None, partition=None):
    """Both sides for each ``(seed, trajectory, forcing)`` sample.

    ``forcing`` holds ``Box u`` at the trajectory frames (or ``None`` for a
    free wave).  No pass/fail is attached: the implied constant is unknown.
    """
    rows = []
    for seed, traj, forcing in samples:
        lhs = s_norm(grid, traj, pairs, partition).total
        rhs = data_norm(grid, traj.u[0], traj.ut[0])
        if forcing is not None:
            rhs += n_norm(grid, forcing, traj.frame_dt, partition).total
        rows.append(EnergyProbeRow(seed, lhs, rhs))
    return rows


def write_energy_probe_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "lhs", "rhs", "ratio"])
        for r in rows:
            w.writerow([r.seed, f"{r.lhs:.17g}", f"{r.rhs:.17g}", f"{r.ratio:.17g}"])
