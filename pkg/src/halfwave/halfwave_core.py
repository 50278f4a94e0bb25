"""First-order half-wave map flow ``u_t = u x (-Laplacian)^(1/2) u``."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import spectral_grid as sg
from .errors import DivergenceError, InvalidInputError

CONSTRAINT_LIMIT = 1e-3
MODULUS_BOUNDS = (0.9, 1.1)


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray


@dataclass(frozen=True)
class EvolutionParams:
    dt: float
    steps: int
    project_each_step: bool = False
    record_every: int = 1
    dealias: bool = False
    constraint_limit: float | None = CONSTRAINT_LIMIT
    modulus_bounds: tuple[float, float] = MODULUS_BOUNDS

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        if self.steps < 0:
            raise InvalidInputError(f"steps must be >= 0, got {self.steps}")
        if self.record_every < 1:
            raise InvalidInputError(f"record_every must be >= 1, got {self.record_every}")

    @property
    def total_time(self):
        return self.dt * self.steps


def stable_dt(grid, safety=0.5):
    """Guideline step ``safety / max|xi|`` for the explicit scheme."""
    return safety / float(grid.kmag.max())


def sphere_defect(grid, u):
    """``max_x | |u(x)|^2 - 1 |`` (per leading index)."""
    g = np.abs(sg.dot(grid, u, u) - 1.0)
    return g.max(axis=grid.axes)


def project_to_sphere(grid, u):
    return u / np.expand_dims(sg.pointwise_norm(grid, u), sg.component_axis(grid))


def rhs_halfwave(grid, u, constraint_limit=CONSTRAINT_LIMIT, dealias=False):
    """``u x (-Laplacian)^(1/2) u`` evaluated pointwise.

    Raises :class:`DivergenceError` when ``u`` is further than
    ``constraint_limit`` from the sphere; pass ``None`` to skip the check.
    """
    u = sg.check_field(grid, u, "u")
    if constraint_limit is not None:
        worst = float(np.max(sphere_defect(grid, u)))
        if worst > constraint_limit:
            raise DivergenceError(f"| |u|^2 - 1 | = {worst:.3g} exceeds {constraint_limit:g}")
    lam = sg.frac_laplacian(grid, u, 0.5)
    out = sg.cross(grid, u, lam)
    if dealias:
        out = sg.dealias(grid, out)
    return out


def energy(grid, u):
    """``integral |(-Laplacian)^(1/4) u|^2 dx`` by lattice quadrature."""
    q = sg.frac_laplacian(grid, u, 0.25)
    return grid.cell_volume * (q * q).sum(axis=(sg.component_axis(grid),) + grid.axes)


def energy_parseval(grid, u):
    """The same energy summed on the Fourier side: ``sum_{xi != 0} |xi| |uhat|^2``."""
    return sg.sobolev_seminorm(grid, u, 0.5) ** 2


def _check_state(grid, u, t, params):
    if not np.all(np.isfinite(u)):
        raise DivergenceError("non-finite samples", t)
    mod = sg.pointwise_norm(grid, u)
    lo, hi = params.modulus_bounds
    if mod.min() < lo or mod.max() > hi:
        raise DivergenceError(f"|u| left [{lo}, {hi}] (range {mod.min():.4g}..{mod.max():.4g})", t)


def step(grid, state, params, reverse=False):
    """One classical RK4 step; ``reverse`` integrates the time-reversed flow."""
    h = -params.dt if reverse else params.dt

    def f(v):
        return rhs_halfwave(grid, v, params.constraint_limit, params.dealias)

    u = state.u
    k1 = f(u)
    k2 = f(u + 0.5 * h * k1)
    k3 = f(u + 0.5 * h * k2)
    k4 = f(u + h * k3)
    u_new = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    t_new = state.t + params.dt
    _check_state(grid, u_new, t_new, params)
    if params.project_each_step:
        u_new = project_to_sphere(grid, u_new)
    return State(t_new, u_new)


def evolve(grid, state, params, reverse=False):
    """Fold :func:`step` over ``params.steps`` and record every ``record_every``-th state.

    The recorded ``u_t`` is recomputed from ``u`` (with the flow's sign).  The
    returned trajectory always starts with the initial state; the final state
    is recorded whenever ``steps`` is a multiple of ``record_every``.
    """
    u0 = sg.check_field(grid, state.u, "u")
    sign = -1.0 if reverse else 1.0
    ts, us = [state.t], [u0]
    current = State(state.t, u0)
    for n in range(1, params.steps + 1):
        current = step(grid, current, params, reverse=reverse)
        if n % params.record_every == 0:
            ts.append(state.t + n * params.dt)
            us.append(current.u)
    u = np.stack(us)
    ut = sign * rhs_halfwave(grid, u, constraint_limit=None, dealias=params.dealias)
    traj = sg.Trajectory(grid, np.asarray(ts), u, ut, meta={"source": "halfwave_core.evolve"})
    traj.meta["final_state"] = current
    return traj


def diagnostics(grid, traj):
    """Per-frame conserved-quantity and constraint diagnostics as a dict of arrays."""
    u = traj.u
    rhs = rhs_halfwave(grid, u, constraint_limit=None)
    return {
        "t": np.asarray(traj.t, dtype=float),
        "energy": energy(grid, u),
        "max_constraint_violation": sphere_defect(grid, u),
        "max_rhs_dot_u": np.abs(sg.dot(grid, rhs, u)).max(axis=grid.axes),
        "l2_change_from_initial": sg.l2_norm(grid, u - u[0]),
    }


DIAGNOSTIC_COLUMNS = ("t", "energy", "max_constraint_violation", "max_rhs_dot_u", "l2_change_from_initial")


def write_diagnostics_csv(path, diag):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTIC_COLUMNS)
        for row in zip(*(diag[c] for c in DIAGNOSTIC_COLUMNS)):
            w.writerow([f"{float(v):.17g}" for v in row])
