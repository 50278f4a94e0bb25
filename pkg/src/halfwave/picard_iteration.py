"""Spectral linear wave solver and the fixed-point schemes built on it.

Three levels share :func:`linear_wave_solve`:

* :func:`wavemap_iterate` solves the wave-maps system
  ``Box u = u (grad u . grad u - u_t . u_t)`` by Picard iteration from the
  free wave;
* :func:`halfwave_iterate` runs the outer loop over ``j`` with lines two and
  three of the wave form frozen at ``u^(j-1)``, and an inner loop over ``i``
  for the implicit projector base and wave-maps self-term;
* :func:`sphere_propagation_check` measures how well ``|u|^2 = 1`` propagates.

The contraction metric is a discrete proxy for the solution norm,
``sup_t (||du||_{H^(n/2)} + ||du_t||_{H^(n/2-1)} + |mean du| + |mean du_t|)``;
the mean terms keep the zero mode (annihilated by the seminorms) visible.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import spectral_grid as sg
from .errors import InvalidInputError, NonContractionError
from .halfwave_core import rhs_halfwave
from .wave_reform import commutator_term, half_laplacian, null_form, projector_perp, x_residual

WAVEMAP_CAP = 25
INNER_CAP = 25
OUTER_CAP = 15
STALL_COUNT = 3


@dataclass
class WaveData:
    """Initial data ``u[0] = (u0, u1)`` for the second-order problem."""

    u0: np.ndarray
    u1: np.ndarray

    def validate(self, grid, sphere_tol=1e-12, tangency_tol=1e-12):
        u0 = sg.check_field(grid, self.u0, "u0")
        u1 = sg.check_field(grid, self.u1, "u1")
        if u0.shape != (3,) + grid.shape or u1.shape != u0.shape:
            raise InvalidInputError(f"data must have shape {(3,) + grid.shape}")
        defect = float(np.max(np.abs(sg.dot(grid, u0, u0) - 1.0)))
        if defect > sphere_tol:
            raise InvalidInputError(f"| |u0|^2 - 1 | reaches {defect:.3g}")
        tang = float(np.max(np.abs(sg.dot(grid, u0, u1))))
        if tang > tangency_tol:
            raise InvalidInputError(f"|u0 . u1| reaches {tang:.3g}")
        return self

    def epsilon(self, grid, partition=None):
        """Besov size ``||u0||_{B^(n/2)} + ||u1||_{B^(n/2-1)}`` of the data."""
        from .lp_analysis.norms import besov_data_norm

        return besov_data_norm(grid, self.u0, self.u1, partition)


def compatible_data(grid, u0):
    """``(u0, u0 x L u0)``, the data that the half-wave flow produces."""
    return WaveData(u0, rhs_halfwave(grid, u0, constraint_limit=None))


# linear solver


def _nodes(T, dt):
    if dt <= 0 or T < 0:
        raise InvalidInputError(f"need T >= 0 and dt > 0, got T={T}, dt={dt}")
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise InvalidInputError(f"T={T} is not a multiple of dt={dt}")
    return steps, np.arange(steps + 1) * dt


def linear_wave_solve(grid, data, forcing=None, T=1.0, dt=1e-3):
    """Solve ``(d_t^2 - Laplacian) u = F`` with ``u[0] = data`` on the nodes ``t_m = m dt``.

    Each mode ``xi != 0`` is propagated exactly by ``cos(|xi| t)`` and
    ``sin(|xi| t)/|xi|``, the zero mode by ``u + t u_t``.  The Duhamel integral
    over each interval uses the trapezoid rule against the propagator kernel,
    so forced solutions are second order in ``dt``.  ``forcing`` has shape
    ``(steps + 1, C, *points)`` or is ``None``.
    """
    steps, t = _nodes(T, dt)
    u0 = sg.check_field(grid, data.u0, "u0")
    u1 = sg.check_field(grid, data.u1, "u1")
    omega = grid.kmag
    c = np.cos(omega * dt)
    s = np.sin(omega * dt)
    s_over = np.where(omega > 0, s / np.where(omega > 0, omega, 1.0), dt)
    ws = omega * s
    fhat = None
    if forcing is not None:
        forcing = np.asarray(forcing, dtype=float)
        if forcing.shape != (steps + 1,) + u0.shape:
            raise InvalidInputError(f"forcing must have shape {(steps + 1,) + u0.shape}, got {forcing.shape}")
        fhat = sg.fft(grid, forcing)
    a = sg.fft(grid, u0)
    b = sg.fft(grid, u1)
    ah = np.empty((steps + 1,) + a.shape, dtype=complex)
    bh = np.empty_like(ah)
    ah[0], bh[0] = a, b
    half = 0.5 * dt
    for m in range(steps):
        a_new = c * a + s_over * b
        b_new = -ws * a + c * b
        if fhat is not None:
            a_new = a_new + half * s_over * fhat[m]
            b_new = b_new + half * (c * fhat[m] + fhat[m + 1])
        a, b = a_new, b_new
        ah[m + 1], bh[m + 1] = a, b
    u = sg.ifft(grid, ah)
    ut = sg.ifft(grid, bh)
    u[0], ut[0] = u0, u1
    return sg.Trajectory(grid, t, u, ut, meta={"source": "picard_iteration.linear_wave_solve"})


def mode_energy(grid, traj):
    """Per-mode ``|u_t^|^2 + |xi|^2 |u^|^2`` summed over components: shape ``(frames, *points)``."""
    a = sg.fft(grid, traj.u)
    b = sg.fft(grid, traj.ut)
    return (np.abs(b) ** 2 + grid.kmag**2 * np.abs(a) ** 2).sum(axis=sg.component_axis(grid))


# metric and nonlinearities


def difference_norm(grid, a, b):
    """Contraction metric between two trajectories on the same nodes."""
    n = grid.dim
    du = a.u - b.u
    dut = a.ut - b.ut
    per = (sg.sobolev_seminorm(grid, du, n / 2.0) + sg.sobolev_seminorm(grid, dut, n / 2.0 - 1.0)
           + _mean_size(grid, du) + _mean_size(grid, dut))
    return float(np.max(per))


def _mean_size(grid, f):
    m = f.mean(axis=grid.axes)
    return np.sqrt((m * m).sum(axis=-1))


def constant_trajectory(grid, p, t):
    p = np.asarray(p, dtype=float).reshape((3,) + (1,) * grid.dim)
    u = np.broadcast_to(p, (len(t), 3) + grid.shape).copy()
    return sg.Trajectory(grid, np.asarray(t), u, np.zeros_like(u), meta={"source": "constant"})


def _expand(grid, scalar):
    return np.expand_dims(scalar, sg.component_axis(grid))


def wavemap_nonlinearity(grid, u, ut, dealias=True):
    out = u * _expand(grid, null_form(grid, u, ut))
    return sg.dealias(grid, out) if dealias else out


def frozen_terms(grid, w):
    """Unprojected lines two and three of the wave form at ``w``: ``(L w)(w . L w) + commutator``."""
    lam = half_laplacian(grid, w)
    return lam * _expand(grid, sg.dot(grid, w, lam)) + commutator_term(grid, w, lam)


def sub_forcing(grid, base, frozen, dealias=True):
    """Right side of one inner sweep: wave-maps term of ``base`` plus ``Pi_{base perp}`` of ``frozen``."""
    out = base.u * _expand(grid, null_form(grid, base.u, base.ut)) + projector_perp(grid, base.u, frozen)
    return sg.dealias(grid, out) if dealias else out


# fixed-point loops


@dataclass
class LogRow:
    j: int
    i: int
    diff_norm: float
    ratio: float
    sphere_defect: float
    x_residual: float


def _defects(grid, traj):
    sd = float(np.max(np.abs(sg.dot(grid, traj.u, traj.u) - 1.0)))
    xr = float(np.max(sg.l2_norm(grid, x_residual(grid, traj.u, traj.ut))))
    return sd, xr


def _ratio(diffs):
    if len(diffs) < 2:
        return float("nan")
    prev = diffs[-2]
    return diffs[-1] / prev if prev > 0 else (0.0 if diffs[-1] == 0 else float("inf"))


def _stalled(ratios):
    tail = ratios[-STALL_COUNT:]
    return len(tail) == STALL_COUNT and all(r >= 1.0 for r in tail)


@dataclass
class IterationState:
    """Progress of a fixed-point loop.

    ``diffs`` are successive-difference norms (outer level for
    :func:`halfwave_iterate`); ``inner_diffs`` maps ``j`` to its inner
    history.  ``log`` holds one :class:`LogRow` per sweep; outer rows carry
    ``i = -1``.
    """

    j: int
    i: int
    current: sg.Trajectory
    diffs: list = field(default_factory=list)
    converged: bool = False
    inner_diffs: dict = field(default_factory=dict)
    log: list = field(default_factory=list)
    capped: bool = False

    @property
    def ratios(self):
        return [self.diffs[k] / self.diffs[k - 1] if self.diffs[k - 1] > 0 else float("nan")
                for k in range(1, len(self.diffs))]


def wavemap_iterate(grid, data, T, dt, tol, dealias=True, cap=WAVEMAP_CAP, j=1, diagnostics=True):
    """Picard iteration for the wave-maps system, started from the free wave.

    Returns an :class:`IterationState` whose ``diffs`` are the successive
    differences; raises :class:`NonContractionError` when the difference
    ratio stays ``>= 1`` for three consecutive sweeps.
    """
    current = linear_wave_solve(grid, data, None, T, dt)
    state = IterationState(j=j, i=0, current=current)
    ratios = []
    for i in range(1, cap + 1):
        forcing = wavemap_nonlinearity(grid, current.u, current.ut, dealias)
        nxt = linear_wave_solve(grid, data, forcing, T, dt)
        d = difference_norm(grid, nxt, current)
        state.diffs.append(d)
        r = _ratio(state.diffs)
        if not np.isnan(r):
            ratios.append(r)
        sd, xr = _defects(grid, nxt) if diagnostics else (float("nan"), float("nan"))
        state.log.append(LogRow(j, i, d, r, sd, xr))
        current = nxt
        state.i, state.current = i, current
        if d < tol:
            state.converged = True
            break
        if _stalled(ratios):
            raise NonContractionError("wavemap", ratios, state)
    else:
        state.capped = True
    current.meta["source"] = "picard_iteration.wavemap_iterate"
    return state


def halfwave_iterate(grid, data, T, dt, tol_outer, tol_inner, dealias=True,
                     outer_cap=OUTER_CAP, inner_cap=INNER_CAP, wavemap_tol=None, validate=True):
    """Outer/inner iteration for the wave form of the half-wave map.

    ``u^(0) = p`` (the lattice mean direction of ``u0`` normalised) and
    ``u^(1)`` is the wave map with the same data.  For ``j >= 2`` the frozen
    lines are evaluated on ``u^(j-1)`` while the projector base and the
    wave-maps self-term use ``u^(j,i-1)``, starting from the free wave
    ``u^(j,0)``.  ``diffs[0]`` is ``||u^(1) - u^(0)||``.  ``validate=False``
    admits deliberately incompatible data for sensitivity runs.
    """
    if validate:
        data.validate(grid)
    wavemap_tol = tol_inner if wavemap_tol is None else wavemap_tol
    steps, t = _nodes(T, dt)
    mean = sg.lattice_mean(grid, data.u0).reshape(3)
    p = mean / np.linalg.norm(mean)
    prev = constant_trajectory(grid, p, t)
    wm = wavemap_iterate(grid, data, T, dt, wavemap_tol, dealias)
    state = IterationState(j=1, i=wm.i, current=wm.current, log=list(wm.log))
    state.inner_diffs[1] = list(wm.diffs)
    free = linear_wave_solve(grid, data, None, T, dt)
    outer_ratios = []
    current = wm.current
    for j in range(1, outer_cap + 1):
        if j > 1:
            frozen = frozen_terms(grid, prev.u)
            inner = free
            inner_hist, inner_ratios = [], []
            for i in range(1, inner_cap + 1):
                nxt = linear_wave_solve(grid, data, sub_forcing(grid, inner, frozen, dealias), T, dt)
                d = difference_norm(grid, nxt, inner)
                inner_hist.append(d)
                r = _ratio(inner_hist)
                if not np.isnan(r):
                    inner_ratios.append(r)
                sd, xr = _defects(grid, nxt)
                state.log.append(LogRow(j, i, d, r, sd, xr))
                inner = nxt
                state.i = i
                if d < tol_inner:
                    break
                if _stalled(inner_ratios):
                    state.current = inner
                    raise NonContractionError("inner", inner_ratios, state)
            else:
                state.capped = True
            state.inner_diffs[j] = inner_hist
            current = inner
        d = difference_norm(grid, current, prev)
        state.diffs.append(d)
        r = _ratio(state.diffs)
        if not np.isnan(r):
            outer_ratios.append(r)
        sd, xr = _defects(grid, current)
        state.log.append(LogRow(j, -1, d, r, sd, xr))
        state.j, state.current = j, current
        if j > 1 and d < tol_outer:
            state.converged = True
            break
        if _stalled(outer_ratios):
            raise NonContractionError("outer", outer_ratios, state)
        prev = current
    else:
        state.capped = True
    state.current.meta["source"] = "picard_iteration.halfwave_iterate"
    return state


# sphere propagation


@dataclass
class SphereReport:
    t: np.ndarray
    g_sup: np.ndarray
    residual: np.ndarray

    @property
    def max_defect(self):
        return float(np.max(self.g_sup))

    @property
    def max_residual(self):
        return float(np.nanmax(self.residual)) if np.any(np.isfinite(self.residual)) else 0.0


def sphere_propagation_check(grid, state_or_traj):
    """``g = |u|^2 - 1`` along the iterate and the residual of ``Box g = 2 g (grad u . grad u - u_t . u_t)``.

    ``d_t^2 g`` uses centred differences of the frames (NaN at the end frames);
    the spatial part is spectral.
    """
    traj = getattr(state_or_traj, "current", state_or_traj)
    u, ut = traj.u, traj.ut
    g = sg.dot(grid, u, u) - 1.0
    g_sup = np.max(np.abs(g), axis=grid.axes)
    res = np.full(len(traj), np.nan)
    if len(traj) >= 3:
        h = traj.frame_dt
        gtt = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / h**2
        inner = g[1:-1]
        lap = sg.laplacian(grid, inner)
        q = null_form(grid, u[1:-1], ut[1:-1])
        r = gtt - lap - 2.0 * inner * q
        res[1:-1] = np.sqrt(grid.cell_volume * (r * r).sum(axis=grid.axes))
    return SphereReport(np.asarray(traj.t, dtype=float), g_sup, res)


LOG_COLUMNS = ("j", "i", "diff_norm", "ratio", "sphere_defect", "x_residual")


def write_iteration_log(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in rows:
            w.writerow([r.j, r.i] + [f"{float(v):.17g}" for v in (r.diff_norm, r.ratio, r.sphere_defect, r.x_residual)])
