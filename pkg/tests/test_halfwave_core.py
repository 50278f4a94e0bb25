import csv

import numpy as np
import pytest

from conftest import great_circle, random_sphere_field, reference_run
from halfwave import halfwave_core as hc
from halfwave import spectral_grid as sg
from halfwave.errors import DivergenceError, InvalidInputError


def test_rhs_vanishes_on_constant(grid1):
    u = np.broadcast_to(np.array([0.0, 0.6, 0.8])[:, None], (3, 128))
    assert np.max(np.abs(hc.rhs_halfwave(grid1, u))) == 0.0


def test_rhs_vanishes_on_great_circle(grid1):
    assert np.max(np.abs(hc.rhs_halfwave(grid1, great_circle(grid1)))) < 1e-13


def test_rhs_orthogonal_to_u():
    rng = np.random.default_rng(0)
    g = sg.GridSpec((2), (16, 16), (2 * np.pi, 2 * np.pi))
    u = random_sphere_field(g, rng)
    rhs = hc.rhs_halfwave(g, u, constraint_limit=None)
    assert np.max(np.abs(sg.dot(g, rhs, u))) <= 1e-12


def test_rhs_rejects_constraint_violation(grid1):
    u = great_circle(grid1) * 1.2
    u[2] = 0.3 * np.cos(3 * grid1.coordinates()[0])
    with pytest.raises(DivergenceError):
        hc.rhs_halfwave(grid1, 0.5 * u + 0.5 * np.roll(u, 7, axis=-1))


def test_energy_examples(grid1):
    p = np.broadcast_to(np.array([0.0, 0.0, 1.0])[:, None], (3, 128))
    assert hc.energy(grid1, p) == 0.0
    assert hc.energy(grid1, great_circle(grid1)) == pytest.approx(2 * np.pi, rel=1e-13)


def test_energy_quadrature_matches_parseval():
    g = sg.GridSpec((2), (16, 12), (2.0, 3.0))
    u = np.random.default_rng(1).standard_normal((3,) + g.shape)
    a, b = hc.energy(g, u), hc.energy_parseval(g, u)
    assert abs(a - b) <= 1e-10 * b


def test_zero_steps_returns_initial(grid1, ref_datum):
    state = hc.State(0.0, ref_datum.u0)
    traj = hc.evolve(grid1, state, hc.EvolutionParams(dt=1e-3, steps=0))
    assert len(traj) == 1
    assert np.array_equal(traj.u[0], ref_datum.u0)


def test_great_circle_static(grid1):
    u0 = great_circle(grid1)
    traj = hc.evolve(grid1, hc.State(0.0, u0), hc.EvolutionParams(dt=1e-3, steps=1000, record_every=1000))
    assert np.max(np.abs(traj.u[-1] - u0)) <= 1e-9


def test_rk4_self_convergence(grid1, ref_datum):
    T = 0.25
    ref = reference_run(grid1, ref_datum, 2.5e-3 / 8, T, record_every=8 * 100)
    e = []
    for dt in (2.5e-3, 1.25e-3):
        run = reference_run(grid1, ref_datum, dt, T, record_every=int(round(T / dt)))
        e.append(np.max(np.abs(run.u[-1] - ref.u[-1])))
    order = np.log2(e[0] / e[1])
    assert order >= 3.7


def test_time_reversal(grid1, ref_datum):
    p = hc.EvolutionParams(dt=1e-3, steps=500, record_every=500)
    fwd = hc.evolve(grid1, hc.State(0.0, ref_datum.u0), p)
    back = hc.evolve(grid1, fwd.meta["final_state"], p, reverse=True)
    assert np.max(np.abs(back.u[-1] - ref_datum.u0)) < 1e-12


def test_constraint_drift_small_without_projection(ref_traj, grid1):
    assert np.max(hc.sphere_defect(grid1, ref_traj.u)) < 1e-12


def test_projection_keeps_unit_modulus(grid1, ref_datum):
    p = hc.EvolutionParams(dt=1e-3, steps=50, project_each_step=True, record_every=50)
    traj = hc.evolve(grid1, hc.State(0.0, ref_datum.u0), p)
    assert np.max(hc.sphere_defect(grid1, traj.u)) < 1e-15


def test_divergence_on_nan(grid1, ref_datum):
    u = ref_datum.u0.copy()
    u[0, 5] = np.nan
    with pytest.raises((DivergenceError, InvalidInputError)):
        hc.step(grid1, hc.State(0.0, u), hc.EvolutionParams(dt=1e-3, steps=1))


def test_divergence_on_modulus(grid1, ref_datum):
    params = hc.EvolutionParams(dt=1e-3, steps=1, modulus_bounds=(0.99, 1.01), constraint_limit=None)
    with pytest.raises(DivergenceError):
        hc.step(grid1, hc.State(0.0, 1.05 * ref_datum.u0), params)


def test_params_validation():
    with pytest.raises(InvalidInputError):
        hc.EvolutionParams(dt=0.0, steps=1)
    with pytest.raises(InvalidInputError):
        hc.EvolutionParams(dt=1e-3, steps=1, record_every=0)


def test_diagnostics_csv(tmp_path, grid1, ref_traj):
    diag = hc.diagnostics(grid1, ref_traj)
    path = tmp_path / "d.csv"
    hc.write_diagnostics_csv(path, diag)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(hc.DIAGNOSTIC_COLUMNS)
    assert len(rows) == len(ref_traj) + 1
    assert float(rows[5][1]) == diag["energy"][4]
