import csv

import numpy as np
import pytest

from halfwave import picard_iteration as pi
from halfwave import spectral_grid as sg
from halfwave import wave_reform as wr
from halfwave.cli_io.datum import DatumSpec, generate_datum
from halfwave.errors import InvalidInputError, NonContractionError

T, DT = 0.5, 1e-3
TOL_OUTER, TOL_INNER = 1e-7, 1e-8
E3 = np.array([0.0, 0.0, 1.0])[:, None]


@pytest.fixture(scope="module")
def g64():
    return sg.GridSpec.cube(1, 64)


@pytest.fixture(scope="module")
def ref_iterate(grid1, ref_datum):
    return pi.halfwave_iterate(grid1, ref_datum, T, DT, TOL_OUTER, TOL_INNER)


def _p_data(grid):
    p = np.broadcast_to(E3, (3,) + grid.shape).copy()
    return pi.WaveData(p, np.zeros_like(p))


def test_zero_data_zero_solution(g64):
    z = np.zeros((3, 64))
    traj = pi.linear_wave_solve(g64, pi.WaveData(z, z), np.zeros((11, 3, 64)), 1.0, 0.1)
    assert np.max(np.abs(traj.u)) == 0.0 and np.max(np.abs(traj.ut)) == 0.0


def test_single_mode_dalembert(g64):
    (x,) = g64.coordinates()
    u0 = 2.0 * np.cos(3 * x) * E3
    traj = pi.linear_wave_solve(g64, pi.WaveData(u0, np.zeros_like(u0)), None, 1.0, 1e-2)
    exact = 2.0 * np.cos(3 * traj.t)[:, None, None] * np.cos(3 * x) * E3
    assert np.max(np.abs(traj.u - exact)) <= 1e-12


def test_zero_mode_moves_linearly(g64):
    u0 = np.broadcast_to(E3, (3, 64)).copy()
    u1 = 0.5 * np.broadcast_to(np.array([1.0, 0.0, 0.0])[:, None], (3, 64))
    traj = pi.linear_wave_solve(g64, pi.WaveData(u0, u1), None, 1.0, 0.1)
    np.testing.assert_allclose(traj.u[-1], u0 + u1, atol=1e-14)
    np.testing.assert_allclose(traj.ut[-1], u1, atol=1e-14)


def _duhamel_error(grid, dt):
    (x,) = grid.coordinates()
    n = int(round(1.0 / dt)) + 1
    forcing = np.broadcast_to(np.cos(3 * x) * E3, (n, 3) + grid.shape)
    z = np.zeros((3,) + grid.shape)
    traj = pi.linear_wave_solve(grid, pi.WaveData(z, z), forcing, 1.0, dt)
    exact = ((1 - np.cos(3 * traj.t)) / 9.0)[:, None, None] * np.cos(3 * x) * E3
    return np.max(np.abs(traj.u - exact))


def test_duhamel_constant_forcing_order(g64):
    e = [_duhamel_error(g64, dt) for dt in (1e-2, 5e-3, 2.5e-3)]
    assert e[0] < 2e-5
    assert np.log2(e[0] / e[1]) >= 1.9 and np.log2(e[1] / e[2]) >= 1.9


def test_mode_energy_conserved(g64):
    rng = np.random.default_rng(0)
    u0, u1 = rng.standard_normal((2, 3, 64))
    traj = pi.linear_wave_solve(g64, pi.WaveData(u0, u1), None, 2.0, 1e-2)
    e = pi.mode_energy(g64, traj)
    nz = grid_nonzero(g64)
    assert np.max(np.abs(e[:, nz] - e[0, nz]) / e[0, nz]) <= 1e-12


def grid_nonzero(grid):
    return grid.kmag > 0


def test_semigroup(g64):
    rng = np.random.default_rng(1)
    u0, u1 = rng.standard_normal((2, 3, 64))
    full = pi.linear_wave_solve(g64, pi.WaveData(u0, u1), None, 1.0, 0.01)
    half = pi.linear_wave_solve(g64, pi.WaveData(u0, u1), None, 0.4, 0.01)
    rest = pi.linear_wave_solve(g64, pi.WaveData(half.u[-1], half.ut[-1]), None, 0.6, 0.01)
    assert np.max(np.abs(rest.u[-1] - full.u[-1])) <= 1e-12
    assert np.max(np.abs(rest.ut[-1] - full.ut[-1])) <= 1e-12


def test_linearity_in_data(g64):
    rng = np.random.default_rng(2)
    u0, u1 = rng.standard_normal((2, 3, 64))
    a = pi.linear_wave_solve(g64, pi.WaveData(u0, u1), None, 0.5, 0.01)
    b = pi.linear_wave_solve(g64, pi.WaveData(3 * u0, 3 * u1), None, 0.5, 0.01)
    np.testing.assert_allclose(b.u, 3 * a.u, atol=1e-12)


def test_solver_input_checks(g64):
    z = np.zeros((3, 64))
    with pytest.raises(InvalidInputError):
        pi.linear_wave_solve(g64, pi.WaveData(z, z), np.zeros((5, 3, 64)), 1.0, 0.1)
    with pytest.raises(InvalidInputError):
        pi.linear_wave_solve(g64, pi.WaveData(z, z), None, 1.0, 0.3)


def test_wavedata_validation(grid1, ref_datum):
    ref_datum.validate(grid1)
    bad = pi.WaveData(ref_datum.u0, ref_datum.u1 + 0.1 * ref_datum.u0)
    with pytest.raises(InvalidInputError):
        bad.validate(grid1)
    with pytest.raises(InvalidInputError):
        pi.WaveData(1.1 * ref_datum.u0, ref_datum.u1).validate(grid1)
    assert ref_datum.epsilon(grid1) > 0


def test_wavemap_constant_data(grid1):
    state = pi.wavemap_iterate(grid1, _p_data(grid1), T, DT, 1e-12)
    assert state.converged and state.i == 1
    assert np.max(np.abs(state.current.u - E3)) == 0.0


def test_wavemap_contraction_and_constraint(grid1, ref_datum):
    state = pi.wavemap_iterate(grid1, ref_datum, T, DT, TOL_INNER)
    assert state.converged
    assert all(r < 0.5 for r in state.ratios[1:])
    final = state.current.u[-1]
    rep = wr.check_derivation_identities(grid1, final)
    assert rep.constraint_identity < 1e-6
    assert np.max(np.abs(sg.dot(grid1, state.current.u, state.current.u) - 1)) <= 10 * TOL_INNER


def test_wavemap_large_data_not_contracting(grid1):
    data = generate_datum(DatumSpec(radius=0.3, amplitude=(50.0, 0.0)), grid1)
    with pytest.raises(NonContractionError) as info:
        pi.wavemap_iterate(grid1, data, 2.0, DT, 1e-10)
    assert info.value.level == "wavemap" and all(r >= 1 for r in info.value.ratios[-3:])


def test_halfwave_constant_data(grid1):
    state = pi.halfwave_iterate(grid1, _p_data(grid1), T, DT, 1e-12, 1e-12)
    assert state.converged
    assert np.max(np.abs(state.current.u - E3)) == 0.0
    assert set(d for d in state.diffs) == {0.0}


def test_halfwave_reference(grid1, ref_iterate):
    s = ref_iterate
    assert s.converged and not s.capped
    assert all(r < 0.5 for r in s.ratios)
    # decreasing after the first two entries
    assert all(b < a for a, b in zip(s.diffs[1:], s.diffs[2:]))
    assert s.diffs[-1] < TOL_OUTER
    x = wr.x_residual(grid1, s.current.u, s.current.ut)
    assert np.max(sg.l2_norm(grid1, x)) <= 10 * TOL_OUTER
    assert all(r.diff_norm >= 0 for r in s.log)


def test_sphere_check(grid1, ref_iterate, ref_datum):
    p = pi.sphere_propagation_check(grid1, pi.halfwave_iterate(grid1, _p_data(grid1), 0.05, DT, 1e-12, 1e-12))
    assert p.max_defect == 0.0 and p.max_residual == 0.0
    rep = pi.sphere_propagation_check(grid1, ref_iterate)
    assert rep.max_defect <= 10 * TOL_INNER
    bad = pi.WaveData(ref_datum.u0, ref_datum.u1 + 0.1 * ref_datum.u0)
    broken = pi.halfwave_iterate(grid1, bad, T, DT, TOL_OUTER, TOL_INNER, validate=False)
    assert pi.sphere_propagation_check(grid1, broken).max_defect > 1e-3


def test_box_g_identity_holds_on_iterate(grid1, ref_datum):
    bad = pi.WaveData(ref_datum.u0, ref_datum.u1 + 0.1 * ref_datum.u0)
    broken = pi.halfwave_iterate(grid1, bad, T, DT, TOL_OUTER, TOL_INNER, validate=False)
    rep = pi.sphere_propagation_check(grid1, broken)
    # g grows to O(0.1) while Box g = 2 g Q keeps holding along the iterate
    assert np.max(rep.g_sup) > 0.05
    assert rep.max_residual < 1e-3 * np.max(rep.g_sup)


def test_iteration_log(tmp_path, ref_iterate):
    path = tmp_path / "log.csv"
    pi.write_iteration_log(path, ref_iterate.log)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(pi.LOG_COLUMNS)
    assert any(r[1] == "-1" for r in rows[1:])
