import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_sphere_field
from halfwave import lp_analysis as lp
from halfwave import picard_iteration as pi
from halfwave import spectral_grid as sg
from halfwave.errors import BudgetError, InsufficientDataError, InvalidInputError
from halfwave.lp_analysis.partition import plateau, smooth_step


@pytest.fixture(scope="module")
def g64():
    return sg.GridSpec.cube(1, 64)


# partition


def test_chi_shape():
    x = np.linspace(0.01, 4.0, 4001)
    c = lp.chi(x)
    assert np.all(c >= 0)
    assert np.all(c[(x <= 0.5) | (x >= 2.0)] == 0)
    assert lp.chi(np.array([1.0]))[0] == 1.0
    assert smooth_step(np.array([0.0]))[0] == 0.0 and smooth_step(np.array([1.0]))[0] == 1.0
    assert plateau(np.array([0.5]))[0] == 1.0


def test_partition_of_unity_continuum():
    part = lp.DyadicPartition(-3, 8)
    r = np.geomspace(2.0**-3, 2.0**8, 5001)
    assert np.max(np.abs(part.coverage(r) - 1.0)) <= 1e-12


def test_lp_reconstruction(g64):
    f = np.random.default_rng(0).standard_normal((3, 64))
    recon = sum(lp.lp_bands(g64, f).values())
    assert np.max(np.abs(recon - (f - sg.lattice_mean(g64, f)))) <= 1e-12


def test_lp_single_mode_unchanged(g64):
    (x,) = g64.coordinates()
    f = np.cos(8 * x)
    np.testing.assert_allclose(lp.lp_project(g64, f, 3), f, atol=1e-14)


def test_lp_disjoint_bands(g64):
    f = np.random.default_rng(1).standard_normal(64)
    for k in range(0, 6):
        for k2 in range(0, 6):
            if abs(k - k2) >= 2:
                assert np.max(np.abs(lp.lp_project(g64, lp.lp_project(g64, f, k), k2))) < 1e-15


def test_lp_band_range_checked(g64):
    with pytest.raises(InvalidInputError):
        lp.lp_project(g64, np.zeros(64), 40)


def test_almost_orthogonality():
    g = sg.GridSpec((2), (32, 32), (2 * np.pi, 2 * np.pi))
    for seed in range(5):
        f = np.random.default_rng(seed).standard_normal((3,) + g.shape)
        f0 = f - sg.lattice_mean(g, f)
        total = sg.l2_norm(g, f0) ** 2
        bands = sum(sg.l2_norm(g, b) ** 2 for b in lp.lp_bands(g, f).values())
        assert total / 3 <= bands <= 3 * total


# besov and Strichartz


def test_besov_examples(g64):
    (x,) = g64.coordinates()
    assert lp.besov_norm(g64, np.zeros(64), 0.5) == 0.0
    f = 0.7 * np.cos(x)
    assert lp.besov_norm(g64, f, 0.5) == pytest.approx(0.7 * math.sqrt(2 * math.pi) / math.sqrt(2), rel=1e-12)
    h = np.random.default_rng(2).standard_normal(64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert lp.besov_norm(g64, -3 * h, 0.5) == pytest.approx(3 * lp.besov_norm(g64, h, 0.5), rel=1e-14)


def test_besov_tail_warning(g64):
    part = lp.DyadicPartition(0, 2)
    with pytest.warns(UserWarning):
        lp.besov_norm(g64, np.random.default_rng(3).standard_normal(64), 0.5, part)


def test_admissible_pairs():
    for n in range(2, 8):
        assert lp.is_admissible(math.inf, 2, n)
        assert lp.strichartz_weight(math.inf, 2, n) == n / 2 - 1
    assert not lp.is_admissible(2, 2, 3)
    assert lp.default_pairs(1) == [(math.inf, 2.0)]
    pairs5 = lp.default_pairs(5)
    assert (2.0, 4.0) in pairs5 and (4.0, pytest.approx(8 / 3)) in pairs5
    for p, q in pairs5:
        assert lp.is_admissible(p, q, 5)


def test_strichartz_rejects_bad_pair(grid1, ref_traj):
    with pytest.raises(InvalidInputError):
        lp.strichartz_norm(grid1, ref_traj, 1.5, 2)
    with pytest.raises(InvalidInputError):
        lp.strichartz_norm(grid1, ref_traj, 4, 4)


def test_strichartz_component_below_s_norm(grid1, ref_traj):
    s = lp.s_norm(grid1, ref_traj)
    for p, q in lp.default_pairs(1):
        assert lp.strichartz_norm(grid1, ref_traj, p, q).total <= s.total
    assert s.total == pytest.approx(sum(s.bands["s_k"].values()), rel=1e-14)
    assert "n>=5" in s.notes["dimension"]


def test_s_norm_homogeneous(grid1, ref_traj):
    scaled = sg.Trajectory(grid1, ref_traj.t, 2.0 * ref_traj.u, 2.0 * ref_traj.ut)
    assert lp.s_norm(grid1, scaled).total == pytest.approx(2.0 * lp.s_norm(grid1, ref_traj).total, rel=1e-12)


# modulation


def _free_wave(grid, xi0, frames, dt):
    (x,) = grid.coordinates()
    t = np.arange(frames) * dt
    return np.cos(xi0 * t)[:, None] * np.cos(xi0 * x)[None]


def test_modulation_reconstruction(g64):
    f = np.random.default_rng(4).standard_normal((32, 3, 64))
    sts = lp.space_time_transform(g64, f, 0.05)
    total = sum(b.coeffs for b in lp.modulation_bands(sts).values()) + lp.cone_part(sts)
    assert np.max(np.abs(total - sts.coeffs)) <= 1e-10 * np.max(np.abs(sts.coeffs))
    back = sts.to_physical(total)
    assert np.max(np.abs(back - lp.windowed_frames(sts, f))) <= 1e-10


def test_windowed_parseval(g64):
    f = np.random.default_rng(5).standard_normal((16, 3, 64))
    dt = 0.1
    sts = lp.space_time_transform(g64, f, dt)
    direct = math.sqrt(dt * g64.cell_volume * float((lp.windowed_frames(sts, f) ** 2).sum()))
    assert sts.l2_norm() == pytest.approx(direct, rel=1e-10)
    assert np.mean(lp.hann_window(64) ** 2) == pytest.approx(1.0, rel=1e-14)


def test_min_frames(g64):
    with pytest.raises(InsufficientDataError):
        lp.space_time_transform(g64, np.zeros((7, 3, 64)), 0.1)


def test_static_field_modulation_peak():
    g = sg.GridSpec.cube(1, 128)
    (x,) = g.coordinates()
    f = np.ones(256)[:, None] * np.cos(16 * x)[None]
    mass = lp.modulation_mass(lp.space_time_transform(g, f, 0.01))
    assert max(mass, key=mass.get) == 4


def test_free_wave_low_modulation():
    g = sg.GridSpec.cube(1, 128)
    sts = lp.space_time_transform(g, _free_wave(g, 16, 256, 0.01), 0.01)
    mass = lp.modulation_mass(sts)
    assert sum(v for j, v in mass.items() if j < 4 - 2) >= 0.9
    assert lp.window_leakage(g, (16,), 0.01, 256) < 0.1


def test_xsb_zero_and_homogeneous(g64):
    f = np.random.default_rng(6).standard_normal((16, 3, 64))
    zero = lp.space_time_transform(g64, np.zeros_like(f), 0.1)
    assert lp.xsb_norm(zero, 0.5, 0.5) == 0.0 and lp.xsb_norm(zero, 0.5, -0.5, "sum") == 0.0
    a = lp.xsb_norm(lp.space_time_transform(g64, f, 0.1), 0.5, 0.5)
    b = lp.xsb_norm(lp.space_time_transform(g64, -2.5 * f, 0.1), 0.5, 0.5)
    assert b == pytest.approx(2.5 * a, rel=1e-12)
    with pytest.raises(InvalidInputError):
        lp.xsb_norm(zero, 0, 0, "max")


def test_n_norm_below_pure_splits(g64):
    for seed in range(3):
        f = np.random.default_rng(seed).standard_normal((16, 3, 64))
        rep = lp.n_norm(g64, f, 0.1)
        assert rep.total <= rep.aggregates["pure_l1"] + 1e-15
        assert rep.total <= rep.aggregates["pure_x"] + 1e-15
    assert lp.n_norm(g64, np.zeros((16, 3, 64)), 0.1).total == 0.0


# bilinear engine


def test_bilinear_unit_symbol_is_product(g64):
    rng = np.random.default_rng(7)
    u, v = rng.standard_normal((2, 64))
    expect = lp.lp_project(g64, u, 3) * lp.lp_project(g64, v, 2)
    for method in ("direct", "factored"):
        out = lp.bilinear_multiplier(g64, lp.unit_symbol(), u, v, 3, 2, method=method)
        assert np.max(np.abs(out - expect)) <= 1e-10


def test_bilinear_direct_matches_factored_with_aliasing(g64):
    rng = np.random.default_rng(8)
    u, v = rng.standard_normal((2, 3, 64))
    a = lp.bilinear_multiplier(g64, lp.unit_symbol(), u, v, 5, 5, pairing="dot", method="direct")
    b = lp.bilinear_multiplier(g64, lp.unit_symbol(), u, v, 5, 5, pairing="dot", method="factored")
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_bilinear_symbol_linearity(g64):
    rng = np.random.default_rng(9)
    u, v = rng.standard_normal((2, 64))
    base = lp.angle_symbol()
    a = lp.bilinear_multiplier(g64, base, u, v, 2, 3)
    b = lp.bilinear_multiplier(g64, base.scaled(0.01), u, v, 2, 3)
    np.testing.assert_allclose(b, 0.01 * a, atol=1e-15)


def test_bilinear_budget(g64):
    u = np.zeros(64)
    with pytest.raises(BudgetError, match="budget"):
        lp.bilinear_multiplier(g64, lp.angle_symbol(), u, u, 5, 5, budget=10)
    with pytest.raises(InvalidInputError):
        lp.bilinear_multiplier(g64, lp.angle_symbol(), u, u, 5, 5, method="factored")


def test_symbol_bound(g64):
    assert lp.symbol_bound(g64, lp.angle_symbol(), 3, 3) == pytest.approx(1.0)
    assert lp.symbol_bound(g64, lp.angle_symbol().scaled(0.1), 3, 3) == pytest.approx(0.1)


def test_product_probe_small():
    g = sg.GridSpec.cube(1, 64)
    rows, expo = lp.product_bound_probe(g, 3, 2, samples=5)
    assert len(rows) == 15
    assert all(np.isfinite(r.ratio) for r in rows)
    # Hoelder: ||uv||_2 <= ||u||_4 ||v||_4 with |m| <= gamma
    assert all(r.ratio <= r.gamma * (1 + 1e-12) for r in rows)
    assert expo == pytest.approx(1.0, abs=1e-10)


def test_probe_csv(tmp_path):
    g = sg.GridSpec.cube(1, 32)
    rows, _ = lp.product_bound_probe(g, 2, 2, gammas=(1.0,), samples=3)
    lp.write_probe_csv(tmp_path / "p.csv", rows)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "seed,lhs,rhs,ratio" and len(lines) == 4


# orthogonality


def test_orthogonality_constant_exact(grid1):
    p = np.broadcast_to(np.array([0.0, 0.0, 1.0])[:, None], (3, 128))
    rep = lp.orthogonality_check(grid1, p, width=2, gap=2)
    assert rep.global_defect == 0.0 and rep.max_localized_defect == 0.0


def test_orthogonality_bump(grid1, ref_datum):
    rep = lp.orthogonality_check(grid1, ref_datum.u0)
    assert rep.global_defect <= 1e-10 and rep.max_localized_defect <= 1e-10


@pytest.mark.parametrize("gap", [1, 2, 3])
def test_orthogonality_localized_nontrivial_gap(grid1, gap):
    u = random_sphere_field(grid1, np.random.default_rng(gap))
    rep = lp.orthogonality_check(grid1, u, width=gap, gap=gap)
    assert rep.global_defect <= 1e-10
    assert rep.max_localized_defect <= 1e-10
    assert max(rep.remainder_symbol_bound.values()) > 0


def test_orthogonality_ablation(grid1, ref_datum):
    full = lp.orthogonality_check(grid1, ref_datum.u0, localized=False)
    cut = lp.orthogonality_check(grid1, ref_datum.u0, width=3, gap=10, localized=False)
    assert cut.global_defect > 1e3 * max(full.global_defect, 1e-16)


def test_sigma_decay_nonnegative(grid1):
    assert lp.sigma_decay(grid1, 3) >= 0.0


# energy inequality probe


def _free(grid, amp, seed, T=0.5, dt=0.05):
    rng = np.random.default_rng(seed)
    u0 = amp * lp.random_field(grid, rng, 3, decay=3.0)
    u1 = amp * lp.random_field(grid, rng, 3, decay=2.0)
    return pi.linear_wave_solve(grid, pi.WaveData(u0, u1), None, T, dt)


def test_energy_probe_zero_and_scaling(g64):
    zero = _free(g64, 0.0, 0)
    (row,) = lp.energy_inequality_probe(g64, [(0, zero, None)])
    assert row.lhs == 0.0 and row.rhs == 0.0
    a = lp.energy_inequality_probe(g64, [(1, _free(g64, 1.0, 1), None)])[0]
    b = lp.energy_inequality_probe(g64, [(1, _free(g64, 2.0, 1), None)])[0]
    assert b.lhs == pytest.approx(2 * a.lhs, rel=1e-12) and b.ratio == pytest.approx(a.ratio, rel=1e-12)


def test_energy_probe_stable_under_refinement(g64):
    coarse = lp.energy_inequality_probe(g64, [(2, _free(g64, 1.0, 2, dt=0.02), None)])[0]
    fine = lp.energy_inequality_probe(g64, [(2, _free(g64, 1.0, 2, dt=0.01), None)])[0]
    assert np.isfinite(coarse.ratio)
    assert fine.ratio == pytest.approx(coarse.ratio, rel=0.05)


def test_norm_report_csv(tmp_path, grid1, ref_traj):
    rep = lp.s_norm(grid1, ref_traj)
    lp.write_norm_report_csv(tmp_path / "n.csv", [rep])
    lines = (tmp_path / "n.csv").read_text().splitlines()
    assert lines[0] == "report,k,quantity,value"
    assert lines[-1].startswith("s_norm,aggregate,s_norm,")


@settings(max_examples=10, deadline=None)
@given(alpha=st.floats(0.1, 10.0), seed=st.integers(0, 1000))
def test_besov_homogeneity_property(alpha, seed):
    g = sg.GridSpec.cube(1, 32)
    f = np.random.default_rng(seed).standard_normal(32)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert lp.besov_norm(g, alpha * f, 1.0) == pytest.approx(alpha * lp.besov_norm(g, f, 1.0), rel=1e-12)
