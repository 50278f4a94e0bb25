import numpy as np
import pytest

from halfwave import halfwave_core as hc
from halfwave import spectral_grid as sg
from halfwave.cli_io.datum import DatumSpec, generate_datum

REF_N = 128
REF_T = 1.0


def random_sphere_field(grid, rng):
    v = rng.standard_normal((3,) + grid.shape)
    return v / np.linalg.norm(v, axis=0)


def great_circle(grid):
    (x,) = grid.coordinates()
    return np.stack([np.cos(x), np.sin(x), np.zeros_like(x)])


@pytest.fixture(scope="session")
def grid1():
    return sg.GridSpec.cube(1, REF_N)


@pytest.fixture(scope="session")
def ref_datum(grid1):
    return generate_datum(DatumSpec(), grid1)


def reference_run(grid, datum, dt, T=REF_T, record_every=1):
    params = hc.EvolutionParams(dt=dt, steps=int(round(T / dt)), record_every=record_every)
    return hc.evolve(grid, hc.State(0.0, datum.u0), params)


@pytest.fixture(scope="session")
def ref_traj(grid1, ref_datum):
    return reference_run(grid1, ref_datum, 1e-3)


@pytest.fixture(scope="session")
def ref_traj_half(grid1, ref_datum):
    return reference_run(grid1, ref_datum, 5e-4)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
