"""Sphere-valued initial data: a smooth bump perturbation of a constant direction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import spectral_grid as sg
from ..errors import InvalidInputError
from ..halfwave_core import project_to_sphere, rhs_halfwave
from ..picard_iteration import WaveData
from ..wave_reform import projector_perp

U1_MODES = ("compatible", "zero", "user")


@dataclass(frozen=True)
class DatumSpec:
    """``u0 = normalize(p + phi(|x - center| / radius) (a1 e1 + a2 e2))``.

    ``phi(r) = exp(1 - 1/(1 - r^2))`` on ``r < 1``, so ``phi(0) = 1``.
    ``u1_normal`` adds ``u1_normal * u0`` to ``u1`` after the tangency
    projection; it exists only to build deliberately incompatible data.
    """

    p: tuple = (0.0, 0.0, 1.0)
    center: tuple | None = None
    radius: float = 3.0
    amplitude: tuple = (0.05, 0.0)
    u1_mode: str = "compatible"
    u1_normal: float = 0.0
    user_u1: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)) or abs(np.linalg.norm(p) - 1.0) > 1e-12:
            raise InvalidInputError(f"p must be a unit 3-vector, got {self.p}")
        if not self.radius > 0:
            raise InvalidInputError(f"radius must be positive, got {self.radius}")
        if len(self.amplitude) != 2:
            raise InvalidInputError("amplitude holds the two tangent components")
        if self.u1_mode not in U1_MODES:
            raise InvalidInputError(f"u1_mode must be one of {U1_MODES}, got {self.u1_mode!r}")
        if self.u1_mode == "user" and self.user_u1 is None:
            raise InvalidInputError("u1_mode 'user' needs user_u1")


def tangent_frame(p):
    """``(e1, e2)`` completing ``p`` to a right-handed orthonormal basis.

    ``e1`` is the normalised projection of the coordinate axis on which
    ``|p_i|`` is smallest (first such axis on ties); ``e2 = p x e1``.
    """
    p = np.asarray(p, dtype=float)
    a = int(np.argmin(np.abs(p)))
    e = np.zeros(3)
    e[a] = 1.0
    e1 = e - p[a] * p
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(p, e1)


def bump_profile(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def _center(spec, grid):
    if spec.center is None:
        return tuple(0.5 * length for length in grid.lengths)
    if len(spec.center) != grid.dim:
        raise InvalidInputError(f"center has {len(spec.center)} entries for a {grid.dim}-dimensional grid")
    return tuple(float(c) for c in spec.center)


def generate_datum(spec, grid):
    """Build ``WaveData`` from ``spec``; the bump must sit strictly inside the box."""
    center = _center(spec, grid)
    amp = np.asarray(spec.amplitude, dtype=float)
    if np.any(amp != 0):
        for c, length in zip(center, grid.lengths):
            if c - spec.radius <= 0.0 or c + spec.radius >= length:
                raise InvalidInputError(
                    f"bump of radius {spec.radius} at {center} touches the boundary of the box {grid.lengths}")
    p = np.asarray(spec.p, dtype=float)
    e1, e2 = tangent_frame(p)
    x = grid.coordinates()
    r = np.sqrt(sum((xi - c) ** 2 for xi, c in zip(x, center))) / spec.radius
    phi = bump_profile(r)
    direction = amp[0] * e1 + amp[1] * e2
    shape = (3,) + (1,) * grid.dim
    v = p.reshape(shape) + phi[None] * direction.reshape(shape)
    u0 = project_to_sphere(grid, v)
    if spec.u1_mode == "compatible":
        u1 = rhs_halfwave(grid, u0, constraint_limit=None)
    elif spec.u1_mode == "zero":
        u1 = np.zeros_like(u0)
    else:
        u1 = projector_perp(grid, u0, sg.check_field(grid, spec.user_u1, "user_u1"))
    if spec.u1_normal:
        u1 = u1 + spec.u1_normal * u0
    return WaveData(u0, u1)
