"""Windowed space-time transforms and modulation (distance-to-cone) projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import spectral_grid as sg
from ..errors import InsufficientDataError
from .partition import DyadicPartition

MIN_FRAMES = 8


def hann_window(m):
    """Periodic Hann window scaled to unit mean square."""
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(m) / m)
    return w / np.sqrt(0.375)


@dataclass
class SpaceTimeSpectrum:
    """Coefficients of ``w(t) F(t, x)`` over ``(tau, xi)``.

    ``coeffs`` has shape ``(frames, components, *points)``; ``tau`` has shape
    ``(frames,)``.  The window ``w`` is a periodic Hann window with unit mean
    square, so windowed ``L^2`` norms of stationary signals match unwindowed
    ones.
    """

    grid: sg.GridSpec
    dt: float
    coeffs: np.ndarray
    window: np.ndarray
    window_name: str = "hann"

    @property
    def frames(self):
        return self.coeffs.shape[0]

    @property
    def tau(self):
        return 2 * np.pi * np.fft.fftfreq(self.frames, self.dt)

    @property
    def cone_distance(self):
        """``||tau| - |xi||`` broadcast to ``(frames, *points)``."""
        tau = np.abs(self.tau).reshape((-1,) + (1,) * self.grid.dim)
        return np.abs(tau - self.grid.kmag[None])

    def _expand(self, sym):
        return sym[:, None]

    @property
    def transform_axes(self):
        return (0,) + tuple(range(2, 2 + self.grid.dim))

    def to_physical(self, coeffs=None):
        c = self.coeffs if coeffs is None else coeffs
        return np.fft.ifftn(c, axes=self.transform_axes).real

    def l2_weight(self):
        """Parseval factor: ``||g||^2_{L^2_{t,x}} = l2_weight * sum |g~|^2``."""
        return self.dt * self.grid.cell_volume / (self.frames * self.grid.npoints)

    def l2_norm(self, coeffs=None):
        c = self.coeffs if coeffs is None else coeffs
        return float(np.sqrt(self.l2_weight() * (np.abs(c) ** 2).sum()))

    def modulation_partition(self):
        d = self.cone_distance
        pos = d[d > 1e-12 * max(1.0, float(d.max()))]
        return DyadicPartition.covering(float(pos.min()), float(pos.max()))

    def cone_mask(self):
        d = self.cone_distance
        return d <= 1e-12 * max(1.0, float(d.max()))


def space_time_transform(grid, frames, dt):
    """Windowed transform in ``t`` and exact transform in ``x`` of ``frames``.

    ``frames`` has shape ``(T, components, *points)``; a bare ``(T, *points)``
    scalar stack is promoted to one component.
    """
    frames = np.asarray(frames, dtype=float)
    if frames.ndim == grid.dim + 1:
        frames = frames[:, None]
    if frames.shape[0] < MIN_FRAMES:
        raise InsufficientDataError(f"need at least {MIN_FRAMES} frames for tau resolution, got {frames.shape[0]}")
    w = hann_window(frames.shape[0])
    windowed = frames * w.reshape((-1,) + (1,) * (frames.ndim - 1))
    axes = (0,) + tuple(range(2, 2 + grid.dim))
    return SpaceTimeSpectrum(grid, float(dt), np.fft.fftn(windowed, axes=axes), w)


def windowed_frames(sts, frames):
    frames = np.asarray(frames, dtype=float)
    if frames.ndim == sts.grid.dim + 1:
        frames = frames[:, None]
    return frames * sts.window.reshape((-1,) + (1,) * (frames.ndim - 1))


def modulation_symbol(sts, j, partition=None):
    partition = sts.modulation_partition() if partition is None else partition
    return partition.symbol(j, sts.cone_distance)


def modulation_project(sts, j, partition=None):
    """``Q_j``: coefficients scaled by ``chi(||tau| - |xi|| / 2**j)``."""
    sym = modulation_symbol(sts, j, partition)
    return SpaceTimeSpectrum(sts.grid, sts.dt, sts.coeffs * sts._expand(sym), sts.window, sts.window_name)


def modulation_bands(sts, partition=None):
    partition = sts.modulation_partition() if partition is None else partition
    return {j: modulation_project(sts, j, partition) for j in partition.bands}


def modulation_mass(sts, partition=None):
    """Share of the windowed ``L^2`` mass carried by each ``Q_j`` (squared norms, normalised)."""
    bands = modulation_bands(sts, partition)
    mass = {j: b.l2_norm() ** 2 for j, b in bands.items()}
    total = sum(mass.values())
    return {j: (m / total if total > 0 else 0.0) for j, m in mass.items()}


def cone_part(sts):
    """The coefficients on the exact cone ``|tau| = |xi|``, which no ``Q_j`` sees."""
    mask = sts.cone_mask()
    return sts.coeffs * sts._expand(mask.astype(float))


def window_leakage(grid, xi_mode, dt, frames):
    """Share of a free wave's modulation mass at ``j >= log2|xi| - 2``.

    ``xi_mode`` is an integer mode vector.  The exact free wave sits on the
    cone, so everything this reports is produced by the finite window.
    """
    x = grid.coordinates()
    xi = np.array([2 * np.pi * m / length for m, length in zip(xi_mode, grid.lengths)])
    phase = sum(k * xx for k, xx in zip(xi, x))
    t = np.arange(frames) * dt
    wave = np.cos(np.linalg.norm(xi) * t)[:, None] * np.cos(phase)[None]
    mass = modulation_mass(space_time_transform(grid, wave, dt))
    cut = np.log2(np.linalg.norm(xi)) - 2
    return float(sum(m for j, m in mass.items() if j >= cut))
