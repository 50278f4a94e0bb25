"""Smooth dyadic partition of unity and Littlewood-Paley projections."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import spectral_grid as sg
from ..errors import InvalidInputError


def _mollifier_tail(t):
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    a = _mollifier_tail(t)
    b = _mollifier_tail(1.0 - t)
    return a / (a + b)


def plateau(x):
    """1 on ``[0, 1]``, 0 on ``[2, inf)``, smooth and non-increasing in between."""
    return 1.0 - smooth_step(np.asarray(x, dtype=float) - 1.0)


def chi(x):
    """The dyadic profile ``plateau(x) - plateau(2 x)``.

    Supported in ``(1/2, 2)`` with ``chi(1) = 1``; its dyadic dilates
    telescope, so ``sum_k chi(x / 2**k) = 1`` for every ``x > 0``.
    """
    x = np.asarray(x, dtype=float)
    return plateau(x) - plateau(2.0 * x)


@dataclass(frozen=True)
class DyadicPartition:
    """Bands ``kmin..kmax`` of ``chi(r / 2**k)``; covers ``2**kmin <= r <= 2**kmax`` exactly."""

    kmin: int
    kmax: int

    def __post_init__(self):
        if self.kmax < self.kmin:
            raise InvalidInputError(f"empty band range {self.kmin}..{self.kmax}")

    @classmethod
    def for_grid(cls, grid):
        k = grid.kmag
        kpos = k[k > 0]
        return cls.covering(float(kpos.min()), float(kpos.max()))

    @classmethod
    def covering(cls, rmin, rmax):
        return cls(int(math.floor(math.log2(rmin))), int(math.ceil(math.log2(rmax))))

    @property
    def bands(self):
        return range(self.kmin, self.kmax + 1)

    def symbol(self, k, r):
        return chi(np.asarray(r, dtype=float) / 2.0**k)

    def coverage(self, r):
        """``sum_k chi(r / 2**k)`` over the configured bands."""
        r = np.asarray(r, dtype=float)
        return sum(self.symbol(k, r) for k in self.bands)


def default_partition(grid, partition=None):
    return DyadicPartition.for_grid(grid) if partition is None else partition


def lp_project(grid, f, k, partition=None):
    """``P_k f``: the spectrum multiplied by ``chi(|xi| / 2**k)``."""
    partition = default_partition(grid, partition)
    if k not in partition.bands:
        raise InvalidInputError(f"band {k} outside {partition.kmin}..{partition.kmax}")
    return sg.apply_multiplier(grid, f, partition.symbol(k, grid.kmag))


def lp_bands(grid, f, partition=None):
    """All ``P_k f`` at once as a dict ``k -> field`` (one forward transform)."""
    partition = default_partition(grid, partition)
    fhat = sg.fft(grid, f)
    return {k: sg.ifft(grid, fhat * partition.symbol(k, grid.kmag)) for k in partition.bands}


def spectral_tail(grid, f, partition=None):
    """Fraction of the nonzero-mode ``L^2`` mass not covered by the band range."""
    partition = default_partition(grid, partition)
    fhat = sg.fft(grid, f)
    k = grid.kmag
    power = (np.abs(fhat) ** 2).reshape(-1, *grid.shape).sum(axis=0)
    nz = k > 0
    total = power[nz].sum()
    if total == 0:
        return 0.0
    cover = partition.coverage(k)
    return float((power[nz] * (1.0 - cover[nz]) ** 2).sum() / total)
