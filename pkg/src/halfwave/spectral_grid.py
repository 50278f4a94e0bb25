"""Periodic lattices and exact Fourier-multiplier operators.

Fields are plain ``numpy`` arrays whose last ``grid.dim`` axes are the
spatial lattice.  Vector fields carry their three components on the axis
just before the spatial ones, so a single field has shape ``(3, N1, ..., Nn)``
and a stack of frames has shape ``(frames, 3, N1, ..., Nn)``.  Every operator
broadcasts over leading axes.

The discrete transform is the unnormalised ``numpy.fft.fftn`` over the
spatial axes, so with ``V`` the box volume and ``M`` the number of lattice
points ``integral |f|^2 dx = V / M**2 * sum |fhat|^2``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

SNAPSHOT_MAGIC = b"HWM1"


@dataclass(frozen=True)
class GridSpec:
    """A uniform periodic lattice on the box ``[0, L1) x ... x [0, Ln)``."""

    dim: int
    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        if self.dim < 1:
            raise InvalidInputError(f"dimension must be >= 1, got {self.dim}")
        if len(self.points) != self.dim or len(self.lengths) != self.dim:
            raise InvalidInputError("points and lengths need one entry per dimension")
        for n in self.points:
            if n < 4 or n % 2:
                raise InvalidInputError(f"lattice sizes must be even and >= 4, got {n}")
        for length in self.lengths:
            if not (np.isfinite(length) and length > 0):
                raise InvalidInputError(f"box lengths must be positive, got {length}")

    @classmethod
    def cube(cls, dim, n, length=2 * np.pi):
        return cls(dim, (n,) * dim, (length,) * dim)

    @property
    def shape(self):
        return self.points

    @property
    def axes(self):
        """Spatial axes counted from the end, as used by the FFT calls."""
        return tuple(range(-self.dim, 0))

    @property
    def npoints(self):
        return int(np.prod(self.points))

    @property
    def spacing(self):
        return tuple(length / n for length, n in zip(self.lengths, self.points))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    def coordinates(self):
        """Lattice coordinates ``x_i = i * L / N`` as broadcastable arrays."""
        return np.meshgrid(
            *[np.arange(n) * (length / n) for n, length in zip(self.points, self.lengths)],
            indexing="ij",
        )

    @cached_property
    def mode_indices(self):
        """Signed mode indices per axis, aliased into ``(-N/2, N/2]``."""
        out = []
        for n in self.points:
            m = np.fft.fftfreq(n, 1.0 / n)
            m[n // 2] = n // 2
            out.append(m)
        return out

    @cached_property
    def wavenumbers(self):
        """``xi_j = 2 pi m_j / L_j`` broadcast over the full lattice, shape ``(dim, *points)``."""
        axes = [2 * np.pi * m / length for m, length in zip(self.mode_indices, self.lengths)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def kmag(self):
        return np.sqrt((self.wavenumbers**2).sum(axis=0))

    @cached_property
    def nyquist(self):
        """Per-axis boolean masks of the Nyquist plane ``m_j = N_j / 2``."""
        masks = []
        for j, n in enumerate(self.points):
            idx = np.zeros(self.points, dtype=bool)
            sl = [slice(None)] * self.dim
            sl[j] = n // 2
            idx[tuple(sl)] = True
            masks.append(idx)
        return masks

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule: keep modes with ``|m_j| < N_j / 3`` on every axis."""
        keep = np.ones(self.points, dtype=bool)
        for j, (m, n) in enumerate(zip(self.mode_indices, self.points)):
            shape = [1] * self.dim
            shape[j] = n
            keep &= (np.abs(m) < n / 3.0).reshape(shape)
        return keep

    def wrap(self, xi):
        """Alias an array of wavevectors (leading axis ``dim``) onto the lattice."""
        out = np.empty_like(xi, dtype=float)
        for j, (n, length) in enumerate(zip(self.points, self.lengths)):
            m = np.rint(xi[j] * length / (2 * np.pi))
            m = (m + n // 2 - 1) % n - (n // 2 - 1)
            out[j] = 2 * np.pi * m / length
        return out


def check_field(grid, f, name="field"):
    f = np.asarray(f, dtype=float)
    if f.shape[f.ndim - grid.dim:] != grid.shape:
        raise InvalidInputError(f"{name} has shape {f.shape}, lattice is {grid.shape}")
    if not np.all(np.isfinite(f)):
        raise InvalidInputError(f"{name} has non-finite samples")
    return f


def fft(grid, f):
    return np.fft.fftn(f, axes=grid.axes)


def ifft(grid, fhat):
    """Inverse transform, returning the real part."""
    return np.fft.ifftn(fhat, axes=grid.axes).real


def apply_multiplier(grid, f, symbol):
    return ifft(grid, fft(grid, f) * symbol)


def riesz_power(grid, f, alpha):
    """Multiplier ``|xi|**alpha`` with the zero mode set to 0; ``alpha`` may be negative."""
    f = check_field(grid, f)
    k = grid.kmag
    sym = np.zeros_like(k)
    nz = k > 0
    sym[nz] = k[nz] ** alpha
    return apply_multiplier(grid, f, sym)


def frac_laplacian(grid, f, s):
    """``(-Laplacian)**s`` as the multiplier ``|xi|**(2 s)``, zero mode annihilated."""
    if not s > 0:
        raise InvalidInputError(f"fractional order must be positive, got {s}")
    return riesz_power(grid, f, 2.0 * s)


def partial(grid, f, j):
    f = check_field(grid, f)
    sym = 1j * grid.wavenumbers[j]
    sym[grid.nyquist[j]] = 0.0
    return apply_multiplier(grid, f, sym)


def gradient(grid, f):
    """Spectral ``[d_1 f, ..., d_n f]``; the Nyquist mode of each derivative is zeroed."""
    f = check_field(grid, f)
    fhat = fft(grid, f)
    out = []
    for j in range(grid.dim):
        sym = 1j * grid.wavenumbers[j]
        sym[grid.nyquist[j]] = 0.0
        out.append(ifft(grid, fhat * sym))
    return out


def laplacian(grid, f):
    f = check_field(grid, f)
    return apply_multiplier(grid, f, -(grid.kmag**2))


def dealias(grid, f):
    return apply_multiplier(grid, f, grid.dealias_mask.astype(float))


def lattice_mean(grid, f):
    """Mean over the spatial axes, keeping them as size-1 axes for broadcasting."""
    return f.mean(axis=grid.axes, keepdims=True)


# pointwise vector algebra on the component axis


def component_axis(grid):
    return -(grid.dim + 1)


def dot(grid, a, b):
    return (a * b).sum(axis=component_axis(grid))


def cross(grid, a, b):
    return np.cross(a, b, axis=component_axis(grid))


def pointwise_norm(grid, f):
    return np.sqrt(dot(grid, f, f))


def spatial_lq(grid, g, q=2.0):
    """``L^q`` norm over the spatial axes of a pointwise (scalar) array."""
    g = np.abs(g)
    if np.isinf(q):
        return g.max(axis=grid.axes)
    return (grid.cell_volume * (g**q).sum(axis=grid.axes)) ** (1.0 / q)


def l2_norm(grid, f):
    """Lattice-quadrature ``L^2`` norm of a vector field (per leading index).

    An array with exactly ``dim`` axes is read as a single scalar field.
    """
    f = np.asarray(f)
    if f.ndim == grid.dim:
        f = f[None]
    return np.sqrt(grid.cell_volume * (f * f).sum(axis=tuple(range(-grid.dim - 1, 0))))


def parseval_weights(grid):
    return grid.volume / grid.npoints**2


def sobolev_seminorm(grid, f, s, axes=None):
    """Homogeneous ``H^s`` seminorm by Parseval, zero mode dropped.

    ``axes`` are the additional (component) axes summed into the norm; by
    default the component axis of a vector field.
    """
    if axes is None:
        axes = (component_axis(grid),)
    fhat = fft(grid, f)
    k = grid.kmag
    w = np.zeros_like(k)
    nz = k > 0
    w[nz] = k[nz] ** (2.0 * s)
    total = (np.abs(fhat) ** 2 * w).sum(axis=tuple(axes) + grid.axes)
    return np.sqrt(parseval_weights(grid) * total)


# persistence


def write_snapshot(path, grid, f):
    """Write one field in the ``HWM1`` little-endian binary layout."""
    f = np.asarray(f, dtype=float)
    if f.ndim == grid.dim:
        f = f[None]
    if f.shape[1:] != grid.shape:
        raise InvalidInputError(f"snapshot shape {f.shape} does not match lattice {grid.shape}")
    header = bytearray(SNAPSHOT_MAGIC)
    header += struct.pack("<I", grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.points)
    header += struct.pack(f"<{grid.dim}d", *grid.lengths)
    header += struct.pack("<I", f.shape[0])
    Path(path).write_bytes(bytes(header) + f.astype("<f8").tobytes(order="C"))


def read_snapshot(path):
    """Return ``(grid, field)`` from an ``HWM1`` file."""
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise InvalidInputError(f"{path}: not an HWM1 snapshot")
    off = 4
    (n,) = struct.unpack_from("<I", raw, off)
    off += 4
    points = struct.unpack_from(f"<{n}I", raw, off)
    off += 4 * n
    lengths = struct.unpack_from(f"<{n}d", raw, off)
    off += 8 * n
    (ncomp,) = struct.unpack_from("<I", raw, off)
    off += 4
    grid = GridSpec(n, points, lengths)
    count = ncomp * grid.npoints
    if len(raw) - off != 8 * count:
        raise InvalidInputError(f"{path}: truncated snapshot")
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=off).astype(float)
    return grid, data.reshape((ncomp,) + grid.shape)


@dataclass
class Trajectory:
    """Frames ``(t, u, u_t)`` recorded at a uniform time spacing.

    ``u`` and ``ut`` have shape ``(frames, 3, *points)``.
    """

    grid: GridSpec
    t: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def frame_dt(self):
        if len(self.t) < 2:
            return 0.0
        steps = np.diff(self.t)
        h = float(steps.mean())
        if not np.allclose(steps, h, rtol=1e-9, atol=1e-14):
            raise InvalidInputError("trajectory frames are not uniformly spaced")
        return h

    def frame(self, i):
        return self.t[i], self.u[i], self.ut[i]
