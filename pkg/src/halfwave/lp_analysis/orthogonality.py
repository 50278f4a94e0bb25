"""Band bookkeeping of ``u . u = const`` and the frequency-decay diagnostic.

On the torus the constant background is the lattice mean ``c`` of ``u``
(the zero mode), so ``u = c + sum_k u_k`` and the exact rearrangement reads

    u . u - c . c = sum_{|k1-k2| <= w} u_k1 . u_k2 + 2 sum_k1 u_k1 . u_{<k1-g}

with ``u_{<k} = c + sum_{k' < k} u_k'`` and ``w = g``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import spectral_grid as sg
from ..halfwave_core import project_to_sphere
from .bilinear import MultiplierSymbol, bilinear_multiplier, random_field, symbol_bound
from .partition import default_partition, lp_bands


@dataclass
class OrthogonalityReport:
    global_defect: float
    localized_defects: dict = field(default_factory=dict)
    remainder_symbol_bound: dict = field(default_factory=dict)
    width: int = 10
    gap: int = 10
    background: np.ndarray | None = None

    @property
    def max_localized_defect(self):
        return max(self.localized_defects.values(), default=0.0)


def _low_parts(grid, c, bands, gap):
    low = {}
    for k in bands:
        acc = np.broadcast_to(c, next(iter(bands.values())).shape).copy()
        for k2, f in bands.items():
            if k2 < k - gap:
                acc = acc + f
        low[k] = acc
    return low


def _low_symbol(partition, k, gap, r):
    """Multiplier of ``u -> u_{<k-gap}`` (zero mode included)."""
    r = np.asarray(r, dtype=float)
    out = np.where(r == 0, 1.0, 0.0)
    for k2 in partition.bands:
        if k2 < k - gap:
            out = out + partition.symbol(k2, r)
    return out


def remainder_symbols(grid, k, gap, partition):
    """Symbols ``m_j`` with ``2**-k sum_j F_{m_j}(u, d_j u)`` equal to the localisation error.

    The error symbol ``M = 2 [sum_k1 chi_k(xi+eta) chi_k1(xi) low_k1(eta) - chi_k(xi) low_k(eta)]``
    vanishes at ``eta = 0``; it is written as ``sum_j (i eta_j) m_j 2**-k`` with
    ``m_j = -i 2**k eta_j M / |eta|^2``.
    """

    def error_symbol(xi, eta):
        sum_mod = np.sqrt((grid.wrap(xi + eta) ** 2).sum(axis=0))
        rx = np.sqrt((xi**2).sum(axis=0))
        ry = np.sqrt((eta**2).sum(axis=0))
        acc = -partition.symbol(k, rx) * _low_symbol(partition, k, gap, ry)
        for k1 in partition.bands:
            acc = acc + partition.symbol(k, sum_mod) * partition.symbol(k1, rx) * _low_symbol(partition, k1, gap, ry)
        return 2.0 * acc

    syms = []
    for j in range(grid.dim):
        def m_j(xi, eta, j=j):
            xi, eta = np.broadcast_arrays(xi, eta)
            e2 = (eta**2).sum(axis=0)
            out = np.zeros(e2.shape, dtype=complex)
            nz = e2 > 0
            full = error_symbol(xi, eta)
            out[nz] = -1j * 2.0**k * eta[j][nz] * full[nz] / e2[nz]
            return out

        syms.append(MultiplierSymbol(m_j))
    return syms


def localized_remainder(grid, u, k, gap, partition):
    """``2**-k L(u, grad u)`` evaluated band pair by band pair through the bilinear engine."""
    grads = sg.gradient(grid, u)
    syms = remainder_symbols(grid, k, gap, partition)
    out = np.zeros(grid.shape)
    bound = 0.0
    for a in partition.bands:
        for b in partition.bands:
            # eta reaches 2**(k1 - gap) with k1 <= a + 1
            if b > a + 1 - gap or abs(a - k) > 3:
                continue
            for j, sym in enumerate(syms):
                m = symbol_bound(grid, sym, a, b, partition)
                if m == 0.0:
                    continue
                bound = max(bound, m)
                out = out + 2.0**-k * bilinear_multiplier(grid, sym, u, grads[j], a, b, partition, pairing="dot")[0]
    return out, bound


def orthogonality_check(grid, u, p=None, width=10, gap=10, localized=True, partition=None):
    """Evaluate both sides of the band rearrangement of ``u . u``.

    ``u`` is projected onto the sphere first.  ``p`` is accepted for
    reporting only: on the torus the background is the zero mode of ``u``.
    ``width < gap`` reproduces the truncated (inexact) diagonal sum.
    """
    partition = default_partition(grid, partition)
    u = project_to_sphere(grid, sg.check_field(grid, u, "u"))
    c = sg.lattice_mean(grid, u)
    bands = lp_bands(grid, u, partition)
    low = _low_parts(grid, c, bands, gap)

    diag = np.zeros(grid.shape)
    diag_pairs = {}
    for k1, f1 in bands.items():
        for k2, f2 in bands.items():
            if abs(k1 - k2) <= width:
                prod = sg.dot(grid, f1, f2)
                diag = diag + prod
                diag_pairs[(k1, k2)] = prod
    cross_terms = {k: sg.dot(grid, f, low[k]) for k, f in bands.items()}
    rhs = diag + 2.0 * sum(cross_terms.values())
    lhs = sg.dot(grid, u, u) - sg.dot(grid, c, c)
    report = OrthogonalityReport(float(np.max(np.abs(lhs - rhs))), width=width, gap=gap,
                                 background=np.asarray(c).reshape(3))

    if localized:
        kmag = grid.kmag
        uu_hat = sg.fft(grid, sg.dot(grid, u, u))
        diag_hat = sg.fft(grid, sum(diag_pairs.values(), np.zeros(grid.shape)))
        for k, f in bands.items():
            sym = partition.symbol(k, kmag)
            lhs_k = sg.ifft(grid, uu_hat * sym)
            rem, bound = localized_remainder(grid, u, k, gap, partition)
            rhs_k = 2.0 * cross_terms[k] + sg.ifft(grid, diag_hat * sym) + rem
            report.localized_defects[k] = float(np.max(np.abs(lhs_k - rhs_k)))
            report.remainder_symbol_bound[k] = bound
    return report


def trilinear_band_mass(grid, k1, seed=0, partition=None):
    """``k -> ||P_k[w (grad w . grad w)]||_{L^2}`` for a unit-norm random input ``w`` in band ``k1``."""
    partition = default_partition(grid, partition)
    rng = np.random.default_rng(seed)
    w = lp_bands(grid, random_field(grid, rng, ncomp=3), partition)[k1]
    w = w / sg.l2_norm(grid, w)
    grads = sg.gradient(grid, w)
    out = w * np.expand_dims(sum(sg.dot(grid, g, g) for g in grads), sg.component_axis(grid))
    return {k: float(sg.l2_norm(grid, fk)) for k, fk in lp_bands(grid, out, partition).items()}


def sigma_decay(grid, k1, seed=0, partition=None, floor=1e-13):
    """Fitted exponent ``sigma`` in ``mass_k ~ 2**(-sigma |k - k1|)`` over the off-band outputs."""
    mass = trilinear_band_mass(grid, k1, seed, partition)
    peak = max(mass.values())
    xs, ys = [], []
    for k, m in mass.items():
        if k != k1 and m > floor * peak:
            xs.append(abs(k - k1))
            ys.append(np.log2(m / peak))
    if len(set(xs)) < 2:
        return float("nan")
    return float(-np.polyfit(xs, ys, 1)[0])
