"""Band-localised bilinear Fourier multipliers and the product-bound probe."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import spectral_grid as sg
from ..errors import BudgetError, InvalidInputError
from .partition import default_partition, lp_project

DEFAULT_PAIR_BUDGET = 2_000_000


@dataclass(frozen=True)
class MultiplierSymbol:
    """A symbol ``m(xi, eta)``.

    ``m`` receives two wavevector arrays with leading axis ``dim`` and must
    broadcast.  ``factors``, when given, declares ``m = sum_r a_r(xi) b_r(eta)``
    and enables the factorised evaluation.  Real outputs need
    ``m(-xi, -eta) = conj(m(xi, eta))``.
    """

    m: Callable | None = None
    gamma: float | None = None
    factors: Sequence[tuple[Callable, Callable]] | None = None
    derivative_bounds: bool = True

    def __call__(self, xi, eta):
        if self.m is not None:
            return self.m(xi, eta)
        return sum(a(xi) * b(eta) for a, b in self.factors)

    def scaled(self, c):
        if self.factors is not None and self.m is None:
            factors = [(lambda xi, a=a: c * a(xi), b) for a, b in self.factors]
            return MultiplierSymbol(None, None if self.gamma is None else abs(c) * self.gamma, factors)
        base = self.m if self.m is not None else self.__call__
        return MultiplierSymbol(lambda xi, eta: c * base(xi, eta),
                                None if self.gamma is None else abs(c) * self.gamma)


def unit_symbol():
    one = lambda xi: np.ones(xi.shape[1:])  # noqa: E731
    return MultiplierSymbol(None, 1.0, [(one, one)])


def angle_symbol():
    """``xi . eta / (|xi| |eta|)``: bounded by 1, smooth on annuli away from the origin."""

    def m(xi, eta):
        num = (xi * eta).sum(axis=0)
        den = np.sqrt((xi * xi).sum(axis=0) * (eta * eta).sum(axis=0))
        out = np.zeros(np.broadcast(num, den).shape)
        np.divide(num, den, out=out, where=den > 0)
        return out

    return MultiplierSymbol(m, 1.0)


def _band_support(grid, k, partition):
    w = partition.symbol(k, grid.kmag)
    idx = np.flatnonzero(w)
    return idx, w.ravel()[idx]


def _as_components(grid, f):
    f = np.asarray(f, dtype=float)
    if f.ndim == grid.dim:
        return f[None], True
    return f, False


def bilinear_multiplier(grid, sym, u, v, k1, k2, partition=None, pairing="product",
                        budget=DEFAULT_PAIR_BUDGET, method="auto"):
    """``F(u, v)(x) = sum_{xi, eta} m(xi, eta) e^{i x.(xi + eta)} chi_k1(xi) u^(xi) chi_k2(eta) v^(eta)``.

    ``u^`` is the normalised lattice spectrum, so ``m = 1`` reproduces the
    pointwise product ``(P_k1 u)(P_k2 v)``.  Output frequencies are aliased
    onto the lattice exactly as that pointwise product is.  ``pairing`` is
    ``"product"`` (componentwise) or ``"dot"`` (summed over components).
    ``method`` is ``"direct"`` (explicit pair sum; refused above ``budget``
    pairs), ``"factored"`` (needs ``sym.factors``) or ``"auto"``.
    """
    partition = default_partition(grid, partition)
    for k in (k1, k2):
        if k not in partition.bands:
            raise InvalidInputError(f"band {k} outside {partition.kmin}..{partition.kmax}")
    if pairing not in ("product", "dot"):
        raise InvalidInputError(f"unknown pairing {pairing!r}")
    u, scalar_u = _as_components(grid, sg.check_field(grid, u, "u"))
    v, scalar_v = _as_components(grid, sg.check_field(grid, v, "v"))
    if u.shape != v.shape:
        raise InvalidInputError(f"u and v shapes differ: {u.shape} vs {v.shape}")
    if method == "auto":
        method = "factored" if sym.factors is not None and sym.m is None else "direct"
    if method == "factored":
        if sym.factors is None:
            raise InvalidInputError("symbol declares no factorisation")
        out = _factored(grid, sym, u, v, k1, k2, partition, pairing)
    elif method == "direct":
        out = _direct(grid, sym, u, v, k1, k2, partition, pairing, budget)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    if pairing == "product" and scalar_u and scalar_v:
        out = out[0]
    return out


def _direct(grid, sym, u, v, k1, k2, partition, pairing, budget):
    ia, wa = _band_support(grid, k1, partition)
    ib, wb = _band_support(grid, k2, partition)
    pairs = ia.size * ib.size
    if pairs > budget:
        raise BudgetError(f"bands ({k1}, {k2}) need {pairs} mode pairs, budget is {budget} "
                          f"({ia.size} x {ib.size} retained modes)")
    ncomp = u.shape[0]
    if pairs == 0:
        return np.zeros((1 if pairing == "dot" else ncomp,) + grid.shape)
    scale = 1.0 / grid.npoints
    uh = sg.fft(grid, u).reshape(ncomp, -1)[:, ia] * scale
    vh = sg.fft(grid, v).reshape(ncomp, -1)[:, ib] * scale
    flat_xi = grid.wavenumbers.reshape(grid.dim, -1)
    xi = flat_xi[:, ia][:, :, None]
    eta = flat_xi[:, ib][:, None, :]
    weight = np.broadcast_to(sym(xi, eta), (ia.size, ib.size)) * wa[:, None] * wb[None, :]
    # lattice index of xi + eta, per axis, modulo N
    multi_a = np.unravel_index(ia, grid.shape)
    multi_b = np.unravel_index(ib, grid.shape)
    target = np.ravel_multi_index(
        tuple((ma[:, None] + mb[None, :]) % n for ma, mb, n in zip(multi_a, multi_b, grid.shape)),
        grid.shape,
    ).ravel()
    if pairing == "dot":
        prods = [(uh[:, :, None] * vh[:, None, :]).sum(axis=0)]
    else:
        prods = [uh[c][:, None] * vh[c][None, :] for c in range(ncomp)]
    out = []
    for prod in prods:
        vals = (weight * prod).ravel()
        coef = np.bincount(target, vals.real, grid.npoints) + 1j * np.bincount(target, vals.imag, grid.npoints)
        out.append(sg.ifft(grid, coef.reshape(grid.shape) * grid.npoints))
    return np.stack(out)


def _factored(grid, sym, u, v, k1, k2, partition, pairing):
    uh = sg.fft(grid, u) * partition.symbol(k1, grid.kmag)
    vh = sg.fft(grid, v) * partition.symbol(k2, grid.kmag)
    xi = grid.wavenumbers
    total = 0.0
    for a, b in sym.factors:
        ua = np.fft.ifftn(uh * a(xi), axes=grid.axes)
        vb = np.fft.ifftn(vh * b(xi), axes=grid.axes)
        total = total + ua * vb
    total = np.real(total)
    if pairing == "dot":
        return total.sum(axis=0, keepdims=True)
    return total


def symbol_bound(grid, sym, k1, k2, partition=None):
    """``max |m|`` over the lattice pairs in the support of ``chi_k1(xi) chi_k2(eta)``."""
    partition = default_partition(grid, partition)
    ia, _ = _band_support(grid, k1, partition)
    ib, _ = _band_support(grid, k2, partition)
    flat = grid.wavenumbers.reshape(grid.dim, -1)
    vals = sym(flat[:, ia][:, :, None], flat[:, ib][:, None, :])
    return float(np.max(np.abs(vals), initial=0.0))


def random_field(grid, rng, ncomp=1, decay=0.0):
    """Real random field with independent Gaussian Fourier coefficients weighted by ``(1+|xi|)**-decay``."""
    f = rng.standard_normal((ncomp,) + grid.shape)
    if decay:
        f = sg.apply_multiplier(grid, f, (1.0 + grid.kmag) ** (-decay))
    return f


def lebesgue(grid, f, q):
    return float(sg.spatial_lq(grid, sg.pointwise_norm(grid, f), q))


@dataclass
class ProbeRow:
    seed: int
    gamma: float
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else float("inf")


def product_bound_probe(grid, k1, k2, gammas=(1.0, 0.1, 0.01), samples=100, seed=0,
                        base=None, norms=(2.0, 4.0, 4.0), partition=None):
    """Measure ``||F(u,v)||_Z / (||P_k1 u||_X ||P_k2 v||_Y)`` over random inputs.

    ``norms`` are the Lebesgue exponents ``(Z, X, Y)``; the default
    ``(2, 4, 4)`` satisfies ``||uv||_Z <= ||u||_X ||v||_Y`` by Hoelder.  The
    symbol family is ``gamma * base``.  Returns the rows (seed ``seed + i``
    for sample ``i``, identical across ``gamma``) and the least-squares slope
    of ``log(max ratio)`` against ``log(gamma)``.
    """
    partition = default_partition(grid, partition)
    base = angle_symbol() if base is None else base
    z, x, y = norms
    inputs = []
    for i in range(samples):
        rng = np.random.default_rng(seed + i)
        u = random_field(grid, rng)
        v = random_field(grid, rng)
        inputs.append((seed + i, u, v, lebesgue(grid, lp_project(grid, u, k1, partition), x)
                       * lebesgue(grid, lp_project(grid, v, k2, partition), y)))
    rows = []
    peaks = []
    for gamma in gammas:
        sym = base.scaled(gamma)
        ratios = []
        for s, u, v, rhs in inputs:
            lhs = lebesgue(grid, bilinear_multiplier(grid, sym, u, v, k1, k2, partition), z)
            rows.append(ProbeRow(s, gamma, lhs, rhs))
            ratios.append(rows[-1].ratio)
        peaks.append(max(ratios))
    lg, lp = np.log(np.asarray(gammas)), np.log(np.asarray(peaks))
    exponent = float(np.polyfit(lg, lp, 1)[0]) if len(gammas) > 1 else float("nan")
    return rows, exponent


def write_probe_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "lhs", "rhs", "ratio"])
        for r in rows:
            w.writerow([r.seed, f"{r.lhs:.17g}", f"{r.rhs:.17g}", f"{r.ratio:.17g}"])
