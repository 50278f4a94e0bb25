"""Besov, Strichartz, X^{s,b}, S and N norms on periodic trajectories.

Everything is computed on the torus with lattice quadrature in ``x`` and the
composite trapezoid rule in ``t``.  Modulation-based pieces (X^{s,b}, the
X component of S, the N norm) use the Hann-windowed space-time transform.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import spectral_grid as sg
from ..errors import InvalidInputError
from .partition import default_partition, lp_bands, spectral_tail
from .spacetime import space_time_transform, windowed_frames

TAIL_THRESHOLD = 1e-12
INF = math.inf


def besov_norm(grid, f, s, partition=None, tail_threshold=TAIL_THRESHOLD):
    """``sum_k 2**(k s) ||P_k f||_{L^2}``.

    Warns when more than ``tail_threshold`` of the spectral mass lies outside
    the band range.
    """
    partition = default_partition(grid, partition)
    tail = spectral_tail(grid, f, partition)
    if tail > tail_threshold:
        warnings.warn(f"spectral tail {tail:.3g} outside bands {partition.kmin}..{partition.kmax}",
                      stacklevel=2)
    bands = lp_bands(grid, f, partition)
    return float(sum(2.0 ** (k * s) * sg.l2_norm(grid, fk) for k, fk in bands.items()))


def is_admissible(p, q, n):
    if p < 2 or q < 2:
        return False
    return 1.0 / p + (n - 1) / (2.0 * q) <= (n - 1) / 4.0 + 1e-15


def saturating_q(p, n):
    """The ``q`` with ``1/p + (n-1)/(2q) = (n-1)/4``, or ``None`` if there is none >= 2."""
    gap = (n - 1) / 4.0 - 1.0 / p
    if n == 1 or gap < 0:
        return None
    if gap == 0:
        return INF
    q = (n - 1) / (2.0 * gap)
    return q if q >= 2 else None


def default_pairs(n):
    """``(inf, 2)`` plus the saturating pairs at ``p = 4`` and ``p = 2`` when they exist."""
    pairs = [(INF, 2.0)]
    for p in (4.0, 2.0):
        q = saturating_q(p, n)
        if q is not None and is_admissible(p, q, n):
            pairs.append((p, q))
    return pairs


def strichartz_weight(p, q, n):
    """Exponent ``1/p + n/q - 1`` of the dyadic weight."""
    return 1.0 / p + n / q - 1.0


def validate_pair(p, q, n):
    if p < 2 or q < 2:
        raise InvalidInputError(f"Strichartz exponents must be >= 2, got ({p}, {q})")
    if not is_admissible(p, q, n):
        raise InvalidInputError(f"pair ({p}, {q}) is not admissible in dimension {n}")


def time_lp(values, dt, p):
    """``L^p_t`` by composite trapezoid over uniformly spaced samples."""
    values = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        return float(values.max())
    if len(values) < 2:
        return 0.0
    return float(np.trapezoid(values**p, dx=dt) ** (1.0 / p))


def spacetime_gradient(grid, frames, dt):
    """Stack ``(d_t, d_1, ..., d_n)`` of every component: shape ``(T, (n+1)*C, *points)``.

    ``d_t`` uses second-order centered differences (one-sided at the ends).
    """
    parts = [np.gradient(frames, dt, axis=0, edge_order=2)] if len(frames) > 2 else [np.zeros_like(frames)]
    parts += sg.gradient(grid, frames)
    return np.concatenate(parts, axis=1)


def mixed_norm(grid, frames, dt, p, q):
    """``|| |F(t, x)| ||_{L^p_t L^q_x}`` with ``|.|`` the Euclidean norm over components."""
    mag = sg.pointwise_norm(grid, frames)
    return time_lp(sg.spatial_lq(grid, mag, q), dt, p)


def modulation_profile(sts, s):
    """``j -> || |grad|^s Q_j F ||_{L^2_{t,x}}`` over the resolved modulation bands."""
    part = sts.modulation_partition()
    k = sts.grid.kmag
    w = np.zeros_like(k)
    nz = k > 0
    w[nz] = k[nz] ** s
    base = sts.coeffs * w[None, None]
    d = sts.cone_distance
    out = {}
    for j in part.bands:
        sym = part.symbol(j, d)[:, None]
        out[j] = sts.l2_norm(base * sym)
    return out


def xsb_norm(sts, s, b, aggregation="sup"):
    """``sup_j`` (or ``sum_j``) of ``2**(j b) || |grad|^s Q_j F ||_{L^2}``."""
    prof = modulation_profile(sts, s)
    vals = [2.0 ** (j * b) * v for j, v in prof.items()]
    if aggregation == "sup":
        return float(max(vals, default=0.0))
    if aggregation == "sum":
        return float(sum(vals))
    raise InvalidInputError(f"aggregation must be 'sup' or 'sum', got {aggregation!r}")


@dataclass
class NormReport:
    """Per-band values and their aggregates.

    ``bands`` maps a quantity name to ``{k: value}``; ``aggregates`` holds the
    documented combinations.  ``notes`` carries the dimension caveat and any
    window-leakage figures.
    """

    kind: str
    n: int
    bands: dict = field(default_factory=dict)
    aggregates: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    sigma_decay: float | None = None

    @property
    def total(self):
        return self.aggregates[self.kind]


def dimension_note(n):
    return f"lattice dimension n={n}; the small-data theory assumes n>=5, so no estimate is claimed"


def strichartz_norm(grid, traj, p, q, weighted=True, partition=None):
    """``sum_k 2**((1/p + n/q - 1) k) || grad_{t,x} P_k u ||_{L^p_t L^q_x}``."""
    n = grid.dim
    validate_pair(p, q, n)
    partition = default_partition(grid, partition)
    dt = traj.frame_dt
    bands = lp_bands(grid, traj.u, partition)
    expo = strichartz_weight(p, q, n) if weighted else 0.0
    per = {}
    for k, uk in bands.items():
        per[k] = 2.0 ** (expo * k) * mixed_norm(grid, spacetime_gradient(grid, uk, dt), dt, p, q)
    name = f"strichartz_{_fmt(p)}_{_fmt(q)}"
    rep = NormReport(name, n, bands={name: per}, notes={"dimension": dimension_note(n)})
    rep.aggregates[name] = float(sum(per.values()))
    return rep


def s_norm(grid, traj, pairs=None, partition=None):
    """``sum_k [ sup_pairs 2**(...) ||grad P_k u||_{L^p L^q} + ||grad P_k u||_{X^{n/2-1, 1/2, inf}} ]``."""
    n = grid.dim
    pairs = default_pairs(n) if pairs is None else pairs
    for p, q in pairs:
        validate_pair(p, q, n)
    partition = default_partition(grid, partition)
    dt = traj.frame_dt
    bands = lp_bands(grid, traj.u, partition)
    rep = NormReport("s_norm", n, notes={"dimension": dimension_note(n), "pairs": list(pairs)})
    strich = {f"strichartz_{_fmt(p)}_{_fmt(q)}": {} for p, q in pairs}
    sup, xs, total = {}, {}, {}
    for k, uk in bands.items():
        grad = spacetime_gradient(grid, uk, dt)
        vals = []
        for p, q in pairs:
            v = 2.0 ** (strichartz_weight(p, q, n) * k) * mixed_norm(grid, grad, dt, p, q)
            strich[f"strichartz_{_fmt(p)}_{_fmt(q)}"][k] = v
            vals.append(v)
        sup[k] = max(vals)
        xs[k] = xsb_norm(space_time_transform(grid, grad, dt), n / 2.0 - 1.0, 0.5, "sup")
        total[k] = sup[k] + xs[k]
    rep.bands.update(strich)
    rep.bands.update({"strichartz_sup": sup, "xsb_component": xs, "s_k": total})
    rep.aggregates["s_norm"] = float(sum(total.values()))
    return rep


def _l1_sobolev(grid, frames, dt, s):
    return time_lp(sg.sobolev_seminorm(grid, frames, s), dt, 1.0)


def n_norm(grid, forcing, dt, partition=None):
    """``sum_k`` of the ``L^1_t H^{n/2-1} + X^{n/2-1, -1/2, 1}`` norm of ``P_k F``.

    The sum-space infimum is taken over splits at a modulation threshold
    ``j0``: ``Q_{<j0}`` (plus the exact cone) goes to ``L^1 H`` and
    ``Q_{>=j0}`` to ``X``.  The split is applied to the windowed forcing,
    and the family includes both pure choices.
    """
    n = grid.dim
    s = n / 2.0 - 1.0
    partition = default_partition(grid, partition)
    forcing = np.asarray(forcing, dtype=float)
    rep = NormReport("n_norm", n, notes={"dimension": dimension_note(n), "window": "hann"})
    best, pure_l1, pure_x, split = {}, {}, {}, {}
    k_mag = grid.kmag
    wsob = np.zeros_like(k_mag)
    nz = k_mag > 0
    wsob[nz] = k_mag[nz] ** s
    for k, fk in lp_bands(grid, forcing, partition).items():
        sts = space_time_transform(grid, fk, dt)
        mpart = sts.modulation_partition()
        d = sts.cone_distance
        syms = {j: mpart.symbol(j, d)[:, None] for j in mpart.bands}
        weighted = sts.coeffs * wsob[None, None]
        base = windowed_frames(sts, fk)
        candidates = {}
        for j0 in range(mpart.kmin, mpart.kmax + 2):
            high_sym = sum((syms[j] for j in mpart.bands if j >= j0), start=np.zeros_like(d)[:, None])
            high_coeffs = sts.coeffs * high_sym
            high = sts.to_physical(high_coeffs)
            low = base - high
            x_part = sum(2.0 ** (-0.5 * j) * sts.l2_norm(weighted * high_sym * syms[j]) for j in mpart.bands)
            candidates[j0] = _l1_sobolev(grid, low, dt, s) + x_part
        j_best = min(candidates, key=candidates.get)
        best[k] = candidates[j_best]
        split[k] = j_best
        pure_l1[k] = candidates[mpart.kmax + 1]
        pure_x[k] = candidates[mpart.kmin]
    rep.bands.update({"n_k": best, "pure_l1": pure_l1, "pure_x": pure_x, "split_j0": split})
    rep.aggregates["n_norm"] = float(sum(best.values()))
    rep.aggregates["pure_l1"] = float(sum(pure_l1.values()))
    rep.aggregates["pure_x"] = float(sum(pure_x.values()))
    return rep


def data_norm(grid, u0, u1):
    """``||u0||_{H^{n/2}} + ||u1||_{H^{n/2-1}}`` (homogeneous, zero mode dropped)."""
    n = grid.dim
    return float(sg.sobolev_seminorm(grid, u0, n / 2.0) + sg.sobolev_seminorm(grid, u1, n / 2.0 - 1.0))


def besov_data_norm(grid, u0, u1, partition=None):
    n = grid.dim
    return besov_norm(grid, u0, n / 2.0, partition) + besov_norm(grid, u1, n / 2.0 - 1.0, partition)


def _fmt(x):
    return "inf" if np.isinf(x) else f"{x:g}"


def write_norm_report_csv(path, reports):
    """One row per ``(band k, quantity)`` followed by one ``aggregate`` row per value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["report", "k", "quantity", "value"])
        for rep in reports:
            for quantity, per in rep.bands.items():
                for k, v in sorted(per.items()):
                    w.writerow([rep.kind, k, quantity, f"{float(v):.17g}"])
            for quantity, v in rep.aggregates.items():
                w.writerow([rep.kind, "aggregate", quantity, f"{float(v):.17g}"])
            if rep.sigma_decay is not None:
                w.writerow([rep.kind, "aggregate", "sigma_decay", f"{float(rep.sigma_decay):.17g}"])
