"""The second-order wave form of the half-wave map flow and its consistency checks.

For a sphere-valued ``u`` solving ``u_t = u x L u`` with ``L = (-Laplacian)^(1/2)``,

    (d_t^2 - Laplacian) u = u (grad u . grad u - u_t . u_t)
                          + P_perp(u)[L u] (u . L u)
                          + u x L(u x L u) - u x (u x (-Laplacian) u)

where ``grad`` is spatial only and ``P_perp(u)`` projects onto the plane normal
to ``u``.  Nothing here integrates this equation; see :mod:`halfwave.picard_iteration`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import spectral_grid as sg
from .errors import InsufficientDataError, InvalidInputError
from .halfwave_core import project_to_sphere, rhs_halfwave


def _expand(grid, scalar):
    return np.expand_dims(scalar, sg.component_axis(grid))


def projector_perp(grid, base, v, min_modulus=0.5):
    """``v - base (base . v) / |base|^2`` pointwise."""
    b2 = sg.dot(grid, base, base)
    if np.sqrt(b2.min()) < min_modulus:
        raise InvalidInputError(f"projector base has |base| < {min_modulus}")
    return v - base * _expand(grid, sg.dot(grid, base, v) / b2)


def half_laplacian(grid, u):
    return sg.frac_laplacian(grid, u, 0.5)


def commutator_term(grid, u, lam=None):
    """``u x L(u x L u) - u x (u x (-Laplacian) u)``."""
    if lam is None:
        lam = half_laplacian(grid, u)
    inner = half_laplacian(grid, sg.cross(grid, u, lam))
    return sg.cross(grid, u, inner) - sg.cross(grid, u, sg.cross(grid, u, sg.frac_laplacian(grid, u, 1.0)))


def null_form(grid, u, ut):
    """``grad u . grad u - u_t . u_t`` with spatial derivatives only."""
    grads = sg.gradient(grid, u)
    return sum(sg.dot(grid, g, g) for g in grads) - sg.dot(grid, ut, ut)


def wave_rhs_terms(grid, u, ut, dealias=False):
    """The three lines of the wave form, returned separately."""
    u = sg.check_field(grid, u, "u")
    ut = sg.check_field(grid, ut, "ut")
    lam = half_laplacian(grid, u)
    wave_map = u * _expand(grid, null_form(grid, u, ut))
    projected = projector_perp(grid, u, lam) * _expand(grid, sg.dot(grid, u, lam))
    comm = commutator_term(grid, u, lam)
    terms = [wave_map, projected, comm]
    if dealias:
        terms = [sg.dealias(grid, t) for t in terms]
    return terms


def wave_rhs(grid, u, ut, dealias=False):
    a, b, c = wave_rhs_terms(grid, u, ut, dealias)
    return a + b + c


def first_line_unprojected(grid, u, lam=None):
    """``-u (L u . L u) + L u (u . L u)``, the form before the ``u``/normal split."""
    if lam is None:
        lam = half_laplacian(grid, u)
    return -u * _expand(grid, sg.dot(grid, lam, lam)) + lam * _expand(grid, sg.dot(grid, u, lam))


def triple_product_defect(grid, a, b, c):
    """``max | a x (b x c) - (b (a.c) - c (a.b)) |`` over the lattice."""
    lhs = sg.cross(grid, a, sg.cross(grid, b, c))
    rhs = b * _expand(grid, sg.dot(grid, a, c)) - c * _expand(grid, sg.dot(grid, a, b))
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


@dataclass
class IdentityReport:
    triple_product: float
    constraint_identity: float
    dot_identity: float
    random_triples: int = 0

    def as_row(self):
        return {
            "triple_product_defect": self.triple_product,
            "laplace_constraint_defect": self.constraint_identity,
            "dot_identity_defect": self.dot_identity,
        }


def check_derivation_identities(grid, u, rng=None, n_random=0):
    """Evaluate the algebraic steps leading to the wave form.

    ``u`` is first projected exactly onto the sphere.  The triple-product
    defect is taken over the triple ``(L u, u, L u)`` that the derivation
    uses, plus ``n_random`` uniformly random triples when ``rng`` is given.
    """
    u = project_to_sphere(grid, sg.check_field(grid, u, "u"))
    lam = half_laplacian(grid, u)
    triple = triple_product_defect(grid, lam, u, lam)
    if rng is not None and n_random:
        a, b, c = rng.uniform(-1.0, 1.0, size=(3, 3, n_random))
        triple = max(triple, _random_triple_defect(a, b, c))
    grads = sg.gradient(grid, u)
    constraint = sg.dot(grid, u, sg.laplacian(grid, u)) + sum(sg.dot(grid, g, g) for g in grads)
    ut = sg.cross(grid, u, lam)
    dot_defect = sg.dot(grid, first_line_unprojected(grid, u, lam), u) + sg.dot(grid, ut, ut)
    return IdentityReport(
        triple_product=triple,
        constraint_identity=float(np.max(np.abs(constraint))),
        dot_identity=float(np.max(np.abs(dot_defect))),
        random_triples=int(n_random) if rng is not None else 0,
    )


def _random_triple_defect(a, b, c):
    lhs = np.cross(a, np.cross(b, c, axis=0), axis=0)
    rhs = b * (a * c).sum(0) - c * (a * b).sum(0)
    return float(np.abs(lhs - rhs).max())


def x_residual(grid, u, ut):
    """``X = u_t - u x L u``; vanishes identically for half-wave solutions."""
    return sg.check_field(grid, ut, "ut") - rhs_halfwave(grid, u, constraint_limit=None)


def tilde_energy_exponent(n):
    return n / 4.0 - 0.75


def tilde_energy(grid, X, n=None):
    """``(1/2) integral |(-Laplacian)^(n/4 - 3/4) X|^2`` by Parseval, zero mode dropped.

    For ``n < 3`` the power is negative and is applied to nonzero modes only.
    """
    if n is None:
        n = grid.dim
    if n != grid.dim:
        raise InvalidInputError(f"dimension {n} does not match the lattice ({grid.dim})")
    return 0.5 * sg.sobolev_seminorm(grid, X, 2.0 * tilde_energy_exponent(n)) ** 2


@dataclass
class ResidualReport:
    t: np.ndarray
    x_l2: np.ndarray
    tilde_e: np.ndarray
    wave_residual_l2: np.ndarray
    orders: dict = field(default_factory=dict)

    @property
    def max_x_l2(self):
        return float(np.max(self.x_l2))

    @property
    def max_tilde_e(self):
        return float(np.max(self.tilde_e))

    @property
    def max_wave_residual(self):
        return float(np.nanmax(self.wave_residual_l2))


def frame_residuals(grid, traj, dealias=False):
    """``|| d_t^2 u - Laplacian u - wave_rhs ||_{L^2}`` at the interior frames (NaN at the ends)."""
    if len(traj) < 5:
        raise InsufficientDataError(f"need at least 5 frames, got {len(traj)}")
    h = traj.frame_dt
    u, ut = traj.u, traj.ut
    utt = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    inner = u[1:-1]
    res = utt - sg.laplacian(grid, inner) - wave_rhs(grid, inner, ut[1:-1], dealias)
    out = np.full(len(traj), np.nan)
    out[1:-1] = sg.l2_norm(grid, res)
    return out


def wave_residual(grid, traj, refined=None, dealias=False):
    """Residual report for ``traj``; with ``refined`` (frame spacing halved) also the measured order."""
    res = frame_residuals(grid, traj, dealias)
    X = x_residual(grid, traj.u, traj.ut)
    report = ResidualReport(
        t=np.asarray(traj.t, dtype=float),
        x_l2=sg.l2_norm(grid, X),
        tilde_e=tilde_energy(grid, X),
        wave_residual_l2=res,
    )
    if refined is not None:
        fine = frame_residuals(grid, refined, dealias)
        h_c, h_f = traj.frame_dt, refined.frame_dt
        common = _common_interior(traj.t, refined.t)
        coarse_peak = np.nanmax(res[common[0]])
        fine_peak = np.nanmax(fine[common[1]])
        report.orders["wave_residual"] = float(np.log(coarse_peak / fine_peak) / np.log(h_c / h_f))
    return report


def _common_interior(tc, tf):
    ic, jf = [], []
    for i, t in enumerate(tc[1:-1], start=1):
        j = int(np.argmin(np.abs(tf - t)))
        if abs(tf[j] - t) < 1e-9 and 0 < j < len(tf) - 1:
            ic.append(i)
            jf.append(j)
    if not ic:
        raise InsufficientDataError("trajectories share no interior frame times")
    return np.array(ic), np.array(jf)


RESIDUAL_COLUMNS = ("t", "x_l2", "tilde_e", "wave_residual_l2")


def write_residual_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESIDUAL_COLUMNS)
        for row in zip(report.t, report.x_l2, report.tilde_e, report.wave_residual_l2):
            w.writerow([f"{float(v):.17g}" for v in row])
