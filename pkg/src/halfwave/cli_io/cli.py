"""Command-line entry point: ``halfwave {evolve,analyze,iterate,probe,identities}``.

Every command reads one config file (or a ``manifest.json`` from an earlier
run) and writes a run directory holding ``manifest.json``, binary
snapshots under ``snapshots/`` and CSV tables.  Outputs depend only on the
effective config, so re-running from a manifest reproduces them bit for bit.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys

import numpy as np

from .. import __version__
from .. import halfwave_core as hc
from .. import lp_analysis as lp
from .. import picard_iteration as pi
from .. import spectral_grid as sg
from .. import wave_reform as wr
from ..errors import ConfigError, DivergenceError, HalfwaveError, InvalidInputError, NonContractionError
from .config import RunConfig
from .datum import generate_datum

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_NONCONTRACTION = 0, 2, 3, 4
COMMANDS = ("evolve", "analyze", "iterate", "probe", "identities")
MANIFEST = "manifest.json"

log = logging.getLogger("halfwave")


def fmt(x):
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def load_config(path):
    """Read a config file, or the effective config stored in a manifest."""
    if not os.path.exists(path):
        raise ConfigError("--config", f"no such file: {path}")
    if path.endswith(".json"):
        with open(path) as fh:
            try:
                manifest = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("--config", f"{path} is not valid JSON: {exc}") from None
        if "config" not in manifest:
            raise ConfigError("config", f"{path} holds no config copy")
        return RunConfig.from_text(manifest["config"]), manifest.get("command")
    return RunConfig.load(path), None


class RunDir:
    def __init__(self, root):
        self.root = root
        self.outputs = []
        os.makedirs(os.path.join(root, "snapshots"), exist_ok=True)

    def path(self, name):
        self.outputs.append(name)
        return os.path.join(self.root, name)

    def snapshot(self, name, grid, f):
        sg.write_snapshot(self.path(f"snapshots/{name}"), grid, f)

    def manifest(self, command, cfg, extra=None):
        body = {
            "command": command,
            "config": cfg.to_text(),
            "seeds": {"seed": cfg["seeds.seed"]},
            "versions": {"halfwave": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "outputs": sorted(self.outputs),
        }
        if extra:
            body.update(extra)
        with open(os.path.join(self.root, MANIFEST), "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _frames_record(prefix, t):
    return [{"t": float(tt), "snapshot": f"snapshots/{prefix}_{i:05d}.hwm"} for i, tt in enumerate(t)]


# commands


def cmd_evolve(cfg, run):
    grid = cfg.grid()
    data = generate_datum(cfg.datum_spec(), grid)
    params = cfg.evolution_params()
    if params.steps == 0:
        run.snapshot("u_00000.hwm", grid, data.u0)
        return {"frames": _frames_record("u", [0.0])}
    traj = hc.evolve(grid, hc.State(0.0, data.u0), params)
    for i, u in enumerate(traj.u):
        run.snapshot(f"u_{i:05d}.hwm", grid, u)
    hc.write_diagnostics_csv(run.path("diagnostics.csv"), hc.diagnostics(grid, traj))
    if len(traj) >= 5:
        wr.write_residual_csv(run.path("residual.csv"), wr.wave_residual(grid, traj))
    log.info("evolve: %d frames, energy drift %.3g", len(traj),
             float(np.max(np.abs(hc.energy(grid, traj.u) / hc.energy(grid, traj.u[0]) - 1.0))))
    return {"frames": _frames_record("u", traj.t)}


def load_run(cfg, run_dir):
    """Trajectory stored in an earlier run directory, checked against the config grid."""
    path = os.path.join(run_dir, MANIFEST)
    if not os.path.exists(path):
        raise ConfigError("analysis.run_dir", f"no {MANIFEST} in {run_dir!r}")
    with open(path) as fh:
        manifest = json.load(fh)
    frames = manifest.get("frames")
    if not frames:
        raise ConfigError("analysis.run_dir", f"{run_dir!r} records no frames")
    grid = cfg.grid()
    us, uts = [], []
    for fr in frames:
        g, u = sg.read_snapshot(os.path.join(run_dir, fr["snapshot"]))
        if g.points != grid.points or g.lengths != grid.lengths:
            raise ConfigError("grid.points", f"snapshot grid {g.points} / {g.lengths} does not match the "
                                             f"config grid {grid.points} / {grid.lengths}")
        us.append(u)
        ut_name = fr.get("ut_snapshot")
        if ut_name:
            uts.append(sg.read_snapshot(os.path.join(run_dir, ut_name))[1])
    u = np.stack(us)
    ut = np.stack(uts) if uts else hc.rhs_halfwave(grid, u, constraint_limit=None)
    t = np.array([fr["t"] for fr in frames])
    return sg.Trajectory(grid, t, u, ut, meta={"source": run_dir})


def cmd_analyze(cfg, run):
    if not cfg["analysis.run_dir"]:
        raise ConfigError("analysis.run_dir", "analyze needs the run directory of a stored trajectory")
    traj = load_run(cfg, cfg["analysis.run_dir"])
    grid = traj.grid
    part = cfg.partition(grid)
    hc.write_diagnostics_csv(run.path("diagnostics.csv"), hc.diagnostics(grid, traj))
    reports = []
    if len(traj) >= lp.MIN_FRAMES:
        reports.append(lp.s_norm(grid, traj, cfg.pairs(), part))
        for p, q in cfg.pairs() or lp.default_pairs(grid.dim):
            reports.append(lp.strichartz_norm(grid, traj, p, q, partition=part))
    if len(traj) >= lp.MIN_FRAMES + 2:
        h = traj.frame_dt
        box = (traj.u[2:] - 2 * traj.u[1:-1] + traj.u[:-2]) / h**2 - sg.laplacian(grid, traj.u[1:-1])
        reports.append(lp.n_norm(grid, box, h, part))
    data = lp.NormReport("data_besov", grid.dim, notes={"dimension": lp.dimension_note(grid.dim)})
    u0, u1 = traj.u[0], traj.ut[0]
    data.aggregates["data_besov"] = lp.besov_norm(grid, u0 - sg.lattice_mean(grid, u0), grid.dim / 2.0, part,
                                                  cfg["analysis.tail_threshold"]) \
        + lp.besov_norm(grid, u1, grid.dim / 2.0 - 1.0, part, cfg["analysis.tail_threshold"])
    data.aggregates["data_sobolev"] = lp.data_norm(grid, u0, u1)
    reports.append(data)
    lp.write_norm_report_csv(run.path("norms.csv"), reports)
    if len(traj) >= 5:
        wr.write_residual_csv(run.path("residual.csv"), wr.wave_residual(grid, traj))
    log.info("analyze: %d frames from %s", len(traj), cfg["analysis.run_dir"])
    return {"source_run": cfg["analysis.run_dir"]}


def cmd_iterate(cfg, run):
    grid = cfg.grid()
    data = generate_datum(cfg.datum_spec(), grid)
    compatible = cfg["datum.u1_normal"] == 0.0
    try:
        state = pi.halfwave_iterate(grid, data, cfg["iterate.T"], cfg["iterate.dt"], cfg["iterate.tol_outer"],
                                    cfg["iterate.tol_inner"], dealias=cfg["iterate.dealias"],
                                    outer_cap=cfg["iterate.outer_cap"], inner_cap=cfg["iterate.inner_cap"],
                                    validate=compatible)
    except NonContractionError as exc:
        if exc.state is not None:
            pi.write_iteration_log(run.path("iteration_log.csv"), exc.state.log)
        raise
    pi.write_iteration_log(run.path("iteration_log.csv"), state.log)
    rep = pi.sphere_propagation_check(grid, state)
    write_csv(run.path("sphere.csv"), ("t", "g_sup", "box_g_residual"), zip(rep.t, rep.g_sup, rep.residual))
    traj = state.current
    for i in range(len(traj)):
        run.snapshot(f"u_{i:05d}.hwm", grid, traj.u[i])
        run.snapshot(f"ut_{i:05d}.hwm", grid, traj.ut[i])
    frames = _frames_record("u", traj.t)
    for i, fr in enumerate(frames):
        fr["ut_snapshot"] = f"snapshots/ut_{i:05d}.hwm"
    log.info("iterate: j=%d converged=%s capped=%s", state.j, state.converged, state.capped)
    return {"frames": frames, "converged": state.converged, "capped": state.capped}


def _energy_samples(cfg, grid):
    rng_seed = cfg["seeds.seed"]
    T, dt, amp = cfg["probe.T"], cfg["probe.dt"], cfg["probe.amplitude"]
    p = np.asarray(cfg["datum.p"], dtype=float).reshape((3,) + (1,) * grid.dim)
    for i in range(cfg["probe.samples"]):
        rng = np.random.default_rng(rng_seed + i)
        v = lp.random_field(grid, rng, ncomp=3, decay=2.0 + grid.dim)
        v = amp * v / np.max(np.abs(v))
        u0 = hc.project_to_sphere(grid, p + v)
        w = lp.random_field(grid, rng, ncomp=3, decay=1.0 + grid.dim)
        u1 = wr.projector_perp(grid, u0, amp * w / np.max(np.abs(w)))
        yield rng_seed + i, pi.linear_wave_solve(grid, pi.WaveData(u0, u1), None, T, dt), None


def cmd_probe(cfg, run):
    grid = cfg.grid()
    part = cfg.partition(grid)
    if cfg["probe.kind"] == "bilinear":
        for key in ("probe.k1", "probe.k2"):
            if cfg[key] not in part.bands:
                raise ConfigError(key, f"band {cfg[key]} outside {part.kmin}..{part.kmax}")
        rows, exponent = lp.product_bound_probe(grid, cfg["probe.k1"], cfg["probe.k2"], cfg["probe.gammas"],
                                                cfg["probe.samples"], cfg["seeds.seed"], partition=part)
        write_csv(run.path("probe.csv"), ("seed", "gamma", "lhs", "rhs", "ratio"),
                  ((str(r.seed), r.gamma, r.lhs, r.rhs, r.ratio) for r in rows))
        log.info("probe: gamma exponent %.4f", exponent)
        return {"gamma_exponent": exponent}
    rows = lp.energy_inequality_probe(grid, list(_energy_samples(cfg, grid)), cfg.pairs(), part)
    lp.write_energy_probe_csv(run.path("energy_probe.csv"), rows)
    return {"max_ratio": max(r.ratio for r in rows)}


IDENTITY_COLUMNS = ("triple_product", "constraint_identity", "dot_identity", "band_identity_global",
                    "band_identity_localized", "lp_partition")


def cmd_identities(cfg, run):
    grid = cfg.grid()
    part = cfg.partition(grid)
    data = generate_datum(cfg.datum_spec(), grid)
    n_random = cfg["identities.n_random"]
    rng = np.random.default_rng(cfg["seeds.seed"]) if n_random else None
    ids = wr.check_derivation_identities(grid, data.u0, rng, n_random)
    orth = lp.orthogonality_check(grid, data.u0, width=cfg["identities.width"], gap=cfg["identities.gap"],
                                  partition=part)
    f = data.u0
    recon = sum(lp.lp_bands(grid, f, part).values())
    pou = float(np.max(np.abs(recon - (f - sg.lattice_mean(grid, f)))))
    row = (ids.triple_product, ids.constraint_identity, ids.dot_identity, orth.global_defect,
           orth.max_localized_defect, pou)
    write_csv(run.path("identities.csv"), IDENTITY_COLUMNS, [row])
    log.info("identities: max defect %.3g", max(row))
    return {}


HANDLERS = {"evolve": cmd_evolve, "analyze": cmd_analyze, "iterate": cmd_iterate,
            "probe": cmd_probe, "identities": cmd_identities}


def build_parser():
    p = argparse.ArgumentParser(prog="halfwave", description="Half-wave map laboratory runs")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="config file or manifest.json of a run")
    p.add_argument("--out", metavar="DIR", default=None, help="run directory (default runs/<command>)")
    p.add_argument("--seed", type=int, default=None, help="override seeds.seed")
    p.add_argument("--quiet", action="store_true", help="suppress progress messages")
    return p


def run_command(command, cfg, out):
    run = RunDir(out)
    extra = HANDLERS[command](cfg, run) or {}
    run.manifest(command, cfg, extra)
    return run


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        cfg, recorded = load_config(args.config)
        if recorded is not None and recorded != args.command:
            raise ConfigError("command", f"manifest was written by {recorded!r}, not {args.command!r}")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seeds.seed", "must be >= 0")
            cfg = cfg.with_value("seeds.seed", args.seed)
        out = args.out or os.path.join("runs", args.command)
        run_command(args.command, cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except NonContractionError as exc:
        print(f"outside the small-data regime: {exc}", file=sys.stderr)
        return EXIT_NONCONTRACTION
    except (InvalidInputError, HalfwaveError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
