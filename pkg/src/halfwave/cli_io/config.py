"""Flat ``section.key = value`` run configuration.

One entry per line, ``#`` starts a comment.  Values are typed by the schema
below; floats are written with ``repr`` so every value round-trips exactly.
Lists are comma separated.  ``auto`` is accepted where a key is optional.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .. import spectral_grid as sg
from ..errors import ConfigError
from ..halfwave_core import EvolutionParams
from ..lp_analysis.partition import DyadicPartition
from .datum import U1_MODES, DatumSpec

AUTO = "auto"

# key: (kind, default); default None marks a required key
SCHEMA = {
    "grid.dim": ("int", None),
    "grid.points": ("ints", None),
    "grid.lengths": ("floats", None),
    "datum.p": ("floats", (0.0, 0.0, 1.0)),
    "datum.center": ("floats?", AUTO),
    "datum.radius": ("pos", 3.0),
    "datum.amplitude": ("floats", (0.05, 0.0)),
    "datum.u1_mode": ("choice:" + "|".join(U1_MODES), "compatible"),
    "datum.u1_normal": ("float", 0.0),
    "evolve.dt": ("pos", 1e-3),
    "evolve.steps": ("count", 1000),
    "evolve.record_every": ("posint", 10),
    "evolve.project_each_step": ("bool", False),
    "evolve.dealias": ("bool", False),
    "analysis.run_dir": ("str", ""),
    "analysis.kmin": ("int?", AUTO),
    "analysis.kmax": ("int?", AUTO),
    "analysis.pairs": ("pairs", AUTO),
    "analysis.window": ("choice:hann", "hann"),
    "analysis.tail_threshold": ("pos", 1e-12),
    "iterate.T": ("pos", 0.5),
    "iterate.dt": ("pos", 1e-3),
    "iterate.tol_outer": ("pos", 1e-7),
    "iterate.tol_inner": ("pos", 1e-8),
    "iterate.dealias": ("bool", True),
    "iterate.outer_cap": ("posint", 15),
    "iterate.inner_cap": ("posint", 25),
    "probe.kind": ("choice:bilinear|energy", "bilinear"),
    "probe.k1": ("int", 3),
    "probe.k2": ("int", 3),
    "probe.samples": ("posint", 100),
    "probe.gammas": ("floats", (1.0, 0.1, 0.01)),
    "probe.amplitude": ("pos", 0.05),
    "probe.T": ("pos", 0.5),
    "probe.dt": ("pos", 1e-2),
    "identities.n_random": ("count", 0),
    "identities.width": ("posint", 10),
    "identities.gap": ("posint", 10),
    "seeds.seed": ("count", 0),
}


def _parse(key, kind, text):
    text = text.strip()
    try:
        if kind.endswith("?"):
            return AUTO if text == AUTO else _parse(key, kind[:-1], text)
        if kind in ("int", "count", "posint"):
            v = int(text)
            if kind == "count" and v < 0 or kind == "posint" and v < 1:
                raise ValueError(f"must be {'>= 0' if kind == 'count' else '>= 1'}")
            return v
        if kind in ("float", "pos"):
            v = float(text)
            if not math.isfinite(v):
                raise ValueError("must be finite")
            if kind == "pos" and v <= 0:
                raise ValueError("must be positive")
            return v
        if kind == "ints":
            return tuple(int(s) for s in text.split(","))
        if kind == "floats":
            vals = tuple(float(s) for s in text.split(","))
            if not all(math.isfinite(v) for v in vals):
                raise ValueError("entries must be finite")
            return vals
        if kind == "bool":
            if text not in ("true", "false"):
                raise ValueError("must be true or false")
            return text == "true"
        if kind == "str":
            return text
        if kind.startswith("choice:"):
            options = kind[len("choice:"):].split("|")
            if text not in options:
                raise ValueError(f"must be one of {options}")
            return text
        if kind == "pairs":
            if text == AUTO:
                return AUTO
            pairs = []
            for item in text.split(","):
                p, q = item.split(":")
                pairs.append((float(p), float(q)))
            return tuple(pairs)
    except ValueError as exc:
        raise ConfigError(key, f"cannot read {text!r}: {exc}") from None
    raise ConfigError(key, f"unknown kind {kind}")


def _format(kind, value):
    if value == AUTO:
        return AUTO
    if kind.endswith("?"):
        kind = kind[:-1]
    if kind in ("float", "pos"):
        return repr(float(value))
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "ints":
        return ", ".join(str(int(v)) for v in value)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "pairs":
        return ", ".join(f"{repr(float(p))}:{repr(float(q))}" for p, q in value)
    return str(value)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_text(cls, text):
        seen = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected 'section.key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(key, "unknown key")
            if key in seen:
                raise ConfigError(key, f"given twice (lines {seen[key][0]} and {lineno})")
            seen[key] = (lineno, value)
        values = {}
        for key, (kind, default) in SCHEMA.items():
            if key in seen:
                values[key] = _parse(key, kind, seen[key][1])
            elif default is None:
                raise ConfigError(key, "missing required key")
            else:
                values[key] = default
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self):
        lines = []
        section = None
        for key, (kind, _) in SCHEMA.items():
            head = key.split(".", 1)[0]
            if head != section:
                if section is not None:
                    lines.append("")
                section = head
            lines.append(f"{key} = {_format(kind, self.values[key])}")
        return "\n".join(lines) + "\n"

    def with_value(self, key, value):
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        values = dict(self.values)
        values[key] = value
        cfg = RunConfig(values)
        cfg.validate()
        return cfg

    def validate(self):
        v = self.values
        dim = v["grid.dim"]
        if dim < 1:
            raise ConfigError("grid.dim", "must be >= 1")
        for key in ("grid.points", "grid.lengths"):
            if len(v[key]) != dim:
                raise ConfigError(key, f"needs {dim} entries, got {len(v[key])}")
        try:
            self.grid()
        except ValueError as exc:
            raise ConfigError("grid.points", str(exc)) from None
        if v["datum.center"] != AUTO and len(v["datum.center"]) != dim:
            raise ConfigError("datum.center", f"needs {dim} entries")
        if len(v["datum.p"]) != 3:
            raise ConfigError("datum.p", "needs 3 entries")
        if abs(math.sqrt(sum(c * c for c in v["datum.p"])) - 1.0) > 1e-12:
            raise ConfigError("datum.p", "must be a unit vector")
        if len(v["datum.amplitude"]) != 2:
            raise ConfigError("datum.amplitude", "needs 2 entries")
        if v["datum.u1_mode"] == "user":
            raise ConfigError("datum.u1_mode", "'user' data cannot be given in a config file")
        if any(g <= 0 for g in v["probe.gammas"]):
            raise ConfigError("probe.gammas", "entries must be positive")

    # typed views

    def grid(self):
        return sg.GridSpec(self["grid.dim"], tuple(self["grid.points"]), tuple(self["grid.lengths"]))

    def datum_spec(self):
        center = None if self["datum.center"] == AUTO else tuple(self["datum.center"])
        return DatumSpec(p=tuple(self["datum.p"]), center=center, radius=self["datum.radius"],
                         amplitude=tuple(self["datum.amplitude"]), u1_mode=self["datum.u1_mode"],
                         u1_normal=self["datum.u1_normal"])

    def evolution_params(self):
        return EvolutionParams(dt=self["evolve.dt"], steps=self["evolve.steps"],
                               project_each_step=self["evolve.project_each_step"],
                               record_every=self["evolve.record_every"], dealias=self["evolve.dealias"])

    def partition(self, grid):
        auto = DyadicPartition.for_grid(grid)
        kmin = auto.kmin if self["analysis.kmin"] == AUTO else self["analysis.kmin"]
        kmax = auto.kmax if self["analysis.kmax"] == AUTO else self["analysis.kmax"]
        if kmax < kmin:
            raise ConfigError("analysis.kmax", f"band range {kmin}..{kmax} is empty")
        return DyadicPartition(kmin, kmax)

    def pairs(self):
        return None if self["analysis.pairs"] == AUTO else list(self["analysis.pairs"])


def reference_config_text(dim=1, points=128):
    """The reference small-bump run as config text."""
    pts = ", ".join([str(points)] * dim)
    lengths = ", ".join([repr(2 * math.pi)] * dim)
    return f"grid.dim = {dim}\ngrid.points = {pts}\ngrid.lengths = {lengths}\n"
