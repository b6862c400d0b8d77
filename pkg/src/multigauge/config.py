"""Run configuration: JSON schema, defaults, hashing and object construction.

Example::

    {
      "potential": {"kind": "double_well", "gamma": 64},
      "modes": {"omegas": [1, 20], "g": 0.6},
      "gauge": {"eta": [1, 1],
                "axes": [1.0, {"lo": 0, "hi": 1, "step": 0.05}],
                "metrics": ["sigma", "infidelity", "entropy_gap"]},
      "truncation": {"basis_kind": "bare", "M_levels": 2, "M_energies": 7},
      "numerics": {"grid": {"half_width": 3.5, "n_points": 64, "scheme": "fourier"},
                   "cutoffs": [10, 10], "tol": 1e-6, "max_dim": 4000000},
      "output": "out"
    }

Frequencies and g are in units of the bare transition energy Delta.
"""
from __future__ import annotations

import copy
import hashlib
import json

import jsonschema

from . import __version__
from .atom import DoubleWell, Harmonic, PotentialSpec, Tabulated
from .hamiltonian import BASIS_KINDS, cavity_system
from .photon import DEFAULT_MAX_DIM
from .sweep import METRICS, Fixed, Range, SweepPlan

_POS = {"type": "number", "exclusiveMinimum": 0}
_ETA = {"type": "number"}
_RANGE = {
    "type": "object",
    "properties": {"lo": _ETA, "hi": _ETA, "step": _POS, "n_steps": {"type": "integer", "minimum": 2}},
    "required": ["lo", "hi"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "potential": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["double_well", "harmonic", "tabulated"]},
                "gamma": _POS,
                "B": _POS,
                "C": _POS,
                "omega0": _POS,
                "file": {"type": "string"},
                "shift": {"type": "number"},
                "tilt": {"type": "number"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "modes": {
            "type": "object",
            "properties": {
                "omegas": {"type": "array", "items": _POS, "minItems": 1},
                "g": {"type": "number", "minimum": 0},
            },
            "required": ["omegas", "g"],
            "additionalProperties": False,
        },
        "gauge": {
            "type": "object",
            "properties": {
                "eta": {"type": "array", "items": _ETA},
                "axes": {"type": "array", "items": {"oneOf": [_ETA, _RANGE]}},
                "metrics": {"type": "array", "items": {"enum": list(METRICS)}, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "truncation": {
            "type": "object",
            "properties": {
                "basis_kind": {"enum": list(BASIS_KINDS)},
                "M_levels": {"type": "integer", "minimum": 2},
                "M_energies": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "numerics": {
            "type": "object",
            "properties": {
                "grid": {
                    "type": "object",
                    "properties": {
                        "half_width": _POS,
                        "n_points": {"type": "integer", "minimum": 16},
                        "scheme": {"enum": ["fourier", "fd2"]},
                    },
                    "additionalProperties": False,
                },
                "cutoffs": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "tol": _POS,
                "max_dim": {"type": "integer", "minimum": 1},
                "max_points": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "output": {"type": "string"},
    },
    "required": ["potential", "modes"],
    "additionalProperties": False,
}

DEFAULTS = {
    "gauge": {"metrics": list(METRICS)},
    "truncation": {"basis_kind": "bare", "M_levels": 2, "M_energies": 7},
    "numerics": {
        "grid": {"half_width": 3.5, "n_points": 64, "scheme": "fourier"},
        "tol": 1e-6,
        "max_dim": DEFAULT_MAX_DIM,
        "max_points": 20_000,
    },
    "output": "out",
}


class ConfigError(ValueError):
    pass


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(raw):
    """Raise ConfigError listing every schema violation with its field path."""
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        msgs = [f"{'.'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(msgs))
    pot = raw["potential"]
    if pot["kind"] == "double_well" and "gamma" not in pot and "B" not in pot:
        raise ConfigError("potential: double_well needs 'gamma' or 'B'")
    if pot["kind"] == "harmonic" and "omega0" not in pot:
        raise ConfigError("potential: harmonic needs 'omega0'")
    if pot["kind"] == "tabulated" and "file" not in pot:
        raise ConfigError("potential: tabulated needs 'file'")
    K = len(raw["modes"]["omegas"])
    for key in ("eta", "axes"):
        seq = raw.get("gauge", {}).get(key)
        if seq is not None and len(seq) != K:
            raise ConfigError(f"gauge.{key}: expected {K} entries (one per mode), got {len(seq)}")
    cut = raw.get("numerics", {}).get("cutoffs")
    if cut is not None and len(cut) != K:
        raise ConfigError(f"numerics.cutoffs: expected {K} entries, got {len(cut)}")


class RunConfig:
    """Validated configuration with defaults filled in."""

    def __init__(self, raw):
        validate(raw)
        self.data = _merge(DEFAULTS, raw)
        num = self.data["numerics"]
        num.setdefault("cutoffs", [10] * self.n_modes)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls(raw)

    @classmethod
    def from_dict(cls, raw):
        return cls(raw)

    def to_dict(self):
        return copy.deepcopy(self.data)

    def updated(self, **sections):
        return RunConfig(_merge(self.data, sections))

    @property
    def n_modes(self):
        return len(self.data["modes"]["omegas"])

    @property
    def tol(self):
        return float(self.data["numerics"]["tol"])

    @property
    def output(self):
        return self.data["output"]

    # -- hashing -----------------------------------------------------------

    def physics(self):
        """The subsection every cached spectrum depends on."""
        d = self.data
        pot = dict(d["potential"])
        if "file" in pot:
            with open(pot["file"], "rb") as fh:
                pot["file_sha256"] = hashlib.sha256(fh.read()).hexdigest()
        return {"potential": pot, "modes": d["modes"], "numerics": d["numerics"]}

    def hash(self, *extra):
        """sha256 over the physics section, the tool version and ``extra``."""
        payload = json.dumps([__version__, self.physics(), list(extra)], sort_keys=True,
                             separators=(",", ":"), default=float)
        return hashlib.sha256(payload.encode()).hexdigest()

    def sweep_hash(self):
        d = self.data
        return self.hash("sweep", d["gauge"].get("axes"), d["gauge"]["metrics"], d["truncation"])

    # -- construction ------------------------------------------------------

    def potential(self):
        p = self.data["potential"]
        if p["kind"] == "double_well":
            kind = DoubleWell.from_gamma(p["gamma"]) if "gamma" in p else DoubleWell(p["B"], p.get("C", 1.0))
        elif p["kind"] == "harmonic":
            kind = Harmonic(p["omega0"])
        else:
            kind = Tabulated.from_file(p["file"])
        return PotentialSpec(kind, shift=p.get("shift", 0.0), tilt=p.get("tilt", 0.0))

    def grid(self, potential=None):
        g = self.data["numerics"]["grid"]
        potential = self.potential() if potential is None else potential
        return potential.default_grid(g["half_width"], g["n_points"], g["scheme"])

    def system(self):
        pot = self.potential()
        m = self.data["modes"]
        return cavity_system(pot, m["omegas"], m["g"], grid=self.grid(pot))

    def cutoffs(self):
        return tuple(self.data["numerics"]["cutoffs"])

    def gauge(self):
        eta = self.data["gauge"].get("eta")
        return tuple(float(e) for e in eta) if eta is not None else (1.0,) * self.n_modes

    def sweep_plan(self):
        g = self.data["gauge"]
        t = self.data["truncation"]
        axes = []
        for a in g.get("axes") or [{"lo": 0.0, "hi": 1.0, "step": 0.05}] * self.n_modes:
            if isinstance(a, dict):
                if "n_steps" in a:
                    axes.append(Range(a["lo"], a["hi"], a["n_steps"]))
                else:
                    axes.append(Range.step(a["lo"], a["hi"], a.get("step", 0.05)))
            else:
                axes.append(Fixed(float(a)))
        try:
            return SweepPlan(tuple(axes), metrics=tuple(g["metrics"]), M_levels=t["M_levels"],
                             M_energies=t["M_energies"], basis_kind=t["basis_kind"],
                             max_points=self.data["numerics"]["max_points"])
        except ValueError as exc:
            raise ConfigError(f"gauge.axes: {exc}") from None
