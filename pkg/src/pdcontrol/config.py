"""Experiment configuration: TOML parsing, emission, and built-in presets.

A config is four tables -- ``system``, ``disturbance``, ``cost``,
``controller``, ``run`` -- each holding plain keys.  Matrices are inline
row-major nested arrays or a named preset.  Emission is deliberately minimal
(bare keys, repr floats) so configs round-trip bit-for-bit through the parser.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from .lds import (
    ConstantDisturbance,
    CustomDisturbance,
    DisturbanceGenerator,
    GaussianDisturbance,
    LinearSystem,
    QuadraticCost,
    SinusoidDisturbance,
    UniformDisturbance,
    ZeroDisturbance,
)


class ConfigError(ValueError):
    pass


CONTROLLER_KINDS = ("lqr", "gpc", "rbpc", "bpc", "mfgpc")
PD_KINDS = ("true", "pd1", "pd2", "pd3")


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not np.isfinite(x):
            raise ConfigError("non-finite values cannot be serialized to TOML")
        s = repr(x)
        return s if ("." in s or "e" in s or "E" in s) else s + ".0"
    if isinstance(v, str):
        bad = any(c in v for c in '"\\\n')
        if bad:
            raise ConfigError(f"string not representable in the minimal emitter: {v!r}")
        return f'"{v}"'
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__} to TOML")


def dumps_toml(doc: dict) -> str:
    """Emit a two-level dict (tables of scalars/arrays) as TOML text."""
    lines = []
    scalars = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    for k, v in scalars.items():
        lines.append(f"{k} = {_toml_value(v)}")
    for table, body in doc.items():
        if not isinstance(body, dict):
            continue
        if lines:
            lines.append("")
        lines.append(f"[{table}]")
        for k, v in body.items():
            lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def loads_toml(text: str) -> dict:
    return tomllib.loads(text)


@dataclass
class ExperimentConfig:
    """Validated experiment description; sections are plain dicts for round-tripping."""

    system: dict = field(default_factory=dict)
    disturbance: dict = field(default_factory=dict)
    cost: dict = field(default_factory=lambda: {"kind": "quadratic"})
    controller: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "system": copy.deepcopy(self.system),
            "disturbance": copy.deepcopy(self.disturbance),
            "cost": copy.deepcopy(self.cost),
            "controller": copy.deepcopy(self.controller),
            "run": copy.deepcopy(self.run),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"system", "disturbance", "cost", "controller", "run"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        cfg = cls(
            system=copy.deepcopy(d.get("system", {})),
            disturbance=copy.deepcopy(d.get("disturbance", {})),
            cost=copy.deepcopy(d.get("cost", {"kind": "quadratic"})),
            controller=copy.deepcopy(d.get("controller", {})),
            run=copy.deepcopy(d.get("run", {})),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(loads_toml(text))

    def to_toml(self) -> str:
        return dumps_toml(self.to_dict())

    @classmethod
    def load(cls, path_or_preset: str) -> "ExperimentConfig":
        if path_or_preset in PRESETS:
            return cls.from_dict(PRESETS[path_or_preset])
        if not os.path.exists(path_or_preset):
            raise ConfigError(f"no such config file or preset: {path_or_preset!r} "
                              f"(presets: {', '.join(sorted(PRESETS))})")
        with open(path_or_preset, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    # -- validation / resolution -------------------------------------------------

    def validate(self):
        kind = self.controller.get("kind", "rbpc")
        if kind not in CONTROLLER_KINDS:
            raise ConfigError(f"controller.kind must be one of {CONTROLLER_KINDS}, got {kind!r}")
        pd = self.controller.get("pd", "true")
        if pd not in PD_KINDS:
            raise ConfigError(f"controller.pd must be one of {PD_KINDS}, got {pd!r}")
        if kind == "mfgpc" and pd == "true":
            raise ConfigError("mfgpc requires a pseudo-disturbance estimator (pd1/pd2/pd3)")
        T = self.run.get("T", 1000)
        if not isinstance(T, int) or T < 1:
            raise ConfigError("run.T must be a positive integer")
        seeds = self.run.get("seeds", list(range(25)))
        if not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("run.seeds must be a non-empty list of integers")
        sys_tbl = self.system
        if "preset" not in sys_tbl and not ("A" in sys_tbl and "B" in sys_tbl):
            raise ConfigError("system needs either a preset name or inline A, B matrices")
        dist_kind = self.disturbance.get("kind", "zero")
        if dist_kind not in ("zero", "gaussian", "uniform", "sinusoid", "constant", "custom"):
            raise ConfigError(f"unknown disturbance kind {dist_kind!r}")
        self._build_system()  # raises on malformed matrices

    def _build_system(self) -> LinearSystem:
        tbl = self.system
        if "preset" in tbl:
            name = tbl["preset"]
            if name not in PRESET_SYSTEMS:
                raise ConfigError(f"unknown system preset {name!r}")
            A, B = PRESET_SYSTEMS[name]()
            return LinearSystem(A=A, B=B)
        try:
            return LinearSystem(A=np.array(tbl["A"], dtype=float), B=np.array(tbl["B"], dtype=float))
        except (ValueError, KeyError) as e:
            raise ConfigError(f"bad system matrices: {e}") from e

    def build_system(self) -> LinearSystem:
        return self._build_system()

    def build_generator(self, dx: int) -> DisturbanceGenerator:
        tbl = self.disturbance
        kind = tbl.get("kind", "zero")
        bound = float(tbl.get("bound", np.inf))
        if kind == "zero":
            return ZeroDisturbance(dx, bound)
        if kind == "gaussian":
            return GaussianDisturbance(dx, sigma=float(tbl.get("sigma", 0.1)), bound=bound)
        if kind == "uniform":
            low = tbl.get("low", [-0.5] * dx)
            high = tbl.get("high", [0.5] * dx)
            return UniformDisturbance(low, high, bound)
        if kind == "sinusoid":
            amp = tbl.get("amplitude", [0.5] * dx)
            freq = float(tbl.get("frequency", 1.0 / 50.0))
            phase = tbl.get("phase", [0.6 * j for j in range(dx)])
            return SinusoidDisturbance(amp, freq, phase, bound)
        if kind == "constant":
            return ConstantDisturbance(tbl.get("value", [0.1] * dx), bound)
        if kind == "custom":
            return CustomDisturbance(np.array(tbl["values"], dtype=float), bound)
        raise ConfigError(f"unknown disturbance kind {kind!r}")

    def build_cost(self, dx: int, du: int) -> QuadraticCost:
        tbl = self.cost
        if tbl.get("kind", "quadratic") != "quadratic":
            raise ConfigError("only quadratic costs are configurable")
        Q = np.array(tbl["Q"], dtype=float) if "Q" in tbl else np.eye(dx)
        R = np.array(tbl["R"], dtype=float) if "R" in tbl else np.eye(du)
        return QuadraticCost(Q, R)


def _lds_small_system():
    A = np.array([[0.8, 0.2], [0.0, 0.7]])
    B = np.array([[0.0], [1.0]])
    return A, B


# fixed full-rank control matrix for the 10x5 preset (singular values 3.58 .. 0.96)
_LARGE_B = [
    [-0.426, 0.02, 0.703, 0.276, -0.407],
    [-1.086, -0.532, -0.557, 0.128, 0.695],
    [-0.964, 0.216, -0.509, 0.841, 0.931],
    [0.224, 0.685, 0.447, -0.473, -0.543],
    [-0.092, 1.12, -0.859, -0.447, -1.543],
    [1.052, 0.842, 1.268, -0.434, -0.457],
    [-0.549, 1.473, 1.199, 0.078, -0.652],
    [-0.469, 0.82, 1.098, 0.107, -0.615],
    [0.092, 0.688, -0.451, 0.125, 0.11],
    [-0.749, 1.195, 0.018, -0.78, 0.721],
]


def _lds_large_system():
    # five damped rotation blocks driven through a fixed full-rank gain
    rhos = [0.6, 0.7, 0.75, 0.8, 0.85]
    thetas = [0.3, 0.5, 0.7, 0.9, 1.1]
    A = np.zeros((10, 10))
    for k, (r, th) in enumerate(zip(rhos, thetas)):
        c, s = r * np.cos(th), r * np.sin(th)
        A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[c, -s], [s, c]]
    B = np.array(_LARGE_B)
    return A, B


PRESET_SYSTEMS = {
    "lds-small": _lds_small_system,
    "lds-large": _lds_large_system,
}


# eta/delta below are tuned for the preset horizons (the raw horizon schedule
# assumes normalized problem constants); radius_scale shrinks the comparator
# radii toward the scale of policies these instances actually use.
PRESETS = {
    "lds-small": {
        "system": {"preset": "lds-small"},
        "disturbance": {
            "kind": "sinusoid",
            "amplitude": [0.5, 0.5],
            "frequency": 0.02,
            "phase": [0.0, 1.2],
        },
        "cost": {"kind": "quadratic"},
        "controller": {
            "kind": "rbpc", "h": 5, "pd": "true", "base": "lqr", "gamma": 0.9,
            "eta": 3e-4, "delta": 0.25, "radius_scale": 0.05,
        },
        "run": {"T": 10000, "seeds": list(range(25))},
    },
    "lds-large": {
        "system": {"preset": "lds-large"},
        "disturbance": {
            "kind": "sinusoid",
            "amplitude": [0.8] * 10,
            "frequency": 0.02,
            "phase": [round(0.6 * j, 4) for j in range(10)],
        },
        "cost": {"kind": "quadratic"},
        "controller": {
            "kind": "rbpc", "h": 5, "pd": "true", "base": "lqr", "gamma": 0.9,
            "eta": 5e-7, "delta": 0.25, "radius_scale": 1e-5,
        },
        "run": {"T": 40000, "seeds": list(range(25))},
    },
}


def preset_names():
    return sorted(PRESETS)
