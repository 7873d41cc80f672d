"""Experiment configuration: YAML loading, strict schema checks, overrides.

A config file has flat sections mirroring the module boundaries.  Every
key is checked against the schema below; unknown keys and type mismatches
are reported with their dotted path so a typo never silently falls back
to a default.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import yaml

from .channel import PhysicalParams
from .errors import InvalidConfigError

__all__ = ["MobilityCase", "ExperimentConfig", "load_config", "parse_config"]

_LABEL_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")

_PHYSICAL_KEYS = {
    "num_molecules": int,
    "diff_A": float,
    "diff_TX": float,
    "diff_RX": float,
    "r0": float,
    "radius_rx": float,
    "radius_tx": float,
    "k_f": float,
    "k_b": float,
    "k_d": float,
    "num_receptors": int,
    "receptor_radius": float,
    "bit_interval": float,
    "sample_offset": float,
    "seq_length": int,
    "p1": float,
}

_SCHEMA = {
    "physical": _PHYSICAL_KEYS,
    "cases": None,  # list section, handled separately
    "simulation": {
        "dt": float,
        "num_realizations": int,
        "unbind_offset": float,
    },
    "detector": {
        "thresholds": list,
    },
    "monte_carlo": {
        "num_trajectories": int,
        "bit_treatment": str,
    },
    "grids": {
        "time_points": int,
        "time_scale": str,
        "pdf_points": int,
        "walks": int,
        "walk_steps": int,
        "distance_time": float,
    },
    "run": {
        "output_dir": str,
        "seed": int,
        "workers": int,
        "label": str,
    },
    "model": {
        "k_f_mod_override": float,
        "pattern": list,
    },
}

_CASE_KEYS = {
    "label": str,
    "mode": str,
    "diff_TX": float,
    "diff_RX": float,
}

_REQUIRED_SECTIONS = ("physical", "cases", "simulation", "detector",
                      "monte_carlo", "run")


@dataclass(frozen=True)
class MobilityCase:
    """One labelled channel scenario: evaluation mode plus node diffusivities.

    diff_TX/diff_RX default to the physical section's values when omitted.
    """

    label: str
    mode: str
    diff_TX: float | None = None
    diff_RX: float | None = None

    def resolve_params(self, physical: PhysicalParams) -> PhysicalParams:
        kwargs = {}
        if self.diff_TX is not None:
            kwargs["diff_TX"] = self.diff_TX
        if self.diff_RX is not None:
            kwargs["diff_RX"] = self.diff_RX
        return replace(physical, **kwargs) if kwargs else physical


@dataclass(frozen=True)
class ExperimentConfig:
    physical: PhysicalParams
    cases: tuple[MobilityCase, ...]
    dt: float
    num_realizations: int
    unbind_offset: float
    thresholds: tuple[int, ...]
    num_trajectories: int
    bit_treatment: str
    time_points: int
    time_scale: str
    pdf_points: int
    walks: int
    walk_steps: int
    distance_time: float | None
    output_dir: str
    seed: int
    workers: int
    label: str
    k_f_mod_override: float | None
    pattern: tuple[int, ...] | None

    def frame_pattern(self) -> tuple[int, ...]:
        if self.pattern is not None:
            return self.pattern
        return (1,) * self.physical.seq_length


def _fail(path: str, message: str):
    raise InvalidConfigError(f"{path}: {message}")


def _coerce(path: str, value, expected):
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(path, f"expected a number, got {value!r}")
        v = float(value)
        if not math.isfinite(v):
            _fail(path, "must be finite")
        return v
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(path, f"expected an integer, got {value!r}")
        return value
    if expected is str:
        if not isinstance(value, str):
            _fail(path, f"expected a string, got {value!r}")
        return value
    if expected is list:
        if not isinstance(value, list):
            _fail(path, f"expected a list, got {value!r}")
        return value
    raise AssertionError(f"unhandled schema type {expected}")


def _check_section(path: str, section, keys: dict):
    if not isinstance(section, dict):
        _fail(path, f"expected a mapping, got {section!r}")
    out = {}
    for key, value in section.items():
        if key not in keys:
            known = ", ".join(sorted(keys))
            _fail(f"{path}.{key}", f"unknown key (known keys: {known})")
        out[key] = _coerce(f"{path}.{key}", value, keys[key])
    return out


def _parse_cases(raw) -> tuple[MobilityCase, ...]:
    if not isinstance(raw, list) or len(raw) == 0:
        _fail("cases", "expected a non-empty list of case mappings")
    seen = set()
    cases = []
    for i, entry in enumerate(raw):
        got = _check_section(f"cases[{i}]", entry, _CASE_KEYS)
        if "label" not in got:
            _fail(f"cases[{i}].label", "required")
        if "mode" not in got:
            _fail(f"cases[{i}].mode", "required")
        label = got["label"]
        if not _LABEL_RE.match(label):
            _fail(f"cases[{i}].label",
                  "labels use letters, digits, '-' and '_' only")
        if label in seen:
            _fail(f"cases[{i}].label", f"duplicate label {label!r}")
        seen.add(label)
        if got["mode"] not in ("fixed", "mobile"):
            _fail(f"cases[{i}].mode", "must be 'fixed' or 'mobile'")
        cases.append(
            MobilityCase(
                label=label,
                mode=got["mode"],
                diff_TX=got.get("diff_TX"),
                diff_RX=got.get("diff_RX"),
            )
        )
    return tuple(cases)


def _parse_thresholds(raw) -> tuple[int, ...]:
    if not isinstance(raw, list) or len(raw) == 0:
        _fail("detector.thresholds", "expected a non-empty list")
    out = []
    for i, x in enumerate(raw):
        if isinstance(x, bool) or not isinstance(x, int) or x < 0:
            _fail(f"detector.thresholds[{i}]",
                  f"expected a non-negative integer, got {x!r}")
        out.append(x)
    return tuple(out)


def _parse_pattern(raw, seq_length: int) -> tuple[int, ...]:
    if not isinstance(raw, list):
        _fail("model.pattern", "expected a list of bits")
    if len(raw) != seq_length:
        _fail("model.pattern",
              f"length {len(raw)} does not match seq_length {seq_length}")
    for i, b in enumerate(raw):
        if isinstance(b, bool) or b not in (0, 1):
            _fail(f"model.pattern[{i}]", f"bits are 0 or 1, got {b!r}")
    return tuple(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed YAML mapping and build the runnable config."""
    if not isinstance(raw, dict):
        raise InvalidConfigError("config root must be a mapping of sections")
    for key in raw:
        if key not in _SCHEMA:
            known = ", ".join(sorted(_SCHEMA))
            _fail(key, f"unknown section (known sections: {known})")
    for key in _REQUIRED_SECTIONS:
        if key not in raw:
            _fail(key, "required section is missing")

    phys_raw = _check_section("physical", raw["physical"], _PHYSICAL_KEYS)
    missing = sorted(set(_PHYSICAL_KEYS) - set(phys_raw))
    if missing:
        _fail("physical", f"missing keys: {', '.join(missing)}")
    try:
        physical = PhysicalParams(**phys_raw)
    except (ValueError, TypeError) as exc:
        raise InvalidConfigError(f"physical: {exc}") from exc

    cases = _parse_cases(raw["cases"])

    sim = _check_section("simulation", raw["simulation"], _SCHEMA["simulation"])
    for key in ("dt", "num_realizations"):
        if key not in sim:
            _fail(f"simulation.{key}", "required")

    det = _check_section("detector", raw["detector"], _SCHEMA["detector"])
    if "thresholds" not in det:
        _fail("detector.thresholds", "required")
    thresholds = _parse_thresholds(det["thresholds"])

    mc = _check_section("monte_carlo", raw["monte_carlo"],
                        _SCHEMA["monte_carlo"])
    if "num_trajectories" not in mc:
        _fail("monte_carlo.num_trajectories", "required")
    bit_treatment = mc.get("bit_treatment", "auto")
    if bit_treatment not in ("auto", "enumerated", "sampled"):
        _fail("monte_carlo.bit_treatment",
              "must be auto, enumerated, or sampled")

    grids = _check_section("grids", raw.get("grids", {}), _SCHEMA["grids"])
    time_scale = grids.get("time_scale", "linear")
    if time_scale not in ("linear", "log"):
        _fail("grids.time_scale", "must be 'linear' or 'log'")

    run = _check_section("run", raw["run"], _SCHEMA["run"])
    for key in ("output_dir", "seed"):
        if key not in run:
            _fail(f"run.{key}", "required")

    model = _check_section("model", raw.get("model", {}), _SCHEMA["model"])
    pattern = None
    if "pattern" in model:
        pattern = _parse_pattern(model["pattern"], physical.seq_length)

    def positive(path, value):
        if value <= 0:
            _fail(path, "must be > 0")
        return value

    cfg = ExperimentConfig(
        physical=physical,
        cases=cases,
        dt=positive("simulation.dt", sim["dt"]),
        num_realizations=positive(
            "simulation.num_realizations", sim["num_realizations"]
        ),
        unbind_offset=positive(
            "simulation.unbind_offset", sim.get("unbind_offset", 1e-9)
        ),
        thresholds=thresholds,
        num_trajectories=positive(
            "monte_carlo.num_trajectories", mc["num_trajectories"]
        ),
        bit_treatment=bit_treatment,
        time_points=positive("grids.time_points", grids.get("time_points", 120)),
        time_scale=time_scale,
        pdf_points=positive("grids.pdf_points", grids.get("pdf_points", 200)),
        walks=positive("grids.walks", grids.get("walks", 200_000)),
        walk_steps=positive("grids.walk_steps", grids.get("walk_steps", 300)),
        distance_time=grids.get("distance_time"),
        output_dir=run["output_dir"],
        seed=run["seed"],
        workers=positive("run.workers", run.get("workers", 1)),
        label=run.get("label", ""),
        k_f_mod_override=model.get("k_f_mod_override"),
        pattern=pattern,
    )
    if cfg.seed < 0:
        _fail("run.seed", "must be >= 0")
    if cfg.distance_time is not None and cfg.distance_time <= 0:
        _fail("grids.distance_time", "must be > 0")
    if cfg.k_f_mod_override is not None and cfg.k_f_mod_override < 0:
        _fail("model.k_f_mod_override", "must be >= 0")
    return cfg


def load_config(path: str) -> tuple[ExperimentConfig, bytes]:
    """Read and validate a YAML config file; returns (config, file bytes)."""
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(blob)
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    return parse_config(raw), blob
