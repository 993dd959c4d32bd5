"""Experiment configuration: YAML in, schema validation, field and map builders."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np
import yaml

from .errors import ConfigError, DnMembraneError
from .pushforward import AffineMap, BoundaryFixingBump, PlaneMap, push_forward
from .tensor_field import (
    AiryField,
    AiryPotential,
    AiryTerm,
    ConstantField,
    DiagonalProfileField,
    TensorField,
)

__all__ = [
    "ExperimentConfig",
    "EXPERIMENT_KINDS",
    "DEFAULT_TOLERANCES",
    "load_schema",
    "required_keys",
    "validate",
    "load_config",
    "parse_config",
    "build_field",
    "build_map",
    "build_profile",
]

EXPERIMENT_KINDS = ("dn", "lipschitz", "mean", "network", "pushforward", "traction", "gconv")

DEFAULT_TOLERANCES = {
    "symmetry": 1e-10,
    "constant_kernel": 1e-10,
    "linear_reproduction": 1e-8,
    "mean_abs": 0.02,
    "traction_max": 0.01,
    "profile_ratio": 1.5,
    "sigma2_abs": 0.01,
    "field_distance_min": 0.01,
    "plateau_factor": 10.0,
    "identity_form": 1e-12,
    "average_abs": 1e-12,
}


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("dnmembrane").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def required_keys(kind: str) -> list[str]:
    """Required config keys for one experiment kind, read off the schema.

    Nested requirements are reported as dotted paths (``fields.sigma``).
    """
    schema = load_schema()
    keys = set(schema.get("required", []))
    for rule in schema.get("allOf", []):
        if rule["if"]["properties"]["experiment"]["const"] != kind:
            continue
        then = rule["then"]
        keys.update(then.get("required", []))
        for parent, sub in then.get("properties", {}).items():
            keys.update(f"{parent}.{k}" for k in sub.get("required", []))
    return sorted(keys)


def validate(raw) -> None:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    v = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(v.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errs:
        e = jsonschema.exceptions.best_match(errs)
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {e.message}")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @property
    def kind(self) -> str:
        return self.raw["experiment"]

    @property
    def name(self) -> str:
        return self.raw.get("name", self.kind)

    @property
    def domain(self) -> tuple[float, float]:
        a, b = self.raw.get("domain", (1.0, 1.0))
        return float(a), float(b)

    @property
    def mesh(self) -> list[int]:
        return list(self.raw.get("mesh", []))

    @property
    def slack(self) -> float:
        return float(self.raw.get("slack", 1.0))

    @property
    def tolerances(self) -> dict:
        return {**DEFAULT_TOLERANCES, **self.raw.get("tolerances", {})}

    @property
    def seed(self) -> int:
        return int(self.raw.get("probes", {}).get("seed", 0))

    @property
    def probe_count(self) -> int:
        return int(self.raw.get("probes", {}).get("count", 100))

    @property
    def oracle_grid(self) -> int:
        return int(self.raw.get("oracle_grid", 512))

    @property
    def prefix(self) -> str:
        return self.raw.get("output", {}).get("prefix", self.name)

    def field(self, key: str = "sigma") -> TensorField:
        return build_field(self.raw["fields"][key], self.domain)

    def pmap(self) -> PlaneMap:
        return build_map(self.raw["map"], self.domain)


def parse_config(raw, seed: int | None = None) -> ExperimentConfig:
    """Validate a raw mapping; ``seed`` overrides the probe seed."""
    validate(raw)
    raw = json.loads(json.dumps(raw))  # detach from the caller's objects
    if seed is not None:
        raw.setdefault("probes", {})["seed"] = int(seed)
    cfg = ExperimentConfig(raw)
    if cfg.kind != "gconv" and not cfg.mesh:
        raise ConfigError("mesh schedule is empty")
    # build every declared object once so bad parameters surface before running
    for key in raw.get("fields", {}):
        cfg.field(key)
    if "map" in raw:
        cfg.pmap()
    return cfg


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_config(raw, seed)


def build_profile(spec: dict):
    t = spec["type"]
    if t == "constant":
        v = float(spec["value"])
        return lambda s: np.full(np.shape(s), v)
    if t == "affine":
        c0, c1 = float(spec["c0"]), float(spec["c1"])
        return lambda s: c0 + c1 * np.asarray(s, dtype=float)
    if t == "sine":
        mean, amp, k = float(spec["mean"]), float(spec["amp"]), float(spec["freq"])
        ph = float(spec.get("phase", 0.0))
        return lambda s: mean + amp * np.sin(2.0 * np.pi * k * np.asarray(s, dtype=float) + ph)
    if t == "two_phase":
        from .gconv_lab import two_phase_profile

        return two_phase_profile(spec["alpha"], spec["beta"], spec["theta"], spec["m"])
    raise ConfigError(f"unknown profile type {t!r}")


def build_map(spec: dict, domain=(1.0, 1.0)) -> PlaneMap:
    fam = spec["family"]
    try:
        if fam == "bump":
            if tuple(domain) != (1.0, 1.0):
                raise ConfigError("the bump map is defined on the unit square only")
            return BoundaryFixingBump(float(spec["t"]), tuple(spec.get("c", (1.0, 0.0))))
        if fam == "affine":
            return AffineMap(tuple(map(tuple, spec["matrix"])), tuple(spec.get("shift", (0.0, 0.0))))
    except ConfigError:
        raise
    except (DnMembraneError, ValueError) as exc:
        raise ConfigError(f"bad {fam} map: {exc}") from exc
    raise ConfigError(f"unknown map family {fam!r}")


def build_field(spec: dict, domain=(1.0, 1.0)) -> TensorField:
    kind = spec["kind"]
    domain = tuple(domain)
    try:
        if kind == "constant":
            return ConstantField(float(spec["s11"]), float(spec["s12"]), float(spec["s22"]), domain)
        if kind == "diagonal":
            return DiagonalProfileField(build_profile(spec["f1"]), build_profile(spec["f2"]), domain=domain)
        if kind == "airy":
            terms = tuple(AiryTerm(**t) for t in spec.get("terms", ()))
            pot = AiryPotential(
                float(spec.get("qxx", 1.0)), float(spec.get("qxy", 0.0)), float(spec.get("qyy", 1.0)), terms
            )
            return AiryField(pot, domain)
        if kind == "pushforward":
            return push_forward(build_field(spec["base"], domain), build_map(spec["map"], domain))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad {kind} field: {exc}") from exc
    raise ConfigError(f"unknown field kind {kind!r}")
