"""Run configuration: one JSON document, optionally compiled from CLI flags."""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import qmc

from . import geometry as G
from .expr import ExprError
from .fields import TangentField, random_fields
from .shell import BoundaryProfile

DEFAULT_TOLERANCES: dict[str, float] = {
    "gauss": 1e-8,
    "self_adjoint": 1e-10,
    "christoffel": 1e-9,
    "metric_expansion": 2.8,  # minimum observed order
    "shape_radial": 1e-6,
    "offset_metric": 1e-12,
    "weitzenbock": 1e-7,
    "slip_limit": 1e-7,
    "hodge_limit": 1e-7,
    "alpha_limit": 1e-7,
    "decomposition": 1e-7,
    "f_rad": 1e-9,
    "radial_trace": 1e-6,
    "tangential_trace": 1e-6,
    "oracle": 1e-4,
    "stress": 1e-10,
    "radial_constancy": 1e-10,
    "anisotropy": 1e-4,  # minimum relative gap at non-umbilic points
    "anisotropy_umbilic": 1e-10,
}

DEFAULT_CONFIG: dict[str, Any] = {
    "surfaces": [{"name": "sphere", "params": {"R": 1.0}}],
    "fields": [{"random": {"count": 3, "seed": 0}}],
    "profiles": ["slip", "hodge", "alpha:0.5"],
    "samples": {"sobol": {"count": 5, "seed": 0}, "margin": 0.05},
    "tolerances": {},
    "seed": 0,
    "operator": {"alphas": [0.0, 0.25, 0.5, 0.75, 1.0], "operators": ["alpha"]},
    "convergence": {"r": None, "h": None, "oracle_h": None},
    "output": {"path": None, "format": "json"},
}


class ConfigError(ValueError):
    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{message} (at {pointer or '/'})")


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def merged(doc: dict | None) -> dict:
    out = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, value in (doc or {}).items():
        if key not in out and key != "command":
            raise ConfigError(f"unknown key {key!r}", f"/{key}")
        out[key] = value
    return out


# -- parsing of individual pieces ---------------------------------------------------


def parse_kv(text: str) -> dict[str, Any]:
    """``"a=1,b=1.3"`` -> ``{"a": 1.0, "b": 1.3}``; non-numbers stay strings."""
    out: dict[str, Any] = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            out[k.strip()] = v.strip()
    return out


def surface_shorthand(text: str) -> dict:
    name, _, rest = text.partition(":")
    return {"name": name.strip(), "params": parse_kv(rest)}


def field_shorthand(text: str) -> dict:
    if text.startswith("random"):
        _, _, rest = text.partition(":")
        kv = parse_kv(rest)
        return {"random": {"count": int(kv.get("count", 3)), "seed": int(kv.get("seed", 0))}}
    return {"components": [c.strip() for c in text.split(";")]}


def points_shorthand(text: str) -> dict:
    if text.startswith("sobol"):
        _, _, rest = text.partition(":")
        kv = parse_kv(rest)
        return {"sobol": {"count": int(kv.get("count", 5)), "seed": int(kv.get("seed", 0))}}
    return {"points": [[float(x) for x in p.split(",")] for p in text.split(";")]}


def build_chart(spec: dict, pointer: str) -> G.Chart:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError("surface needs a 'name'", pointer)
    name = spec["name"]
    params = dict(spec.get("params", {}))
    try:
        if name == "custom":
            if "components" in params:
                comps = params["components"]
                if isinstance(comps, str):
                    comps = comps.split(";")
                domain = params.get("domain") or [[-1.0, 1.0]] * (len(comps) - 1)
                return G.custom(comps, [tuple(d) for d in domain])
            return G.seeded_custom_surface(int(params.get("seed", 0)), int(params.get("n", 2)))
        if name not in G.CATALOG:
            raise ConfigError(f"unknown surface {name!r}", f"{pointer}/name")
        allowed = set(G.CATALOG[name]["params"]) | ({"domain"} if name == "graph" else set())
        extra = set(params) - allowed
        if extra:
            raise ConfigError(f"unknown parameter(s) {sorted(extra)} for {name}", f"{pointer}/params")
        if name == "graph" and "domain" in params:
            params["domain"] = [tuple(d) for d in params["domain"]]
        return G.catalog_chart(name, **params)
    except ExprError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}", f"{pointer}/params") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), f"{pointer}/params") from exc


def build_fields(specs: list, dim: int, pointer: str) -> list[TangentField]:
    out: list[TangentField] = []
    for k, spec in enumerate(specs):
        ptr = f"{pointer}/{k}"
        if "random" in spec:
            r = spec["random"]
            out.extend(random_fields(dim, int(r.get("count", 3)), int(r.get("seed", 0))))
        elif "components" in spec:
            comps = spec["components"]
            if len(comps) != dim:
                continue  # field written for a chart of another dimension
            try:
                out.append(TangentField.from_strings(comps))
            except ExprError as exc:
                raise ConfigError(f"{type(exc).__name__}: {exc}", f"{ptr}/components") from exc
        else:
            raise ConfigError("field needs 'random' or 'components'", ptr)
    return out


def build_profiles(specs: list, pointer: str) -> list[BoundaryProfile]:
    out = []
    for k, text in enumerate(specs):
        try:
            out.append(BoundaryProfile.parse(str(text)))
        except ValueError as exc:
            raise ConfigError(str(exc), f"{pointer}/{k}") from exc
    return out


def sample_points(spec: dict, chart: G.Chart, pointer: str) -> list[tuple[float, ...]]:
    margin = float(spec.get("margin", 0.05))
    box = chart.interior(margin)
    if "points" in spec:
        pts = []
        for k, p in enumerate(spec["points"]):
            if len(p) != chart.dim:
                raise ConfigError(f"point has {len(p)} coordinates, chart has {chart.dim}", f"{pointer}/points/{k}")
            if not all(lo <= x <= hi for x, (lo, hi) in zip(p, box)):
                raise ConfigError("point lies outside the chart interior", f"{pointer}/points/{k}")
            pts.append(tuple(float(x) for x in p))
        return pts
    sob = spec.get("sobol", {"count": 5, "seed": 0})
    count = int(sob.get("count", 5))
    if count < 1:
        raise ConfigError("sobol count must be positive", f"{pointer}/sobol/count")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        raw = qmc.Sobol(d=chart.dim, scramble=True, seed=int(sob.get("seed", 0))).random(count)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return [tuple(float(x) for x in lo + row * (hi - lo)) for row in raw]


@dataclass
class RunConfig:
    doc: dict
    charts: list[G.Chart]
    fields: dict[int, list[TangentField]]  # keyed by chart index
    profiles: list[BoundaryProfile]
    points: dict[int, list[tuple[float, ...]]]
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.doc)


def load(doc: dict) -> RunConfig:
    doc = merged(doc)
    surfaces = doc["surfaces"]
    if isinstance(surfaces, dict):
        surfaces = [surfaces]
    if not surfaces:
        raise ConfigError("no surfaces configured", "/surfaces")
    charts = [build_chart(s, f"/surfaces/{k}") for k, s in enumerate(surfaces)]
    profiles = build_profiles(doc["profiles"], "/profiles")
    fields = {k: build_fields(doc["fields"], c.dim, "/fields") for k, c in enumerate(charts)}
    points = {k: sample_points(doc["samples"], c, "/samples") for k, c in enumerate(charts)}
    tol = dict(DEFAULT_TOLERANCES)
    for name, value in doc["tolerances"].items():
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown check {name!r}", f"/tolerances/{name}")
        try:
            tol[name] = float(value)
        except (TypeError, ValueError):
            raise ConfigError("tolerance must be a number", f"/tolerances/{name}") from None
        if not math.isfinite(tol[name]):
            raise ConfigError("tolerance must be finite", f"/tolerances/{name}")
    return RunConfig(doc, charts, fields, profiles, points, tol)
