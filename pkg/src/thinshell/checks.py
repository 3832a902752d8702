"""The verification suite behind ``thinshell verify``.

Each check produces one :class:`Record` per (surface, profile, field, point)
tuple it applies to; checks that do not depend on a profile or a field use
``"-"`` in that slot.  Residuals are max-norms, relative ones are divided by
``1 + |reference|``.  A geometry error inside a check becomes a failed
record instead of aborting the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import fields as F
from . import geometry as G
from . import oracle as O
from . import shell as SH
from .config import RunConfig


@dataclass(frozen=True)
class Record:
    check_id: str
    surface: str
    profile: str
    field: str
    point: tuple[float, ...]
    residual: float
    tolerance: float
    passed: bool
    alpha: float | None = None
    order: float | None = None
    error: str | None = None

    def key(self):
        return (self.check_id, self.surface, self.profile, self.field, self.point)


def rel(a: np.ndarray, ref: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(ref)))) / (1.0 + float(np.max(np.abs(ref))))


def absdiff(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


@dataclass
class Context:
    chart: G.Chart
    surface: str
    point: tuple[float, ...]
    tol: dict[str, float]
    records: list[Record] = field(default_factory=list)

    def run(
        self,
        check_id: str,
        fn: Callable[[], float | tuple[float, bool] | tuple[float, bool, float]],
        profile: str = "-",
        fieldname: str = "-",
        alpha: float | None = None,
        tol_key: str | None = None,
    ) -> None:
        tol = self.tol[tol_key or check_id]
        order = None
        try:
            out = fn()
            if isinstance(out, tuple):
                residual, passed = out[0], out[1]
                order = out[2] if len(out) > 2 else None
            else:
                residual = out
                passed = bool(residual <= tol)
            err = None
        except (G.GeometryError, SH.ConsistencyFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
            residual, passed, err = math.nan, False, f"{type(exc).__name__}: {exc}"
        self.records.append(
            Record(check_id, self.surface, profile, fieldname, self.point, float(residual), tol, bool(passed), alpha, order, err)
        )


def surface_checks(ctx: Context) -> None:
    chart, u, n = ctx.chart, ctx.point, ctx.chart.dim

    def gauss():
        return absdiff(G.intrinsic_at(chart, u).Ricci, G.gauss_ricci(G.extrinsic_at(chart, u), n))

    def self_adjoint():
        g = G.intrinsic_at(chart, u).g
        gS = g @ G.extrinsic_at(chart, u).S
        return absdiff(gS, gS.T)

    def expansion():
        rep = SH.metric_expansion_check(chart, u)
        order = rep.min_order
        return max(rep.residuals), rep.exact or order >= ctx.tol["metric_expansion"], order

    def shape_radial():
        return absdiff(G.shape_radial_derivative(chart, u), G.extrinsic_at(chart, u).S2)

    def offset_metric():
        r = 0.1 * min(G.extrinsic_at(chart, u).focal_radius, 1.0)
        return SH.offset_metric_consistency(chart, u, r)

    ctx.run("gauss", gauss)
    ctx.run("self_adjoint", self_adjoint)
    ctx.run("christoffel", lambda: SH.christoffel_residual(chart, u))
    ctx.run("metric_expansion", expansion)
    ctx.run("shape_radial", shape_radial)
    ctx.run("offset_metric", offset_metric)


def field_checks(ctx: Context, V: F.TangentField) -> None:
    chart, u = ctx.chart, ctx.point

    def weitzenbock():
        b = F.bochner(V, chart, u)
        ric = F.ricci_action(chart, u, V.values(u))
        return absdiff(F.hodge(V, chart, u), b - ric) / (1.0 + float(np.max(np.abs(b))))

    ctx.run("weitzenbock", weitzenbock, fieldname=V.label)


def _umbilic(chart, u) -> bool:
    k = G.extrinsic_at(chart, u).principal_curvatures
    return float(k[-1] - k[0]) <= 1e-8 * (1.0 + float(np.max(np.abs(k))))


def profile_checks(ctx: Context, V: F.TangentField, profile: SH.BoundaryProfile) -> None:
    chart, u, n = ctx.chart, ctx.point, ctx.chart.dim
    sf = SH.shell_field(V, profile)
    alpha = profile.equivalent_alpha
    kw = {"profile": str(profile), "fieldname": V.label, "alpha": alpha}
    limit = {"slip": "slip_limit", "hodge": "hodge_limit", "alpha": "alpha_limit"}[profile.kind]

    def limit_check():
        total = SH.ambient_bochner_tangential(sf, chart, u)
        if profile.kind == "slip":
            ref = F.deformation(V, chart, u)
        elif profile.kind == "hodge":
            ref = F.hodge(V, chart, u)
        else:
            ref = F.alpha_operator(V, chart, u, alpha)
        return rel(total, ref)

    def decomposition():
        d = SH.decomposition(sf, chart, u)
        return rel(d["total"], d["deformation"] + d["f_rad"])

    def frad():
        value = SH.f_rad(profile, chart, u, V)
        v = V.values(u)
        ric = F.ricci_action(chart, u, v)
        expected = -2 * alpha * ric - 4 * alpha * (1 - alpha) * (G.extrinsic_at(chart, u).S2 @ v)
        if profile.kind == "slip":
            r = float(np.max(np.abs(value)))
            return r, r == 0.0
        return absdiff(value, expected)

    def radial():
        return rel(SH.radial_trace(sf, chart, u, tol=math.inf), SH.radial_trace_direct(sf, chart, u))

    def tangential():
        return rel(SH.tangential_trace(sf, chart, u, tol=math.inf), SH.tangential_trace_direct(sf, chart, u))

    def oracle():
        return rel(O.cartesian_laplacian(sf, chart, u), SH.ambient_bochner_tangential(sf, chart, u))

    ctx.run(limit, limit_check, **kw)
    ctx.run("decomposition", decomposition, **kw)
    ctx.run("f_rad", frad, **kw)
    ctx.run("radial_trace", radial, **kw)
    ctx.run("tangential_trace", tangential, **kw)
    ctx.run("oracle", oracle, **kw)
    if profile.kind == "slip":
        ctx.run("stress", lambda: float(np.max(np.abs(SH.deformation_normal_tangential(sf, chart, u)))), **kw)
    if profile.kind == "hodge":
        ctx.run("radial_constancy", lambda: float(np.max(np.abs(SH.covariant_radial_constancy(sf, chart, u)))), **kw)
    if profile.kind == "alpha" and alpha == 0.5 and n == 2:

        def anisotropy():
            total = SH.ambient_bochner_tangential(sf, chart, u)
            gap = float(np.linalg.norm(total - F.hodge(V, chart, u)) / np.linalg.norm(V.values(u)))
            if _umbilic(chart, u):
                return gap, gap < ctx.tol["anisotropy_umbilic"]
            return gap, gap > ctx.tol["anisotropy"]

        ctx.run("anisotropy", anisotropy, **kw)


def surface_label(doc_surface: dict) -> str:
    params = doc_surface.get("params", {})
    if not params:
        return doc_surface["name"]
    parts = []
    for k, v in params.items():
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        parts.append(f"{k}={v}")
    return f"{doc_surface['name']}:{','.join(parts)}"


def iter_records(cfg: RunConfig) -> Iterator[Record]:
    surfaces = cfg.doc["surfaces"]
    if isinstance(surfaces, dict):
        surfaces = [surfaces]
    for k, chart in enumerate(cfg.charts):
        label = surface_label(surfaces[k])
        for u in cfg.points[k]:
            ctx = Context(chart, label, u, cfg.tolerances)
            surface_checks(ctx)
            for V in cfg.fields[k]:
                field_checks(ctx, V)
                for profile in cfg.profiles:
                    profile_checks(ctx, V, profile)
            yield from ctx.records


def run_suite(cfg: RunConfig) -> list[Record]:
    return sorted(iter_records(cfg), key=Record.key)
