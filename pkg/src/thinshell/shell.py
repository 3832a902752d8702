"""Fermi coordinates around a hypersurface and the ambient Bochner Laplacian.

The shell metric is built exactly: ``Y(r, u) = X(u) + r N(u)`` is evaluated
on jets in the ``n + 1`` variables ``(r, u^1, ..., u^n)`` (slot 0 is ``r``)
and ``gbar_ab = <d_a Y, d_b Y>``.  Nothing about its block structure or its
Christoffel symbols is assumed; those are checked against the closed forms.

A :class:`ShellField` extends a tangent field ``V`` off the surface as
``U^i = V^i + r A^i + r^2/2 B^i``, ``U^r = 0``, where ``(A, B)`` is fixed by
a :class:`BoundaryProfile`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import jets as J
from .fields import TangentField, bochner, deformation
from .geometry import (
    Chart,
    GeometryError,
    christoffel_jets,
    extrinsic_at,
    intrinsic_at,
    offset_chart,
    unit_normal,
)

CONSISTENCY_TOL = 1e-6


class FocalDegeneracy(GeometryError):
    pass


class ConsistencyFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class BoundaryProfile:
    """Normal profile of the extension at ``r = 0``.

    ``d_r U = first * S V`` and ``d_r^2 U = second * S^2 V``.
    """

    kind: str
    alpha: float | None = None

    @classmethod
    def slip(cls) -> "BoundaryProfile":
        return cls("slip")

    @classmethod
    def hodge(cls) -> "BoundaryProfile":
        return cls("hodge")

    @classmethod
    def interpolating(cls, alpha: float) -> "BoundaryProfile":
        alpha = float(alpha)
        if not math.isfinite(alpha):
            raise ValueError("alpha must be finite")
        return cls("alpha", alpha)

    @classmethod
    def parse(cls, text: str) -> "BoundaryProfile":
        text = text.strip().lower()
        if text == "slip":
            return cls.slip()
        if text == "hodge":
            return cls.hodge()
        if text.startswith("alpha:") or text.startswith("alpha="):
            return cls.interpolating(float(text[6:]))
        raise ValueError(f"unknown boundary profile {text!r} (use slip, hodge or alpha:<value>)")

    @property
    def coefficients(self) -> tuple[float, float]:
        if self.kind == "slip":
            return 0.0, 0.0
        if self.kind == "hodge":
            return 2.0, 6.0
        a = self.alpha
        return 2 * a, 2 * a * (1 + 2 * a)

    @property
    def equivalent_alpha(self) -> float:
        return {"slip": 0.0, "hodge": 1.0}.get(self.kind, self.alpha)

    def __str__(self) -> str:
        return self.kind if self.kind != "alpha" else f"alpha:{self.alpha:g}"


@dataclass(frozen=True, eq=False)
class ShellField:
    field: TangentField
    profile: BoundaryProfile


def shell_field(V: TangentField, profile: BoundaryProfile | str) -> ShellField:
    if isinstance(profile, str):
        profile = BoundaryProfile.parse(profile)
    return ShellField(V, profile)


# -- the exact shell metric -----------------------------------------------------


@dataclass(eq=False)
class ShellGeometry:
    """Jets of the Fermi-coordinate geometry at ``(r, u)``."""

    chart: Chart
    u: tuple[float, ...]
    r: float
    seeds: list[J.Jet]  # u-coordinate jets, slots 1..n
    rjet: J.Jet
    X: J.Jet
    N: J.Jet
    S: J.Jet  # surface shape operator S(u), independent of r
    gbar: J.Jet
    gbar_inv: J.Jet
    Gamma_bar: J.Jet

    @property
    def n(self) -> int:
        return self.chart.dim


def build_shell(chart: Chart, u: Sequence[float], r: float = 0.0) -> ShellGeometry:
    n = chart.dim
    m = n + 1
    slots = list(range(1, m))
    seeds = J.seed_point(list(u), m, offset=1)
    rjet = J.seed_variable(0, float(r), m)
    X = chart.evaluate(seeds, slots)
    dX = J.stack([X.derivative(s) for s in slots])
    N = unit_normal(dX)
    g = (dX[:, None, :] * dX[None, :, :]).sum(axis=-1)
    ddX = J.stack([dX.derivative(s) for s in slots], axis=1)
    II = (ddX * N[None, None, :]).sum(axis=-1)
    S = J.matmul(J.inv(g), II)

    Y = X + rjet * N
    E = J.stack([Y.derivative(a) for a in range(m)])  # E[a, A] = d_a Y^A
    gbar = (E[:, None, :] * E[None, :, :]).sum(axis=-1)
    gv = np.asarray(gbar.value)
    if np.linalg.det(gv[1:, 1:]) <= 0 or np.linalg.cond(gv) > 1e12:
        raise FocalDegeneracy(f"shell metric degenerates at r={r} on {chart.name!r}")
    gbar_inv = J.inv(gbar)
    Gamma_bar = christoffel_jets(gbar, gbar_inv, range(m))
    return ShellGeometry(chart, tuple(float(x) for x in u), float(r), seeds, rjet, X, N, S, gbar, gbar_inv, Gamma_bar)


@lru_cache(maxsize=1024)
def _shell_cached(chart: Chart, u: tuple[float, ...], r: float) -> ShellGeometry:
    return build_shell(chart, u, r)


def shell_geometry(chart: Chart, u: Sequence[float], r: float = 0.0) -> ShellGeometry:
    return _shell_cached(chart, tuple(float(x) for x in u), float(r))


def shell_metric(chart: Chart, u: Sequence[float], r: float = 0.0) -> np.ndarray:
    """``gbar`` at ``(r, u)``; index 0 is the radial direction."""
    return np.asarray(shell_geometry(chart, u, r).gbar.value)


def _extension_jets(geo: ShellGeometry, sf: ShellField) -> J.Jet:
    """``U^a`` on jets in ``(r, u)``; component 0 is ``U^r = 0``."""
    V = sf.field.evaluate(geo.seeds)
    first, second = sf.profile.coefficients
    SV = (geo.S * V[None, :]).sum(axis=-1)
    S2V = (geo.S * SV[None, :]).sum(axis=-1)
    r = geo.rjet
    Ut = V + r * (SV * first) + (r * r) * (S2V * (0.5 * second))
    return J.stack([J.Jet.zeros((), V.space)] + list(Ut))


def _covariant_jets(geo: ShellGeometry, U: J.Jet) -> J.Jet:
    """``D[a, b] = nablabar_b U^a``."""
    m = geo.n + 1
    dU = J.stack([U.derivative(b) for b in range(m)], axis=1)
    return dU + (geo.Gamma_bar * U[None, None, :]).sum(axis=-1)


def _second_covariant(geo: ShellGeometry, D: J.Jet) -> np.ndarray:
    """``T[a, c, b] = (nablabar_c nablabar_b U)^a`` at the base point."""
    m = geo.n + 1
    Gam = np.asarray(geo.Gamma_bar.value)
    Dv = np.asarray(D.value)
    dD = np.stack([np.asarray(D.derivative(c).value) for c in range(m)], axis=1)
    return dD + np.einsum("acd,db->acb", Gam, Dv) - np.einsum("dcb,ad->acb", Gam, Dv)


def _direct(sf: ShellField, chart: Chart, u):
    geo = shell_geometry(chart, u)
    U = _extension_jets(geo, sf)
    D = _covariant_jets(geo, U)
    return geo, U, D, _second_covariant(geo, D)


# -- closed forms ---------------------------------------------------------------


def _profile_vectors(sf: ShellField, chart: Chart, u):
    ex = extrinsic_at(chart, u)
    v = sf.field.values(u)
    first, second = sf.profile.coefficients
    return ex, v, first * (ex.S @ v), second * (ex.S2 @ v)


def radial_trace_direct(sf: ShellField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``(nablabar_r nablabar_r U)^i`` from the shell metric itself."""
    _, _, _, T = _direct(sf, chart, u)
    return T[1:, 0, 0]


def tangential_trace_direct(sf: ShellField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``g^{jk} (nablabar_j nablabar_k U)^i`` from the shell metric itself."""
    geo, _, _, T = _direct(sf, chart, u)
    ginv = np.asarray(geo.gbar_inv.value)[1:, 1:]
    return np.einsum("jk,ijk->i", ginv, T[1:, 1:, 1:])


def _check(name: str, closed: np.ndarray, direct: np.ndarray, tol: float) -> None:
    scale = 1.0 + float(np.max(np.abs(direct)))
    err = float(np.max(np.abs(closed - direct)))
    if err > tol * scale:
        raise ConsistencyFailure(f"{name}: closed form and shell metric differ by {err:.3e}")


def radial_trace(sf: ShellField, chart: Chart, u: Sequence[float], tol: float = CONSISTENCY_TOL) -> np.ndarray:
    """``d_r^2 U - 2 S d_r U`` at ``r = 0``, cross-checked against the shell metric."""
    _, _, A, B = _profile_vectors(sf, chart, u)
    ex = extrinsic_at(chart, u)
    closed = B - 2 * ex.S @ A
    _check("radial trace", closed, radial_trace_direct(sf, chart, u), tol)
    return closed


def tangential_trace(sf: ShellField, chart: Chart, u: Sequence[float], tol: float = CONSISTENCY_TOL) -> np.ndarray:
    """``Delta_B V - S^2 V + nH S V - nH d_r U``, cross-checked against the shell metric."""
    ex, v, A, _ = _profile_vectors(sf, chart, u)
    n = chart.dim
    closed = bochner(sf.field, chart, u) - ex.S2 @ v + n * ex.H * (ex.S @ v) - n * ex.H * A
    _check("tangential trace", closed, tangential_trace_direct(sf, chart, u), tol)
    return closed


def f_rad(profile: BoundaryProfile | str, chart: Chart, u: Sequence[float], V: TangentField) -> np.ndarray:
    """Radial boundary-shear term ``d_r^2 U - (nH Id + 2S) d_r U``."""
    sf = shell_field(V, profile)
    ex, _, A, B = _profile_vectors(sf, chart, u)
    n = chart.dim
    return B - (n * ex.H * np.eye(n) + 2 * ex.S) @ A


def ambient_bochner_tangential(sf: ShellField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """Tangential components of ``gbar^{ab} nablabar_a nablabar_b U`` at ``r = 0``."""
    geo, _, _, T = _direct(sf, chart, u)
    return np.einsum("cb,acb->a", np.asarray(geo.gbar_inv.value), T)[1:]


def decomposition(sf: ShellField, chart: Chart, u: Sequence[float]) -> dict[str, np.ndarray]:
    """Both sides of the intrinsic/radial split."""
    total = ambient_bochner_tangential(sf, chart, u)
    intrinsic = deformation(sf.field, chart, u)
    frad = f_rad(sf.profile, chart, u, sf.field)
    return {"total": total, "deformation": intrinsic, "f_rad": frad, "residual": total - intrinsic - frad}


def deformation_normal_tangential(sf: ShellField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``(Def U)_{ri} = (nablabar_r U_i + nablabar_i U_r) / 2`` at ``r = 0``."""
    geo, _, D, _ = _direct(sf, chart, u)
    gb = np.asarray(geo.gbar.value)
    Dlow = gb @ np.asarray(D.value)  # Dlow[c, b] = nablabar_b U_c
    return 0.5 * (Dlow[1:, 0] + Dlow[0, 1:])


def covariant_radial_constancy(sf: ShellField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``d_r (g_ij(r) U^j(r))`` at ``r = 0``."""
    geo = shell_geometry(chart, u)
    U = _extension_jets(geo, sf)
    low = (geo.gbar * U[None, :]).sum(axis=-1)
    return np.array([low[1 + i].derivative(0).value for i in range(chart.dim)])


# -- Eq.-level checks of the shell metric -------------------------------------------


@dataclass(frozen=True)
class ChristoffelTable:
    full: np.ndarray  # full[a, b, c] = Gammabar^a_bc, index 0 radial
    r_ij: np.ndarray
    i_rj: np.ndarray
    i_jk: np.ndarray
    r_rr: float
    i_rr: np.ndarray
    r_ri: np.ndarray


def ambient_christoffel(chart: Chart, u: Sequence[float]) -> ChristoffelTable:
    G = np.asarray(shell_geometry(chart, u).Gamma_bar.value)
    return ChristoffelTable(
        full=G,
        r_ij=G[0, 1:, 1:],
        i_rj=G[1:, 0, 1:],
        i_jk=G[1:, 1:, 1:],
        r_rr=float(G[0, 0, 0]),
        i_rr=G[1:, 0, 0],
        r_ri=G[0, 0, 1:],
    )


def christoffel_residual(chart: Chart, u: Sequence[float]) -> float:
    """Max deviation of the shell Christoffel table from ``(II, -S, Gamma, 0...)``."""
    t = ambient_christoffel(chart, u)
    ex = extrinsic_at(chart, u)
    it = intrinsic_at(chart, u)
    parts = [
        t.r_ij - ex.II,
        t.i_rj + ex.S,
        t.i_jk - it.Gamma,
        np.array([t.r_rr]),
        t.i_rr,
        t.r_ri,
        t.full[1:, 1:, 0] + ex.S,  # Gamma^i_jr, by symmetry
    ]
    return max(float(np.max(np.abs(p))) for p in parts)


@dataclass(frozen=True)
class ExpansionReport:
    r_values: tuple[float, ...]
    residuals: tuple[float, ...]
    orders: tuple[float, ...]
    exact: bool

    @property
    def min_order(self) -> float:
        return min(self.orders) if self.orders else math.inf


def _expansion_residual(chart: Chart, u, r: float) -> float:
    ex = extrinsic_at(chart, u)
    g0 = intrinsic_at(chart, u).g
    lowS2 = g0 @ ex.S2
    gr = shell_metric(chart, u, r)[1:, 1:]
    return float(np.max(np.abs(gr - (g0 - 2 * r * ex.II + r * r * lowS2))))


def metric_expansion_check(chart: Chart, u: Sequence[float], r_values: Sequence[float] | None = None) -> ExpansionReport:
    """Remainder of ``g(r) = g - 2r II + r^2 S^2`` at each ``r`` and at ``r/2``.

    In flat ambient space ``d_i Y = (Id - rS) d_i X``, so the remainder is
    identically zero; when every residual sits at rounding level the report
    is flagged ``exact`` and the observed order is infinite.
    """
    ex = extrinsic_at(chart, u)
    if r_values is None:
        r_values = [0.1 * min(ex.focal_radius, 1.0)]
    g0 = intrinsic_at(chart, u).g
    floor = 1e-13 * (1.0 + float(np.max(np.abs(g0))))
    rs, res, orders = [], [], []
    exact = True
    for r in r_values:
        if abs(r) >= ex.focal_radius:
            raise FocalDegeneracy(f"r={r} beyond focal radius {ex.focal_radius}")
        e1 = _expansion_residual(chart, u, r)
        e2 = _expansion_residual(chart, u, r / 2)
        rs.append(float(r))
        res.append(e1)
        if e1 <= floor and e2 <= floor:
            orders.append(math.inf)
        else:
            exact = False
            orders.append(math.log2(e1 / e2) if e2 > 0 else math.inf)
    return ExpansionReport(tuple(rs), tuple(res), tuple(orders), exact)


def offset_metric_consistency(chart: Chart, u: Sequence[float], r: float) -> float:
    """``intrinsic_at`` on ``X + rN`` against the shell metric block at ``r``."""
    g_offset = intrinsic_at(offset_chart(chart, r), u).g
    return float(np.max(np.abs(g_offset - shell_metric(chart, u, r)[1:, 1:])))
