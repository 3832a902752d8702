"""Brute-force check of the shell computation that never uses Fermi coordinates.

In flat space the Bochner Laplacian of a vector field is the component-wise
Laplacian of its Cartesian components.  The extension ``U`` is realised as a
Cartesian field by projecting each sample point onto the surface (Newton on
``|p - X(u)|^2``), evaluating the Fermi components there and pushing them
through the exact frame ``d_i Y = d_i X + r d_i N``.  A central second
difference stencil then gives the ambient Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import jets as J
from .geometry import Chart, GeometryError, extrinsic_at, local_geometry
from .shell import ShellField, ambient_bochner_tangential

MAX_ITER = 50
STEP_TOL = 1e-12


class NoConvergence(GeometryError):
    pass


class OutsideTube(GeometryError):
    pass


@dataclass(frozen=True)
class ClosestPointResult:
    u: np.ndarray
    r: float
    residual: float
    iterations: int


def _embedding_derivatives(chart: Chart, u: np.ndarray):
    X = chart.evaluate(J.seed_point(list(u)))
    return np.asarray(X.value), np.moveaxis(X.gradient(), -1, 0), np.moveaxis(X.hessian(), 0, -1)


def closest_point(chart: Chart, p: Sequence[float], seed: Sequence[float]) -> ClosestPointResult:
    """Foot point and signed distance of ``p`` (positive along ``N``)."""
    p = np.asarray(p, dtype=float)
    u = np.array(seed, dtype=float)
    for it in range(1, MAX_ITER + 1):
        X, dX, ddX = _embedding_derivatives(chart, u)
        d = p - X
        grad = -dX @ d
        hess = dX @ dX.T - np.einsum("ijA,A->ij", ddX, d)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Newton system at u={u.tolist()}") from exc
        u = u + step
        if not np.all(np.isfinite(u)):
            raise NoConvergence("Newton iteration diverged")
        if np.linalg.norm(step) < STEP_TOL:
            break
    else:
        raise NoConvergence(f"closest point did not converge in {MAX_ITER} iterations")
    X, dX, _ = _embedding_derivatives(chart, u)
    d = p - X
    ex = extrinsic_at(chart, u)
    r = float(d @ ex.N)
    if abs(r) >= ex.focal_radius:
        raise OutsideTube(f"|r|={abs(r):.3g} exceeds focal radius {ex.focal_radius:.3g}")
    return ClosestPointResult(u=u, r=r, residual=float(np.linalg.norm(dX @ d)), iterations=it)


def cartesian_value(sf: ShellField, chart: Chart, p: Sequence[float], seed: Sequence[float]) -> np.ndarray:
    """Cartesian components of the extension ``U`` at the ambient point ``p``."""
    cp = closest_point(chart, p, seed)
    loc = local_geometry(chart, cp.u)
    dX = np.asarray(loc.dX.value)
    dN = np.stack([np.asarray(loc.N.derivative(s).value) for s in loc.slots])
    S = np.asarray(loc.S.value)
    v = sf.field.values(cp.u)
    first, second = sf.profile.coefficients
    Sv = S @ v
    U = v + cp.r * first * Sv + 0.5 * cp.r**2 * second * (S @ Sv)
    return U @ (dX + cp.r * dN)


def default_step(chart: Chart, u: Sequence[float], factor: float = 1e-3) -> float:
    return factor * min(extrinsic_at(chart, u).focal_radius, 1.0)


def _raw_laplacian(sf: ShellField, chart: Chart, u: Sequence[float], h: float) -> np.ndarray:
    loc = local_geometry(chart, u)
    p0 = np.asarray(loc.X.value)
    centre = cartesian_value(sf, chart, p0, u)
    lap = np.zeros_like(p0)
    for A in range(len(p0)):
        e = np.zeros_like(p0)
        e[A] = h
        lap += cartesian_value(sf, chart, p0 + e, u) + cartesian_value(sf, chart, p0 - e, u) - 2 * centre
    return lap / h**2


def _to_chart(chart: Chart, u, w: np.ndarray) -> np.ndarray:
    loc = local_geometry(chart, u)
    dX = np.asarray(loc.dX.value)
    return np.linalg.solve(np.asarray(loc.g.value), dX @ w)


def cartesian_laplacian_raw(sf: ShellField, chart: Chart, u: Sequence[float], h: float) -> np.ndarray:
    """Single-step stencil result (second order in ``h``), in chart components."""
    return _to_chart(chart, u, _raw_laplacian(sf, chart, u, h))


def cartesian_laplacian(sf: ShellField, chart: Chart, u: Sequence[float], h: float | None = None) -> np.ndarray:
    """Tangential chart components of the flat Laplacian of ``U`` at ``X(u)``.

    Steps ``h`` and ``h/2`` are combined by Richardson extrapolation.
    """
    if h is None:
        h = default_step(chart, u)
    l1 = _raw_laplacian(sf, chart, u, h)
    l2 = _raw_laplacian(sf, chart, u, h / 2)
    return _to_chart(chart, u, (4 * l2 - l1) / 3)


def oracle_convergence(sf: ShellField, chart: Chart, u: Sequence[float], h: float | None = None) -> dict:
    """Stencil errors at ``h`` and ``h/2`` against the Fermi-coordinate value."""
    if h is None:
        h = default_step(chart, u, 2e-2)
    exact = ambient_bochner_tangential(sf, chart, u)
    l1 = _raw_laplacian(sf, chart, u, h)
    l2 = _raw_laplacian(sf, chart, u, h / 2)
    rich = _to_chart(chart, u, (4 * l2 - l1) / 3)
    e1 = float(np.max(np.abs(_to_chart(chart, u, l1) - exact)))
    e2 = float(np.max(np.abs(_to_chart(chart, u, l2) - exact)))
    scale = 1.0 + float(np.max(np.abs(exact)))
    return {
        "h": h,
        "error_h": e1,
        "error_h2": e2,
        "order": math.log2(e1 / e2) if e1 > 0 and e2 > 0 else math.nan,
        "richardson_error": float(np.max(np.abs(rich - exact))) / scale,
    }
