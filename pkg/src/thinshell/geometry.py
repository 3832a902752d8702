"""Charts of hypersurfaces M^n in R^{n+1} and their local geometry.

Conventions used throughout the package:

* The unit normal is the normalised generalised cross product of the chart
  tangents taken in variable order, ``N^A = det[d_1 X, ..., d_n X, e_A]``.
  For ``n = 2`` this is ``d_1 X x d_2 X``.  Swapping two chart variables
  flips ``N``.
* ``II_ij = <d_i d_j X, N>`` and ``S = g^{-1} II``, which is the shape
  operator ``S(X) = -dN(X)``.  With the catalog sphere chart the normal
  points outward, so the unit sphere has ``S = -Id`` and ``H = -1``.
  Every identity checked by this package is even in that sign.
* ``Riemann[i, j, k, l] = R^i_{jkl}`` with
  ``R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{km} Gamma^m_{lj}
  - Gamma^i_{lm} Gamma^m_{kj}``, and ``Ric_jl = R^k_{jkl}``; round spheres
  have positive Ricci curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import jets as J
from .expr import Expr, eval_jet, parse

IMMERSION_CUTOFF = 1e-10


class GeometryError(ValueError):
    pass


class DegenerateImmersion(GeometryError):
    pass


def chart_variables(n: int) -> tuple[str, ...]:
    return tuple(f"u{k + 1}" for k in range(n))


@dataclass(frozen=True, eq=False)
class Chart:
    """A parametrisation ``X: U -> R^{n+1}`` evaluable on jets.

    ``mapping`` takes ``n`` jets (and the jet slots they are seeded in) and
    returns the ``n + 1`` ambient components.  Charts compare by identity so
    they can key the per-point geometry caches.
    """

    name: str
    dim: int
    domain: tuple[tuple[float, float], ...]
    mapping: Callable[[Sequence[J.Jet], Sequence[int]], Sequence[J.Jet]]
    params: tuple[tuple[str, object], ...] = ()
    variables: tuple[str, ...] = ()
    notes: str = ""

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def evaluate(self, u: Sequence[J.Jet], slots: Sequence[int] | None = None) -> J.Jet:
        if len(u) != self.dim:
            raise ValueError(f"chart {self.name!r} takes {self.dim} coordinates, got {len(u)}")
        slots = list(range(self.dim)) if slots is None else list(slots)
        comps = list(self.mapping(u, slots))
        if len(comps) != self.ambient_dim:
            raise ValueError(f"chart {self.name!r} returned {len(comps)} components")
        sp = u[0].space
        comps = [c if isinstance(c, J.Jet) else J.Jet.constant(c, sp) for c in comps]
        return J.stack(comps)

    def point(self, u: Sequence[float]) -> np.ndarray:
        return np.asarray(self.evaluate(J.seed_point(u)).value)

    def interior(self, margin: float = 0.05) -> list[tuple[float, float]]:
        """Domain box shrunk by ``margin`` of its width on every side."""
        return [(lo + margin * (hi - lo), hi - margin * (hi - lo)) for lo, hi in self.domain]

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "variables": list(self.variables or chart_variables(self.dim)),
            "domain": [list(b) for b in self.domain],
            "params": {k: v for k, v in self.params},
            "notes": self.notes,
        }


def expression_chart(
    components: Sequence[str | Expr],
    domain: Sequence[tuple[float, float]],
    name: str = "custom",
    params: tuple = (),
) -> Chart:
    n = len(components) - 1
    if n < 1:
        raise ValueError("a hypersurface chart needs at least two components")
    if len(domain) != n:
        raise ValueError(f"domain has {len(domain)} intervals for a {n}-dimensional chart")
    names = chart_variables(n)
    exprs = tuple(c if isinstance(c, Expr) else parse(c, names) for c in components)

    def mapping(u, slots):
        return [eval_jet(e, u) for e in exprs]

    return Chart(
        name=name,
        dim=n,
        domain=tuple((float(a), float(b)) for a, b in domain),
        mapping=mapping,
        params=params or (("components", tuple(str(e) for e in exprs)),),
        variables=names,
    )


# -- catalog ------------------------------------------------------------------


def sphere(R: float = 1.0) -> Chart:
    def mapping(u, slots):
        th, ph = u
        st = J.sin(th)
        return [R * st * J.cos(ph), R * st * J.sin(ph), R * J.cos(th)]

    return Chart(
        "sphere",
        2,
        ((0.0, math.pi), (0.0, 2 * math.pi)),
        mapping,
        (("R", float(R)),),
        ("theta", "phi"),
        "polar angle theta, azimuth phi; normal points outward (S = -Id/R)",
    )


def ellipsoid(a: float = 1.0, b: float = 1.3, c: float = 2.0) -> Chart:
    def mapping(u, slots):
        th, ph = u
        st = J.sin(th)
        return [a * st * J.cos(ph), b * st * J.sin(ph), c * J.cos(th)]

    return Chart(
        "ellipsoid",
        2,
        ((0.0, math.pi), (0.0, 2 * math.pi)),
        mapping,
        (("a", float(a)), ("b", float(b)), ("c", float(c))),
        ("theta", "phi"),
        "polar angle theta, azimuth phi; normal points outward; degenerate at the poles",
    )


def torus(R: float = 2.0, r: float = 0.7) -> Chart:
    if not 0 < r < R:
        raise ValueError("torus needs 0 < r < R")

    def mapping(u, slots):
        th, ph = u
        rho = R + r * J.cos(th)
        return [rho * J.cos(ph), rho * J.sin(ph), r * J.sin(th)]

    return Chart(
        "torus",
        2,
        ((0.0, 2 * math.pi), (0.0, 2 * math.pi)),
        mapping,
        (("R", float(R)), ("r", float(r))),
        ("theta", "phi"),
        "tube angle theta (0 = outer equator), azimuth phi; normal points into the tube; seams at 0 and 2pi",
    )


def graph(f: str = "sin(u1)*cos(u2)", domain: Sequence[tuple[float, float]] | None = None, dim: int = 2) -> Chart:
    names = chart_variables(dim)
    fx = parse(f, names) if isinstance(f, str) else f
    domain = tuple(domain) if domain is not None else ((-1.0, 1.0),) * dim

    def mapping(u, slots):
        return list(u) + [eval_jet(fx, u)]

    return Chart(
        "graph",
        dim,
        tuple((float(a), float(b)) for a, b in domain),
        mapping,
        (("f", str(fx)),),
        names,
        "height graph (u, f(u)); normal has positive last component",
    )


def custom(components: Sequence[str], domain: Sequence[tuple[float, float]]) -> Chart:
    return expression_chart(components, domain, "custom")


def seeded_custom_surface(seed: int, dim: int = 2) -> Chart:
    """A reproducible random hypersurface.

    ``dim == 2``: a star-shaped perturbation of the unit sphere.  Otherwise a
    trigonometric height graph over ``[-1, 1]^dim`` in ``R^{dim+1}``.
    """
    rng = np.random.default_rng(seed)
    names = chart_variables(dim)

    def wave(scale: float) -> str:
        terms = []
        for _ in range(3):
            k = rng.integers(-2, 3, size=dim)
            if not k.any():
                k[0] = 1
            amp = round(float(rng.uniform(-scale, scale)), 4)
            shift = round(float(rng.uniform(0, 2 * math.pi)), 4)
            arg = "+".join(f"{int(kk)}*{v}" for kk, v in zip(k, names) if kk)
            terms.append(f"{amp}*sin({arg}+{shift})")
        return "+".join(terms)

    if dim == 2:
        rho = f"(1+{wave(0.08)})"
        comps = [f"{rho}*sin(u1)*cos(u2)", f"{rho}*sin(u1)*sin(u2)", f"{rho}*cos(u1)"]
        chart = expression_chart(comps, [(0.0, math.pi), (0.0, 2 * math.pi)], f"custom[seed={seed}]")
    else:
        comps = list(names) + [wave(0.4)]
        chart = expression_chart(comps, [(-1.0, 1.0)] * dim, f"custom[seed={seed},n={dim}]")
    return chart


CATALOG: dict[str, dict] = {
    "sphere": {"build": sphere, "params": {"R": 1.0}, "variables": ("theta", "phi")},
    "ellipsoid": {"build": ellipsoid, "params": {"a": 1.0, "b": 1.3, "c": 2.0}, "variables": ("theta", "phi")},
    "torus": {"build": torus, "params": {"R": 2.0, "r": 0.7}, "variables": ("theta", "phi")},
    "graph": {"build": graph, "params": {"f": "sin(u1)*cos(u2)"}, "variables": ("u1", "u2")},
    "custom": {"build": custom, "params": {"components": None, "domain": None}, "variables": ("u1", "..", "un")},
}


def catalog_chart(name: str, **params) -> Chart:
    if name not in CATALOG:
        raise KeyError(name)
    return CATALOG[name]["build"](**params)


# -- local geometry -------------------------------------------------------------


def unit_normal(dX: J.Jet) -> J.Jet:
    """Unit normal from the ``(n, n+1)`` jet matrix of chart tangents."""
    n, m = dX.shape
    comps = []
    for A in range(m):
        rows = [B for B in range(m) if B != A]
        minor = dX[:, rows].T  # (n, n): rows ambient components, columns tangents
        comps.append(J.det(minor) * float((-1) ** (A + n)))
    nn = J.stack(comps)
    return nn / J.sqrt(J.dot(nn, nn))


def christoffel_jets(g: J.Jet, ginv: J.Jet, slots: Sequence[int]) -> J.Jet:
    """``Gamma[i, j, k] = Gamma^i_{jk}`` of the metric jet ``g``."""
    dg = J.stack([g.derivative(s) for s in slots])  # dg[a, b, c] = d_a g_bc
    low = (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg) * 0.5  # low[l, j, k]
    return (ginv[:, :, None, None] * low[None, :, :, :]).sum(axis=1)


def _check_immersion(dX: np.ndarray, chart: Chart, u) -> None:
    sv = np.linalg.svd(dX, compute_uv=False)
    if sv[0] == 0 or np.prod(sv**2) / sv[0] ** (2 * len(sv)) < IMMERSION_CUTOFF:
        raise DegenerateImmersion(f"chart {chart.name!r} is not an immersion at u={list(map(float, u))}")


@dataclass(frozen=True)
class ExtrinsicData:
    N: np.ndarray
    II: np.ndarray
    S: np.ndarray
    H: float
    S2: np.ndarray
    principal_curvatures: np.ndarray

    @property
    def focal_radius(self) -> float:
        kmax = float(np.max(np.abs(self.principal_curvatures)))
        return math.inf if kmax == 0 else 1.0 / kmax


@dataclass(frozen=True)
class IntrinsicData:
    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray  # dg[k, i, j] = d_k g_ij
    Gamma: np.ndarray  # Gamma[i, j, k] = Gamma^i_jk
    dGamma: np.ndarray  # dGamma[l, i, j, k] = d_l Gamma^i_jk
    Riemann: np.ndarray  # Riemann[i, j, k, l] = R^i_jkl
    Ricci: np.ndarray  # Ric^i_j
    Ricci_lower: np.ndarray  # Ric_ij


@dataclass(eq=False)
class LocalGeometry:
    """Jets of the embedding and the metric quantities at one chart point.

    Built with the chart variables in jet slots ``slots``; the default puts
    them in slots ``0..n-1`` of an ``n``-variable space.
    """

    chart: Chart
    u: tuple[float, ...]
    X: J.Jet
    dX: J.Jet
    ddX: J.Jet
    N: J.Jet
    g: J.Jet
    ginv: J.Jet
    Gamma: J.Jet
    II: J.Jet
    S: J.Jet
    slots: tuple[int, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.chart.dim


def build_local(chart: Chart, u: Sequence[float], nvars: int | None = None, offset: int = 0) -> LocalGeometry:
    n = chart.dim
    nvars = n + offset if nvars is None else nvars
    slots = tuple(range(offset, offset + n))
    seeds = J.seed_point(list(u), nvars, offset)
    X = chart.evaluate(seeds, slots)
    dX = J.stack([X.derivative(s) for s in slots])
    _check_immersion(np.asarray(dX.value), chart, u)
    ddX = J.stack([dX.derivative(s) for s in slots], axis=1)  # ddX[i, j, A]
    N = unit_normal(dX)
    g = (dX[:, None, :] * dX[None, :, :]).sum(axis=-1)
    ginv = J.inv(g)
    Gamma = christoffel_jets(g, ginv, slots) if g.order >= 1 else None
    II = (ddX * N[None, None, :]).sum(axis=-1)
    S = J.matmul(ginv, II)
    return LocalGeometry(chart, tuple(float(x) for x in u), X, dX, ddX, N, g, ginv, Gamma, II, S, slots)


@lru_cache(maxsize=4096)
def _local_cached(chart: Chart, u: tuple[float, ...]) -> LocalGeometry:
    return build_local(chart, u)


def local_geometry(chart: Chart, u: Sequence[float]) -> LocalGeometry:
    return _local_cached(chart, tuple(float(x) for x in u))


def extrinsic_from_local(loc: LocalGeometry) -> ExtrinsicData:
    g = np.asarray(loc.g.value)
    II = np.asarray(loc.II.value)
    S = np.asarray(loc.S.value)
    II_sym = 0.5 * (II + II.T)
    kappa = scipy.linalg.eigh(II_sym, g, eigvals_only=True)
    return ExtrinsicData(
        N=np.asarray(loc.N.value),
        II=II,
        S=S,
        H=float(np.trace(S)) / loc.n,
        S2=S @ S,
        principal_curvatures=np.sort(kappa),
    )


def extrinsic_at(chart: Chart, u: Sequence[float]) -> ExtrinsicData:
    """Normal, second fundamental form, shape operator and friends at ``u``."""
    return extrinsic_from_local(local_geometry(chart, u))


def riemann_from(Gamma: np.ndarray, dGamma: np.ndarray) -> np.ndarray:
    """``R^i_jkl`` from Christoffel symbols and their first derivatives."""
    # dGamma[a, i, j, k] = d_a Gamma^i_jk
    R = np.einsum("kilj->ijkl", dGamma) - np.einsum("likj->ijkl", dGamma)
    R += np.einsum("ikm,mlj->ijkl", Gamma, Gamma) - np.einsum("ilm,mkj->ijkl", Gamma, Gamma)
    return R


def intrinsic_from_local(loc: LocalGeometry) -> IntrinsicData:
    if loc.Gamma is None or loc.Gamma.order < 1:
        raise GeometryError("chart jets are not smooth enough for curvature (need order 3 in X)")
    g = np.asarray(loc.g.value)
    ginv = np.asarray(loc.ginv.value)
    dg = np.stack([np.asarray(loc.g.derivative(s).value) for s in loc.slots])
    Gamma = np.asarray(loc.Gamma.value)
    dGamma = np.stack([np.asarray(loc.Gamma.derivative(s).value) for s in loc.slots])
    R = riemann_from(Gamma, dGamma)
    ric_low = np.einsum("kjkl->jl", R)
    return IntrinsicData(
        g=g,
        ginv=ginv,
        dg=dg,
        Gamma=Gamma,
        dGamma=dGamma,
        Riemann=R,
        Ricci=ginv @ ric_low,
        Ricci_lower=ric_low,
    )


@lru_cache(maxsize=4096)
def _intrinsic_cached(chart: Chart, u: tuple[float, ...]) -> IntrinsicData:
    return intrinsic_from_local(_local_cached(chart, u))


def intrinsic_at(chart: Chart, u: Sequence[float]) -> IntrinsicData:
    """Metric, Christoffel symbols and curvature tensors at ``u``."""
    return _intrinsic_cached(chart, tuple(float(x) for x in u))


def gauss_ricci(ex: ExtrinsicData, n: int) -> np.ndarray:
    """Mixed Ricci tensor from the shape operator: ``n H S - S^2``."""
    return n * ex.H * ex.S - ex.S2


# -- offset surfaces ------------------------------------------------------------


def offset_chart(chart: Chart, r: float) -> Chart:
    """The parallel surface ``X + r N``.

    Its jets lose one order relative to ``chart`` (the normal uses first
    derivatives), which still leaves enough for curvature.
    """

    def mapping(u, slots):
        X = chart.evaluate(u, slots)
        dX = J.stack([X.derivative(s) for s in slots])
        N = unit_normal(dX)
        Y = X + N * r
        return [Y[A] for A in range(chart.ambient_dim)]

    return Chart(
        f"{chart.name}+{r!r}N",
        chart.dim,
        chart.domain,
        mapping,
        chart.params + (("offset", float(r)),),
        chart.variables,
        f"parallel surface at distance {r!r}",
    )


def reorder_chart(chart: Chart, perm: Sequence[int]) -> Chart:
    """Same surface with chart variables permuted; odd permutations flip N."""
    perm = list(perm)
    if sorted(perm) != list(range(chart.dim)):
        raise ValueError(f"{perm} is not a permutation of the chart variables")
    inv = [perm.index(k) for k in range(chart.dim)]

    def mapping(u, slots):
        return list(chart.mapping([u[inv[k]] for k in range(chart.dim)], [slots[inv[k]] for k in range(chart.dim)]))

    names = chart.variables or chart_variables(chart.dim)
    return Chart(
        f"{chart.name}[{','.join(map(str, perm))}]",
        chart.dim,
        tuple(chart.domain[p] for p in perm),
        mapping,
        chart.params + (("permutation", tuple(perm)),),
        tuple(names[p] for p in perm),
        chart.notes,
    )


def shape_radial_derivative(chart: Chart, u: Sequence[float], h: float | None = None) -> np.ndarray:
    """``d_r S`` at ``r = 0`` from shape operators of parallel surfaces.

    Central differences at steps ``h`` and ``h/2`` combined by Richardson
    extrapolation; ``h`` defaults to ``1e-3`` times the local focal radius
    (capped at 1).
    """
    return _shape_radial_steps(chart, u, h)[0]


def _shape_radial_steps(chart: Chart, u, h):
    ex = extrinsic_at(chart, u)
    if h is None:
        h = 1e-3 * min(ex.focal_radius, 1.0)
    if h >= ex.focal_radius:
        raise DegenerateImmersion(f"offset {h} reaches the focal radius {ex.focal_radius}")

    def central(step: float) -> np.ndarray:
        sp = extrinsic_at(offset_chart(chart, step), u).S
        sm = extrinsic_at(offset_chart(chart, -step), u).S
        return (sp - sm) / (2 * step)

    d1 = central(h)
    d2 = central(h / 2)
    return (4 * d2 - d1) / 3, d1, d2, h


def shape_radial_convergence(chart: Chart, u: Sequence[float], h: float | None = None) -> dict:
    """Errors of the raw central differences against ``S^2`` and the observed order."""
    ex = extrinsic_at(chart, u)
    rich, d1, d2, h = _shape_radial_steps(chart, u, h)
    e1 = float(np.max(np.abs(d1 - ex.S2)))
    e2 = float(np.max(np.abs(d2 - ex.S2)))
    er = float(np.max(np.abs(rich - ex.S2)))
    order = math.log2(e1 / e2) if e1 > 0 and e2 > 0 else math.nan
    return {"h": h, "error_h": e1, "error_h2": e2, "error_richardson": er, "order": order}
