"""Tangent vector fields and the intrinsic vector Laplacians.

Sign conventions: ``bochner`` is the trace ``g^{jk} nabla_j nabla_k V`` (so
on the plane it is the component-wise ``+d^2``).  ``hodge`` carries the same
sign, i.e. it returns ``-(d delta + delta d)`` applied to ``V^flat`` and
raised, which makes ``hodge = bochner - Ric`` hold as written.  The Hodge
operator never touches Christoffel symbols: divergences are taken through
``(1/sqrt g) d_i (sqrt g  X^i)``, so it is a genuinely separate code path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .expr import Expr, eval_jet, parse
from .geometry import Chart, chart_variables, extrinsic_at, intrinsic_at, local_geometry


@dataclass(frozen=True, eq=False)
class TangentField:
    """Contravariant chart components ``V^i(u)``.

    Either ``exprs`` (parsed in ``u1..un``) or ``func``, a callable mapping
    the ``n`` coordinate jets to ``n`` component jets.
    """

    dim: int
    exprs: tuple[Expr, ...] = ()
    func: Callable[[Sequence[J.Jet]], Sequence[J.Jet]] | None = None
    label: str = ""

    @classmethod
    def from_strings(cls, components: Sequence[str], label: str = "") -> "TangentField":
        names = chart_variables(len(components))
        exprs = tuple(parse(c, names) for c in components)
        return cls(len(components), exprs, None, label or "; ".join(c.strip() for c in components))

    def evaluate(self, u: Sequence[J.Jet]) -> J.Jet:
        sp = u[0].space
        comps = [eval_jet(e, u) for e in self.exprs] if self.func is None else list(self.func(u))
        comps = [c if isinstance(c, J.Jet) else J.Jet.constant(c, sp) for c in comps]
        return J.stack(comps)

    def values(self, u: Sequence[float]) -> np.ndarray:
        return np.asarray(self.evaluate(J.seed_point(list(u))).value)

    def strings(self) -> list[str]:
        return [str(e) for e in self.exprs]

    def __add__(self, other: "TangentField") -> "TangentField":
        return linear_combination([(1.0, self), (1.0, other)])


def linear_combination(terms: Sequence[tuple[float, TangentField]]) -> TangentField:
    dim = terms[0][1].dim

    def func(u):
        total = None
        for c, f in terms:
            v = f.evaluate(u) * c
            total = v if total is None else total + v
        return list(total)

    return TangentField(dim, (), func, " + ".join(f"{c}*{f.label}" for c, f in terms))


def random_field(dim: int, seed: int) -> TangentField:
    """A trigonometric polynomial field with reproducible coefficients."""
    rng = np.random.default_rng(seed)
    names = chart_variables(dim)
    comps = []
    for _ in range(dim):
        terms = [f"{round(float(rng.uniform(-1, 1)), 4)}"]
        for _ in range(2):
            k = rng.integers(-2, 3, size=dim)
            if not k.any():
                k[rng.integers(dim)] = 1
            amp = round(float(rng.uniform(-1, 1)), 4)
            shift = round(float(rng.uniform(0, 2 * math.pi)), 4)
            arg = "+".join(f"{int(kk)}*{v}" for kk, v in zip(k, names) if kk)
            terms.append(f"{amp}*sin({arg}+{shift})")
        comps.append("+".join(terms).replace("+-", "-"))
    return TangentField.from_strings(comps, f"random[seed={seed}]")


def random_fields(dim: int, count: int, seed: int) -> list[TangentField]:
    seeds = np.random.SeedSequence(seed).generate_state(count)
    return [random_field(dim, int(s)) for s in seeds]


def _field_jets(V: TangentField, chart: Chart, u):
    if V.dim != chart.dim:
        raise ValueError(f"field has {V.dim} components on a {chart.dim}-dimensional chart")
    loc = local_geometry(chart, u)
    return loc, V.evaluate(J.seed_point(list(u)))


def _nabla_jets(loc, Vj: J.Jet) -> J.Jet:
    """``D[i, j] = nabla_j V^i`` as jets."""
    dV = J.stack([Vj.derivative(s) for s in loc.slots], axis=1)  # dV[i, j] = d_j V^i
    return dV + (loc.Gamma * Vj[None, None, :]).sum(axis=-1)


def covariant_derivative(V: TangentField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``D[i, j] = nabla_j V^i = d_j V^i + Gamma^i_jk V^k``."""
    loc, Vj = _field_jets(V, chart, u)
    return np.asarray(_nabla_jets(loc, Vj).value)


def second_covariant_derivative(V: TangentField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``T[i, j, k] = (nabla_j nabla_k V)^i``."""
    loc, Vj = _field_jets(V, chart, u)
    D = _nabla_jets(loc, Vj)  # D[i, k]
    Gam = np.asarray(loc.Gamma.value)
    Dv = np.asarray(D.value)
    dD = np.stack([np.asarray(D.derivative(s).value) for s in loc.slots], axis=1)  # dD[i, j, k] = d_j D[i, k]
    return dD + np.einsum("ijm,mk->ijk", Gam, Dv) - np.einsum("mjk,im->ijk", Gam, Dv)


def bochner(V: TangentField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """Rough Laplacian ``g^{jk} nabla_j nabla_k V^i``."""
    T = second_covariant_derivative(V, chart, u)
    return np.einsum("jk,ijk->i", intrinsic_at(chart, u).ginv, T)


def ricci_action(chart: Chart, u: Sequence[float], v: np.ndarray) -> np.ndarray:
    return intrinsic_at(chart, u).Ricci @ np.asarray(v)


def _hodge_covector(V: TangentField, chart: Chart, u) -> np.ndarray:
    """``(d delta + delta d) V^flat`` with positive (geometer's) sign."""
    loc, Vj = _field_jets(V, chart, u)
    slots = loc.slots
    g, ginv = loc.g, loc.ginv
    vol = J.sqrt(J.det(g))
    omega = (g * Vj[None, :]).sum(axis=-1)  # omega_j = g_jk V^k

    # delta omega = -(1/sqrt g) d_i (sqrt g g^{ij} omega_j)
    flux = (ginv * omega[None, :]).sum(axis=-1) * vol
    div = None
    for i, s in enumerate(slots):
        term = flux[i].derivative(s)
        div = term if div is None else div + term
    codiff = -(div / vol)
    d_codiff = np.array([codiff.derivative(s).value for s in slots])

    # (d omega)_ij = d_i omega_j - d_j omega_i
    dom = J.stack([omega.derivative(s) for s in slots])  # dom[i, j] = d_i omega_j
    F = dom - dom.T
    Fup = J.matmul(J.matmul(ginv, F), ginv)  # F^{ik}
    wflux = Fup * vol
    # (delta F)_j = -g_jk (1/sqrt g) d_i (sqrt g F^{ik})
    divF = []
    for k in range(len(slots)):
        acc = None
        for i, s in enumerate(slots):
            term = wflux[i, k].derivative(s)
            acc = term if acc is None else acc + term
        divF.append(acc)
    divF = np.array([d.value for d in divF]) / float(vol.value)
    delta_F = -np.asarray(g.value) @ divF
    return d_codiff + delta_F


def codifferential(V: TangentField, chart: Chart, u: Sequence[float]) -> float:
    """``delta V^flat = -div V`` computed from the volume form."""
    loc, Vj = _field_jets(V, chart, u)
    vol = J.sqrt(J.det(loc.g))
    flux = Vj * vol
    div = None
    for i, s in enumerate(loc.slots):
        term = flux[i].derivative(s)
        div = term if div is None else div + term
    return float(-(div.value / vol.value))


def hodge(V: TangentField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """Hodge Laplacian from ``d`` and ``delta``, raised, with the sign of ``bochner``."""
    return -intrinsic_at(chart, u).ginv @ _hodge_covector(V, chart, u)


def deformation(V: TangentField, chart: Chart, u: Sequence[float]) -> np.ndarray:
    """``Delta_Def V = Delta_B V + Ric V``."""
    return bochner(V, chart, u) + ricci_action(chart, u, V.values(u))


def alpha_operator(V: TangentField, chart: Chart, u: Sequence[float], alpha: float) -> np.ndarray:
    """``Delta_Def V - 2 alpha Ric V - 4 alpha (1 - alpha) S^2 V``."""
    if not 0.0 <= alpha <= 1.0:
        warnings.warn(f"alpha={alpha} lies outside [0, 1]", stacklevel=2)
    v = V.values(u)
    S2 = extrinsic_at(chart, u).S2
    return deformation(V, chart, u) - 2 * alpha * ricci_action(chart, u, v) - 4 * alpha * (1 - alpha) * (S2 @ v)
