"""Truncated multivariate Taylor arithmetic ("jets") up to total order 4.

A :class:`Jet` stores the Taylor coefficients ``c_a = d^a f / a!`` of a
function of ``nvars`` variables for every multi-index ``a`` with ``|a| <= 4``.
Each multi-index is stored once, so mixed partials are symmetric by
construction.  A jet may be tensor valued: ``coeffs`` has shape
``(*shape, ncoef)`` and every operation broadcasts over the leading axes.

Differentiating a jet (:meth:`Jet.derivative`) lowers its ``order`` by one;
coefficients above a jet's order are kept at zero and never trusted.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_ORDER = 4
DIV_EPS = 1e-300


class JetError(ArithmeticError):
    """Base class for jet evaluation failures.

    ``offset`` is filled in by the expression evaluator with the source
    position of the AST node that failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class DomainError(JetError):
    pass


class DivisionByZero(JetError):
    pass


class IndexOutOfRange(IndexError):
    pass


class JetSpace:
    """Multi-index bookkeeping shared by all jets in ``nvars`` variables."""

    def __init__(self, nvars: int):
        if nvars < 1:
            raise ValueError("a jet space needs at least one variable")
        self.nvars = nvars
        multis = []
        for deg in range(MAX_ORDER + 1):
            block = [m for m in itertools.product(range(deg + 1), repeat=nvars) if sum(m) == deg]
            multis.extend(sorted(block, reverse=True))
        self.multis: list[tuple[int, ...]] = multis
        self.size = len(multis)
        self.index = {m: k for k, m in enumerate(multis)}
        self.degree = np.array([sum(m) for m in multis])
        self.factorial = np.array([math.prod(math.factorial(x) for x in m) for m in multis], dtype=float)

        ia, ib, ic = [], [], []
        for a, ma in enumerate(multis):
            for b, mb in enumerate(multis):
                mc = tuple(x + y for x, y in zip(ma, mb))
                if sum(mc) <= MAX_ORDER:
                    ia.append(a)
                    ib.append(b)
                    ic.append(self.index[mc])
        self._ia = np.array(ia)
        self._ib = np.array(ib)
        scatter = np.zeros((len(ic), self.size))
        scatter[np.arange(len(ic)), ic] = 1.0
        self._scatter = scatter

        self._deriv = []
        for v in range(nvars):
            dst, src, fac = [], [], []
            for k, m in enumerate(multis):
                if sum(m) == MAX_ORDER:
                    continue
                up = list(m)
                up[v] += 1
                dst.append(k)
                src.append(self.index[tuple(up)])
                fac.append(float(up[v]))
            self._deriv.append((np.array(dst), np.array(src), np.array(fac)))

        self._masks = [(self.degree <= k).astype(float) for k in range(MAX_ORDER + 1)]

    def mask(self, order: int) -> np.ndarray:
        return self._masks[order]

    def product(self, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
        out = (a[..., self._ia] * b[..., self._ib]) @ self._scatter
        if order < MAX_ORDER:
            out *= self._masks[order]
        return out

    def __repr__(self) -> str:
        return f"JetSpace(nvars={self.nvars})"


@lru_cache(maxsize=None)
def space(nvars: int) -> JetSpace:
    return JetSpace(nvars)


def _as_multi(sp: JetSpace, idx: Sequence[int]) -> tuple[int, ...]:
    counts = [0] * sp.nvars
    for i in idx:
        if not 0 <= i < sp.nvars:
            raise IndexOutOfRange(f"variable index {i} outside 0..{sp.nvars - 1}")
        counts[i] += 1
    return tuple(counts)


class Jet:
    __array_priority__ = 1000
    __slots__ = ("coeffs", "space", "order")

    def __init__(self, coeffs: np.ndarray, sp: JetSpace, order: int = MAX_ORDER):
        self.coeffs = coeffs
        self.space = sp
        self.order = order

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, sp: JetSpace, order: int = MAX_ORDER) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (sp.size,))
        c[..., 0] = value
        return cls(c, sp, order)

    @classmethod
    def zeros(cls, shape: tuple[int, ...], sp: JetSpace, order: int = MAX_ORDER) -> "Jet":
        return cls(np.zeros(tuple(shape) + (sp.size,)), sp, order)

    # -- inspection ---------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def nvars(self) -> int:
        return self.space.nvars

    @property
    def value(self):
        return self.coeffs[..., 0]

    def partial(self, idx: Sequence[int]):
        """Mixed partial derivative for the variable indices in ``idx``.

        ``partial((0, 1))`` is d^2/du0 du1; the order of ``idx`` is irrelevant.
        """
        m = _as_multi(self.space, idx)
        if sum(m) > self.order:
            raise ValueError(f"jet of order {self.order} has no derivative of order {sum(m)}")
        k = self.space.index[m]
        return self.coeffs[..., k] * self.space.factorial[k]

    def gradient(self) -> np.ndarray:
        """First partials, stacked on a trailing axis of length ``nvars``."""
        return np.stack([self.partial((v,)) for v in range(self.nvars)], axis=-1)

    def hessian(self) -> np.ndarray:
        n = self.nvars
        return np.stack([np.stack([self.partial((i, j)) for j in range(n)], axis=-1) for i in range(n)], axis=-2)

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            raise IndexError("Ellipsis indexing is not supported on jets")
        return Jet(self.coeffs[key + (slice(None),)], self.space, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order}, value={self.value!r})"

    # -- structural ops -------------------------------------------------
    def derivative(self, var: int) -> "Jet":
        """Partial derivative with respect to variable ``var`` as a new jet."""
        if not 0 <= var < self.nvars:
            raise IndexOutOfRange(f"variable index {var} outside 0..{self.nvars - 1}")
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        dst, src, fac = self.space._deriv[var]
        out = np.zeros_like(self.coeffs)
        out[..., dst] = self.coeffs[..., src] * fac
        order = self.order - 1
        return Jet(out * self.space.mask(order), self.space, order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axes = tuple(range(len(self.shape)))
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            axes = tuple(a if a >= 0 else a - 1 for a in axes)
        return Jet(self.coeffs.sum(axis=axes), self.space, self.order)

    def transpose(self, *axes: int) -> "Jet":
        nd = len(self.shape)
        if not axes:
            axes = tuple(reversed(range(nd)))
        return Jet(np.transpose(self.coeffs, tuple(axes) + (nd,)), self.space, self.order)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape: int) -> "Jet":
        return Jet(self.coeffs.reshape(tuple(shape) + (self.space.size,)), self.space, self.order)

    def truncate(self, order: int) -> "Jet":
        order = min(order, self.order)
        return Jet(self.coeffs * self.space.mask(order), self.space, order)

    # -- arithmetic -----------------------------------------------------
    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError(f"jets live in different spaces: {self.space} vs {other.space}")
            return other
        return Jet.constant(other, self.space)

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            other = self._lift(other)
            return Jet(self.coeffs + other.coeffs, self.space, min(self.order, other.order))
        c = np.array(self.coeffs, copy=True)
        other = np.asarray(other, dtype=float)
        if other.shape:
            c = np.broadcast_to(c, np.broadcast_shapes(c.shape[:-1], other.shape) + c.shape[-1:]).copy()
        c[..., 0] += other
        return Jet(c, self.space, self.order)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.space, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            other = self._lift(other)
            order = min(self.order, other.order)
            return Jet(self.space.product(self.coeffs, other.coeffs, order), self.space, order)
        other = np.asarray(other, dtype=float)
        return Jet(self.coeffs * other[..., None], self.space, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(np.abs(other) <= DIV_EPS):
            raise DivisionByZero("division by zero")
        return Jet(self.coeffs / other[..., None], self.space, self.order)

    def __rtruediv__(self, other) -> "Jet":
        return reciprocal(self) * other

    def __pow__(self, other) -> "Jet":
        return power(self, other)

    def __rpow__(self, other) -> "Jet":
        return power(Jet.constant(np.broadcast_to(np.asarray(other, dtype=float), self.shape), self.space), self)


# -- constructors -------------------------------------------------------


def seed_variable(index: int, value: float, nvars: int) -> Jet:
    """The coordinate function ``u^index`` as a jet at ``u^index = value``."""
    if not 0 <= index < nvars:
        raise IndexOutOfRange(f"variable index {index} outside 0..{nvars - 1}")
    sp = space(nvars)
    c = np.zeros(sp.size)
    c[0] = value
    e = [0] * nvars
    e[index] = 1
    c[sp.index[tuple(e)]] = 1.0
    return Jet(c, sp)


def seed_point(point: Sequence[float], nvars: int | None = None, offset: int = 0) -> list[Jet]:
    """Seed every coordinate of ``point``; variable ``k`` gets slot ``offset + k``."""
    nvars = len(point) + offset if nvars is None else nvars
    return [seed_variable(offset + k, float(x), nvars) for k, x in enumerate(point)]


def stack(jets: Iterable[Jet], axis: int = 0) -> Jet:
    jets = list(jets)
    if not jets:
        raise ValueError("cannot stack an empty sequence of jets")
    sp = jets[0].space
    if any(j.space is not sp for j in jets):
        raise ValueError("cannot stack jets from different spaces")
    nd = len(jets[0].shape) + 1
    if axis < 0:
        axis += nd
    order = min(j.order for j in jets)
    return Jet(np.stack([j.coeffs for j in jets], axis=axis), sp, order)


# -- scalar entry points ------------------------------------------------------


def jet_add(a, b) -> Jet:
    return a + b


def jet_mul(a, b) -> Jet:
    return a * b


def jet_div(a, b) -> Jet:
    return a / b


# -- elementary functions -------------------------------------------------


def _compose(x: Jet, taylor: Sequence[np.ndarray]) -> Jet:
    """Evaluate ``sum_k taylor[k] * (x - x0)^k`` by Horner's rule."""
    delta = Jet(np.array(x.coeffs, copy=True), x.space, x.order)
    delta.coeffs[..., 0] = 0.0
    out = Jet.constant(taylor[x.order], x.space, x.order)
    for k in range(x.order - 1, -1, -1):
        out = out * delta + taylor[k]
    out.order = x.order
    return out


def exp(x: Jet) -> Jet:
    e = np.exp(x.value)
    return _compose(x, [e / math.factorial(k) for k in range(x.order + 1)])


def log(x: Jet) -> Jet:
    v = x.value
    if np.any(v <= 0):
        raise DomainError("log of a non-positive value")
    t = [np.log(v)] + [(-1.0) ** (k + 1) / (k * v**k) for k in range(1, x.order + 1)]
    return _compose(x, t)


def sin(x: Jet) -> Jet:
    s, c = np.sin(x.value), np.cos(x.value)
    cyc = [s, c, -s, -c]
    return _compose(x, [cyc[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def cos(x: Jet) -> Jet:
    s, c = np.sin(x.value), np.cos(x.value)
    cyc = [c, -s, -c, s]
    return _compose(x, [cyc[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def tan(x: Jet) -> Jet:
    c = np.cos(x.value)
    if np.any(np.abs(c) <= DIV_EPS):
        raise DomainError("tan evaluated at a pole")
    return sin(x) / cos(x)


def _binom(p: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= (p - j) / (j + 1)
    return out


def _is_int(p: float) -> bool:
    return float(p).is_integer()


def _const_power(x: Jet, p: float) -> Jet:
    v = np.asarray(x.value, dtype=float)
    if not _is_int(p) and np.any(v < 0):
        raise DomainError(f"negative base raised to non-integer power {p}")
    taylor = []
    for k in range(x.order + 1):
        b = _binom(p, k)
        if b == 0.0:
            taylor.append(np.zeros_like(v))
            continue
        e = p - k
        if e < 0 and np.any(v == 0):
            if p < 0 and k == 0:
                raise DivisionByZero("zero raised to a negative power")
            raise DomainError(f"power {p} is not differentiable at zero")
        taylor.append(b * v**e)
    return _compose(x, taylor)


def sqrt(x: Jet) -> Jet:
    if np.any(np.asarray(x.value) < 0):
        raise DomainError("sqrt of a negative value")
    return _const_power(x, 0.5)


def reciprocal(x: Jet) -> Jet:
    if np.any(np.abs(x.value) <= DIV_EPS):
        raise DivisionByZero("division by zero")
    return _const_power(x, -1.0)


def power(x: Jet, y) -> Jet:
    if isinstance(y, Jet):
        if np.all(y.coeffs[..., 1:] == 0) and np.ndim(y.value) == 0:
            return _const_power(x, float(y.value))
        if np.any(x.value <= 0):
            raise DomainError("variable exponent requires a positive base")
        return exp(y * log(x))
    y = np.asarray(y, dtype=float)
    if y.ndim:
        raise ValueError("array exponents are not supported; use a Jet")
    return _const_power(x, float(y))


def absolute(x: Jet) -> Jet:
    v = np.asarray(x.value)
    if np.any(v == 0):
        raise DomainError("abs is not differentiable at zero")
    return x * np.sign(v)


UNARY = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "abs": absolute,
}


def jet_compose_unary(f: str, x: Jet) -> Jet:
    try:
        fn = UNARY[f]
    except KeyError:
        raise ValueError(f"unknown elementary function {f!r}") from None
    return fn(x)


# -- small linear algebra on jet tensors ----------------------------------


def dot(a: Jet, b: Jet) -> Jet:
    """Contract the last leading axis of ``a`` and ``b``."""
    return (a * b).sum(axis=-1)


def matmul(a: Jet, b: Jet) -> Jet:
    # a: (..., i, k), b: (..., k, j) on the leading axes
    ca = a.coeffs[..., :, :, None, :]
    cb = b.coeffs[..., None, :, :, :]
    prod = Jet(np.broadcast_to(ca, np.broadcast_shapes(ca.shape, cb.shape)), a.space, a.order) * Jet(
        np.broadcast_to(cb, np.broadcast_shapes(ca.shape, cb.shape)), b.space, b.order
    )
    return prod.sum(axis=-2)


def matvec(a: Jet, v: Jet) -> Jet:
    return (a * v[None, :]).sum(axis=-1)


def inv(a: Jet) -> Jet:
    """Inverse of a square jet matrix by a terminating Neumann series."""
    a0 = np.asarray(a.value, dtype=float)
    a0inv = np.linalg.inv(a0)
    e = Jet(np.array(a.coeffs, copy=True), a.space, a.order)
    e.coeffs[..., 0] = 0.0
    step = -matmul(Jet.constant(a0inv, a.space), e)
    base = Jet.constant(a0inv, a.space, a.order)
    out = base
    term = base
    for _ in range(a.order):
        term = matmul(step, term)
        out = out + term
    return out


def det(a: Jet) -> Jet:
    n = a.shape[-1]
    total = None
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = a[0, perm[0]]
        for i in range(1, n):
            term = term * a[i, perm[i]]
        term = term * float(sign)
        total = term if total is None else total + term
    return total


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign
