"""Truncated multivariate Taylor arithmetic ("jets") up to order 4.

A :class:`Jet` holds the normalized Taylor coefficients ``d^a f / a!`` of a
scalar function at a base point, one slot per multi-index ``a`` with
``|a| <= order``, in graded-lexicographic order.  Coefficient arrays carry
arbitrary trailing batch dimensions, so one jet can describe a function at
many points at once.

Scalar fields are plain callables ``f(x, y, t)``.  When written with the
elementary functions of this module (:func:`exp`, :func:`sin`, ...) the same
callable evaluates on floats, numpy arrays and jets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 4


class JetOrderError(ValueError):
    """Raised when a computation needs more derivatives than a jet carries."""


@lru_cache(maxsize=None)
def multi_indices(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, graded-lexicographic."""
    out = []
    for deg in range(order + 1):
        for alpha in _compositions(deg, nvars):
            out.append(alpha)
    return tuple(out)


def _compositions(deg, nvars):
    if nvars == 1:
        yield (deg,)
        return
    for first in range(deg, -1, -1):
        for rest in _compositions(deg - first, nvars - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> dict:
    return {a: i for i, a in enumerate(multi_indices(nvars, order))}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    # for every slot i: target slots k and partner slots j with a_i + a_j = a_k
    mis = multi_indices(nvars, order)
    idx = _index(nvars, order)
    table = []
    for i, ai in enumerate(mis):
        js, ks = [], []
        for j, aj in enumerate(mis):
            ak = tuple(p + q for p, q in zip(ai, aj))
            if sum(ak) <= order:
                js.append(j)
                ks.append(idx[ak])
        table.append((i, np.array(js), np.array(ks)))
    return table


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int):
    # d/dx_var maps slot of a + e_var (order n) to slot of a (order n-1)
    lo = multi_indices(nvars, order - 1)
    idx = _index(nvars, order)
    src, fac = [], []
    for a in lo:
        b = list(a)
        b[var] += 1
        src.append(idx[tuple(b)])
        fac.append(b[var])
    return np.array(src), np.array(fac, dtype=float)


def ncoef(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


class Jet:
    """Truncated Taylor expansion of a scalar function at one or many points."""

    __array_priority__ = 100
    __slots__ = ("c", "nvars", "order")

    def __init__(self, c, nvars: int, order: int):
        if order > MAX_ORDER or order < 0:
            raise JetOrderError(f"jet order must lie in [0, {MAX_ORDER}], got {order}")
        c = np.asarray(c, dtype=float)
        if c.shape[0] != ncoef(nvars, order):
            raise ValueError("coefficient array does not match (nvars, order)")
        self.c = c
        self.nvars = nvars
        self.order = order

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((ncoef(nvars, order),) + value.shape)
        c[0] = value
        return cls(c, nvars, order)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.c.shape[1:]

    @property
    def value(self):
        v = self.c[0]
        return float(v) if v.ndim == 0 else v

    def partial(self, alpha: Sequence[int]):
        """The mixed partial derivative d^alpha f at the base point."""
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self.order:
            raise JetOrderError(f"partial {alpha} exceeds jet order {self.order}")
        v = self.c[_index(self.nvars, self.order)[alpha]]
        scale = math.prod(math.factorial(a) for a in alpha)
        v = v * scale
        return float(v) if np.ndim(v) == 0 else v

    def gradient(self):
        return np.stack([np.asarray(self.partial(e)) for e in np.eye(self.nvars, dtype=int)])

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.c[: ncoef(self.nvars, order)], self.nvars, order)

    def derivative(self, var: int) -> "Jet":
        """Jet of d f / d x_var, one order lower."""
        if self.order == 0:
            raise JetOrderError("cannot differentiate an order-0 jet")
        src, fac = _deriv_table(self.nvars, self.order, var)
        fac = fac.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.c[src] * fac, self.nvars, self.order - 1)

    # batch helpers ------------------------------------------------------
    def expand_dims(self, axis: int = -1) -> "Jet":
        ax = axis if axis < 0 else axis + 1
        return Jet(np.expand_dims(self.c, ax), self.nvars, self.order)

    def sum(self, axis: int = -1) -> "Jet":
        ax = axis if axis < 0 else axis + 1
        return Jet(self.c.sum(axis=ax), self.nvars, self.order)

    def __getitem__(self, item) -> "Jet":
        if not isinstance(item, tuple):
            item = (item,)
        return Jet(self.c[(slice(None),) + item], self.nvars, self.order)

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different numbers of variables")
            return other
        return Jet.constant(other, self.nvars, self.order)

    def _common(self, other):
        other = self._coerce(other)
        n = min(self.order, other.order)
        a = self if self.order == n else self.truncate(n)
        b = other if other.order == n else other.truncate(n)
        return a, b, n

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(self.batch_shape, other.shape)
            c = np.broadcast_to(self.c, self.c.shape[:1] + shape).copy()
            c[0] += other
            return Jet(c, self.nvars, self.order)
        a, b, n = self._common(other)
        return Jet(a.c + b.c, self.nvars, n)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.nvars, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.c * other, self.nvars, self.order)
        a, b, n = self._common(other)
        shape = np.broadcast_shapes(a.batch_shape, b.batch_shape)
        out = np.zeros((ncoef(self.nvars, n),) + shape)
        for i, js, ks in _mul_table(self.nvars, n):
            ai = a.c[i]
            if ai.ndim == 0 and ai == 0.0:
                continue
            out[ks] += ai * b.c[js]
        return Jet(out, self.nvars, n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float), self.nvars, self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones(self.batch_shape), self.nvars, self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        return self.power(float(p))

    # composition with univariate primitives ------------------------------
    def compose(self, derivs) -> "Jet":
        """phi(self) given derivs[k] = phi^(k)(value) for k = 0..order."""
        a0 = self.c[0]
        h = Jet(self.c.copy(), self.nvars, self.order)
        h.c[0] = 0.0
        out = Jet.constant(np.broadcast_to(derivs[0], a0.shape), self.nvars, self.order)
        hk = None
        for k in range(1, self.order + 1):
            hk = h if hk is None else hk * h
            out = out + hk * (np.asarray(derivs[k]) / math.factorial(k))
        return out

    def exp(self):
        e = np.exp(self.c[0])
        return self.compose([e] * (self.order + 1))

    def log(self):
        a = self.c[0]
        d = [np.log(a)] + [(-1.0) ** (k - 1) * math.factorial(k - 1) / a**k for k in range(1, self.order + 1)]
        return self.compose(d)

    def sin(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        cyc = [s, c, -s, -c]
        return self.compose([cyc[k % 4] for k in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        cyc = [c, -s, -c, s]
        return self.compose([cyc[k % 4] for k in range(self.order + 1)])

    def sinh(self):
        s, c = np.sinh(self.c[0]), np.cosh(self.c[0])
        return self.compose([s if k % 2 == 0 else c for k in range(self.order + 1)])

    def cosh(self):
        s, c = np.sinh(self.c[0]), np.cosh(self.c[0])
        return self.compose([c if k % 2 == 0 else s for k in range(self.order + 1)])

    def power(self, p: float):
        a = self.c[0]
        d, coef = [], 1.0
        for k in range(self.order + 1):
            d.append(coef * a ** (p - k))
            coef *= p - k
        return self.compose(d)

    def sqrt(self):
        return self.power(0.5)

    def reciprocal(self):
        return self.power(-1.0)

    def __repr__(self):
        return f"Jet(order={self.order}, nvars={self.nvars}, value={self.c[0]!r})"


def variables(point, order: int) -> tuple[Jet, ...]:
    """Coordinate jets x_i + dx_i at ``point`` (shape (nvars, *batch))."""
    point = np.asarray(point, dtype=float)
    nvars = point.shape[0]
    out = []
    for i in range(nvars):
        c = np.zeros((ncoef(nvars, order),) + point.shape[1:])
        c[0] = point[i]
        if order >= 1:
            c[1 + i] = 1.0
        out.append(Jet(c, nvars, order))
    return tuple(out)


def _dispatch(name, npfunc):
    def f(a):
        if isinstance(a, Jet):
            return getattr(a, name)()
        return npfunc(a)

    f.__name__ = name
    f.__doc__ = f"{name} on floats, arrays and jets."
    return f


exp = _dispatch("exp", np.exp)
log = _dispatch("log", np.log)
sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)
sinh = _dispatch("sinh", np.sinh)
cosh = _dispatch("cosh", np.cosh)
sqrt = _dispatch("sqrt", np.sqrt)


def value_of(a):
    """Point value of a jet, or the argument itself."""
    return a.value if isinstance(a, Jet) else a


def add_axis(a):
    """Append a trailing batch axis (used to broadcast against node arrays)."""
    if isinstance(a, Jet):
        return a.expand_dims(-1)
    return np.asarray(a)[..., None]


def sum_last(a):
    if isinstance(a, Jet):
        return a.sum(-1)
    return np.sum(a, axis=-1)


@dataclass(frozen=True)
class ScalarField:
    """A smooth function of chart coordinates with a human-readable label."""

    fn: Callable
    description: str = ""

    def __call__(self, *coords):
        return self.fn(*coords)

    def __repr__(self):
        return f"ScalarField({self.description or self.fn!r})"


def as_field(f) -> ScalarField:
    return f if isinstance(f, ScalarField) else ScalarField(f, getattr(f, "__name__", ""))


def jet_eval(f, p, order: int) -> Jet:
    """Jet of ``f`` at ``p`` carrying all partials up to ``order``."""
    if order > MAX_ORDER:
        raise JetOrderError(f"order {order} exceeds the supported maximum {MAX_ORDER}")
    out = f(*variables(p, order))
    if not isinstance(out, Jet):
        # f ignored its arguments (a constant)
        out = Jet.constant(np.broadcast_to(out, np.shape(p)[1:]), len(p), order)
    return out


# test-function library ------------------------------------------------------

def constant(c: float) -> ScalarField:
    return ScalarField(lambda x, y, t: 0.0 * x + c, f"constant {c}")


def coordinate(i: int) -> ScalarField:
    names = "xyt"
    return ScalarField(lambda *q: q[i], f"coordinate {names[i] if i < 3 else i}")


def polynomial(coefs: dict) -> ScalarField:
    """Polynomial from a dict {(i, j, k): coefficient}."""
    items = tuple(sorted(coefs.items()))

    def fn(x, y, t):
        out = 0.0 * x
        for (i, j, k), a in items:
            out = out + a * (x**i) * (y**j) * (t**k)
        return out

    return ScalarField(fn, "polynomial " + " + ".join(f"{a:.3g}*x^{i}y^{j}t^{k}" for (i, j, k), a in items))


def random_polynomial(rng: np.random.Generator, degree: int = 4, nvars: int = 3) -> ScalarField:
    coefs = {}
    for alpha in multi_indices(nvars, degree):
        if rng.random() < 0.6:
            coefs[alpha] = float(rng.normal() / (1 + sum(alpha)))
    if not coefs:
        coefs[(1, 0, 0)] = 1.0
    return polynomial(coefs)


def random_test_function(rng: np.random.Generator, positive: bool = False) -> ScalarField:
    """Polynomial x Gaussian x trig product; ``positive`` wraps it as c + f^2."""
    poly = random_polynomial(rng, degree=int(rng.integers(1, 5)))
    q = rng.normal(size=(3, 3)) * 0.4
    q = q @ q.T + 0.2 * np.eye(3)
    centre = rng.normal(size=3) * 0.5
    w = rng.normal(size=3)
    phase = float(rng.uniform(0, 2 * np.pi))
    use_trig = rng.random() < 0.5
    c0 = float(rng.uniform(0.2, 1.0))

    def base(x, y, t):
        d = (x - centre[0], y - centre[1], t - centre[2])
        quad = 0.0
        for i in range(3):
            for j in range(3):
                quad = quad + q[i, j] * d[i] * d[j]
        out = poly(x, y, t) * exp(-0.5 * quad)
        if use_trig:
            out = out * cos(w[0] * x + w[1] * y + w[2] * t + phase)
        return out

    if positive:
        return ScalarField(lambda x, y, t: c0 + base(x, y, t) ** 2, f"{c0:.3g} + (random product)^2")
    return ScalarField(base, "random polynomial-gaussian-trig product")
