"""Model sub-Riemannian spaces: coordinate charts, vector fields, brackets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet, variables


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class CDParams:
    """Curvature-dimension parameters (rho1, rho2, kappa, m)."""

    rho1: float
    rho2: float
    kappa: float
    m: float

    def __post_init__(self):
        if not self.rho2 > 0:
            raise ValueError("rho2 must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not self.m > 0:
            raise ValueError("m must be positive")

    @property
    def D(self) -> float:
        """Dimension constant of the heat-kernel Harnack inequality."""
        return (1.0 + 1.5 * self.kappa / self.rho2) * self.m

    @property
    def Dstar(self) -> float:
        """Dimension constant of the reverse Harnack differential inequality."""
        return self.m * (1.0 + 2.0 * self.kappa / self.rho2)

    def with_rho1(self, rho1: float) -> "CDParams":
        return CDParams(rho1, self.rho2, self.kappa, self.m)


class VectorField:
    """First-order operator sum_j c_j(q) d/dq_j with closed-form coefficients.

    ``coeffs`` are callables of the chart coordinates; they must work on
    floats, arrays and jets (use the elementary functions of :mod:`jets`).
    """

    def __init__(self, coeffs: Sequence[Callable], name: str = ""):
        self.coeffs = tuple(coeffs)
        self.name = name

    @property
    def dimension(self) -> int:
        return len(self.coeffs)

    def coefficient_jets(self, p, order: int) -> list[Jet]:
        """Jets of every coefficient at ``p`` up to ``order``."""
        q = variables(p, order)
        out = []
        for c in self.coeffs:
            v = c(*q)
            if not isinstance(v, Jet):
                v = Jet.constant(np.broadcast_to(v, np.shape(p)[1:]), len(q), order)
            out.append(v)
        return out

    def coefficients(self, p) -> np.ndarray:
        """Coefficient values at ``p`` (shape (dim, *batch))."""
        p = np.asarray(p, dtype=float)
        if all(c is not None for c in self.coeffs):
            # plain closures accept arrays directly
            return np.stack([np.broadcast_to(np.asarray(c(*p), dtype=float), p.shape[1:]) for c in self.coeffs])
        return np.stack([np.broadcast_to(np.asarray(c.value, dtype=float), p.shape[1:])
                         for c in self.coefficient_jets(p, 0)])

    def apply(self, fjet: Jet, p) -> Jet:
        """Jet of V f (one order lower) from the jet of f at ``p``."""
        if fjet.order < 1:
            raise jets.JetOrderError("directional derivative needs a jet of order >= 1")
        if fjet.nvars != self.dimension:
            raise ModelError("field and jet live on charts of different dimension")
        n = fjet.order - 1
        cj = self.coefficient_jets(p, n)
        out = cj[0] * fjet.derivative(0)
        for j in range(1, self.dimension):
            out = out + cj[j] * fjet.derivative(j)
        return out

    def __call__(self, fjet: Jet, p) -> Jet:
        return self.apply(fjet, p)

    def __repr__(self):
        return f"VectorField({self.name or '?'})"


class BracketField(VectorField):
    """The commutator [v, w] with coefficients (v.grad) w_j - (w.grad) v_j."""

    def __init__(self, v: VectorField, w: VectorField, name: str = ""):
        if v.dimension != w.dimension:
            raise ModelError("bracket of fields with different dimensions")
        self.v, self.w = v, w
        self.name = name or f"[{v.name},{w.name}]"
        self.coeffs = (None,) * v.dimension

    def coefficient_jets(self, p, order: int) -> list[Jet]:
        if order + 1 > jets.MAX_ORDER:
            raise jets.JetOrderError("bracket nesting exceeds the maximum jet order")
        vj = self.v.coefficient_jets(p, order + 1)
        wj = self.w.coefficient_jets(p, order + 1)
        vlo = [c.truncate(order) for c in vj]
        wlo = [c.truncate(order) for c in wj]
        out = []
        for j in range(self.v.dimension):
            acc = Jet.constant(np.zeros(np.shape(p)[1:]), self.v.dimension, order)
            for k in range(self.v.dimension):
                acc = acc + vlo[k] * wj[j].derivative(k) - wlo[k] * vj[j].derivative(k)
            out.append(acc)
        return out


class LinearCombination(VectorField):
    """sum_k a_k V_k with constant coefficients."""

    def __init__(self, terms: Sequence[tuple[float, VectorField]], name: str = ""):
        self.terms = tuple(terms)
        self.name = name or " + ".join(f"{a:g}*{v.name}" for a, v in self.terms)
        self.coeffs = (None,) * self.terms[0][1].dimension

    def coefficient_jets(self, p, order: int) -> list[Jet]:
        out = None
        for a, v in self.terms:
            cj = [c * a for c in v.coefficient_jets(p, order)]
            out = cj if out is None else [x + y for x, y in zip(out, cj)]
        return out


def bracket(v: VectorField, w: VectorField) -> VectorField:
    return BracketField(v, w)


@dataclass(frozen=True)
class ModelSpace:
    name: str
    kind: str
    rho1: float
    dimension: int
    horizontal: tuple
    vertical: tuple
    cd: CDParams
    has_dilations: bool
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def X(self) -> VectorField:
        return self.horizontal[0]

    @property
    def Y(self) -> VectorField:
        return self.horizontal[1]

    @property
    def Z(self) -> VectorField:
        return self.vertical[0]

    def dilate(self, lam: float, p):
        return dilate(self, lam, p)

    def sample_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Random points (shape (3, n)) inside the chart's domain of validity."""
        p = rng.uniform(-1.0, 1.0, size=(self.dimension, n))
        if self.kind == "g_rho1" and self.rho1 > 0:
            # keep clear of the chart singularity cos(sqrt(rho1) y) = 0
            p[1] *= 0.9 * min(1.0, np.pi / (2 * np.sqrt(self.rho1)))
        return p


def dilate(model: ModelSpace, lam: float, p):
    """Anisotropic dilation (lam x, lam y, lam^2 t)."""
    if not model.has_dilations:
        raise ModelError(f"model {model.name} has no dilations")
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    p = np.asarray(p, dtype=float)
    return np.stack([lam * p[0], lam * p[1], lam**2 * p[2]])


# Heisenberg group law and helpers --------------------------------------------

def h1_mul(a, b):
    """Group law (x,y,t)(x',y',t') = (x+x', y+y', t+t' + (xy' - yx')/2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack([a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])])


def h1_inv(a):
    a = np.asarray(a, dtype=float)
    return -a


# chart construction -----------------------------------------------------------

def _heisenberg_fields():
    X = VectorField((lambda x, y, t: 1.0 + 0.0 * x, lambda x, y, t: 0.0 * x, lambda x, y, t: -0.5 * y), "X")
    Y = VectorField((lambda x, y, t: 0.0 * x, lambda x, y, t: 1.0 + 0.0 * x, lambda x, y, t: 0.5 * x), "Y")
    Z = VectorField((lambda x, y, t: 0.0 * x, lambda x, y, t: 0.0 * x, lambda x, y, t: 1.0 + 0.0 * x), "Z")
    return X, Y, Z


def _chart_functions(rho: float):
    """(C, S) with C = cos(sqrt(rho) y), S = sin(sqrt(rho) y)/sqrt(rho), analytic in rho."""
    if rho > 0:
        k = np.sqrt(rho)
        return (lambda y: jets.cos(k * y)), (lambda y: jets.sin(k * y) / k)
    if rho < 0:
        k = np.sqrt(-rho)
        return (lambda y: jets.cosh(k * y)), (lambda y: jets.sinh(k * y) / k)
    return (lambda y: 1.0 + 0.0 * y), (lambda y: y)


def _g_rho1_fields(rho: float):
    # coordinates of the second kind: g = exp(xX) exp(yY) exp(tZ)
    C, S = _chart_functions(rho)

    def X0(x, y, t):
        return jets.cos(rho * t) / C(y)

    def X1(x, y, t):
        return jets.sin(rho * t) + 0.0 * x

    def X2(x, y, t):
        return -(S(y) / C(y)) * jets.cos(rho * t)

    def Y0(x, y, t):
        return -jets.sin(rho * t) / C(y)

    def Y1(x, y, t):
        return jets.cos(rho * t) + 0.0 * x

    def Y2(x, y, t):
        return (S(y) / C(y)) * jets.sin(rho * t)

    X = VectorField((X0, X1, X2), "X")
    Y = VectorField((Y0, Y1, Y2), "Y")
    Z = VectorField((lambda x, y, t: 0.0 * x, lambda x, y, t: 0.0 * x, lambda x, y, t: 1.0 + 0.0 * x), "Z")
    return X, Y, Z


def structure_fields(model: ModelSpace):
    """Expected brackets [X,Y], [X,Z], [Y,Z] = Z, -rho1 Y, rho1 X."""
    X, Y, Z = model.X, model.Y, model.Z
    r = model.rho1
    return {
        ("X", "Y"): (bracket(X, Y), Z),
        ("X", "Z"): (bracket(X, Z), LinearCombination([(-r, Y)])),
        ("Y", "Z"): (bracket(Y, Z), LinearCombination([(r, X)])),
    }


def field_residual(v: VectorField, w: VectorField, p) -> float:
    a = v.coefficients(p)
    b = w.coefficients(p)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def bracket_check(model: ModelSpace, points) -> dict:
    """Maximal coefficient residual of each structure relation at ``points``."""
    return {f"[{a},{b}]": field_residual(got, want, points)
            for (a, b), (got, want) in structure_fields(model).items()}


def make_model(kind: str, rho1: float = 0.0, *, horizontal=None, vertical=None,
               cd: CDParams | None = None, n_check: int = 20, seed: int = 0,
               tol: float = 1e-10) -> ModelSpace:
    """Build a model space and validate its bracket table.

    ``kind`` is one of ``heisenberg``, ``g_rho1`` or ``custom``.  Custom models
    need ``horizontal`` (two fields), ``vertical`` (one field), ``rho1`` and
    optionally ``cd``; they are rejected if their brackets do not close.
    """
    rho1 = float(rho1)
    if kind == "heisenberg":
        if rho1 != 0.0:
            raise ModelError("the Heisenberg model has rho1 = 0")
        X, Y, Z = _heisenberg_fields()
        name, dil = "heisenberg", True
    elif kind == "g_rho1":
        X, Y, Z = _g_rho1_fields(rho1)
        name, dil = f"g_rho1({rho1:g})", rho1 == 0.0
    elif kind == "custom":
        if horizontal is None or vertical is None:
            raise ModelError("custom models need horizontal and vertical fields")
        X, Y = horizontal
        (Z,) = vertical
        name, dil = "custom", False
    else:
        raise ModelError(f"unknown model kind {kind!r}")
    model = ModelSpace(
        name=name,
        kind=kind,
        rho1=rho1,
        dimension=3,
        horizontal=(X, Y),
        vertical=(Z,),
        cd=cd or CDParams(rho1, 0.5, 1.0, 2.0),
        has_dilations=dil,
    )
    rng = np.random.default_rng(seed)
    res = bracket_check(model, model.sample_points(rng, n_check))
    worst = max(res.values())
    if not worst < tol:
        raise ModelError(f"bracket relations fail for {name}: residuals {res}")
    return model
