"""Heat semigroup P_t = e^{tL}: kernel quadrature on H^1 and hypoelliptic Monte Carlo.

The quadrature engine integrates against the heat kernel on a fixed grid in
normalized coordinates w, using left invariance and dilations:

    P_t f(x) = int p(0, w, 1) f(x . delta_{sqrt t} w) dw.

The kernel table is computed once; only the test function is evaluated at
each call.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import h1kernel
from .h1kernel import ball_complement_mass, ball_mass, kernel, log_kernel  # noqa: F401
from .models import ModelSpace, dilate, h1_inv, h1_mul

LEAK_TOLERANCE = 5e-3
MC_BLOCK = 4096


class MassLeakError(RuntimeError):
    """The quadrature box misses a noticeable part of the heat kernel mass."""


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    halfwidth_h: float = 7.5     # horizontal half-width in units of sqrt(t)
    halfwidth_v: float = 10.0    # vertical half-width in units of t
    n: int = 64
    drop: float = 1e-17          # prune nodes whose weight is below drop * max


class QuadratureEngine:
    """Kernel-quadrature evaluator of P_t f on the Heisenberg group."""

    variant = "kernel_quadrature"

    def __init__(self, spec: GridSpec | None = None):
        self.spec = spec or GridSpec()
        s = self.spec
        xs = -s.halfwidth_h + (np.arange(s.n) + 0.5) * (2 * s.halfwidth_h / s.n)
        zs = -s.halfwidth_v + (np.arange(s.n) + 0.5) * (2 * s.halfwidth_v / s.n)
        X, Y, Zc = np.meshgrid(xs, xs, zs, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Zc.ravel()])
        cell = (2 * s.halfwidth_h / s.n) ** 2 * (2 * s.halfwidth_v / s.n)
        w = h1kernel.density_table(pts) * cell
        self.mass = float(w.sum())
        keep = w > s.drop * w.max()
        self.nodes = pts[:, keep]
        self.weights = w[keep]
        if self.mass < 1.0 - LEAK_TOLERANCE:
            raise MassLeakError(f"quadrature box holds only {self.mass:.6f} of the kernel mass")

    @property
    def metadata(self) -> dict:
        s = self.spec
        return {"variant": self.variant, "halfwidth_h": s.halfwidth_h, "halfwidth_v": s.halfwidth_v,
                "grid_n": s.n, "nodes": int(self.weights.size)}

    def points(self, x, t: float) -> np.ndarray:
        """Quadrature points x . delta_{sqrt t} w, shape (3, *batch(x), n_nodes)."""
        x = np.asarray(x, dtype=float)
        w = self.nodes.reshape((3,) + (1,) * (x.ndim - 1) + (-1,))
        return h1_mul(x[..., None], np.stack([np.sqrt(t) * w[0], np.sqrt(t) * w[1], t * w[2]]))

    def apply(self, f, x, t: float, chunk: int = 4_000_000):
        """P_t f at one or many points x (3, ...); f maps coordinate arrays to values."""
        if t <= 0:
            raise ValueError("time must be positive")
        x = np.asarray(x, dtype=float)
        batch = x.shape[1:]
        flat = x.reshape(3, -1)
        per = max(1, chunk // self.weights.size)
        out = np.empty(flat.shape[1])
        for k in range(0, flat.shape[1], per):
            q = self.points(flat[:, k:k + per], t)
            vals = np.asarray(f(q[0], q[1], q[2]), dtype=float)
            out[k:k + per] = np.broadcast_to(vals, q.shape[1:]) @ self.weights
        return out.reshape(batch) if batch else float(out[0])

    def apply_at_times(self, f, x, times):
        return np.array([self.apply(f, x, t) for t in times])


def semigroup_apply(engine, f, x, t: float):
    """P_t f(x) with the mass-leak guard; Monte Carlo returns (mean, stderr)."""
    return engine.apply(f, x, t)


# derivatives of x -> P_t f(x) by finite differences along group flows -------

_FLOWS = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))


@dataclass
class SemigroupDerivatives:
    value: float
    xu: float
    yu: float
    zu: float
    lu: float
    dt: float

    @property
    def gamma_log(self):
        return (self.xu**2 + self.yu**2) / self.value**2

    @property
    def gamma_z_log(self):
        return self.zu**2 / self.value**2


def semigroup_grad(engine, f, x, t: float, h: float | None = None) -> SemigroupDerivatives:
    """Left-invariant derivatives of P_t f at x and its time derivative.

    Central differences along x . exp(s V) for V = X, Y, Z with step h and
    h/2, combined by one Richardson pass; d/dt from central differences in t.
    """
    if not isinstance(engine, QuadratureEngine):
        raise EngineError("gradient mode needs the deterministic quadrature engine")
    x = np.asarray(x, dtype=float).reshape(3)
    h = h or max(1e-3, 1e-2 * t)
    pts = [x]
    for e in _FLOWS:
        for s in (h, -h, h / 2, -h / 2):
            pts.append(h1_mul(x, s * e))
    vals = engine.apply(f, np.stack(pts, axis=1), t)
    u0 = vals[0]
    if not u0 > 0:
        raise EngineError("P_t f(x) must be positive to take logarithmic derivatives")
    first, second = [], []
    for i in range(3):
        p1, m1, p2, m2 = vals[1 + 4 * i: 5 + 4 * i]
        d_h = (p1 - m1) / (2 * h)
        d_h2 = (p2 - m2) / h
        first.append((4 * d_h2 - d_h) / 3)
        s_h = (p1 - 2 * u0 + m1) / h**2
        s_h2 = (p2 - 2 * u0 + m2) / (h / 2) ** 2
        second.append((4 * s_h2 - s_h) / 3)
    ht = min(h, 0.25 * t)
    tv = [engine.apply(f, x, t + s) for s in (ht, -ht, ht / 2, -ht / 2)]
    dt_h = (tv[0] - tv[1]) / (2 * ht)
    dt_h2 = (tv[2] - tv[3]) / ht
    return SemigroupDerivatives(value=u0, xu=first[0], yu=first[1], zu=first[2],
                                lu=second[0] + second[1], dt=(4 * dt_h2 - dt_h) / 3)


# Monte Carlo ---------------------------------------------------------------

def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))


def mc_paths(model: ModelSpace, x, t: float, n: int, dt: float, seed: int = 0,
             area_correction: bool = True) -> np.ndarray:
    """Endpoints (3, n) of the diffusion with generator L = sum X_i^2 started at x.

    Increments are sqrt(2 dt) xi.  On H^1 the update is the exact horizontal
    step plus, optionally, a Gaussian draw matching the first two conditional
    moments of the Levy area of the step.  Other charts use the Heun
    (Stratonovich) predictor-corrector.  Paths are generated in blocks with
    independent streams keyed by (seed, block), so results do not depend on
    how the work is split.
    """
    if n <= 0 or dt <= 0 or t <= 0:
        raise ValueError("n, dt and t must be positive")
    if dt > t / 50 * (1 + 1e-12):
        raise ValueError("time step must satisfy dt <= t/50")
    steps = int(np.ceil(t / dt - 1e-9))
    dt = t / steps
    x = np.asarray(x, dtype=float).reshape(3)
    out = np.empty((3, n))
    heis = model.kind == "heisenberg"
    for blk, start in enumerate(range(0, n, MC_BLOCK)):
        m = min(MC_BLOCK, n - start)
        rng = _block_rng(seed, blk)
        q = np.repeat(x[:, None], m, axis=1)
        for _ in range(steps):
            db = np.sqrt(2 * dt) * rng.standard_normal((2, m))
            if heis:
                dz = 0.5 * (q[0] * db[1] - q[1] * db[0])
                if area_correction:
                    var = dt * dt / 3.0 + (db[0] ** 2 + db[1] ** 2) * dt / 6.0
                    dz = dz + np.sqrt(var) * rng.standard_normal(m)
                q = np.stack([q[0] + db[0], q[1] + db[1], q[2] + dz])
            else:
                cx = model.X.coefficients(q)
                cy = model.Y.coefficients(q)
                pred = q + cx * db[0] + cy * db[1]
                cx2 = model.X.coefficients(pred)
                cy2 = model.Y.coefficients(pred)
                q = q + 0.5 * (cx + cx2) * db[0] + 0.5 * (cy + cy2) * db[1]
        out[:, start:start + m] = q
    return out


@dataclass
class MonteCarloEngine:
    """Monte Carlo evaluator of P_t f; any model, no gradient mode."""

    model: ModelSpace
    n_paths: int = 100_000
    dt_fraction: float = 1 / 200
    seed: int = 0
    area_correction: bool = True
    variant: str = field(default="monte_carlo", init=False)

    @property
    def metadata(self) -> dict:
        return {"variant": self.variant, "paths": self.n_paths, "dt_fraction": self.dt_fraction,
                "seed": self.seed}

    def endpoints(self, x, t: float) -> np.ndarray:
        return mc_paths(self.model, x, t, self.n_paths, self.dt_fraction * t, self.seed, self.area_correction)

    def apply(self, f, x, t: float):
        """(mean, stderr) of f at the endpoints."""
        q = self.endpoints(x, t)
        v = np.asarray(f(q[0], q[1], q[2]), dtype=float)
        v = np.broadcast_to(v, q.shape[1:])
        return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


# self-checks shared by tests and experiments --------------------------------

def box_probability(engine: QuadratureEngine, lo, hi, t: float, n: int = 48) -> float:
    """int_box p(0, y, t) dy by a tensor Gauss-Legendre rule with the fast kernel."""
    from scipy.special import roots_legendre

    g, w = roots_legendre(n)
    axes, wts = [], []
    for a, b in zip(lo, hi):
        axes.append(0.5 * (b - a) * g + 0.5 * (a + b))
        wts.append(0.5 * (b - a) * w)
    X, Y, Zc = np.meshgrid(*axes, indexing="ij")
    W = wts[0][:, None, None] * wts[1][None, :, None] * wts[2][None, None, :]
    p = h1kernel.density(np.stack([X, Y, Zc]), t)
    return float(np.sum(p * W))


def chapman_kolmogorov(engine: QuadratureEngine, y, t: float):
    """(p(y, y, 2t), int p(y, z, t)^2 dz) on the quadrature grid."""
    y = np.asarray(y, dtype=float).reshape(3)
    lhs = float(h1kernel.density(np.zeros(3), 2 * t))
    # int p(y,z,t)^2 dz = int p(0,g,t)^2 dg by left invariance
    rhs = engine.apply(lambda a, b, c: h1kernel.density(np.stack([a, b, c]), t),
                       np.zeros(3), t)
    return lhs, rhs


def dilation_check(lam: float, g, t: float, model: ModelSpace) -> float:
    """Relative residual of p(0, delta_lam g, lam^2 t) = lam^-4 p(0, g, t), precise kernel."""
    g = np.asarray(g, dtype=float).reshape(3)
    a = h1kernel.log_kernel(np.zeros(3), dilate(model, lam, g), lam**2 * t)
    b = h1kernel.log_kernel(np.zeros(3), g, t) - 4 * np.log(lam)
    return float(abs(np.expm1(a - b)))


def symmetric_pair(x, y, t: float) -> tuple[float, float]:
    """(p(x, y, t), p(y, x, t)) by the precise kernel."""
    return float(kernel(x, y, t)), float(kernel(y, x, t))


__all__ = [
    "GridSpec", "QuadratureEngine", "MonteCarloEngine", "MassLeakError", "EngineError",
    "SemigroupDerivatives", "semigroup_apply", "semigroup_grad", "mc_paths", "kernel", "log_kernel",
    "ball_mass", "ball_complement_mass", "box_probability", "chapman_kolmogorov", "h1_inv",
]
