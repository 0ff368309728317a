"""Exact heat flow of left-translated Gaussian bumps on the Heisenberg group.

A centred bump exp(-a|v|^2 - b z^2) is a superposition over frequencies beta
of cos(beta z) exp(-a|v|^2).  Each frequency evolves under L = X^2 + Y^2 as

    cos(beta z) M(s) exp(-E(s) |v|^2),   E' = beta^2/4 - 4E^2,  M' = -4 E M,

which has the closed form used below.  The frequency integral is done with
the trapezoid rule in beta, exponentially accurate for this entire integrand.
Left translation commutes with the flow and with X, Y, Z, so translated
bumps cost the same.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .models import h1_inv, h1_mul


def _sinhc(x):
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-8
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def flow_coefficients(a: float, beta, s: float):
    """(M, E) of the single-frequency flow started from exp(-a|v|^2)."""
    beta = np.asarray(beta, dtype=float)
    bs = beta * s
    ch = np.cosh(bs)
    shc = s * _sinhc(bs)          # sinh(beta s)/beta
    den = 4.0 * a * shc + ch
    M = 1.0 / den
    E = (a * ch + 0.25 * beta**2 * shc) / den
    return M, E


@dataclass(frozen=True)
class GaussianBump:
    """exp(-a|v|^2 - b z^2) in coordinates (v, z) = centre^{-1} q."""

    center: tuple = (0.0, 0.0, 0.0)
    a: float = 1.0
    b: float = 1.0

    def local(self, q):
        return h1_mul(h1_inv(np.asarray(self.center, dtype=float).reshape(3, *([1] * (np.ndim(q) - 1)))), q)

    def __call__(self, x, y, t):
        cx, cy, ct = self.center
        # centre^{-1} q written out so that jets pass through
        u = x - cx
        v = y - cy
        w = t - ct - 0.5 * (cx * y - cy * x)
        return jets.exp(-self.a * (u * u + v * v) - self.b * w * w)

    def derivatives0(self, q):
        """(f, Xf, Yf, Zf, Lf) at time zero, exact."""
        x, y, z = self.local(q)
        a, b = self.a, self.b
        f = np.exp(-a * (x * x + y * y) - b * z * z)
        A = -2 * a * x + b * y * z
        B = -2 * a * y - b * x * z
        lf = f * (A * A + B * B - 4 * a - 0.5 * b * (x * x + y * y))
        return f, f * A, f * B, -2 * b * z * f, lf

    def frequency_rule(self, step: float = 0.08, cutoff: float = 13.0):
        sb = np.sqrt(self.b)
        beta = np.arange(0.0, cutoff * sb + 0.5 * step * sb, step * sb)
        w = np.full(beta.shape, step * sb)
        w[0] *= 0.5
        # e^{-b z^2} = 1/(2 sqrt(pi b)) int_R e^{-beta^2/4b} cos(beta z) d beta
        w = w * np.exp(-beta**2 / (4 * self.b)) / np.sqrt(np.pi * self.b)
        return beta, w

    def heat(self, q, s: float, chunk: int = 8192):
        """(u, Xu, Yu, Zu, Lu) of u = P_s bump at points q (3, ...)."""
        q = np.asarray(q, dtype=float)
        if s == 0.0:
            return self.derivatives0(q)
        if s < 0:
            raise ValueError("heat time must be nonnegative")
        beta, wts = self.frequency_rule()
        M, E = flow_coefficients(self.a, beta, s)
        cM = wts * M
        loc = self.local(q).reshape(3, -1)
        n = loc.shape[1]
        out = np.empty((5, n))
        for k in range(0, n, chunk):
            x, y, z = (c[k:k + chunk, None] for c in loc)
            r2 = x * x + y * y
            g = np.exp(-E * r2)
            co = np.cos(beta * z) * g
            si = np.sin(beta * z) * g
            out[0, k:k + chunk] = co @ cM
            ex = co * E
            out[1, k:k + chunk] = (-2.0 * x[:, 0]) * (ex @ cM) + (0.5 * y[:, 0]) * ((si * beta) @ cM)
            out[2, k:k + chunk] = (-2.0 * y[:, 0]) * (ex @ cM) - (0.5 * x[:, 0]) * ((si * beta) @ cM)
            out[3, k:k + chunk] = -((si * beta) @ cM)
            lap = co * (4.0 * E * E * r2 - 4.0 * E - 0.25 * beta * beta * r2)
            out[4, k:k + chunk] = lap @ cM
        shape = q.shape[1:]
        return tuple(o.reshape(shape) for o in out)


@dataclass
class HeatState:
    """Values and left-invariant derivatives of u = P_s f at a batch of points."""

    u: np.ndarray
    xu: np.ndarray
    yu: np.ndarray
    zu: np.ndarray
    lu: np.ndarray

    @property
    def gamma(self):
        return self.xu**2 + self.yu**2

    @property
    def gamma_z(self):
        return self.zu**2

    @property
    def gamma_log(self):
        return self.gamma / self.u**2

    @property
    def gamma_z_log(self):
        return self.gamma_z / self.u**2


@dataclass(frozen=True)
class BumpFamily:
    """f = eps + sum_k A_k bump_k, a smooth positive function bounded below by eps."""

    eps: float
    amps: tuple
    bumps: tuple
    description: str = field(default="", compare=False)

    def __call__(self, x, y, t):
        out = self.eps + 0.0 * x
        for A, bmp in zip(self.amps, self.bumps):
            out = out + A * bmp(x, y, t)
        return out

    @property
    def sup(self) -> float:
        return self.eps + float(np.sum(np.abs(self.amps)))

    def heat(self, q, s: float) -> HeatState:
        q = np.asarray(q, dtype=float)
        shape = q.shape[1:]
        acc = [np.full(shape, self.eps)] + [np.zeros(shape) for _ in range(4)]
        for A, bmp in zip(self.amps, self.bumps):
            for i, v in enumerate(bmp.heat(q, s)):
                acc[i] = acc[i] + A * v
        return HeatState(*acc)

    def scaled(self, lam: float) -> "BumpFamily":
        """f composed with the dilation by 1/lam (transport of the family to scale lam)."""
        bumps = tuple(GaussianBump((lam * b.center[0], lam * b.center[1], lam**2 * b.center[2]),
                                   b.a / lam**2, b.b / lam**4) for b in self.bumps)
        return BumpFamily(self.eps, self.amps, bumps, self.description)


def random_bump_family(rng: np.random.Generator, eps: float = 1e-3, n_bumps: int | None = None,
                       spread: float = 0.6) -> BumpFamily:
    """eps + (1 - eps) * (convex combination of translated bumps)."""
    k = int(n_bumps or rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k))
    bumps = []
    for _ in range(k):
        c = tuple(float(v) for v in rng.normal(scale=spread, size=3))
        bumps.append(GaussianBump(c, float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.5, 3.0))))
    amps = tuple(float((1 - eps) * v) for v in w)
    return BumpFamily(eps, amps, tuple(bumps), f"{k} bump(s), eps={eps:g}")
