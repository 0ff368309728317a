"""Carnot-Caratheodory distance, metric balls and volume doubling."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import h1kernel
from .models import ModelSpace, h1_inv, h1_mul

# B(0, r) on H^1 fits in [-r, r]^2 x [-r^2/(2 pi), r^2/(2 pi)]; the vertical
# extent is reached on the geodesics with parameter theta = pi
BOX_CZ = 1.0 / (2.0 * np.pi)


class ShootingError(RuntimeError):
    pass


# closed form on H^1 ------------------------------------------------------------

def _mu(th):
    return (th - np.sin(th)) / (8.0 * np.sin(th / 2) ** 2)


def h1_norm(g) -> np.ndarray:
    """d(0, g) on H^1 for points g (3, ...)."""
    g = np.asarray(g, dtype=float)
    rho2 = g[0] ** 2 + g[1] ** 2
    z = np.abs(g[2])
    rho = np.sqrt(rho2)
    out = np.where(z == 0, rho, 2.0 * np.sqrt(np.pi * z))
    gen = (z > 0) & (rho2 > 0)
    if np.any(gen):
        target = z[gen] / rho2[gen]
        lo = np.zeros_like(target)
        hi = np.full_like(target, 2.0 * np.pi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = _mu(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        th = 0.5 * (lo + hi)
        r = rho[gen]
        small = th < np.pi
        d = np.empty_like(th)
        d[small] = r[small] * th[small] / (2.0 * np.sin(th[small] / 2))
        big = ~small
        d[big] = np.sqrt(2.0 * th[big] ** 2 * z[gen][big] / (th[big] - np.sin(th[big])))
        out = out.copy()
        out[gen] = d
    return out if out.ndim else float(out)


def h1_sphere_point(r, theta, phi=0.0):
    """Point at distance r from 0 with geodesic parameter theta in (0, 2 pi)."""
    theta = np.asarray(theta, dtype=float)
    rho = 2.0 * r * np.sin(theta / 2) / theta
    z = r * r * (theta - np.sin(theta)) / (2.0 * theta**2)
    return np.stack(np.broadcast_arrays(rho * np.cos(phi), rho * np.sin(phi), z))


# geodesic shooting ---------------------------------------------------------------

def _fields_and_grads(model: ModelSpace, q, h=1e-6):
    """Horizontal field values (k, 3, B) and their q-gradients (k, 3, 3, B)."""
    B = q.shape[1]
    pert = [q]
    for j in range(3):
        e = np.zeros((3, 1))
        e[j] = h
        pert += [q + e, q - e]
    big = np.concatenate(pert, axis=1)
    vals, grads = [], []
    for V in model.horizontal:
        c = V.coefficients(big)
        vals.append(c[:, :B])
        g = np.stack([(c[:, (1 + 2 * j) * B:(2 + 2 * j) * B] - c[:, (2 + 2 * j) * B:(3 + 2 * j) * B]) / (2 * h)
                      for j in range(3)], axis=1)          # (3 coeff, 3 deriv, B)
        grads.append(g)
    return np.stack(vals), np.stack(grads)


def _hamilton_rhs(model, q, p):
    F, dF = _fields_and_grads(model, q)
    h = np.einsum("kjb,jb->kb", F, p)
    dq = np.einsum("kb,kjb->jb", h, F)
    # dp_l = -sum_k h_k sum_j p_j d_l F_k^j
    dp = -np.einsum("kb,kjlb,jb->lb", h, dF, p)
    return dq, dp


def geodesic_endpoints(model: ModelSpace, x, p0, T, steps: int = 200):
    """Endpoints of normal geodesics from x with covectors p0 (3, B) over times T (B,)."""
    x = np.asarray(x, dtype=float).reshape(3, 1)
    p = np.array(p0, dtype=float)
    q = np.repeat(x, p.shape[1], axis=1)
    dt = np.asarray(T, dtype=float) / steps
    with np.errstate(over="ignore", invalid="ignore"):
        q, p = _rk4(model, q, p, dt, steps)
    return q


def _rk4(model, q, p, dt, steps):
    # diverging multistarts may overflow; they are rejected by the residual test
    for _ in range(steps):
        k1q, k1p = _hamilton_rhs(model, q, p)
        k2q, k2p = _hamilton_rhs(model, q + 0.5 * dt * k1q, p + 0.5 * dt * k1p)
        k3q, k3p = _hamilton_rhs(model, q + 0.5 * dt * k2q, p + 0.5 * dt * k2p)
        k4q, k4p = _hamilton_rhs(model, q + dt * k3q, p + dt * k3p)
        q = q + dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return q, p


def _initial_covectors(model, x, phi, w):
    x = np.asarray(x, dtype=float).reshape(3, 1)
    F = np.stack([model.X.coefficients(x)[:, 0], model.Y.coefficients(x)[:, 0], model.Z.coefficients(x)[:, 0]])
    rhs = np.stack([np.cos(phi), np.sin(phi), w])
    return np.linalg.solve(F, rhs)


@dataclass
class ShootingResult:
    distance: float
    residual: float
    converged: bool
    n_converged: int
    params: tuple = field(default=())


@np.errstate(over="ignore", invalid="ignore")
def shoot_distance(model: ModelSpace, x, y, n_starts: int = 16, steps: int = 200,
                   tol: float = 1e-9, max_iter: int = 40) -> ShootingResult:
    """Two-point boundary problem over unit-speed normal geodesics.

    Unknowns are the initial horizontal direction phi, the vertical covector
    component w and the length T.  Damped Gauss-Newton with finite-difference
    Jacobians runs on all multistarts at once; the shortest converged length
    is returned.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    y = np.asarray(y, dtype=float).reshape(3)
    if np.allclose(x, y, rtol=0.0, atol=1e-14):
        return ShootingResult(0.0, 0.0, True, n_starts)
    dxy = y - x
    planar = float(np.hypot(dxy[0], dxy[1]))
    T0 = max(planar, 2.0 * np.sqrt(np.pi * abs(dxy[2])), 1e-3) * 1.05
    base = np.arctan2(dxy[1], dxy[0])
    offs = [0.0, 0.7, -0.7, np.pi]
    thetas = [-4.0, -1.0, 1.0, 4.0]
    starts = [(base + o, th / T0, T0) for th in thetas for o in offs]
    z = np.array(starts[:n_starts]).T                       # (3, S)
    S = z.shape[1]
    lam = np.full(S, 1e-3)

    def residual(params):
        p0 = _initial_covectors(model, x, params[0], params[1])
        end = geodesic_endpoints(model, x, p0, params[2], steps)
        return end - y[:, None]

    r = residual(z)
    norm = np.linalg.norm(r, axis=0)
    for _ in range(max_iter):
        active = (norm >= tol) & (lam < 1e3)
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        za = z[:, idx]
        eps = 1e-7 * np.maximum(1.0, np.abs(za))
        batch = [za + eps[j] * np.eye(3)[:, j:j + 1] for j in range(3)]
        rr = residual(np.concatenate(batch, axis=1))
        n = idx.size
        J = np.stack([(rr[:, j * n:(j + 1) * n] - r[:, idx]) / eps[j] for j in range(3)], axis=2)
        step = np.empty((3, n))
        for k in range(n):
            Jk = J[:, k, :]
            A = Jk.T @ Jk
            step[:, k] = -np.linalg.solve(A + lam[idx[k]] * np.diag(np.diag(A) + 1e-12), Jk.T @ r[:, idx[k]])
        trial = za + step
        trial[2] = np.abs(trial[2])
        rt = residual(trial)
        nt = np.linalg.norm(rt, axis=0)
        better = nt < 0.9 * norm[idx]
        z[:, idx[better]] = trial[:, better]
        r[:, idx[better]] = rt[:, better]
        norm[idx[better]] = nt[better]
        lam[idx] = np.clip(np.where(better, lam[idx] * 0.3, lam[idx] * 10.0), 1e-12, 1e8)
    ok = norm < max(tol, 1e-8)
    if not np.any(ok):
        i = int(np.argmin(norm))
        return ShootingResult(float(abs(z[2, i])), float(norm[i]), False, 0, tuple(z[:, i]))
    T = np.where(ok, np.abs(z[2]), np.inf)
    i = int(np.argmin(T))
    return ShootingResult(float(T[i]), float(norm[i]), True, int(ok.sum()), tuple(z[:, i]))


# public distance ------------------------------------------------------------------

def cc_distance(model: ModelSpace, x, y):
    """Carnot-Caratheodory distance; closed form on H^1, shooting otherwise."""
    if model.kind == "heisenberg":
        return h1_norm(h1_mul(h1_inv(np.asarray(x, dtype=float)), np.asarray(y, dtype=float)))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1 and y.ndim == 1:
        res = shoot_distance(model, x, y)
        if not res.converged:
            raise ShootingError(f"shooting failed, best residual {res.residual:.3g}")
        return res.distance
    x, y = np.broadcast_arrays(x, y)
    flat_x, flat_y = x.reshape(3, -1), y.reshape(3, -1)
    out = np.array([cc_distance(model, a, b) for a, b in zip(flat_x.T, flat_y.T)])
    return out.reshape(x.shape[1:])


# ball volumes -------------------------------------------------------------------------

@dataclass
class BallVolumeEstimate:
    center: tuple
    radius: float
    volume: float
    stderr: float
    n_samples: int
    method: str


def _require_h1(model):
    if model.kind != "heisenberg":
        raise NotImplementedError("ball volumes are implemented on the Heisenberg model only")


def ball_box(r: float):
    """Half-widths of a box (in left-translated coordinates) containing B(0, r)."""
    return np.array([r, r, BOX_CZ * r * r])


def ball_volume(model: ModelSpace, x, r: float, n: int = 200_000, seed: int = 0,
                method: str = "mc") -> BallVolumeEstimate:
    """mu(B(x, r)) by rejection sampling (``mc``), a midpoint ``lattice`` of
    about n points, or the exact boundary integral (``quadrature``)."""
    _require_h1(model)
    x = np.asarray(x, dtype=float).reshape(3)
    hw = ball_box(r)
    box = float(np.prod(2 * hw))
    if method == "quadrature":
        return BallVolumeEstimate(tuple(x), r, h1kernel.unit_ball_volume() * r**4, 0.0, 0, method)
    if method == "mc":
        key = [int(v) for v in np.atleast_1d(seed)]
        rng = np.random.default_rng(np.random.SeedSequence(key + [7]))
        w = rng.uniform(-1.0, 1.0, size=(3, n)) * hw[:, None]
    elif method == "lattice":
        k = max(2, int(round(n ** (1 / 3))))
        g = -1.0 + (np.arange(k) + 0.5) * (2.0 / k)
        w = np.stack(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1) * hw[:, None]
        n = w.shape[1]
    else:
        raise ValueError(f"unknown volume method {method!r}")
    y = h1_mul(x[:, None], w)
    inside = cc_distance(model, x[:, None], y) < r
    frac = float(inside.mean())
    if frac < 1e-3:
        raise ValueError("acceptance fraction below 1e-3: sampling box too loose")
    err = box * np.sqrt(frac * (1 - frac) / n) if method == "mc" else 0.0
    return BallVolumeEstimate(tuple(x), r, box * frac, float(err), n, method)


def ball_lattice(model: ModelSpace, x, r: float, k: int = 40):
    """Midpoint lattice of B(x, r): (points (3, N), cell volume)."""
    _require_h1(model)
    x = np.asarray(x, dtype=float).reshape(3)
    hw = ball_box(r)
    g = -1.0 + (np.arange(k) + 0.5) * (2.0 / k)
    w = np.stack(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1) * hw[:, None]
    y = h1_mul(x[:, None], w)
    inside = h1_norm(w) < r
    return y[:, inside], float(np.prod(2 * hw)) / k**3


@dataclass
class DoublingRow:
    center: tuple
    r: float
    vol_r: float
    vol_2r: float
    ratio: float
    stderr: float


def doubling_report(model: ModelSpace, centers, radii, n: int = 200_000, seed: int = 0,
                    t_grid=None) -> dict:
    """Doubling ratios mu(B(x,2r))/mu(B(x,r)) with independent sample streams.

    Also returns the empirical doubling constant C1, Q = log2 C1 and the
    slack of mu(B(x, tr)) >= C1^-1 t^Q mu(B(x, r)) over ``t_grid``.
    """
    rows = []
    stream = 0
    vols = {}
    for c in centers:
        for r in radii:
            a = ball_volume(model, c, r, n, seed=(seed, stream))
            b = ball_volume(model, c, 2 * r, n, seed=(seed, stream + 1))
            stream += 2
            ratio = b.volume / a.volume
            se = ratio * np.sqrt((a.stderr / a.volume) ** 2 + (b.stderr / b.volume) ** 2)
            rows.append(DoublingRow(tuple(float(v) for v in c), float(r), a.volume, b.volume, ratio, float(se)))
            vols[(tuple(c), r)] = a
    C1 = max(row.ratio for row in rows)
    Q = float(np.log2(C1))
    t_grid = np.asarray(t_grid if t_grid is not None else [0.125, 0.25, 0.5, 0.75, 1.0])
    scaling = []
    for (c, r), a in vols.items():
        for t in t_grid:
            sub = ball_volume(model, c, t * r, n, seed=(seed, stream))
            stream += 1
            scaling.append((c, r, float(t), sub.volume, a.volume * t**Q / C1))
    return {"rows": rows, "C1": C1, "Q": Q, "scaling": scaling}
