"""Carre du champ forms and the curvature-dimension inequality, pointwise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, JetOrderError, jet_eval
from .models import CDParams, ModelSpace

NU_GRID = np.logspace(-2, 2, 21)


@dataclass
class GammaValues:
    """All first- and second-order forms of one function at a batch of points."""

    gamma: np.ndarray
    gamma_z: np.ndarray
    gamma2: np.ndarray
    gamma2_z: np.ndarray
    lf: np.ndarray
    h2_left: np.ndarray
    h2_right: np.ndarray

    @property
    def h2_residual(self):
        return np.abs(self.h2_left - self.h2_right)

    def scaled(self, c):
        """Forms of c*f (all quadratic in f, Lf linear)."""
        c = np.asarray(c)
        return GammaValues(self.gamma * c**2, self.gamma_z * c**2, self.gamma2 * c**2,
                           self.gamma2_z * c**2, self.lf * c,
                           self.h2_left * c**3, self.h2_right * c**3)


def _jet(f, p, order):
    if isinstance(f, Jet):
        if f.order < order:
            raise JetOrderError(f"need a jet of order {order}, got {f.order}")
        return f
    return jet_eval(f, np.asarray(p, dtype=float), order)


def _val(j):
    return np.asarray(j.c[0])


def directional(model_field, f, p, order: int = 1):
    """Jet of V f at ``p``; ``order`` is the order of the jet of f used."""
    return model_field.apply(_jet(f, p, order), p)


def laplacian(model: ModelSpace, fj: Jet, p) -> Jet:
    """Jet of L f = sum X_i^2 f, two orders below the jet of f."""
    out = None
    for V in model.horizontal:
        term = V.apply(V.apply(fj, p), p)
        out = term if out is None else out + term
    return out


def _gamma_jet(model, fj, gj, p):
    out = None
    for V in model.horizontal:
        term = V.apply(fj, p) * V.apply(gj, p)
        out = term if out is None else out + term
    return out


def gamma_bilinear(model: ModelSpace, f, g, p):
    """Gamma(f, g) = (L(fg) - f Lg - g Lf) / 2 at ``p``."""
    fj, gj = _jet(f, p, 2), _jet(g, p, 2)
    fj, gj = fj.truncate(2), gj.truncate(2)
    val = 0.5 * (laplacian(model, fj * gj, p) - fj.truncate(0) * laplacian(model, gj, p)
                 - gj.truncate(0) * laplacian(model, fj, p))
    return _val(val)


def gamma_sum_of_squares(model: ModelSpace, f, g, p):
    """sum_i (X_i f)(X_i g) at ``p``."""
    fj, gj = _jet(f, p, 1), _jet(g, p, 1)
    return _val(_gamma_jet(model, fj.truncate(1), gj.truncate(1), p))


def gamma_z_bilinear(model: ModelSpace, f, g, p):
    """Gamma^Z(f, g) = (Zf)(Zg) summed over vertical fields."""
    fj, gj = _jet(f, p, 1), _jet(g, p, 1)
    out = 0.0
    for Z in model.vertical:
        out = out + _val(Z.apply(fj.truncate(1), p)) * _val(Z.apply(gj.truncate(1), p))
    return np.asarray(out)


def gamma_values(model: ModelSpace, f, p) -> GammaValues:
    """Gamma, Gamma^Z, Gamma_2, Gamma_2^Z, Lf and both sides of the
    Gamma/Gamma^Z commutation identity, from one order-4 jet of f."""
    fj = _jet(f, p, 4).truncate(4)
    hx = [V.apply(fj, p) for V in model.horizontal]          # order 3
    zf = [Z.apply(fj, p) for Z in model.vertical]             # order 3
    lf = laplacian(model, fj, p)                              # order 2
    gam = sum(h * h for h in hx[1:]) + hx[0] * hx[0]          # order 3
    gz = sum(z * z for z in zf[1:]) + zf[0] * zf[0]           # order 3

    l_gam = laplacian(model, gam, p)                          # order 1
    l_gz = laplacian(model, gz, p)
    g_f_lf = sum(_val(h) * _val(V.apply(lf, p)) for h, V in zip(hx, model.horizontal))
    gz_f_lf = sum(_val(z) * _val(Z.apply(lf, p)) for z, Z in zip(zf, model.vertical))
    gamma2 = 0.5 * _val(l_gam) - g_f_lf
    gamma2_z = 0.5 * _val(l_gz) - gz_f_lf

    h2_left = sum(_val(h) * _val(V.apply(gz, p)) for h, V in zip(hx, model.horizontal))
    h2_right = sum(_val(z) * _val(Z.apply(gam, p)) for z, Z in zip(zf, model.vertical))
    return GammaValues(
        gamma=_val(gam), gamma_z=_val(gz), gamma2=np.asarray(gamma2),
        gamma2_z=np.asarray(gamma2_z), lf=_val(lf),
        h2_left=np.asarray(h2_left), h2_right=np.asarray(h2_right),
    )


def gamma2(model, f, p):
    return gamma_values(model, f, p).gamma2


def gamma2_z(model, f, p):
    return gamma_values(model, f, p).gamma2_z


def cd_rhs(gv: GammaValues, cd: CDParams, nu):
    return gv.lf**2 / cd.m + (cd.rho1 - cd.kappa / nu) * gv.gamma + cd.rho2 * gv.gamma_z


def cd_slack_from(gv: GammaValues, cd: CDParams, nu):
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("nu must be positive")
    return gv.gamma2 + nu * gv.gamma2_z - cd_rhs(gv, cd, nu)


def cd_slack(model: ModelSpace, f, p, nu, cd: CDParams | None = None):
    """LHS - RHS of the curvature-dimension inequality at parameter nu."""
    return cd_slack_from(gamma_values(model, f, p), cd or model.cd, nu)


def optimal_nu(gv: GammaValues, cd: CDParams):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(cd.kappa * gv.gamma / gv.gamma2_z)


def cd_slack_optimized_from(gv: GammaValues, cd: CDParams):
    """Slack of the nu-optimized form; NaN where Gamma_2^Z < 0 (flagged)."""
    rad = cd.kappa * gv.gamma * gv.gamma2_z
    ok = rad >= 0
    root = np.sqrt(np.where(ok, rad, 0.0))
    slack = gv.gamma2 + 2.0 * root - (gv.lf**2 / cd.m + cd.rho1 * gv.gamma + cd.rho2 * gv.gamma_z)
    return np.where(ok, slack, np.nan), ~ok


def cd_slack_optimized(model: ModelSpace, f, p, cd: CDParams | None = None):
    """Returns (slack, negative_radicand_flag)."""
    return cd_slack_optimized_from(gamma_values(model, f, p), cd or model.cd)


def h2_residual(model: ModelSpace, f, p):
    return gamma_values(model, f, p).h2_residual


def normalization(gv: GammaValues):
    """Factor c such that c*f has max(|Gamma|, |Gamma_2|, 1) of order one."""
    return 1.0 / np.sqrt(np.maximum(np.maximum(np.abs(gv.gamma), np.abs(gv.gamma2)), 1.0))
