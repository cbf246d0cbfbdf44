"""Wronskians, scattering coefficients, and zero-energy resonance detection.

Conventions: W[f,g] = f g' - f' g, so V = 0 gives W(lambda) = -2 i lambda
and beta = W/(-2 i lambda) -> 1 at high energy.  All quantities are
assembled from Jost profile tables; the e^{+-i lambda x} prefactors cancel
algebraically, so no oscillatory factors are evaluated at large x.
"""

from dataclasses import dataclass

import numpy as np

from . import potentials

RESONANT = "Resonant"
NONRESONANT = "Nonresonant"
INDETERMINATE = "Indeterminate"

DEFAULT_EPS_RES = 1e-4


class SingularEnergyError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScatteringData:
    lambda_grid: np.ndarray
    W: np.ndarray
    W_cross: np.ndarray
    alpha_minus: np.ndarray
    beta: np.ndarray
    W_at_zero: complex
    classification: str
    eps_res: float
    scale: float
    beta_at_zero: complex  # extrapolated; meaningful when Resonant

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("lambda,re_W,im_W,re_alpha,im_alpha,re_beta,im_beta\n")
            for i, lam in enumerate(self.lambda_grid):
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                    lam, self.W[i].real, self.W[i].imag,
                    self.alpha_minus[i].real, self.alpha_minus[i].imag,
                    self.beta[i].real, self.beta[i].imag))

    def report(self):
        return {
            "classification": self.classification,
            "eps_res": self.eps_res,
            "scale": self.scale,
            "W_at_zero": [self.W_at_zero.real, self.W_at_zero.imag],
            "beta_at_zero": [self.beta_at_zero.real, self.beta_at_zero.imag],
        }


def _columns(table, lam, x0):
    i = table.lambda_index(lam)
    j = table.x_index(x0)
    return table.m[i, j], table.m_x[i, j]


def wronskian(jplus, jminus, lam, x0=0.0):
    """W[f+(lam,.), f-(lam,.)] from the profile tables, evaluated at x0."""
    mp, mpx = _columns(jplus, lam, x0)
    mm, mmx = _columns(jminus, lam, x0)
    return mp * mmx - mpx * mm - 2j * lam * mp * mm


def wronskian_cross(jplus, jminus, lam, x0=0.0):
    """W[f+(lam,.), f-(-lam,.)]; needs -lam in the minus table."""
    mp, mpx = _columns(jplus, lam, x0)
    mm, mmx = _columns(jminus, -lam, x0)
    return np.exp(2j * lam * x0) * (mp * mmx - mpx * mm)


def coefficients(jplus, jminus, lam, x0=0.0):
    """(alpha_minus, beta) of the expansion f- = alpha f+ + beta f+(-lam,.)."""
    if lam == 0.0:
        raise ValueError("coefficients are defined for lambda != 0; "
                         "use the resonant reduction at zero energy")
    beta = wronskian(jplus, jminus, lam, x0) / (-2j * lam)
    mm, mmx = _columns(jminus, lam, x0)
    mpn, mpnx = _columns(jplus, -lam, x0)
    w_mixed = np.exp(-2j * lam * x0) * (mm * mpnx - mmx * mpn)
    alpha = w_mixed / (-2j * lam)
    return alpha, beta


def expansion_residual(jplus, jminus, lam, x0=0.0):
    """sup_x |f-(lam) - alpha f+(lam) - beta f+(-lam)| over the table grid."""
    alpha, beta = coefficients(jplus, jminus, lam, x0)
    il_p = jplus.lambda_index(lam)
    il_n = jplus.lambda_index(-lam)
    il_m = jminus.lambda_index(lam)
    x = jplus.x_grid
    f_m = np.exp(-1j * lam * x) * jminus.m[il_m]
    f_p = np.exp(1j * lam * x) * jplus.m[il_p]
    f_pn = np.exp(-1j * lam * x) * jplus.m[il_n]
    return float(np.abs(f_m - alpha * f_p - beta * f_pn).max())


def classify_zero_energy(w_at_zero, scale, eps_res=DEFAULT_EPS_RES):
    a = abs(w_at_zero)
    if a < eps_res * scale:
        return RESONANT
    if a > 2.0 * eps_res * scale:
        return NONRESONANT
    return INDETERMINATE


def scattering_data(jplus, jminus, V, x0=0.0, eps_res=DEFAULT_EPS_RES):
    """Assemble ScatteringData over the shared lambda grid of the tables.

    The grid should be closed under negation for the cross quantities;
    lambda values whose negative is absent get NaN there.  W(0) is computed
    directly from the D_0 kernel solution, no extrapolation.
    """
    lam = jplus.lambda_grid
    if not np.array_equal(lam, jminus.lambda_grid):
        raise ValueError("plus and minus tables must share a lambda grid")
    n = lam.size
    W = np.empty(n, complex)
    Wc = np.full(n, np.nan + 0j)
    alpha = np.full(n, np.nan + 0j)
    beta = np.full(n, np.nan + 0j)
    has_neg = {float(v) for v in lam}
    for i, lv in enumerate(lam):
        W[i] = wronskian(jplus, jminus, lv, x0)
        if lv != 0.0 and float(-lv) in has_neg:
            Wc[i] = wronskian_cross(jplus, jminus, lv, x0)
            alpha[i], beta[i] = coefficients(jplus, jminus, lv, x0)
    if np.any(lam == 0.0):
        w0 = complex(W[lam == 0.0][0])
    else:
        w0 = complex("nan")
    scale = max(1.0, potentials.weighted_l1_norm(V, 1.0).value)
    cls = classify_zero_energy(w0, scale, eps_res) if np.isfinite(w0.real) \
        else INDETERMINATE
    beta0 = _extrapolate_beta_zero(lam, W)
    return ScatteringData(lam, W, Wc, alpha, beta, w0, cls, eps_res, scale, beta0)


def _extrapolate_beta_zero(lam, W):
    # one-sided Lagrange extrapolation of beta = W/(-2 i lambda) to 0+ from
    # the smallest positive grid points (up to three)
    pos = np.sort(lam[lam > 0])[:3]
    if pos.size == 0:
        return complex("nan")
    betas = []
    for p in pos:
        idx = int(np.where(lam == p)[0][0])
        betas.append(W[idx] / (-2j * p))
    out = 0j
    for i, (pi, bi) in enumerate(zip(pos, betas)):
        li = 1.0
        for k, pk in enumerate(pos):
            if k != i:
                li *= (0.0 - pk) / (pi - pk)
        out += li * bi
    return complex(out)


def green_kernel(jplus, jminus, lam, sign, x, y, w_floor=1e-10):
    """Resolvent kernel R_V(lambda^2 +- i0)(x, y) = f+ f- / W, x < y."""
    if lam == 0.0:
        raise ValueError("green_kernel requires lambda != 0")
    mu = lam if sign > 0 else -lam
    if x > y:
        x, y = y, x
    w = wronskian(jplus, jminus, mu)
    if abs(w) < w_floor:
        raise SingularEnergyError("|W(%g)| = %.3e below floor" % (mu, abs(w)))
    ilp = jplus.lambda_index(mu)
    ilm = jminus.lambda_index(mu)
    jy = jplus.x_index(y)
    jx = jminus.x_index(x)
    f_p = np.exp(1j * mu * y) * jplus.m[ilp, jy]
    f_m = np.exp(-1j * mu * x) * jminus.m[ilm, jx]
    return f_p * f_m / w
