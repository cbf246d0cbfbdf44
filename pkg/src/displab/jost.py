"""Jost solution profiles m(lambda, x) from the Volterra integral equation.

Side + solves m(x) = 1 + int_x^inf D_lam(y-x) V(y) m(y) dy with
D_lam(u) = (e^{2 i lam u} - 1)/(2 i lam), D_0(u) = u, by successive
approximation; side - is the mirror image.  The y-integrals use product
integration: V m is interpolated by parabolas on panel pairs and integrated
against the exact e^{2 i lam y} weight, which keeps the discretization error
O(h^4) uniformly in lambda.  The x-derivative comes from differentiating the
integral equation, never from differencing m.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import potentials
from .oscillatory import filon_linear_phase

_BH = (0.35875, 0.48829, 0.14128, 0.01168)  # 4-term Blackman-Harris
_CHUNK_ELEMS = 2_000_000


class JostConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class JostTable:
    side: str
    lambda_grid: np.ndarray
    x_grid: np.ndarray
    m: np.ndarray
    m_x: np.ndarray
    residual_norm: np.ndarray
    tol: float
    tail_bound: float

    def x_index(self, x):
        j = int(np.argmin(np.abs(self.x_grid - x)))
        if abs(self.x_grid[j] - x) > 1e-9:
            raise ValueError("x = %g is not on the table grid" % x)
        return j

    def lambda_index(self, lam):
        i = int(np.argmin(np.abs(self.lambda_grid - lam)))
        if abs(self.lambda_grid[i] - lam) > 1e-12:
            raise ValueError("lambda = %g is not on the table grid" % lam)
        return i

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("side,lambda,x,re_m,im_m,re_mx,im_mx\n")
            for i, lam in enumerate(self.lambda_grid):
                for j, x in enumerate(self.x_grid):
                    fh.write("%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                        self.side, lam, x,
                        self.m[i, j].real, self.m[i, j].imag,
                        self.m_x[i, j].real, self.m_x[i, j].imag))


def _moments012(theta):
    """int_0^1 s^j e^{i theta s} ds for j = 0, 1, 2."""
    th = np.asarray(theta, dtype=float)
    small = np.abs(th) < 0.05
    s = 1j * np.where(small, 1.0, th)
    e = np.exp(s)
    m0c = (e - 1.0) / s
    m1c = (e * (s - 1.0) + 1.0) / (s * s)
    m2c = (e * (s * s - 2.0 * s + 2.0) - 2.0) / (s ** 3)
    z = 1j * th
    m0t = np.zeros(th.shape, complex)
    m1t = np.zeros(th.shape, complex)
    m2t = np.zeros(th.shape, complex)
    zk = np.ones(th.shape, complex)
    kfact = 1.0
    for k in range(10):
        m0t += zk / (kfact * (k + 1))
        m1t += zk / (kfact * (k + 2))
        m2t += zk / (kfact * (k + 3))
        zk = zk * z
        kfact *= k + 1
    return (np.where(small, m0t, m0c),
            np.where(small, m1t, m1c),
            np.where(small, m2t, m2c))


def _cell_coefficients(g, odd_tail):
    """Panel parabolas as per-cell (a0, a1, a2) in local coords v in [0,1]."""
    nl, nx = g.shape
    ncell = nx - 1
    a0 = np.empty((nl, ncell), complex)
    a1 = np.empty((nl, ncell), complex)
    a2 = np.empty((nl, ncell), complex)
    g0, g1, g2 = g[:, 0:ncell - 1:2], g[:, 1:ncell:2], g[:, 2:ncell + 1:2]
    b = 0.5 * (g2 - g0)
    c = 0.5 * (g0 - 2.0 * g1 + g2)
    a0[:, 0:ncell - 1:2] = g0
    a1[:, 0:ncell - 1:2] = b - 2.0 * c
    a2[:, 0:ncell - 1:2] = c
    a0[:, 1:ncell:2] = g1
    a1[:, 1:ncell:2] = b
    a2[:, 1:ncell:2] = c
    if odd_tail:
        a0[:, -1] = g[:, -2]
        a1[:, -1] = g[:, -1] - g[:, -2]
        a2[:, -1] = 0.0
    return a0, a1, a2


def _suffix(arr):
    # S[j] = sum_{k >= j} arr[:, k], with a trailing zero column
    out = np.zeros((arr.shape[0], arr.shape[1] + 1), complex)
    np.cumsum(arr[:, ::-1], axis=1, out=out[:, 1:])
    return out[:, ::-1].copy()


def _volterra_plus(vvals, x, lam, tol, max_iter):
    nx, nl = x.size, lam.size
    h = x[1] - x[0]
    odd_tail = (nx - 1) % 2 == 1
    theta = 2.0 * lam * h
    m0, m1, m2 = (m[:, None] for m in _moments012(theta))
    omega = 2.0 * lam
    phase_cell = np.exp(1j * omega[:, None] * x[None, :-1])
    phase_node = np.exp(-1j * omega[:, None] * x[None, :])
    zero_rows = lam == 0.0
    lam_safe = np.where(zero_rows, 1.0, lam)

    def apply_k(m):
        g = vvals[None, :] * m
        a0, a1, a2 = _cell_coefficients(g, odd_tail)
        cell_osc = h * phase_cell * (a0 * m0 + a1 * m1 + a2 * m2)
        cell_plain = h * (a0 + a1 / 2.0 + a2 / 3.0)
        i1 = _suffix(cell_osc)
        i0 = _suffix(cell_plain)
        km = (phase_node * i1 - i0) / (2j * lam_safe[:, None])
        if np.any(zero_rows):
            cell_y = x[None, :-1] * cell_plain + h * h * (a0 / 2.0 + a1 / 3.0 + a2 / 4.0)
            iy = _suffix(cell_y)
            km[zero_rows] = iy[zero_rows] - x[None, :] * i0[zero_rows]
        return km, i1

    m = np.ones((nl, nx), complex)
    for it in range(max_iter):
        km, i1 = apply_k(m)
        m_new = 1.0 + km
        delta = np.max(np.abs(m_new - m))
        m = m_new
        if delta < tol:
            break
    else:
        raise JostConvergenceError(
            "Volterra iteration did not converge (last delta %.3e)" % delta, delta)
    km, i1 = apply_k(m)
    residual = np.max(np.abs(1.0 + km - m), axis=1)
    m_x = -phase_node * i1
    return 1.0 + km, m_x, residual


def solve_jost(V, side, lambda_grid, x_grid, tol=1e-10, max_iter=400):
    """Solve for m(lambda, x) and its x-derivative on the given grids.

    x_grid must be uniform and cover the numerically relevant support of V;
    the truncation tail int_{x_end}^inf (1+|y|)|V| dy is reported on the
    table as tail_bound.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    if lam.ndim != 1 or not np.all(np.isfinite(lam)):
        raise ValueError("lambda grid must be 1d and finite")
    dx = np.diff(x)
    if x.size < 3 or np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-9):
        raise ValueError("x grid must be uniform and increasing")
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")

    if side == "-":
        vv = V(x)[::-1]
        z = -x[::-1]
        m, m_x, res = _chunked_volterra(vv, z, lam, tol, max_iter)
        m = m[:, ::-1]
        m_x = -m_x[:, ::-1]
        tail = _tail_weighted_l1(V.reflected(), float(z[-1]))
    else:
        vv = np.asarray(V(x), dtype=float)
        m, m_x, res = _chunked_volterra(vv, x, lam, tol, max_iter)
        tail = _tail_weighted_l1(V, float(x[-1]))
    return JostTable(side, lam, x, m, m_x, res, tol, tail)


def _chunked_volterra(vvals, x, lam, tol, max_iter):
    step = max(1, _CHUNK_ELEMS // x.size)
    ms, mxs, rs = [], [], []
    for i in range(0, lam.size, step):
        m, m_x, res = _volterra_plus(vvals, x, lam[i:i + step], tol, max_iter)
        ms.append(m)
        mxs.append(m_x)
        rs.append(res)
    return np.concatenate(ms), np.concatenate(mxs), np.concatenate(rs)


def _tail_weighted_l1(V, x_end):
    R = V.support_radius(1e-14)
    if x_end >= R:
        return 0.0
    est = potentials.weighted_l1_norm(V, 1.0)
    inside = potentials.weighted_l1_norm(
        potentials.sampled(np.linspace(-R, max(x_end, -R + 1e-9), 4001),
                           V(np.linspace(-R, max(x_end, -R + 1e-9), 4001))), 1.0)
    return max(0.0, est.value - inside.value)


@dataclass(frozen=True)
class DecayMajorant:
    xi_grid: np.ndarray
    I_values: np.ndarray


def decay_majorant(V, xi_grid):
    """I(xi) = int_{|t| > xi} |V(t)| dt on a grid of xi >= 0."""
    xi = np.asarray(xi_grid, dtype=float)
    if np.any(xi < 0):
        raise ValueError("xi values must be nonnegative")
    if V.form == "zero":
        return DecayMajorant(xi, np.zeros_like(xi))
    if V.form == "box":
        hgt, w = abs(V.params["height"]), V.params["half_width"]
        vals = 2.0 * hgt * np.clip(w - xi, 0.0, None)
    elif V.form == "gaussian":
        from scipy.special import erfc
        a, w = abs(V.params["amplitude"]), V.params["width"]
        vals = a * w * math.sqrt(math.pi) * erfc(xi / w)
    elif V.form == "poschl_teller":
        c = abs(V.params["c"])
        vals = 2.0 * c * (1.0 - np.tanh(xi))
    else:
        grid, v = V.params["grid"], np.abs(V.params["values"])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(grid))])
        total = cum[-1]

        def inside(s):
            hi = np.interp(s, grid, cum, left=0.0, right=total)
            lo = np.interp(-s, grid, cum, left=0.0, right=total)
            return hi - lo
        vals = total - inside(xi)
    return DecayMajorant(xi, np.maximum(vals, 0.0))


@dataclass(frozen=True)
class FourierSide:
    xi_grid: np.ndarray
    values: np.ndarray
    window: str
    delta: float
    lambda_max: float


def _bh_window(u):
    a0, a1, a2, a3 = _BH
    tp = 2.0 * np.pi * u
    return a0 - a1 * np.cos(tp) + a2 * np.cos(2.0 * tp) - a3 * np.cos(3.0 * tp)


def m_fourier_side(table, x, xi_grid):
    """Transform of lambda -> m(lambda, x) - 1, normalized so that
    mhat(xi) = (1/pi) int (m - 1) e^{-2 i lambda xi} dlambda.

    With this normalization mhat is the translation kernel of the Jost
    profile: real, supported in xi >= 0, and dominated by the decay
    majorant I(xi) up to a constant.
    """
    jx = table.x_index(x)
    lam = table.lambda_grid
    xi = np.asarray(xi_grid, dtype=float)
    g = table.m[:, jx] - 1.0
    lam_max = float(lam[-1])
    if lam[0] >= -1e-15:
        # half-line table: the negative-lambda half is the conjugate
        w = _bh_window(0.5 + lam / (2.0 * lam_max))
        vals = (2.0 / np.pi) * np.real(
            filon_linear_phase(lam, g * w, -2.0 * xi))
    else:
        span = lam_max - float(lam[0])
        w = _bh_window((lam - lam[0]) / span)
        vals = (1.0 / np.pi) * filon_linear_phase(lam, g * w, -2.0 * xi)
    delta = 4.0 * np.pi / lam_max
    return FourierSide(xi, vals, "blackman-harris-4", delta, lam_max)
