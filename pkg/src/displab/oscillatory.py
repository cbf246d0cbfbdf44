"""Oscillatory quadrature against exact linear and quadratic phase weights.

Everything downstream that integrates e^{i(t lam^2 + p lam)} g(lam) runs
through here.  Panels interpolate g linearly and integrate the phase factor
exactly, so the composite error is O(h^2 g'') with an extra 1/(t lam) gain
from the vanishing of the interpolation error at panel ends.  Plain
quadrature rules lose uniformity in t; these do not.
"""

import numpy as np
from scipy import special

_TAYLOR_CUT = 1e-2
_FOLD_CUT = 1e-4
_CHUNK_ELEMS = 4_000_000


def bump(s):
    """Smooth even cutoff: 1 on |s|<=1, 0 on |s|>=2, C-infinity in between."""
    s = np.abs(np.asarray(s, dtype=float))
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.zeros_like(s)
    out[s <= 1.0] = 1.0
    mid = (s > 1.0) & (s < 2.0)
    if np.any(mid):
        u = s[mid]
        a = np.exp(-1.0 / (2.0 - u))
        b = np.exp(-1.0 / (u - 1.0))
        out[mid] = a / (a + b)
    return out[0] if scalar else out


def _phi(z):
    # int_0^z exp(i s^2) ds, odd in z
    w = z * np.sqrt(2.0 / np.pi)
    fs, fc = special.fresnel(w)
    return np.sqrt(np.pi / 2.0) * (fc + 1j * fs)


def _lin_moments(theta):
    """mt = int_0^1 e^{i th s} ds and m1 = int_0^1 s e^{i th s} ds."""
    th = np.asarray(theta, dtype=float)
    small = np.abs(th) < _TAYLOR_CUT
    th_safe = np.where(small, 1.0, th)
    it = 1j * th_safe
    e = np.exp(it)
    mt_c = (e - 1.0) / it
    m1_c = (e * it - e + 1.0) / (it * it)
    z = 1j * th
    mt_t = np.zeros(th.shape, dtype=complex)
    m1_t = np.zeros(th.shape, dtype=complex)
    zk = np.ones(th.shape, dtype=complex)
    fact = 1.0
    for k in range(8):
        fact *= k + 1  # (k+1)!
        mt_t += zk / fact
        m1_t += zk * (k + 1) / (fact * (k + 2))
        zk = zk * z
    return np.where(small, mt_t, mt_c), np.where(small, m1_t, m1_c)


def _p_chunks(m, ncell):
    step = max(1, _CHUNK_ELEMS // max(ncell, 1))
    for i in range(0, m, step):
        yield slice(i, min(i + step, m))


def filon_linear_phase(lam, g, p):
    """int e^{i p lam} g(lam) dlam over the node range, batched over p."""
    lam = np.asarray(lam, dtype=float)
    g = np.asarray(g, dtype=complex)
    p = np.asarray(p, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    a, h = lam[:-1], np.diff(lam)
    ga, gb = g[:-1], g[1:]
    out = np.empty(p.shape, dtype=complex)
    for sl in _p_chunks(p.size, h.size):
        th = p[sl, None] * h[None, :]
        mt, m1 = _lin_moments(th)
        contrib = h[None, :] * np.exp(1j * p[sl, None] * a[None, :]) * (
            ga[None, :] * (mt - m1) + gb[None, :] * m1
        )
        out[sl] = contrib.sum(axis=1)
    return out[0] if scalar else out


def _quadratic_cells(lam, G, t, p):
    # exact per-cell moments I0, I1 via Fresnel, then linear-in-g assembly;
    # G is (B, n), p is (B,)
    a = lam[:-1]
    h = np.diff(lam)
    ga, gb = G[:, :-1], G[:, 1:]
    dg = (gb - ga) / h[None, :]
    coef0 = ga - dg * a[None, :]
    rt = np.sqrt(t)
    c = p / (2.0 * t)
    s0 = np.exp(-1j * p * p / (4.0 * t))
    z = (lam[None, :] + c[:, None]) * rt
    phi_e = _phi(z)
    i0 = (s0[:, None] / rt) * (phi_e[:, 1:] - phi_e[:, :-1])
    ph = np.exp(1j * (t * lam * lam)[None, :] + 1j * p[:, None] * lam[None, :])
    i1 = (ph[:, 1:] - ph[:, :-1]) / (2j * t) - (p / (2.0 * t))[:, None] * i0
    return (coef0 * i0 + dg * i1).sum(axis=1)


def _folded_cells(lam, G, t, p):
    # quadratic phase nearly flat per cell: linearize around midpoints
    h = np.diff(lam)
    lm = lam[:-1] + 0.5 * h
    ga, gb = G[:, :-1], G[:, 1:]
    q = 2.0 * t * lm[None, :] + p[:, None]
    th = q * h[None, :]
    mt, m1 = _lin_moments(th)
    phase = (t * lm * lm)[None, :] + p[:, None] * lm[None, :] - 0.5 * th
    contrib = h[None, :] * np.exp(1j * phase) * (ga * (mt - m1) + gb * m1)
    return contrib.sum(axis=1)


def filon_quadratic_phase_rows(lam, G, t, p):
    """Row-batched form: int e^{i(t lam^2 + p_b lam)} G[b](lam) dlam per row b.

    G has shape (B, n) over the shared lam nodes; p is scalar or (B,).
    """
    lam = np.asarray(lam, dtype=float)
    G = np.asarray(G, dtype=complex)
    t = float(t)
    p = np.broadcast_to(np.asarray(p, dtype=float), (G.shape[0],))
    if t == 0.0:
        return np.array([filon_linear_phase(lam, G[b], p[b])
                         for b in range(G.shape[0])])
    if t < 0.0:
        return np.conj(filon_quadratic_phase_rows(lam, np.conj(G), -t, -p))
    h_max = np.max(np.diff(lam))
    cells = _folded_cells if t * h_max * h_max < _FOLD_CUT else _quadratic_cells
    out = np.empty(G.shape[0], dtype=complex)
    for sl in _p_chunks(G.shape[0], lam.size - 1):
        out[sl] = cells(lam, G[sl], t, p[sl])
    return out


def filon_quadratic_phase(lam, g, t, p):
    """int e^{i(t lam^2 + p lam)} g(lam) dlam over the node range.

    lam: increasing nodes, g: complex samples, t: real scalar, p: scalar or
    1d batch of linear-phase coefficients.  Returns one value per p.
    """
    lam = np.asarray(lam, dtype=float)
    g = np.asarray(g, dtype=complex)
    t = float(t)
    p = np.asarray(p, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    if t == 0.0:
        out = filon_linear_phase(lam, g, p)
        return out[0] if scalar else out
    G = np.broadcast_to(g, (p.size, g.size))
    out = filon_quadratic_phase_rows(lam, G, t, p)
    return out[0] if scalar else out


def free_kernel(t, x, y):
    """Kernel of e^{it(-Delta)} on the line: (1/2pi) int e^{i t lam^2 + i lam (x-y)} dlam.

    Closed form e^{i pi/4 sgn t} (4 pi |t|)^{-1/2} e^{-i|x-y|^2/(4t)}, t != 0.
    """
    t = float(t)
    if t == 0.0:
        raise ValueError("free kernel is singular at t = 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    amp = np.exp(1j * np.sign(t) * np.pi / 4.0) / (2.0 * np.sqrt(np.pi * abs(t)))
    return amp * np.exp(-1j * (x - y) ** 2 / (4.0 * t))
