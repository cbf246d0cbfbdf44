"""Fourier-side L1 diagnostics for Wronskian reciprocals.

Convention: the inverse transform used throughout is

    f_check(xi) = (1/pi) int f(lam) e^{-i lam xi} dlam,

so [1/lam]^check has magnitude one and the algebra identity
(f g)^check = (pi/2) f_check * g_check never needs tracking here because
norms are compared within a single convention.  Forward transform for the
round trip: f(lam) = (1/2) int f_check(xi) e^{+i lam xi} dxi.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .oscillatory import bump, filon_linear_phase

_ENDPOINT_FRACTION = 1e-3


@dataclass(frozen=True)
class FourierL1:
    value: float
    xi_step: float
    xi_max: float
    tail_fraction: float
    warning: Optional[str]

    def __float__(self):
        return self.value


def inverse_transform(lam, f, xi):
    """Direct evaluation of f_check on an arbitrary xi grid."""
    lam = np.asarray(lam, dtype=float)
    f = np.asarray(f, dtype=complex)
    xi = np.asarray(xi, dtype=float)
    return filon_linear_phase(lam, f, -xi) / np.pi


def forward_transform(xi, fc, lam):
    xi = np.asarray(xi, dtype=float)
    fc = np.asarray(fc, dtype=complex)
    lam = np.asarray(lam, dtype=float)
    return 0.5 * filon_linear_phase(xi, fc, lam)


def l1_fourier_norm(lam, f, oversample: int = 8, pad_factor: int = 8):
    """Discrete L1 norm of f_check from uniformly resampled FFT data.

    lam must be a uniform grid covering the support of f.  Endpoint values
    that are not small relative to the interior produce a warning field on
    the result rather than a failure: a slowly decaying integrand means the
    quoted norm is a truncation of a possibly divergent one.
    """
    lam = np.asarray(lam, dtype=float)
    f = np.asarray(f, dtype=complex)
    if lam.ndim != 1 or lam.size < 8:
        raise ValueError("need a 1d grid with at least 8 nodes")
    d = np.diff(lam)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ValueError("l1_fourier_norm needs a uniform lambda grid")
    h = float(d[0])
    peak = float(np.max(np.abs(f)))
    warning = None
    if peak > 0.0:
        edge = max(abs(f[0]), abs(f[-1])) / peak
        if edge > _ENDPOINT_FRACTION:
            warning = ("integrand not decayed at grid ends "
                       f"(edge/peak = {edge:.2e}); norm is a truncation")

    n = lam.size
    n_fft = 1
    while n_fft < pad_factor * oversample * n:
        n_fft *= 2
    work = np.zeros(n_fft, dtype=complex)
    work[:n] = f
    # FFT gives sum_j f_j e^{-2pi i jk/N}; attach the h and the lam[0] phase
    spec = np.fft.fft(work)
    xi = 2.0 * np.pi * np.fft.fftfreq(n_fft, d=h)
    fc = (h / np.pi) * spec * np.exp(-1j * lam[0] * xi)
    order = np.argsort(xi)
    xi = xi[order]
    fc = fc[order]
    dxi = xi[1] - xi[0]
    mags = np.abs(fc)
    total = float(np.sum(mags) * dxi)
    m = n_fft // 8
    tail = float((np.sum(mags[:m]) + np.sum(mags[-m:])) * dxi)
    tail_fraction = tail / total if total > 0.0 else 0.0
    if warning is None and tail_fraction > 0.05:
        warning = ("transform mass has not decayed within the resolved "
                   f"xi window (tail fraction {tail_fraction:.2e})")
    return FourierL1(value=total, xi_step=float(dxi),
                     xi_max=float(xi[-1]), tail_fraction=tail_fraction,
                     warning=warning)


@dataclass(frozen=True)
class InverseCheck:
    ok: bool
    lower_bound: float
    ratio_l1: Optional[float]
    ratio_warning: Optional[str]
    best_center: complex
    neumann_l1: tuple
    message: str

    def report(self):
        return {
            "ok": self.ok,
            "lower_bound": self.lower_bound,
            "ratio_l1": self.ratio_l1,
            "ratio_warning": self.ratio_warning,
            "best_center": [self.best_center.real, self.best_center.imag],
            "neumann_l1": list(self.neumann_l1),
            "message": self.message,
        }


def wiener_inverse_check(lam, chi_w, chi_num, n_neumann: int = 6,
                         floor: float = 1e-6):
    """Can the tapered Wronskian be inverted where the low cutoff lives?

    chi_w holds samples of the widened-cutoff Wronskian chi_tilde(lam) W(lam)
    and chi_num the numerator lam chi(lam) of the low-energy integrand.  The
    verdict rests on (a) a pointwise lower bound for |chi_tilde W| on the
    support of chi and (b) a finite, well-resolved L1 Fourier norm of the
    ratio chi_num / (chi_tilde W).  A Neumann probe (1 - chi_tilde W / c)^n
    for the best constant center c is attached as a diagnostic; its terms
    need not contract (no single disk through the origin covers the curve
    traced by W when both signs of lam are in play), so it carries no veto.
    A failed lower bound signals a zero-energy resonance: report, not raise,
    so the caller can switch to the resonance-adapted reduction.
    """
    lam = np.asarray(lam, dtype=float)
    chi_w = np.asarray(chi_w, dtype=complex)
    chi_num = np.asarray(chi_num, dtype=complex)
    active = np.abs(chi_num) > 1e-12 * max(np.max(np.abs(chi_num)), 1e-300)
    if not np.any(active):
        raise ValueError("numerator cutoff vanishes on the whole grid")
    scale = float(np.max(np.abs(chi_w[active])))
    # the numerator vanishes linearly at 0, so the active set alone can
    # miss a Wronskian zero sitting exactly at lam = 0; probe it by
    # interpolation so grid parity cannot hide a resonance
    w_at_zero = abs(np.interp(0.0, lam, chi_w.real)
                    + 1j * np.interp(0.0, lam, chi_w.imag))
    lower = min(float(np.min(np.abs(chi_w[active]))), w_at_zero)
    bounded_below = lower >= floor * max(scale, 1.0)

    # ratio with removable 0/0 nodes filled by neighbor interpolation,
    # so the resonant examples still get their finite cancelled norm
    safe = np.abs(chi_w) > 1e-13 * max(scale, 1e-300)
    if not np.any(safe):
        raise ValueError("chi_tilde W vanishes identically on the grid")
    ratio = np.zeros_like(chi_w)
    ratio[safe] = chi_num[safe] / chi_w[safe]
    if not np.all(safe):
        ratio[~safe] = (np.interp(lam[~safe], lam[safe], ratio[safe].real)
                        + 1j * np.interp(lam[~safe], lam[safe],
                                         ratio[safe].imag))
    rn = l1_fourier_norm(lam, ratio)
    if not bounded_below:
        return InverseCheck(
            ok=False, lower_bound=lower, ratio_l1=rn.value,
            ratio_warning=rn.warning, best_center=0j, neumann_l1=(),
            message=("|chi_tilde W| is not bounded below on the cutoff "
                     "support; use the resonance-adapted reduction"))

    # diagnostic: best constant center from the range of chi_w on the
    # active set, then transforms of the compact parts of (1 - chi_w/c)^n
    cands = chi_w[active]
    idx = np.linspace(0, cands.size - 1, min(cands.size, 33)).astype(int)
    best_c, best_sup = 0j, np.inf
    for c in cands[idx]:
        sup = float(np.max(np.abs(1.0 - chi_w[active] / c)))
        if sup < best_sup:
            best_c, best_sup = complex(c), sup
    factor = 1.0 - chi_w / best_c
    term = np.ones_like(chi_w)
    norms = []
    for _ in range(n_neumann + 1):
        # term -> 1 at the grid ends (chi_w compactly supported), so
        # transform the compact part term - 1 and account the point mass
        norms.append(1.0 + l1_fourier_norm(lam, term - 1.0).value)
        term = term * factor
    ok = rn.warning is None
    msg = ("ratio transform in L1 at this resolution" if ok else
           "ratio transform not resolved: " + rn.warning)
    return InverseCheck(ok=ok, lower_bound=lower, ratio_l1=rn.value,
                        ratio_warning=rn.warning, best_center=best_c,
                        neumann_l1=tuple(norms), message=msg)


@dataclass(frozen=True)
class PrufTable:
    rows: tuple          # of (n, L, l1_norm)
    slopes: tuple        # of (n, dlog norm / dlog L)
    proxy_n1: float      # L1 norm of [chi_L(lam^2)]^check at largest L
    lam0: float

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("n,L,l1_norm\n")
            for n, L, v in self.rows:
                fh.write("%d,%.17g,%.17g\n" % (n, L, v))

    def max_abs_slope(self):
        return max(abs(s) for _, s in self.slopes) if self.slopes else 0.0


def pruf_uniform_bounds(cut=1e-3, n_max: int = 4,
                        L_list=(1.0, 10.0, 100.0),
                        nodes_per_unit: int = 400):
    """L1 Fourier norms of the weights chi_L(lam^2) lam^{-n} lam0^{n/2}.

    chi_L(E) = [1 - chi(E/lam0)] chi(E/L): the high-energy cutoff at scale
    lam0 truncated at energy L, so the lam^{-n} factor only acts away from
    zero and every weight is smooth and compactly supported.  cut is a
    CutoffSpec or a bare lam0.  The claim being probed is boundedness
    uniformly in L; the table norms depend on L/lam0 only (exact dilation
    covariance), so the mandated decade range sits in the asymptotic
    regime once lam0 is small.  Returns the table plus per-n log-log
    slopes across L.
    """
    lam0 = float(getattr(cut, "lam0", cut))
    if lam0 <= 0:
        raise ValueError("lam0 must be positive")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    L_list = tuple(float(L) for L in L_list)
    if any(L <= 0 for L in L_list):
        raise ValueError("energy truncations must be positive")
    rows = []
    proxy = None
    density = max(nodes_per_unit, int(16.0 / np.sqrt(lam0)))
    for L in L_list:
        lam_max = np.sqrt(2.0 * L)
        n_nodes = max(int(2 * lam_max * density), 4096)
        if n_nodes % 2 == 0:
            n_nodes += 1   # symmetric grid with a node at 0
        lam = np.linspace(-lam_max, lam_max, n_nodes)
        hi = 1.0 - bump(lam * lam / lam0)
        chi_l = bump(lam * lam / L)
        lam_safe = np.where(np.abs(lam) > 1e-300, lam, 1.0)
        for n in range(n_max + 1):
            weight = hi * chi_l * lam_safe ** (-n) * lam0 ** (n / 2.0)
            weight[hi == 0.0] = 0.0
            rows.append((n, L, l1_fourier_norm(lam, weight).value))
        if L == max(L_list):
            proxy = l1_fourier_norm(lam, chi_l.astype(complex)).value
    slopes = []
    logL = np.log(np.asarray(L_list))
    for n in range(n_max + 1):
        vals = np.array([v for nn, L, v in rows if nn == n])
        coef = np.polyfit(logL, np.log(vals), 1)
        slopes.append((n, float(coef[0])))
    return PrufTable(rows=tuple(rows), slopes=tuple(slopes),
                     proxy_n1=float(proxy), lam0=float(lam0))
