"""Brute-force grid oracle: finite-difference Dirichlet Hamiltonian on [-L, L].

One dense eigendecomposition serves every t and the spectral-density checks.
Mode sums accept an optional smooth spectral weight: the raw lattice
propagator carries a band-edge stationary point of the same magnitude as the
physical one, so any comparison against continuum kernels must window the
mode sum (and apply the same window on the continuum side).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .kernelgrid import KernelGrid

MAX_NODES = 40_000


@dataclass(frozen=True)
class GridHamiltonian:
    x_grid: np.ndarray
    h: float
    L: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal w.r.t. the euclidean dot
    n_negative: int


def build(V, L, h):
    """Assemble and diagonalize -second difference + diag V, Dirichlet ends."""
    vmax = float(np.abs(V(np.linspace(-L, L, 4001))).max())
    if h >= 1.0 / (4.0 * np.sqrt(vmax) + 1.0):
        raise ValueError("grid spacing h = %g too coarse for max|V| = %g" % (h, vmax))
    n = int(round(2.0 * L / h)) - 1
    if n > MAX_NODES:
        raise ValueError("grid needs %d nodes, above the %d-node bound; "
                         "increase h or decrease L" % (n, MAX_NODES))
    x = -L + h * np.arange(1, n + 1)
    diag = 2.0 / h ** 2 + np.asarray(V(x), dtype=float)
    off = np.full(n - 1, -1.0 / h ** 2)
    evals, evecs = eigh_tridiagonal(diag, off)
    return GridHamiltonian(x, h, float(L), evals, evecs,
                           int(np.sum(evals < 0.0)))


def default_eps_zero(Hg):
    # a finite box smears a zero-energy resonance over O(1/L^2) energies
    return 5.0 * (np.pi / Hg.L) ** 2


def oracle_propagator(Hg, t, ac_only=False, resonant=False, eps_zero=None,
                      window=None, xs=None, ys=None):
    """K(t; x, y) = sum_j w(E_j) e^{i t E_j} psi_j(x) psi_j(y) / h.

    ac_only drops E_j < 0, and also |E_j| < eps_zero when the potential is
    classified Resonant.  window, if given, is a smooth weight w(E) applied
    to the retained modes.  xs/ys restrict the output grid.
    """
    E, Psi = Hg.eigenvalues, Hg.eigenvectors
    keep = np.ones(E.size, dtype=bool)
    if ac_only:
        keep &= E >= 0.0
        if resonant:
            ez = default_eps_zero(Hg) if eps_zero is None else eps_zero
            keep &= np.abs(E) >= ez
    w = np.exp(1j * t * E[keep])
    if window is not None:
        w = w * window(E[keep])
    ix = _grid_indices(Hg, xs)
    iy = _grid_indices(Hg, ys)
    block_x = Psi[ix][:, keep]
    block_y = Psi[iy][:, keep]
    K = (block_x * w[None, :]) @ block_y.T / Hg.h
    return KernelGrid(np.array([t]), Hg.x_grid[ix], Hg.x_grid[iy],
                      K[None, :, :], "oracle")


def _grid_indices(Hg, pts):
    if pts is None:
        return np.arange(Hg.x_grid.size)
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    idx = np.searchsorted(Hg.x_grid, pts - 1e-9)
    idx = np.clip(idx, 0, Hg.x_grid.size - 1)
    if np.any(np.abs(Hg.x_grid[idx] - pts) > 1e-6):
        raise ValueError("requested points are not on the oracle grid")
    return idx


def bound_state_kernel(Hg, t, xs=None, ys=None):
    """The complement of ac_only: sum over E_j < 0 modes."""
    E, Psi = Hg.eigenvalues, Hg.eigenvectors
    keep = E < 0.0
    ix = _grid_indices(Hg, xs)
    iy = _grid_indices(Hg, ys)
    w = np.exp(1j * t * E[keep])
    K = (Psi[ix][:, keep] * w[None, :]) @ Psi[iy][:, keep].T / Hg.h
    return KernelGrid(np.array([t]), Hg.x_grid[ix], Hg.x_grid[iy],
                      K[None, :, :], "oracle")


@dataclass(frozen=True)
class StoneDensity:
    lam: float
    green_route: float
    oracle_route: float
    bin_width: float
    modes_in_bin: int


def stone_density(Hg, jplus, jminus, lam, x, y, bin_width=0.5):
    """Spectral density at energy lambda^2, two independent ways.

    Route (a): (2 pi i)^{-1} [R(+i0) - R(-i0)](x, y) from Green kernels.
    Route (b): oracle eigenmode binning, sum psi psi / h / bin width.
    """
    if lam <= 0.0:
        raise ValueError("stone_density needs lambda > 0")
    from .scattering import green_kernel
    gp = green_kernel(jplus, jminus, lam, +1, x, y)
    gm = green_kernel(jplus, jminus, lam, -1, x, y)
    a = ((gp - gm) / (2j * np.pi)).real

    E0 = lam * lam
    E, Psi = Hg.eigenvalues, Hg.eigenvectors
    sel = np.abs(E - E0) <= 0.5 * bin_width
    ix = _grid_indices(Hg, [x])[0]
    iy = _grid_indices(Hg, [y])[0]
    b = float(np.sum(Psi[ix, sel] * Psi[iy, sel])) / Hg.h / bin_width
    return StoneDensity(lam, float(a), b, bin_width, int(np.sum(sel)))
