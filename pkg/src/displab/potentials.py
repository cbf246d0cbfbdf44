"""Potential families and the norms that gate every hypothesis.

Built-in closed forms are even in 1d and radial in 3d; sampled data is a
two-column profile (1d: x, 3d: radius).
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

FORMS = ("zero", "box", "gaussian", "poschl_teller", "sampled")


@dataclass(frozen=True)
class NormEstimate:
    value: float
    error: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class Potential:
    """A real 1d or 3d potential profile with decay metadata."""

    dimension: int
    form: str
    params: dict = field(default_factory=dict)
    decay_exponent_hint: float | None = None

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ValueError("dimension must be 1 or 3")
        if self.form not in FORMS:
            raise ValueError("unknown form %r" % (self.form,))
        if self.form == "sampled":
            grid = np.asarray(self.params["grid"], dtype=float)
            vals = np.asarray(self.params["values"], dtype=float)
            if grid.ndim != 1 or grid.size < 2 or vals.shape != grid.shape:
                raise ValueError("sampled potential needs matching 1d grid and values")
            if not np.all(np.diff(grid) > 0):
                raise ValueError("sampled grid must be strictly increasing")
            if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(vals))):
                raise ValueError("sampled potential contains non-finite data")
            object.__setattr__(self, "params", {"grid": grid, "values": vals})

    def __call__(self, x):
        """Evaluate V at x (1d signed coordinate, or radius for 3d)."""
        x = np.asarray(x, dtype=float)
        if self.form == "zero":
            return np.zeros_like(x)
        if self.form == "box":
            h, w = self.params["height"], self.params["half_width"]
            return np.where(np.abs(x) <= w, h, 0.0)
        if self.form == "gaussian":
            a, w = self.params["amplitude"], self.params["width"]
            return a * np.exp(-((x / w) ** 2))
        if self.form == "poschl_teller":
            c = self.params["c"]
            return -c / np.cosh(x) ** 2
        grid, vals = self.params["grid"], self.params["values"]
        return np.interp(x, grid, vals, left=0.0, right=0.0)

    def support_radius(self, tol=1e-12):
        """Radius beyond which |V| stays below tol."""
        if self.form == "zero":
            return 0.0
        if self.form == "box":
            return self.params["half_width"]
        if self.form == "gaussian":
            a, w = abs(self.params["amplitude"]), self.params["width"]
            return 0.0 if a <= tol else w * math.sqrt(math.log(a / tol))
        if self.form == "poschl_teller":
            c = abs(self.params["c"])
            # sech^2(x) <= 4 e^{-2x}
            return 0.0 if c <= tol else 0.5 * math.log(4.0 * c / tol)
        grid = self.params["grid"]
        return float(max(abs(grid[0]), abs(grid[-1])))

    def is_even(self):
        if self.form == "sampled":
            grid, vals = self.params["grid"], self.params["values"]
            mirrored = np.interp(-grid, grid, vals, left=0.0, right=0.0)
            return bool(np.allclose(mirrored, vals))
        return True

    def reflected(self):
        """x -> V(-x); identity for the even closed forms."""
        if self.form != "sampled":
            return self
        grid, vals = self.params["grid"], self.params["values"]
        return sampled(-grid[::-1], vals[::-1], dimension=self.dimension)


def zero(dimension=1):
    return Potential(dimension, "zero")


def box(height, half_width, dimension=1):
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    return Potential(dimension, "box",
                     {"height": float(height), "half_width": float(half_width)})


def gaussian(amplitude, width, dimension=1):
    if width <= 0:
        raise ValueError("width must be positive")
    return Potential(dimension, "gaussian",
                     {"amplitude": float(amplitude), "width": float(width)},
                     decay_exponent_hint=math.inf)


def poschl_teller(c, dimension=1):
    return Potential(dimension, "poschl_teller", {"c": float(c)},
                     decay_exponent_hint=math.inf)


def sampled(grid, values, dimension=1, decay_exponent_hint=None):
    return Potential(dimension, "sampled",
                     {"grid": np.asarray(grid, dtype=float),
                      "values": np.asarray(values, dtype=float)},
                     decay_exponent_hint=decay_exponent_hint)


def sampled_from_csv(path, dimension=1):
    """Two-column CSV (coordinate, value), UTF-8, header row optional."""
    xs, vs = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except ValueError:
                if not xs:  # header
                    continue
                raise
            xs.append(x)
            vs.append(v)
    if len(xs) < 2:
        raise ValueError("sampled CSV needs at least two data rows")
    return sampled(xs, vs, dimension=dimension)


def from_config(cfg):
    """Build a Potential from a config dict {dimension, form, parameters, ...}."""
    dim = int(cfg.get("dimension", 1))
    form = cfg["form"]
    par = cfg.get("parameters", {})
    if form == "zero":
        return zero(dim)
    if form == "box":
        return box(par["height"], par["half_width"], dim)
    if form == "gaussian":
        return gaussian(par["amplitude"], par["width"], dim)
    if form == "poschl_teller":
        return poschl_teller(par["c"], dim)
    if form == "sampled":
        pot = sampled_from_csv(par["path"], dim)
        return pot
    raise ValueError("unknown form %r" % (form,))


def _closed_form_quad(f, a, b, pieces):
    val, err = 0.0, 0.0
    cuts = sorted({a, b, *[p for p in pieces if a < p < b]})
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        v, e = integrate.quad(f, lo, hi, limit=200)
        val += v
        err += e
    return val, err


def weighted_l1_norm(V, gamma, truncation=None):
    """int |V(x)| (1+|x|)^gamma dx over the line, with an error estimate."""
    if V.dimension != 1:
        raise ValueError("weighted_l1_norm is a 1d norm")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if V.form == "zero":
        return NormEstimate(0.0, 0.0)
    if V.form == "sampled":
        grid, vals = V.params["grid"], V.params["values"]
        w = np.abs(vals) * (1.0 + np.abs(grid)) ** gamma
        full = float(np.trapezoid(w, grid))
        half = float(np.trapezoid(w[::2], grid[::2]))
        return NormEstimate(full, abs(full - half) + 1e-15)
    R = V.support_radius(1e-14)
    if truncation is not None:
        if V.form == "box" and truncation < R:
            raise ValueError("truncation below box support")
        R = min(R, float(truncation))
    f = lambda x: abs(float(V(x))) * (1.0 + abs(x)) ** gamma
    pieces = [-V.params["half_width"], V.params["half_width"], 0.0] \
        if V.form == "box" else [0.0]
    val, err = _closed_form_quad(f, -R, R, pieces)
    # tail beyond R for the exponentially decaying families
    tail = 0.0
    if V.form == "poschl_teller":
        c = abs(V.params["c"])
        tail = 8.0 * c * (1.0 + R) ** gamma * math.exp(-2.0 * R)
    elif V.form == "gaussian":
        a, w = abs(V.params["amplitude"]), V.params["width"]
        tail = 2.0 * a * w * (1.0 + R) ** gamma * math.exp(-((R / w) ** 2))
    return NormEstimate(val, err + tail)


def l1_norm(V):
    return weighted_l1_norm(V, 0.0).value


def kato_norm(V, sup_grid=None):
    """sup_x int |V(y)| / |x-y| dy for radial 3d potentials.

    The sphere average of 1/|x-y| is exact: with R = |x|, the inner integral
    equals (4pi/R) int_0^R |V| r^2 dr + 4pi int_R^inf |V| r dr, so no
    singularity survives.  The sup candidate R = 0 is always included.
    """
    if V.dimension != 3:
        raise ValueError("kato_norm is a 3d norm")
    if sup_grid is None:
        sup_grid = np.linspace(0.0, max(V.support_radius(1e-10), 1.0), 33)
    sup_grid = np.asarray(sup_grid, dtype=float)
    if sup_grid.size == 0:
        raise ValueError("sup_grid must be nonempty")
    radii = np.unique(np.concatenate([[0.0], np.abs(sup_grid)]))
    if V.form == "zero":
        return NormEstimate(0.0, 0.0)
    best, best_err = 0.0, 0.0
    for R in radii:
        inner, err = _kato_inner(V, R)
        if inner > best:
            best, best_err = inner, err
    return NormEstimate(best, best_err + 1e-15)


def _kato_inner(V, R):
    Rmax = V.support_radius(1e-14) + 1e-9
    if V.form == "sampled":
        grid = V.params["grid"]
        nodes = np.unique(np.concatenate([grid, 0.5 * (grid[:-1] + grid[1:]),
                                          [0.0, R, Rmax]]))
        nodes = nodes[(nodes >= 0.0) & (nodes <= max(Rmax, R))]
        absV = np.abs(V(nodes))
        msk = nodes <= R
        near = np.trapezoid((absV * nodes * nodes)[msk], nodes[msk]) if R > 0 else 0.0
        far = np.trapezoid((absV * nodes)[~msk | (nodes == R)],
                           nodes[~msk | (nodes == R)]) if np.any(nodes > R) else 0.0
        half = nodes[::2]
        est = abs(near - (np.trapezoid(np.where(half <= R, np.abs(V(half)) * half * half, 0.0), half)))
        err = est
    else:
        breaks = [V.params["half_width"]] if V.form == "box" else []
        if R > 0:
            near, e1 = _closed_form_quad(
                lambda s: abs(float(V(s))) * s * s, 0.0, min(R, Rmax), breaks)
        else:
            near, e1 = 0.0, 0.0
        if R < Rmax:
            far, e2 = _closed_form_quad(
                lambda s: abs(float(V(s))) * s, R, Rmax, breaks)
        else:
            far, e2 = 0.0, 0.0
        err = e1 + e2
    total = (near / R if R > 0 else 0.0) + far
    return 4.0 * np.pi * total, 4.0 * np.pi * err
