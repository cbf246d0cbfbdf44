"""Shared container for propagator kernel values on a (t, x, y) grid."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelGrid:
    t_grid: np.ndarray
    x_grid: np.ndarray
    y_grid: np.ndarray
    values: np.ndarray  # complex, shape (nt, nx, ny)
    source: str

    def __post_init__(self):
        expected = (len(self.t_grid), len(self.x_grid), len(self.y_grid))
        if self.values.shape != expected:
            raise ValueError("kernel values shape %s does not match grids %s"
                             % (self.values.shape, expected))

    def sup_abs(self, ti=None):
        if ti is None:
            return float(np.abs(self.values).max())
        return float(np.abs(self.values[ti]).max())

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,x,y,re_K,im_K,source\n")
            for i, t in enumerate(self.t_grid):
                for j, x in enumerate(self.x_grid):
                    for k, y in enumerate(self.y_grid):
                        v = self.values[i, j, k]
                        fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%s\n"
                                 % (t, x, y, v.real, v.imag, self.source))
