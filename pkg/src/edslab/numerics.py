"""Shared numeric kernel: uniform grids, trapezoid quadrature, dense linear
solves and fixed-step RK4 integration of complex linear ODE systems.

Everything here is deterministic and pure; fixed-step RK4 (rather than an
adaptive solver) keeps trajectories reproducible across runs and platforms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

DEFAULT_ODE_STEPS = 4096

_PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_j = j*gamma/(n-1) on [0, gamma]."""

    gamma: float
    n: int

    def __post_init__(self):
        if not (self.gamma > 0.0 and np.isfinite(self.gamma)):
            raise ValueError(f"grid length must be positive, got {self.gamma}")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n}")

    @property
    def spacing(self) -> float:
        return self.gamma / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.gamma, self.n)


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on a Grid, linearly interpolated between nodes.

    Evaluation outside [0, gamma] returns 0: all functions in this package
    have compact support in [0, gamma].
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} samples, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("samples must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, np.asarray(f(grid.points), dtype=complex))

    @classmethod
    def zero(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n, dtype=complex))

    def __call__(self, x):
        pts = self.grid.points
        out = np.interp(x, pts, self.values, left=0.0, right=0.0)
        if np.isscalar(x):
            return complex(out)
        return out

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, np.conj(self.values))

    def scaled(self, c: complex) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    @property
    def is_real(self) -> bool:
        return bool(np.max(np.abs(self.values.imag), initial=0.0) < 1e-12)


def integrate(f: GridFunction, a: float, b: float) -> complex:
    """Trapezoid integral of f over [a, b], exact for the piecewise-linear
    interpolant (the endpoints a, b need not be grid nodes)."""
    gamma = f.grid.gamma
    if not (0.0 <= a <= b <= gamma):
        raise ValueError(f"need 0 <= a <= b <= gamma, got a={a}, b={b}")
    if a == b:
        return 0.0 + 0.0j
    pts = f.grid.points
    inner = pts[(pts > a) & (pts < b)]
    xs = np.concatenate([[a], inner, [b]])
    return complex(np.trapezoid(f(xs), xs))


def solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by partial-pivot LU elimination.

    Raises ValueError when a pivot falls below 1e-14 * ||A||
    (numerically singular system).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"size mismatch: A is {a.shape}, b has {b.shape[0]} rows")
    scale = np.linalg.norm(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the pivot check below handles singularity
        lu, piv = lu_factor(a)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or np.min(pivots) < _PIVOT_RTOL * scale:
        raise ValueError("matrix is numerically singular")
    return lu_solve((lu, piv), b)


def solve_linear_ode(field, x_start: float, x_end: float, y0, steps: int) -> np.ndarray:
    """Classical fixed-step RK4 for y' = A(x) y.

    `field(x)` must return the coefficient matrix A(x); integration may run
    backward (x_start > x_end).  Returns the full trajectory, shape
    (steps + 1, dim); the final state is the last row.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    y = np.asarray(y0, dtype=complex).copy()
    h = (x_end - x_start) / steps
    traj = np.empty((steps + 1,) + y.shape, dtype=complex)
    traj[0] = y
    x = x_start
    for j in range(steps):
        a0 = np.asarray(field(x), dtype=complex)
        am = np.asarray(field(x + h / 2.0), dtype=complex)
        a1 = np.asarray(field(x + h), dtype=complex)
        if not (np.all(np.isfinite(a0)) and np.all(np.isfinite(am)) and np.all(np.isfinite(a1))):
            raise ValueError(f"non-finite coefficient field near x={x}")
        k1 = a0 @ y
        k2 = am @ (y + h / 2.0 * k1)
        k3 = am @ (y + h / 2.0 * k2)
        k4 = a1 @ (y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[j + 1] = y
        x = x_start + (j + 1) * h
    return traj


def reverse_cumtrapz(w: np.ndarray, h: float) -> np.ndarray:
    """Tail integrals J[j] = int_{x_j}^{x_last} w dt by cumulative trapezoid."""
    w = np.asarray(w)
    cells = (w[1:] + w[:-1]) * (h / 2.0)
    out = np.empty(w.shape, dtype=cells.dtype)
    out[-1] = 0.0
    out[:-1] = cells[::-1].cumsum()[::-1]
    return out
