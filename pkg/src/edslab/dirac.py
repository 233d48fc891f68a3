"""Half-line Dirac system with off-diagonal potential.

The system is integrated in the form

    w' + Q w = i k sigma3 w,      Q = [[0, v], [conj(v), 0]],

with the Jost terminal data w = (e^{ikx}, 0) for x >= gamma.  This is the
convention in which the correspondence with the energy-dependent
Schrodinger problem takes its simplest form; see `transform`.  The Jost
function for the boundary parameter alpha is

    psi_alpha(k) = e^{-i alpha} w1(0, k) - e^{i alpha} w2(0, k),

entire in k, zero-free in the closed upper half-plane, and the scattering
matrix on the real axis is S_alpha = conj(psi_alpha) / psi_alpha.

The inverse direction goes through the kernel F of the scattering matrix
and a Gelfand-Levitan-Marchenko system solved independently at each x.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .numerics import DEFAULT_ODE_STEPS, Grid, GridFunction, solve_dense
from .potentials import _check_support
from .jost_schrodinger import _check_im_cap

UNITARITY_TOL = 1e-8


@dataclass(frozen=True)
class DiracPotential:
    """Complex v on [0, gamma] with support reaching gamma."""

    v: GridFunction

    def __post_init__(self):
        _check_support("Dirac potential", np.abs(self.v.values))

    @classmethod
    def from_samples(cls, grid: Grid, values) -> "DiracPotential":
        return cls(GridFunction(grid, np.asarray(values, dtype=complex)))

    @property
    def grid(self) -> Grid:
        return self.v.grid

    @property
    def gamma(self) -> float:
        return self.v.grid.gamma

    def rotated(self, delta: float) -> "DiracPotential":
        """e^{2i delta} v, the one-parameter family sharing the resonances."""
        return DiracPotential(self.v.scaled(np.exp(2j * delta)))


@dataclass(frozen=True)
class DiracBoundary:
    """Boundary parameter alpha, reduced to [0, pi)."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha) % np.pi)


@dataclass(frozen=True)
class ScatteringTable:
    """Samples of a unimodular scattering matrix on an increasing real k-grid."""

    k_samples: np.ndarray = field(repr=False)
    s_values: np.ndarray = field(repr=False)
    alpha: float

    def __post_init__(self):
        ks = np.asarray(self.k_samples, dtype=float)
        sv = np.asarray(self.s_values, dtype=complex)
        if ks.shape != sv.shape or ks.ndim != 1:
            raise ValueError("k and S sample arrays must be 1-d and equal length")
        if not np.all(np.diff(ks) > 0):
            raise ValueError("k samples must be strictly increasing")
        err = np.max(np.abs(np.abs(sv) - 1.0))
        if err > UNITARITY_TOL:
            raise ValueError(f"|S| deviates from 1 by {err:.3e} on the real axis")
        object.__setattr__(self, "k_samples", ks)
        object.__setattr__(self, "s_values", sv)


@dataclass(frozen=True)
class GlmKernel:
    """Kernel F of the scattering matrix, sampled on s_grid (supp F >= -gamma)."""

    s_grid: np.ndarray = field(repr=False)
    f_values: np.ndarray = field(repr=False)
    gamma: float

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        f = np.asarray(self.f_values, dtype=complex)
        if s.shape != f.shape or s.ndim != 1:
            raise ValueError("s grid and F values must be 1-d and equal length")
        # truncation ringing right at the support edge is expected (the
        # kernel may jump at -gamma); leakage past a guard band is not
        below = s < -self.gamma * 1.1 - 1e-9
        if np.any(below):
            peak = np.max(np.abs(f))
            leak = np.max(np.abs(f[below]), initial=0.0)
            if peak > 0 and leak > 5e-2 * peak:
                raise ValueError(
                    f"F leaks below -gamma: {leak:.3e} against peak {peak:.3e}"
                )
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "f_values", f)

    def __call__(self, s):
        re = np.interp(s, self.s_grid, self.f_values.real, left=0.0, right=0.0)
        im = np.interp(s, self.s_grid, self.f_values.imag, left=0.0, right=0.0)
        return re + 1j * im


def dirac_jost(pot: DiracPotential, k, steps: int = DEFAULT_ODE_STEPS):
    """Jost solution at the origin: (w1(0, k), w2(0, k)) by backward RK4
    from (e^{ik gamma}, 0).  Vectorized over k."""
    gamma = pot.gamma
    karr = np.atleast_1d(np.asarray(k, dtype=complex))
    _check_im_cap(karr, gamma)
    h = -gamma / steps
    xg = np.linspace(gamma, 0.0, steps + 1)
    xm = xg[:-1] + h / 2.0
    pts = pot.grid.points

    def interp(vals, where):
        return np.interp(where, pts, vals.real) + 1j * np.interp(where, pts, vals.imag)

    vg, vm = interp(pot.v.values, xg), interp(pot.v.values, xm)
    cg, cm = np.conj(vg), np.conj(vm)

    ik = 1j * karr
    w1 = np.exp(ik * gamma)
    w2 = np.zeros_like(w1)
    h2, h6 = h / 2.0, h / 6.0
    for j in range(steps):
        a1 = ik * w1 - vg[j] * w2
        b1 = -ik * w2 - cg[j] * w1
        u1, u2 = w1 + h2 * a1, w2 + h2 * b1
        a2 = ik * u1 - vm[j] * u2
        b2 = -ik * u2 - cm[j] * u1
        u1, u2 = w1 + h2 * a2, w2 + h2 * b2
        a3 = ik * u1 - vm[j] * u2
        b3 = -ik * u2 - cm[j] * u1
        u1, u2 = w1 + h * a3, w2 + h * b3
        a4 = ik * u1 - vg[j + 1] * u2
        b4 = -ik * u2 - cg[j + 1] * u1
        w1 = w1 + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        w2 = w2 + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
        bad = karr[~(np.isfinite(w1) & np.isfinite(w2))]
        raise RuntimeError(f"Dirac integration overflowed at k={bad[:3]}")
    if np.isscalar(k):
        return complex(w1[0]), complex(w2[0])
    shape = np.shape(k)
    return w1.reshape(shape), w2.reshape(shape)


def dirac_jost_function(pot: DiracPotential, bc: DiracBoundary, k,
                        steps: int = DEFAULT_ODE_STEPS):
    """psi_alpha(k) = e^{-i alpha} w1(0, k) - e^{i alpha} w2(0, k)."""
    w1, w2 = dirac_jost(pot, k, steps)
    ea = np.exp(1j * bc.alpha)
    return w1 / ea - ea * w2


def dirac_scattering(pot: DiracPotential, bc: DiracBoundary, k_grid,
                     steps: int = DEFAULT_ODE_STEPS) -> ScatteringTable:
    """S_alpha(k) = conj(psi_alpha(k)) / psi_alpha(k) on a real k-grid."""
    ks = np.asarray(k_grid, dtype=float)
    psi = dirac_jost_function(pot, bc, ks.astype(complex), steps)
    small = np.abs(psi) < 1e-13
    if np.any(small):
        raise RuntimeError(
            f"Jost function vanished on the real axis at k={ks[small][:3]}"
        )
    return ScatteringTable(ks, np.conj(psi) / psi, bc.alpha)


def conjugation_check(pot: DiracPotential, bc: DiracBoundary, k,
                      steps: int = DEFAULT_ODE_STEPS):
    """Both sides of conj(psi_alpha(-conj k, v)) = e^{2i alpha} psi_alpha(k, e^{4i alpha} conj v)."""
    karr = np.asarray(k, dtype=complex)
    lhs = np.conj(dirac_jost_function(pot, bc, -np.conj(karr), steps))
    vrot = DiracPotential(GridFunction(pot.grid, np.exp(4j * bc.alpha) * np.conj(pot.v.values)))
    rhs = np.exp(2j * bc.alpha) * dirac_jost_function(vrot, bc, karr, steps)
    return lhs, rhs


def extract_h(pot: DiracPotential, bc: DiracBoundary, s_grid, k_max: float,
              dk: float | None = None, tol: float = 1e-6,
              steps: int = DEFAULT_ODE_STEPS) -> np.ndarray:
    """Recover h in psi_alpha(k) = e^{-i alpha} + int_0^gamma h(s) e^{2iks} ds
    by the inverse Fourier integral

        h(s) = (1/pi) int_{-K}^{K} (psi_alpha(k) - e^{-i alpha}) e^{-2iks} dk.

    Raises when the integrand has not decayed below 10 * tol at +-K (the
    error message reports the measured tail level, which also estimates the
    truncation error of the returned samples).
    """
    s = np.asarray(s_grid, dtype=float)
    if dk is None:
        dk = np.pi / (32.0 * max(pot.gamma, np.max(np.abs(s), initial=pot.gamma)))
    ks = np.arange(-k_max, k_max + dk / 2.0, dk)
    psi = dirac_jost_function(pot, bc, ks.astype(complex), steps)
    rem = psi - np.exp(-1j * bc.alpha)
    edge = max(abs(rem[0]), abs(rem[-1]))
    if edge > 10.0 * tol:
        raise ValueError(
            f"integrand tail {edge:.3e} at k=+-{k_max} exceeds 10*tol={10 * tol:.1e}; "
            "increase k_max (the tail level bounds the truncation error)"
        )
    kernel = np.exp(-2j * np.outer(s, ks))
    return np.trapezoid(kernel * rem[None, :], ks, axis=1) / np.pi


def rebuild_jost_from_h(s_grid, h_values, alpha: float, k):
    """Forward quadrature e^{-i alpha} + int h(s) e^{2iks} ds for cross-checks."""
    karr = np.atleast_1d(np.asarray(k, dtype=complex))
    kernel = np.exp(2j * np.outer(karr, np.asarray(s_grid, dtype=float)))
    out = np.exp(-1j * alpha) + np.trapezoid(kernel * np.asarray(h_values)[None, :],
                                             np.asarray(s_grid, dtype=float), axis=1)
    if np.isscalar(k):
        return complex(out[0])
    return out.reshape(np.shape(k))


def scattering_to_F(table: ScatteringTable, s_grid, gamma: float) -> GlmKernel:
    """Kernel of S(k) = e^{2i beta} + int_{-gamma}^inf F(s) e^{2iks} ds.

    The limit phase e^{2i beta} is measured by averaging S over the outer
    10% of the grid on each side; F then comes from the same inverse
    Fourier integral as `extract_h`.
    """
    ks = table.k_samples
    sv = table.s_values
    m = max(2, int(0.05 * ks.size))
    b = np.mean(np.concatenate([sv[:m], sv[-m:]]))
    if abs(b) < 0.5:
        raise ValueError(
            f"limit phase did not converge (mean modulus {abs(b):.3f}); "
            "widen the k-grid"
        )
    b /= abs(b)
    s = np.asarray(s_grid, dtype=float)
    kernel = np.exp(-2j * np.outer(s, ks))
    f = np.trapezoid(kernel * (sv - b)[None, :], ks, axis=1) / np.pi
    f = _repair_edge_ringing(s, f, float(ks[-1]))
    return GlmKernel(s, f, gamma)


def _repair_edge_ringing(s, f, k_top):
    """Fix the samples just left of s = 0.

    The kernel F generically jumps at s = 0 (the Jost remainder h has a
    support edge there), so the truncated Fourier inversion rings over a
    width ~ pi/(2 k_top) and lands on the jump midpoint at s = 0 itself,
    while the reconstruction needs the limit from the left.  The few
    affected samples are replaced by a quadratic extrapolation from the
    clean region.
    """
    width = 3.0 * np.pi / (2.0 * k_top)
    fix = (s > -width) & (s <= 0.0)
    base = (s <= -width) & (s >= -5.0 * width)
    if not np.any(fix) or np.count_nonzero(base) < 4:
        return f
    f = f.copy()
    co_re = np.polyfit(s[base], f[base].real, 2)
    co_im = np.polyfit(s[base], f[base].imag, 2)
    f[fix] = np.polyval(co_re, s[fix]) + 1j * np.polyval(co_im, s[fix])
    return f


def glm_reconstruct(kernel: GlmKernel, grid: Grid) -> DiracPotential:
    """Recover the potential from the scattering kernel.

    At each grid point x the matrix Gelfand-Levitan-Marchenko system

        Gamma(x, s) + Omega(x + s) + int_0^inf Gamma(x, t) Omega(x + t + s) dt = 0,
        Omega(y) = [[0, F(-y)], [conj(F(-y)), 0]],

    truncates to [0, gamma - x] (Omega vanishes beyond gamma) and is solved
    by trapezoid collocation; eliminating the diagonal row leaves

        (I - K2 K1) Gamma_12(x, .) = -F(-(x + s)).

    The sign convention of the Dirac system used here makes the potential
    v(x) = +Gamma_12(x, 0).
    """
    pts = grid.points
    h = grid.spacing
    n = grid.n
    vals = np.zeros(n, dtype=complex)
    for i in range(n):
        x = pts[i]
        m = n - i
        t = h * np.arange(m)
        rhs = -kernel(-(x + t))
        if m == 1:
            vals[i] = rhs[0]
            continue
        w = np.full(m, h)
        w[0] = w[-1] = h / 2.0
        args = -(x + t[None, :] + t[:, None])  # -(x + t_j + s_i)
        f_mat = kernel(args)
        k1 = np.conj(f_mat) * w[None, :]
        k2 = f_mat * w[None, :]
        a = np.eye(m, dtype=complex) - k2 @ k1
        try:
            g12 = solve_dense(a, rhs)
        except ValueError as exc:
            raise ValueError(
                f"GLM system singular at x={x:.4g}: kernel too large or inconsistent"
            ) from exc
        vals[i] = g12[0]
    return DiracPotential(GridFunction(grid, vals))


# --- scattering CSV ----------------------------------------------------------


def save_scattering(table: ScatteringTable, path: str, gamma: float | None = None):
    """Rows `k, Re S, Im S`; the comment header carries alpha and gamma."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            gamma_s = repr(float(gamma)) if gamma is not None else "None"
            fh.write(f"# alpha={float(table.alpha)!r} gamma={gamma_s}\n")
            fh.write("k,re_s,im_s\n")
            for k, s in zip(table.k_samples, table.s_values):
                fh.write(f"{float(k)!r},{float(s.real)!r},{float(s.imag)!r}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_scattering(path: str):
    """Returns (table, gamma); gamma is None when the header lacks it."""
    alpha = 0.0
    gamma = None
    ks, ss = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tokens in line[1:].split():
                    if "=" in tokens:
                        key, val = tokens.split("=", 1)
                        if key == "alpha":
                            alpha = float(val)
                        elif key == "gamma" and val != "None":
                            gamma = float(val)
                continue
            if line.startswith("k,"):
                continue
            k, re_s, im_s = line.split(",")
            ks.append(float(k))
            ss.append(float(re_s) + 1j * float(im_s))
    return ScatteringTable(np.asarray(ks), np.asarray(ss), alpha), gamma
