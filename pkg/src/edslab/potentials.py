"""Potential classes for the half-line problem.

Two families are supported:

* class P: complex (p, q) with p absolutely continuous, used for the
  eigenvalue/resonance bounds of the Dirichlet problem;
* class Q: real (p, u) where the actual potential is the Miura image
  q = u' + u**2.  q is never materialized (it may be a distribution);
  all dynamics for this class go through the quasi-derivative y' - u*y.

Both classes require the support of the coefficient pair to reach gamma.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .numerics import Grid, GridFunction, reverse_cumtrapz

SUPPORT_RTOL = 1e-12


def _check_support(label: str, magnitude: np.ndarray):
    peak = float(np.max(magnitude, initial=0.0))
    if peak == 0.0:
        return  # identically-zero potentials are allowed for trivial cases
    if magnitude[-1] <= SUPPORT_RTOL * peak:
        raise ValueError(
            f"{label}: support must extend to gamma "
            f"(last sample {magnitude[-1]:.3e} vs peak {peak:.3e})"
        )


def sampled_derivative(f: GridFunction) -> GridFunction:
    """Central-difference derivative at interior nodes, one-sided at the ends."""
    d = np.gradient(f.values, f.grid.spacing)
    return GridFunction(f.grid, d)


@dataclass(frozen=True)
class PotentialP:
    """Class-P pair (p, q) with a companion sampled derivative of p."""

    p: GridFunction
    q: GridFunction
    p_prime: GridFunction

    def __post_init__(self):
        if self.p.grid != self.q.grid or self.p.grid != self.p_prime.grid:
            raise ValueError("p, q and p' must share one grid")
        _check_support("class P", np.abs(self.p.values) + np.abs(self.q.values))

    @classmethod
    def from_samples(cls, grid: Grid, p_values, q_values, p_prime_values=None) -> "PotentialP":
        p = GridFunction(grid, np.asarray(p_values, dtype=complex))
        q = GridFunction(grid, np.asarray(q_values, dtype=complex))
        pp = (
            GridFunction(grid, np.asarray(p_prime_values, dtype=complex))
            if p_prime_values is not None
            else sampled_derivative(p)
        )
        return cls(p, q, pp)

    @property
    def grid(self) -> Grid:
        return self.p.grid

    @property
    def gamma(self) -> float:
        return self.p.grid.gamma


@dataclass(frozen=True)
class PotentialQ:
    """Class-Q pair (p, u), both real-valued; q = u' + u**2 stays implicit."""

    p: GridFunction
    u: GridFunction

    def __post_init__(self):
        if self.p.grid != self.u.grid:
            raise ValueError("p and u must share one grid")
        if not (self.p.is_real and self.u.is_real):
            raise ValueError("class Q requires real-valued p and u")
        _check_support("class Q", np.abs(self.p.values) + np.abs(self.u.values))

    @classmethod
    def from_samples(cls, grid: Grid, p_values, u_values) -> "PotentialQ":
        return cls(
            GridFunction(grid, np.asarray(p_values, dtype=complex)),
            GridFunction(grid, np.asarray(u_values, dtype=complex)),
        )

    @property
    def grid(self) -> Grid:
        return self.p.grid

    @property
    def gamma(self) -> float:
        return self.p.grid.gamma


@dataclass(frozen=True)
class NormSet:
    """L1, L2 and weighted norm ||f||_w = int x |f(x)| dx of one function."""

    l1: float
    l2: float
    weighted: float


@dataclass(frozen=True)
class ConstantSet:
    """Derived constants of a class-P pair.

    c1 = ||q||_1 + |p(gamma)| + ||p'||_1 + ||p||_2^2
    c2 = max(||q||_w + 2||p||_w, ||q||_1 + 2||p||_1)
    c3 = 3*gamma*c1*exp(2||p||_1) + 3
    p_plus / p_minus are the extrema of Re p on [0, gamma].
    """

    c1: float
    c2: float
    c3: float
    p_plus: float
    p_minus: float


def norms(f: GridFunction) -> NormSet:
    """All three norms by trapezoid quadrature on the sample grid."""
    xs = f.grid.points
    mag = np.abs(f.values)
    return NormSet(
        l1=float(np.trapezoid(mag, xs)),
        l2=float(np.sqrt(np.trapezoid(mag * mag, xs))),
        weighted=float(np.trapezoid(xs * mag, xs)),
    )


def constants_p(pot: PotentialP) -> ConstantSet:
    np_ = norms(pot.p)
    nq = norms(pot.q)
    npp = norms(pot.p_prime)
    c1 = nq.l1 + abs(pot.p.values[-1]) + npp.l1 + np_.l2**2
    c2 = max(nq.weighted + 2.0 * np_.weighted, nq.l1 + 2.0 * np_.l1)
    c3 = 3.0 * pot.gamma * c1 * np.exp(2.0 * np_.l1) + 3.0
    re_p = pot.p.values.real
    return ConstantSet(
        c1=float(c1),
        c2=float(c2),
        c3=float(c3),
        p_plus=float(np.max(re_p)),
        p_minus=float(np.min(re_p)),
    )


def phase(p: GridFunction) -> GridFunction:
    """phi(x) = int_x^gamma p(t) dt; compact support makes the upper limit
    equivalent to +infinity.  phi(gamma) = 0 exactly."""
    vals = reverse_cumtrapz(p.values, p.grid.spacing)
    return GridFunction(p.grid, vals)


def miura_forward(u: GridFunction) -> GridFunction:
    """q = u' + u**2 with a finite-difference derivative.

    Only meaningful for smooth sample data; class-Q dynamics never call this
    (they use the quasi-derivative formulation instead).
    """
    du = np.gradient(u.values, u.grid.spacing)
    return GridFunction(u.grid, du + u.values**2)


# --- JSON potential files ---------------------------------------------------
#
# class P:  {"gamma", "n", "class": "P", "p_re", "p_im", "q_re", "q_im"}
# class Q:  {"gamma", "n", "class": "Q", "p", "u"}          (real arrays)
# class X:  {"gamma", "n", "class": "X", "v_re", "v_im"}    (Dirac potential)


def potential_to_dict(pot) -> dict:
    from .dirac import DiracPotential  # local import to avoid a cycle

    grid = pot.grid
    doc = {"gamma": grid.gamma, "n": grid.n}
    if isinstance(pot, PotentialP):
        doc["class"] = "P"
        doc["p_re"] = pot.p.values.real.tolist()
        doc["p_im"] = pot.p.values.imag.tolist()
        doc["q_re"] = pot.q.values.real.tolist()
        doc["q_im"] = pot.q.values.imag.tolist()
    elif isinstance(pot, PotentialQ):
        doc["class"] = "Q"
        doc["p"] = pot.p.values.real.tolist()
        doc["u"] = pot.u.values.real.tolist()
    elif isinstance(pot, DiracPotential):
        doc["class"] = "X"
        doc["v_re"] = pot.v.values.real.tolist()
        doc["v_im"] = pot.v.values.imag.tolist()
    else:
        raise TypeError(f"unsupported potential type {type(pot).__name__}")
    return doc


def potential_from_dict(doc: dict):
    from .dirac import DiracPotential

    grid = Grid(float(doc["gamma"]), int(doc["n"]))
    cls = doc.get("class")
    if cls == "P":
        p = np.asarray(doc["p_re"], dtype=float) + 1j * np.asarray(doc["p_im"], dtype=float)
        q = np.asarray(doc["q_re"], dtype=float) + 1j * np.asarray(doc["q_im"], dtype=float)
        return PotentialP.from_samples(grid, p, q)
    if cls == "Q":
        return PotentialQ.from_samples(grid, np.asarray(doc["p"], dtype=float),
                                       np.asarray(doc["u"], dtype=float))
    if cls == "X":
        v = np.asarray(doc["v_re"], dtype=float) + 1j * np.asarray(doc["v_im"], dtype=float)
        return DiracPotential(GridFunction(grid, v))
    raise ValueError(f"unknown potential class {cls!r}")


def write_json_atomic(doc: dict, path: str):
    """Write to a temp file then rename, so failures leave no partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_potential(pot, path: str):
    write_json_atomic(potential_to_dict(pot), path)


def load_potential(path: str):
    with open(path) as fh:
        return potential_from_dict(json.load(fh))
