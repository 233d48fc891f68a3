"""Bijection between class-Q energy-dependent Schrodinger data and Dirac
potentials.

Forward direction:  (p, u) -> v = (-u + i p) e^{-2i phi},  phi(x) = int_x^gamma p.

Inverse direction: solve the phase initial value problem

    phi' = -Im v cos 2phi - Re v sin 2phi,   phi(gamma) = 0,

then p = Im v cos 2phi + Re v sin 2phi and u = -Re v cos 2phi + Im v sin 2phi.

The boundary parameter alpha of the Schrodinger problem maps to the Dirac
parameter delta through phi(0) + alpha + delta = pi/2 (mod pi), with a sign
flag beta in {0, pi} fixed by the same congruence mod 2pi.  The class-Q
Jost function then factorizes as psi_alpha(k) = i e^{i beta} k psi_delta(k, v),
which is how this module evaluates it for every k (including k = 0, where
the explicit k factor produces a structural zero that is neither an
eigenvalue nor a resonance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_ODE_STEPS, GridFunction
from .potentials import PotentialQ, phase
from .dirac import DiracBoundary, DiracPotential, ScatteringTable, dirac_jost

TWO_PI = 2.0 * math.pi


def mod_pi(x: float) -> float:
    """Canonical representative in [0, pi); the single reduction helper used
    for every boundary-parameter computation (avoids +-pi drift)."""
    return float(x) % math.pi


def mod_2pi(x: float) -> float:
    return float(x) % TWO_PI


@dataclass(frozen=True)
class TransformPair:
    """A class-Q pair with its Dirac image and the connecting phase."""

    pq: PotentialQ
    v: DiracPotential
    phi: GridFunction

    def __post_init__(self):
        expected = (-self.pq.u.values + 1j * self.pq.p.values) * np.exp(-2j * self.phi.values)
        err = np.max(np.abs(expected - self.v.v.values))
        if err > 1e-10:
            raise ValueError(f"transform pair inconsistent, nodewise error {err:.3e}")
        if abs(self.phi.values[-1]) > 1e-14:
            raise ValueError("phase must vanish at gamma")

    @property
    def phi0(self) -> float:
        return float(self.phi.values[0].real)


@dataclass(frozen=True)
class BoundaryTriple:
    """(alpha, delta, beta) solving phi0 + alpha + delta = pi/2 mod pi and
    the same congruence mod 2pi with the extra beta in {0, pi}."""

    alpha: float
    delta: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.alpha < math.pi and 0.0 <= self.delta < math.pi):
            raise ValueError("alpha and delta must lie in [0, pi)")
        if self.beta not in (0.0, math.pi):
            raise ValueError("beta must be 0 or pi")


def t_forward(pq: PotentialQ) -> TransformPair:
    """v = (-u + i p) e^{-2i phi}; support is preserved exactly nodewise."""
    ph = phase(pq.p)
    phi = GridFunction(pq.grid, ph.values.real)
    v = (-pq.u.values + 1j * pq.p.values) * np.exp(-2j * phi.values)
    return TransformPair(pq, DiracPotential(GridFunction(pq.grid, v)), phi)


def _phase_ode_backward(v_values: np.ndarray, h: float, terminal: float) -> np.ndarray:
    """RK4 for theta' = -Im v cos 2theta - Re v sin 2theta, integrated
    backward from the last node with one step per grid cell.  The field is
    globally Lipschitz in theta for bounded v, so the IVP is unconditionally
    well posed."""
    re = v_values.real
    im = v_values.imag
    re_mid = 0.5 * (re[1:] + re[:-1])
    im_mid = 0.5 * (im[1:] + im[:-1])
    n = v_values.size
    out = np.empty(n, dtype=float)
    out[-1] = terminal
    th = terminal
    step = -h
    cos, sin = math.cos, math.sin

    def f(a, b, t):
        return -b * cos(2.0 * t) - a * sin(2.0 * t)

    for j in range(n - 1, 0, -1):
        k1 = f(re[j], im[j], th)
        k2 = f(re_mid[j - 1], im_mid[j - 1], th + 0.5 * step * k1)
        k3 = f(re_mid[j - 1], im_mid[j - 1], th + 0.5 * step * k2)
        k4 = f(re[j - 1], im[j - 1], th + step * k3)
        th = th + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[j - 1] = th
    return out


def t_inverse(v: DiracPotential) -> TransformPair:
    """Recover (p, u) from v through the phase initial value problem."""
    phi_vals = _phase_ode_backward(v.v.values, v.grid.spacing, 0.0)
    re, im = v.v.values.real, v.v.values.imag
    c, s = np.cos(2.0 * phi_vals), np.sin(2.0 * phi_vals)
    p = im * c + re * s
    u = -re * c + im * s
    pq = PotentialQ.from_samples(v.grid, p, u)
    return TransformPair(pq, v, GridFunction(v.grid, phi_vals))


def boundary_map(alpha: float, phi0: float) -> BoundaryTriple:
    """Unique (delta, beta) for the given alpha and phase value phi(0)."""
    alpha = mod_pi(alpha)
    delta = mod_pi(math.pi / 2.0 - alpha - phi0)
    residue = mod_2pi(phi0 + alpha + delta - math.pi / 2.0)
    # residue is 0 or pi up to roundoff
    beta = 0.0 if (residue < math.pi / 2.0 or residue > 1.5 * math.pi) else math.pi
    check = mod_2pi(phi0 + alpha + delta - math.pi / 2.0 - beta)
    check = min(check, TWO_PI - check)
    if check > 1e-9:
        raise AssertionError(f"boundary congruence failed by {check:.3e}")
    return BoundaryTriple(alpha, delta, beta)


def jost_q(pq: PotentialQ, alpha: float, k, steps: int = DEFAULT_ODE_STEPS,
           route: str = "factor"):
    """Class-Q Jost function psi_alpha(k).

    route="factor" (default, defined for all k): transform to the Dirac
    side and use psi_alpha = i e^{i beta} k psi_delta(k, v).

    route="solution" (k != 0 only): reconstruct y and y'-u*y at the origin
    from the Dirac Jost solution and combine them directly; kept as a
    cross-check of the boundary-parameter map.
    """
    pair = t_forward(pq)
    karr = np.atleast_1d(np.asarray(k, dtype=complex))
    if route == "factor":
        triple = boundary_map(alpha, pair.phi0)
        psi_d = dirac_jost_function_from_pair(pair, triple.delta, karr, steps)
        out = 1j * np.exp(1j * triple.beta) * karr * psi_d
    elif route == "solution":
        if np.any(karr == 0):
            raise ValueError("the solution route needs k != 0 (explicit 1/k factor)")
        w1, w2 = dirac_jost(pair.v, karr, steps)
        e = np.exp(1j * pair.phi0)
        y = e * w1 + w2 / e
        y_quasi_over_k = 1j * e * w1 - 1j * w2 / e
        out = karr * (y_quasi_over_k * math.sin(mod_pi(alpha)) + y * math.cos(mod_pi(alpha)))
    else:
        raise ValueError(f"unknown route {route!r}")
    if np.isscalar(k):
        return complex(out[0])
    return out.reshape(np.shape(k))


def dirac_jost_function_from_pair(pair: TransformPair, delta: float, k,
                                  steps: int = DEFAULT_ODE_STEPS):
    w1, w2 = dirac_jost(pair.v, k, steps)
    ed = np.exp(1j * delta)
    return w1 / ed - ed * w2


def jost_q_direct(pq: PotentialQ, alpha: float, k, steps: int = DEFAULT_ODE_STEPS):
    """Independent route: backward RK4 of the quasi-derivative system

        y' = y^ + u y,    (y^)' = -u y^ + (2 k p - k^2) y,

    from (e^{ik gamma}, ik e^{ik gamma}), then
    psi_alpha = y^(0) sin(alpha) + k y(0) cos(alpha).  Never touches the
    Dirac side; used to validate the transform chain.
    """
    gamma = pq.gamma
    karr = np.atleast_1d(np.asarray(k, dtype=complex))
    h = -gamma / steps
    xg = np.linspace(gamma, 0.0, steps + 1)
    xm = xg[:-1] + h / 2.0
    pts = pq.grid.points
    ug = np.interp(xg, pts, pq.u.values.real)
    um = np.interp(xm, pts, pq.u.values.real)
    pg = np.interp(xg, pts, pq.p.values.real)
    pm = np.interp(xm, pts, pq.p.values.real)

    y = np.exp(1j * karr * gamma)
    z = 1j * karr * y
    ksq = karr * karr
    h2, h6 = h / 2.0, h / 6.0
    for j in range(steps):
        c0, cm, c1 = (2.0 * karr * pg[j] - ksq, 2.0 * karr * pm[j] - ksq,
                      2.0 * karr * pg[j + 1] - ksq)
        a1 = z + ug[j] * y
        b1 = -ug[j] * z + c0 * y
        ya, za = y + h2 * a1, z + h2 * b1
        a2 = za + um[j] * ya
        b2 = -um[j] * za + cm * ya
        ya, za = y + h2 * a2, z + h2 * b2
        a3 = za + um[j] * ya
        b3 = -um[j] * za + cm * ya
        ya, za = y + h * a3, z + h * b3
        a4 = za + ug[j + 1] * ya
        b4 = -ug[j + 1] * za + c1 * ya
        y = y + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        z = z + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    out = z * math.sin(mod_pi(alpha)) + karr * y * math.cos(mod_pi(alpha))
    if np.isscalar(k):
        return complex(out[0])
    return out.reshape(np.shape(k))


def scattering_q(pq: PotentialQ, alpha: float, k_grid,
                 steps: int = DEFAULT_ODE_STEPS) -> ScatteringTable:
    """S_alpha(k) = conj(psi_alpha(k)) / psi_alpha(k) on a real k-grid
    (k = 0 is excluded: psi_alpha(0) = 0 structurally)."""
    ks = np.asarray(k_grid, dtype=float)
    if np.any(ks == 0.0):
        raise ValueError("k grid must avoid 0 for class-Q scattering")
    psi = jost_q(pq, alpha, ks.astype(complex), steps)
    return ScatteringTable(ks, np.conj(psi) / psi, mod_pi(alpha))
