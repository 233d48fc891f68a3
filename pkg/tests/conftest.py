"""Shared fixtures: reference potentials and closed-form Jost functions."""

import numpy as np
import pytest

from edslab import (DiracPotential, Grid, GridFunction, PotentialP, PotentialQ)

GAMMA = 1.0


def grid(n, gamma=GAMMA):
    return Grid(gamma, n)


def square_well(q0, n=1025, gamma=GAMMA):
    g = Grid(gamma, n)
    return PotentialP.from_samples(g, np.zeros(n), np.full(n, q0, dtype=complex))


def psi_well_exact(k, q0, gamma=GAMMA):
    """Dirichlet Jost function of the constant well, e^{ik g}(cos wg - (ik/w) sin wg),
    w = sqrt(k^2 - q0); even in w, so the branch of the root is irrelevant."""
    k = np.asarray(k, dtype=complex)
    om = np.sqrt(k * k - q0 + 0j)
    small = np.abs(om) < 1e-8
    om_safe = np.where(small, 1.0, om)
    cos_t = np.where(small, 1.0 - om**2 * gamma**2 / 2.0, np.cos(om_safe * gamma))
    sinc_t = np.where(small, gamma * (1.0 - om**2 * gamma**2 / 6.0),
                      np.sin(om_safe * gamma) / om_safe)
    return np.exp(1j * k * gamma) * (cos_t - 1j * k * sinc_t)


def psi_dirac_const(k, c, alpha=0.0, gamma=GAMMA):
    """Jost function of the constant Dirac potential v = c (real), via the
    2x2 matrix exponential: M = [[ik, -c], [-c, -ik]], M^2 = (c^2 - k^2) I."""
    k = np.asarray(k, dtype=complex)
    mu = np.sqrt(c * c - k * k + 0j)
    small = np.abs(mu) < 1e-8
    mu_safe = np.where(small, 1.0, mu)
    ch = np.where(small, 1.0 + mu**2 * gamma**2 / 2.0, np.cosh(mu_safe * gamma))
    shm = np.where(small, gamma * (1.0 + mu**2 * gamma**2 / 6.0),
                   np.sinh(mu_safe * gamma) / mu_safe)
    w1 = ch - 1j * k * shm
    w2 = c * shm
    return np.exp(1j * k * gamma) * (np.exp(-1j * alpha) * w1 - np.exp(1j * alpha) * w2)


def trig_samples(xs, coeffs, freqs, phases):
    out = np.zeros_like(xs)
    for a, w, ph in zip(coeffs, freqs, phases):
        out = out + a * np.cos(w * xs + ph)
    return out


def random_potential_p(seed, n=4097, gamma=GAMMA, scale=0.6, complex_part=0.3):
    """Smooth random class-P pair with ||p||_1, ||q||_1 <= about 2*scale and
    support reaching gamma (cosine profiles do not vanish at the endpoint)."""
    rng = np.random.default_rng(seed)
    g = Grid(gamma, n)
    xs = g.points

    def component():
        re = trig_samples(xs, rng.uniform(-1, 1, 3), rng.uniform(0.5, 4.0, 3),
                          rng.uniform(0, np.pi, 3))
        im = trig_samples(xs, rng.uniform(-1, 1, 2), rng.uniform(0.5, 4.0, 2),
                          rng.uniform(0, np.pi, 2))
        z = re + 1j * complex_part * im
        return scale * z / max(1.0, np.max(np.abs(z)))

    p, q = component(), component()
    if abs(p[-1]) + abs(q[-1]) < 1e-3:
        q = q + 0.05 * scale
    return PotentialP.from_samples(g, p, q)


def random_potential_q(seed, n=4097, gamma=GAMMA, scale=0.5):
    """Smooth random class-Q pair (real p, u), support reaching gamma."""
    rng = np.random.default_rng(seed)
    g = Grid(gamma, n)
    xs = g.points

    def component():
        z = trig_samples(xs, rng.uniform(-1, 1, 3), rng.uniform(0.5, 4.0, 3),
                         rng.uniform(0, np.pi, 3))
        return scale * z / max(1.0, np.max(np.abs(z)))

    p, u = component(), component()
    if abs(p[-1]) + abs(u[-1]) < 1e-3:
        u = u + 0.05 * scale
    return PotentialQ.from_samples(g, p, u)


def random_dirac(seed, n=2049, gamma=GAMMA, scale=0.5):
    rng = np.random.default_rng(seed)
    g = Grid(gamma, n)
    xs = g.points
    re = trig_samples(xs, rng.uniform(-1, 1, 3), rng.uniform(0.5, 4.0, 3),
                      rng.uniform(0, np.pi, 3))
    im = trig_samples(xs, rng.uniform(-1, 1, 2), rng.uniform(0.5, 4.0, 2),
                      rng.uniform(0, np.pi, 2))
    z = re + 1j * im
    z = scale * z / max(1.0, np.max(np.abs(z)))
    if abs(z[-1]) < 1e-3:
        z = z + 0.05 * scale
    return DiracPotential(GridFunction(g, z))


def smooth_bump_dirac(amp, n=201, gamma=GAMMA, twist=1.2, endpoint=1e-8):
    """Bump vanishing to third order at both ends (plus a tiny endpoint value
    to honor the support convention); its scattering kernel decays fast in k,
    which keeps Fourier truncation out of the inverse-problem tests."""
    g = Grid(gamma, n)
    xs = g.points
    bump = (4.0 * xs * (gamma - xs) / gamma**2) ** 3
    v = amp * bump * np.exp(1j * twist * xs) + endpoint * amp
    return DiracPotential(GridFunction(g, v))


def l2_norm(values, xs):
    return float(np.sqrt(np.trapezoid(np.abs(values) ** 2, xs)))


@pytest.fixture
def well_deep():
    return square_well(-25.0)


@pytest.fixture
def well_shallow():
    return square_well(1.0)
