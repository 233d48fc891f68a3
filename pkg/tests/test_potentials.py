import json

import numpy as np
import pytest

from edslab import (DiracPotential, Grid, GridFunction, PotentialP, PotentialQ,
                    constants_p, load_potential, miura_forward, norms, phase,
                    save_potential)


def gf(values, gamma=1.0):
    values = np.asarray(values, dtype=complex)
    return GridFunction(Grid(gamma, values.size), values)


def test_norms_constant_zero_linear():
    g = Grid(1.0, 101)
    one = GridFunction.from_callable(g, lambda x: np.ones_like(x))
    n = norms(one)
    assert (n.l1, n.l2, n.weighted) == pytest.approx((1.0, 1.0, 0.5))

    zero = GridFunction.zero(g)
    n = norms(zero)
    assert (n.l1, n.l2, n.weighted) == (0.0, 0.0, 0.0)

    lin = GridFunction.from_callable(g, lambda x: x)
    n = norms(lin)
    assert n.l1 == pytest.approx(0.5, abs=1e-4)
    assert n.l2 == pytest.approx(1.0 / np.sqrt(3.0), abs=1e-4)
    assert n.weighted == pytest.approx(1.0 / 3.0, abs=1e-4)


def test_norms_absolute_homogeneity():
    rng = np.random.default_rng(2)
    f = gf(rng.standard_normal(64) + 1j * rng.standard_normal(64))
    c = -2.0 + 1.5j
    scaled = norms(GridFunction(f.grid, c * f.values))
    base = norms(f)
    assert scaled.l1 == pytest.approx(abs(c) * base.l1)
    assert scaled.l2 == pytest.approx(abs(c) * base.l2)
    assert scaled.weighted == pytest.approx(abs(c) * base.weighted)


def test_constants_zero_potential():
    g = Grid(1.0, 65)
    pot = PotentialP.from_samples(g, np.zeros(65), np.zeros(65))
    cs = constants_p(pot)
    assert (cs.c1, cs.c2, cs.c3) == (0.0, 0.0, 3.0)


def test_constants_unit_well():
    g = Grid(1.0, 257)
    pot = PotentialP.from_samples(g, np.zeros(257), np.ones(257))
    cs = constants_p(pot)
    assert cs.c1 == pytest.approx(1.0)
    assert cs.c2 == pytest.approx(1.0)  # max(0.5, 1.0)
    assert cs.c3 == pytest.approx(6.0)


def test_constants_constant_p():
    g = Grid(1.0, 257)
    pot = PotentialP.from_samples(g, np.ones(257), np.zeros(257))
    cs = constants_p(pot)
    # p' vanishes on the open interval; the jump at gamma enters via |p(gamma)|
    assert cs.c1 == pytest.approx(2.0)
    assert cs.p_plus == 1.0 and cs.p_minus == 1.0


def test_constants_monotone_in_q():
    g = Grid(1.0, 129)
    xs = g.points
    q = np.cos(3 * xs) + 0.2
    base = constants_p(PotentialP.from_samples(g, np.zeros(129), q))
    bigger = constants_p(PotentialP.from_samples(g, np.zeros(129), 1.5 * q))
    assert bigger.c1 >= base.c1


def test_phase_zero_and_constant():
    g = Grid(1.0, 101)
    assert np.allclose(phase(GridFunction.zero(g)).values, 0.0)
    p0 = 2.0
    ph = phase(GridFunction.from_callable(g, lambda x: np.full_like(x, p0)))
    assert np.allclose(ph.values, p0 * (1.0 - g.points))
    assert ph.values[0] == pytest.approx(2.0)
    assert ph.values[-1] == 0.0


def test_phase_derivative_is_minus_p():
    g = Grid(1.0, 2001)
    p = GridFunction.from_callable(g, lambda x: np.sin(2.0 * x) + 0.3)
    ph = phase(p).values.real
    dph = np.gradient(ph, g.spacing)
    interior = slice(2, -2)
    assert np.max(np.abs(dph[interior] + p.values.real[interior])) < 1e-5


def test_miura_forward():
    g = Grid(1.0, 2001)
    assert np.allclose(miura_forward(GridFunction.zero(g)).values, 0.0)

    const = GridFunction.from_callable(g, lambda x: np.full_like(x, 0.7))
    q = miura_forward(const).values
    assert np.allclose(q[1:-1], 0.49)

    u = GridFunction.from_callable(g, lambda x: np.sin(x))
    q = miura_forward(u).values.real
    xs = g.points
    exact = np.cos(xs) + np.sin(xs) ** 2
    assert np.max(np.abs(q[1:-1] - exact[1:-1])) < 1e-6


def test_support_must_reach_gamma():
    g = Grid(1.0, 65)
    xs = g.points
    dying = np.where(xs < 0.5, 1.0, 0.0)
    with pytest.raises(ValueError):
        PotentialP.from_samples(g, dying, np.zeros(65))
    with pytest.raises(ValueError):
        PotentialQ.from_samples(g, dying, np.zeros(65))
    with pytest.raises(ValueError):
        DiracPotential.from_samples(g, dying)
    # identically zero is allowed for the trivial cases
    PotentialP.from_samples(g, np.zeros(65), np.zeros(65))


def test_potential_q_requires_real_data():
    g = Grid(1.0, 65)
    with pytest.raises(ValueError):
        PotentialQ.from_samples(g, np.full(65, 1j), np.zeros(65))


def test_json_roundtrip_all_classes(tmp_path):
    g = Grid(1.3, 33)
    xs = g.points
    pot_p = PotentialP.from_samples(g, np.cos(xs) + 0.2j * xs, np.sin(xs) + 0.4)
    pot_q = PotentialQ.from_samples(g, np.cos(xs), np.sin(xs) + 0.4)
    pot_x = DiracPotential.from_samples(g, np.cos(xs) + 1j * np.sin(xs) + 0.3)
    for pot, name in ((pot_p, "p.json"), (pot_q, "q.json"), (pot_x, "x.json")):
        path = tmp_path / name
        save_potential(pot, str(path))
        back = load_potential(str(path))
        assert type(back) is type(pot)
        assert back.grid == pot.grid
        if isinstance(pot, PotentialP):
            assert np.array_equal(back.p.values, pot.p.values)
            assert np.array_equal(back.q.values, pot.q.values)
        elif isinstance(pot, PotentialQ):
            assert np.array_equal(back.p.values, pot.p.values)
            assert np.array_equal(back.u.values, pot.u.values)
        else:
            assert np.array_equal(back.v.values, pot.v.values)


def test_json_format_fields(tmp_path):
    g = Grid(1.0, 5)
    pot = PotentialQ.from_samples(g, np.ones(5), np.full(5, 0.5))
    path = tmp_path / "q.json"
    save_potential(pot, str(path))
    doc = json.loads(path.read_text())
    assert doc["class"] == "Q"
    assert set(doc) >= {"gamma", "n", "p", "u"}
