import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from edslab import Grid, PotentialP, PotentialQ, load_potential, save_potential
from edslab.cli import run
from edslab.resonances import load_resonances

from conftest import psi_well_exact, random_potential_q, square_well


@pytest.fixture
def free_json(tmp_path):
    path = tmp_path / "free.json"
    save_potential(square_well(0.0, n=65), str(path))
    return str(path)


@pytest.fixture
def well_json(tmp_path):
    path = tmp_path / "sqwell.json"
    save_potential(square_well(-4.0, n=513), str(path))
    return str(path)


@pytest.fixture
def q_json(tmp_path):
    path = tmp_path / "pq.json"
    save_potential(random_potential_q(3, n=513), str(path))
    return str(path)


def test_jost_free_prints_one(free_json, capsys):
    assert run(["jost", "--potential", free_json, "--alpha", "0", "--k", "1,0"]) == 0
    assert capsys.readouterr().out.strip() == "1.000000+0.000000i"


def test_unknown_verb_and_flag_exit_1(free_json, capsys):
    assert run(["frobnicate"]) == 1
    assert run(["jost", "--potential", free_json, "--nope", "1"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err


def test_missing_input_exits_1(tmp_path, capsys):
    assert run(["jost", "--potential", str(tmp_path / "nope.json"),
                "--k", "1,0"]) == 1


def test_resonances_csv_and_plot(well_json, tmp_path, capsys):
    out_csv = tmp_path / "r.csv"
    out_svg = tmp_path / "r.svg"
    code = run(["resonances", "--potential", well_json,
                "--rect", "-7", "7", "-4", "-0.05",
                "--tol", "1e-8", "--steps", "2048",
                "--out", str(out_csv), "--plot", str(out_svg)])
    assert code == 0
    lst, meta = load_resonances(str(out_csv))
    assert meta["tol"] == "1e-08"
    assert len(lst) > 0
    for z, _ in lst:
        assert abs(psi_well_exact(np.array([z]), -4.0)[0]) <= 1e-5
    # the figure is valid XML and small
    tree = ET.parse(out_svg)
    assert "svg" in tree.getroot().tag
    assert out_svg.stat().st_size < 1_000_000


def test_plot_verb_empty_list(tmp_path):
    csv = tmp_path / "empty.csv"
    csv.write_text("# gamma=1.0 tol=None rect=None\nre_k,im_k,multiplicity\n")
    svg = tmp_path / "empty.svg"
    assert run(["plot", "--resonances", str(csv), "--out", str(svg)]) == 0
    assert "svg" in ET.parse(svg).getroot().tag


def test_plot_exponential_row(tmp_path):
    """The single-exponential model zeros form a horizontal row at
    Im = ln|a| / (2 gamma); the figure renders them and stays small."""
    from edslab import ResonanceList, find_zeros, Rect
    from edslab.resonances import save_resonances

    a = 0.5
    f = lambda k: 1.0 + a * np.exp(2j * np.asarray(k))
    res = find_zeros(f, Rect(-13.0, 13.0, -2.0, -0.05), 1e-9)
    row = res.points().imag
    assert np.max(np.abs(row - np.log(a) / 2.0)) <= 1e-9
    csv = tmp_path / "row.csv"
    save_resonances(res, str(csv), gamma=1.0)
    svg = tmp_path / "row.svg"
    assert run(["plot", "--resonances", str(csv), "--eps", "0.1",
                "--out", str(svg)]) == 0
    assert "svg" in ET.parse(svg).getroot().tag
    assert svg.stat().st_size < 1_000_000


def test_scatter_and_glm_roundtrip(tmp_path, capsys):
    """CLI-level forward scattering then reconstruction of the Dirac image."""
    n = 161
    g = Grid(1.0, n)
    xs = g.points
    bump = (4.0 * xs * (1.0 - xs)) ** 3
    pq = PotentialQ.from_samples(g, np.zeros(n), 0.25 * bump + 1e-8)
    pq_path = tmp_path / "pq.json"
    save_potential(pq, str(pq_path))

    v_path = tmp_path / "v.json"
    assert run(["transform", "--potential", str(pq_path), "--out", str(v_path)]) == 0
    v_doc = json.loads(v_path.read_text())
    assert v_doc["class"] == "X"

    s_path = tmp_path / "s.csv"
    assert run(["scatter", "--potential", str(v_path), "--alpha", "0",
                "--kmin", "-120", "--kmax", "120", "--nk", "4801",
                "--steps", "2048", "--out", str(s_path)]) == 0

    rec_path = tmp_path / "vrec.json"
    assert run(["glm", "--scattering", str(s_path), "--n", str(n),
                "--out", str(rec_path)]) == 0
    v = load_potential(str(v_path))
    rec = load_potential(str(rec_path))
    err = np.sqrt(np.trapezoid(np.abs(rec.v.values - v.v.values) ** 2, xs))
    scale = np.sqrt(np.trapezoid(np.abs(v.v.values) ** 2, xs))
    assert err / scale <= 2e-2


def test_iso_and_reduce_verbs(q_json, tmp_path, capsys):
    out = tmp_path / "member.json"
    assert run(["iso", "--potential", q_json, "--alpha", "0.7",
                "--delta", "0.5", "--steps", "1024", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["class"] == "Q" and doc["delta"] == 0.5 and "alpha" in doc

    out2 = tmp_path / "dirichlet.json"
    assert run(["reduce", "--potential", q_json, "--alpha", "0.7",
                "--steps", "1024", "--out", str(out2)]) == 0
    assert "phi_alpha" in capsys.readouterr().out


def test_verify_class_q_all(q_json, capsys):
    code = run(["verify", "--suite", "all", "--potential", q_json,
                "--alpha", "0.7", "--steps", "1024"])
    out = capsys.readouterr().out
    assert code == 0
    assert "all checks passed" in out
    assert "[transform]" in out and "[unitarity]" in out and "[iso]" in out


def test_verify_class_p_bounds(tmp_path, capsys):
    path = tmp_path / "well.json"
    save_potential(square_well(-4.0, n=257), str(path))
    code = run(["verify", "--suite", "bounds", "--potential", str(path),
                "--steps", "1024"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out and "FAIL" not in out


def test_no_partial_output_on_failure(well_json, tmp_path):
    target = tmp_path / "sub" / "out.csv"  # directory does not exist
    code = run(["resonances", "--potential", well_json,
                "--rect", "-3", "3", "-2", "-0.05",
                "--steps", "1024", "--out", str(target)])
    assert code == 2
    assert not target.exists()


def test_scatter_class_q(q_json, tmp_path, capsys):
    out = tmp_path / "sq.csv"
    assert run(["scatter", "--potential", q_json, "--alpha", "0.6",
                "--kmin", "-8", "--kmax", "8", "--nk", "321",
                "--steps", "1024", "--out", str(out)]) == 0
    assert "ind S = 0" in capsys.readouterr().out
    from edslab import load_scattering

    table, gamma = load_scattering(str(out))
    assert gamma == 1.0
    assert np.max(np.abs(np.abs(table.s_values) - 1.0)) <= 1e-8


def test_threads_env_var(tmp_path):
    import subprocess
    import sys as _sys

    env = {"EDSLAB_THREADS": "1", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run(
        [_sys.executable, "-c",
         "import os; import edslab; print(os.environ['OMP_NUM_THREADS'])"],
        capture_output=True, text=True, env=env, cwd=str(tmp_path))
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1"


def test_version_and_help(capsys):
    assert run(["--version"]) == 0
    assert run(["--help"]) == 0
    out = capsys.readouterr().out
    assert "edslab" in out
