"""Command-line surface.

Verbs: jost, resonances, scatter, transform, iso, reduce, glm, verify, plot.
Exit codes: 0 success, 1 argument/validation error, 2 numerical failure.
All numeric output is deterministic for identical inputs and flags; output
files are written to a temp file and renamed, so failures never leave a
partial file behind.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .numerics import DEFAULT_ODE_STEPS, Grid
from .potentials import (PotentialP, PotentialQ, load_potential,
                         potential_to_dict, save_potential, write_json_atomic)
from .jost_schrodinger import jost_function_dirichlet, jost_series
from .dirac import (DiracBoundary, DiracPotential, dirac_scattering,
                    glm_reconstruct, load_scattering, save_scattering,
                    scattering_to_F)
from .transform import jost_q, scattering_q, t_forward, t_inverse
from .resonances import (Rect, ResonanceList, find_zeros,
                         fit_forbidden_constant, load_resonances,
                         save_resonances, verify_bounds_p,
                         verify_counting_and_forbidden, winding_count,
                         winding_index_S)
from .isoresonance import iso_member, reduce_to_dirichlet, verify_iso_scattering


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.6f}{z.imag:+.6f}i"


def _parse_complex(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"complex values are written re,im (got {text!r})") from exc


def _psi_for(pot, alpha: float, steps: int):
    """A vectorized Jost-function callable for any potential class."""
    if isinstance(pot, PotentialP):
        return lambda k: jost_function_dirichlet(pot, k, steps)
    if isinstance(pot, PotentialQ):
        return lambda k: jost_q(pot, alpha, k, steps)
    if isinstance(pot, DiracPotential):
        from .dirac import dirac_jost_function
        bc = DiracBoundary(alpha)
        return lambda k: dirac_jost_function(pot, bc, k, steps)
    raise SystemExit(f"no Jost function for {type(pot).__name__}")


def emit_plot(res: ResonanceList, gamma: float, eps: float, path: str):
    """SVG scatter of the resonances with the fitted forbidden-domain
    boundary Im k = (1/(2 gamma)) ln(eps + C/|k|) overlaid."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    pts = res.points()
    if pts.size:
        sizes = 18.0 * np.array([m for _, m in res.entries])
        ax.scatter(pts.real, pts.imag, s=sizes, marker="x", color="tab:red",
                   label="resonances")
        c_fit = fit_forbidden_constant(res, gamma, eps)
        lim = max(4.0, 1.1 * float(np.max(np.abs(pts.real))))
        ks = np.linspace(-lim, lim, 400)
        with np.errstate(divide="ignore"):
            curve = np.log(eps + c_fit / np.maximum(np.abs(ks), 1e-9)) / (2.0 * gamma)
        ax.plot(ks, curve, color="tab:blue", lw=1.0,
                label=f"forbidden boundary (C={c_fit:.3g}, eps={eps:g})")
        low = min(1.1 * float(np.min(pts.imag)), -1.0)
        ax.set_ylim(low, max(0.5, 0.1 * abs(low)))
        ax.legend(loc="lower right", fontsize=8)
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel("Re k")
    ax.set_ylabel("Im k")
    ax.set_title("resonances and forbidden domain")
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".svg")
    os.close(fd)
    try:
        fig.savefig(tmp, format="svg")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def _cmd_jost(args) -> int:
    pot = _load_input(load_potential, args.potential)
    if isinstance(pot, PotentialP):
        if args.series:
            res = jost_series(pot, args.k, args.tol)
            print(_fmt_complex(res.value))
            print(f"# terms={res.terms_used} tail_bound={res.tail_bound:.3e}")
        else:
            print(_fmt_complex(jost_function_dirichlet(pot, args.k, args.steps)))
    elif isinstance(pot, PotentialQ):
        print(_fmt_complex(jost_q(pot, args.alpha, args.k, args.steps)))
    else:
        from .dirac import dirac_jost_function
        print(_fmt_complex(dirac_jost_function(pot, DiracBoundary(args.alpha),
                                               args.k, args.steps)))
    return 0


def _cmd_resonances(args) -> int:
    pot = _load_input(load_potential, args.potential)
    rect = Rect(*args.rect)
    psi = _psi_for(pot, args.alpha, args.steps)
    res = find_zeros(psi, rect, args.tol)
    print(f"# {len(res)} zeros, total multiplicity {res.total_multiplicity()} "
          f"(steps={args.steps} tol={args.tol:g})")
    for z, m in res:
        print(f"{z.real:+.9f} {z.imag:+.9f} {m}")
    if args.out:
        save_resonances(res, args.out, gamma=pot.gamma, tol=args.tol, rect=rect)
    if args.plot:
        emit_plot(res, pot.gamma, args.eps, args.plot)
    return 0


def _cmd_scatter(args) -> int:
    pot = _load_input(load_potential, args.potential)
    ks = np.linspace(args.kmin, args.kmax, args.nk)
    ks = ks[ks != 0.0]
    if isinstance(pot, PotentialQ):
        table = scattering_q(pot, args.alpha, ks, args.steps)
    elif isinstance(pot, DiracPotential):
        table = dirac_scattering(pot, DiracBoundary(args.alpha), ks, args.steps)
    else:
        print("scattering is defined for class Q and Dirac potentials",
              file=sys.stderr)
        return 1
    print(f"# {table.k_samples.size} samples, ind S = {winding_index_S(table)}")
    if args.out:
        save_scattering(table, args.out, gamma=pot.gamma)
    else:
        for k, s in zip(table.k_samples, table.s_values):
            print(f"{k:+.6f} {_fmt_complex(s)}")
    return 0


def _cmd_transform(args) -> int:
    pot = _load_input(load_potential, args.potential)
    if args.inverse:
        if not isinstance(pot, DiracPotential):
            print("inverse transform needs a Dirac potential", file=sys.stderr)
            return 1
        pair = t_inverse(pot)
        out_pot = pair.pq
    else:
        if not isinstance(pot, PotentialQ):
            print("forward transform needs a class Q potential", file=sys.stderr)
            return 1
        pair = t_forward(pot)
        out_pot = pair.v
    print(f"# phi(0) = {pair.phi0:.9f}")
    if args.out:
        save_potential(out_pot, args.out)
    return 0


def _cmd_iso(args) -> int:
    pot = _load_input(load_potential, args.potential)
    if not isinstance(pot, PotentialQ):
        print("isoresonance families are defined for class Q", file=sys.stderr)
        return 1
    member = iso_member(pot, args.alpha, args.delta)
    print(f"# alpha_delta = {member.alpha:.9f} theta(0) = "
          f"{member.theta.values[0].real:.9f}")
    if args.out:
        doc = potential_to_dict(member.pq)
        doc["delta"] = member.delta
        doc["alpha"] = member.alpha
        write_json_atomic(doc, args.out)
    return 0


def _cmd_reduce(args) -> int:
    pot = _load_input(load_potential, args.potential)
    if not isinstance(pot, PotentialQ):
        print("the Dirichlet reduction is defined for class Q", file=sys.stderr)
        return 1
    member, phi_alpha = reduce_to_dirichlet(pot, args.alpha)
    print(f"# phi_alpha = {phi_alpha:.9f}")
    if args.out:
        doc = potential_to_dict(member.pq)
        doc["delta"] = member.delta
        doc["alpha"] = member.alpha
        write_json_atomic(doc, args.out)
    return 0


def _cmd_glm(args) -> int:
    table, gamma = _load_input(load_scattering, args.scattering)
    if args.gamma is not None:
        gamma = args.gamma
    if gamma is None:
        print("gamma is neither in the CSV header nor given via --gamma",
              file=sys.stderr)
        return 1
    grid = Grid(gamma, args.n)
    s_grid = np.linspace(-gamma, 0.0, args.n)
    kernel = scattering_to_F(table, s_grid, gamma)
    v = glm_reconstruct(kernel, grid)
    print(f"# reconstructed |v| peak = {np.max(np.abs(v.v.values)):.6g}")
    if args.out:
        save_potential(v, args.out)
    return 0


def _verify_reports(pot, args):
    suites = ("bounds", "counting", "transform", "unitarity", "iso", "noeig")
    wanted = suites if args.suite == "all" else (args.suite,)
    steps = args.steps
    reports = []
    from .resonances import BoundCheck, BoundReport

    if isinstance(pot, PotentialP):
        applicable = {"bounds", "counting"} & set(wanted)
        if not applicable:
            raise SystemExit(f"suite {args.suite!r} needs a class Q potential")
        psi = _psi_for(pot, 0.0, steps)
        res = find_zeros(psi, Rect(-12.0, 12.0, -7.0, -1e-4), 1e-6)
        eig = find_zeros(psi, Rect(-8.0, 8.0, 1e-4, 8.0), 1e-6)
        if "bounds" in applicable:
            reports.append(("bounds", verify_bounds_p(pot, eig, res)))
        if "counting" in applicable:
            reports.append(("counting", verify_counting_and_forbidden(
                pot, res, args.eps, r_values=range(1, 13), extra_zeros=eig)))
        return reports

    if not isinstance(pot, PotentialQ):
        raise SystemExit("verify needs a class P or Q potential")
    alpha = args.alpha
    if "transform" in wanted:
        pair = t_forward(pot)
        back = t_inverse(pair.v)
        dev_p = float(np.max(np.abs(back.pq.p.values - pot.p.values)))
        dev_u = float(np.max(np.abs(back.pq.u.values - pot.u.values)))
        iso_dev = float(np.max(np.abs(
            np.abs(pair.v.v.values)
            - np.hypot(pot.p.values.real, pot.u.values.real))))
        reports.append(("transform", BoundReport((
            BoundCheck("roundtrip max |p - p'|", dev_p, 1e-7),
            BoundCheck("roundtrip max |u - u'|", dev_u, 1e-7),
            BoundCheck("pointwise | |v| - sqrt(p^2+u^2) |", iso_dev, 1e-12),
        ))))
    if "unitarity" in wanted:
        ks = np.linspace(0.13, 12.0, 240)
        ks = np.concatenate([-ks[::-1], ks])
        table = scattering_q(pot, alpha, ks, steps)
        dev = float(np.max(np.abs(np.abs(table.s_values) - 1.0)))
        reports.append(("unitarity", BoundReport((
            BoundCheck("max | |S| - 1 |", dev, 1e-8),
            BoundCheck("|ind S|", float(abs(winding_index_S(table))), 0.0),
        ))))
    if "iso" in wanted:
        ks = np.linspace(0.37, 9.0, 120)
        reports.append(("iso", verify_iso_scattering(pot, alpha, np.pi / 4.0, ks, steps)))
    if "noeig" in wanted:
        pair = t_forward(pot)
        from .transform import boundary_map, dirac_jost_function_from_pair
        triple = boundary_map(alpha, pair.phi0)
        count = winding_count(
            lambda k: dirac_jost_function_from_pair(pair, triple.delta, k, steps),
            Rect(-20.0, 20.0, 1e-6, 20.0))
        reports.append(("noeig", BoundReport((
            BoundCheck("zeros of psi_delta in the upper half-plane",
                       float(count), 0.0),
        ))))
    if not reports:
        raise SystemExit(f"suite {args.suite!r} not applicable to class Q")
    return reports


def _cmd_verify(args) -> int:
    pot = _load_input(load_potential, args.potential)
    reports = _verify_reports(pot, args)
    ok = True
    for name, report in reports:
        for line in report.lines():
            print(f"[{name}] {line}")
        ok &= report.all_pass
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 2


def _cmd_plot(args) -> int:
    res, meta = _load_input(load_resonances, args.resonances)
    gamma = args.gamma
    if gamma is None and meta.get("gamma", "None") != "None":
        gamma = float(meta["gamma"])
    if gamma is None:
        print("gamma is neither in the CSV header nor given via --gamma",
              file=sys.stderr)
        return 1
    emit_plot(res, gamma, args.eps, args.out)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="edslab",
                     description="energy-dependent Schrodinger / Dirac laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, alpha=True):
        p.add_argument("--potential", required=True, help="potential JSON file")
        p.add_argument("--steps", type=int, default=DEFAULT_ODE_STEPS)
        if alpha:
            p.add_argument("--alpha", type=float, default=0.0)

    p = sub.add_parser("jost", help="evaluate the Jost function at one k")
    common(p)
    p.add_argument("--k", type=_parse_complex, required=True, metavar="RE,IM")
    p.add_argument("--series", action="store_true",
                   help="use the series route (class P only)")
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("resonances", help="locate zeros in a rectangle")
    common(p)
    p.add_argument("--rect", type=float, nargs=4, required=True,
                   metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", help="resonance CSV output")
    p.add_argument("--plot", help="SVG figure output")
    p.add_argument("--eps", type=float, default=0.1)

    p = sub.add_parser("scatter", help="sample the scattering matrix")
    common(p)
    p.add_argument("--kmin", type=float, default=-12.0)
    p.add_argument("--kmax", type=float, default=12.0)
    p.add_argument("--nk", type=int, default=481)
    p.add_argument("--out", help="scattering CSV output")

    p = sub.add_parser("transform", help="map class Q to a Dirac potential (or back)")
    common(p, alpha=False)
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--out", help="potential JSON output")

    p = sub.add_parser("iso", help="emit one isoresonance family member")
    common(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out", help="potential JSON output")

    p = sub.add_parser("reduce", help="reduce to the Dirichlet member")
    common(p)
    p.add_argument("--out", help="potential JSON output")

    p = sub.add_parser("glm", help="reconstruct a Dirac potential from scattering data")
    p.add_argument("--scattering", required=True, help="scattering CSV file")
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--gamma", type=float)
    p.add_argument("--out", help="potential JSON output")

    p = sub.add_parser("verify", help="run verification suites, print pass/fail lines")
    common(p)
    p.add_argument("--suite", default="all",
                   choices=["all", "bounds", "counting", "transform",
                            "unitarity", "iso", "noeig"])
    p.add_argument("--eps", type=float, default=0.1)

    p = sub.add_parser("plot", help="render a resonance CSV to an SVG figure")
    p.add_argument("--resonances", required=True, help="resonance CSV file")
    p.add_argument("--gamma", type=float)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out", required=True, help="SVG output path")

    return parser


_COMMANDS = {
    "jost": _cmd_jost,
    "resonances": _cmd_resonances,
    "scatter": _cmd_scatter,
    "transform": _cmd_transform,
    "iso": _cmd_iso,
    "reduce": _cmd_reduce,
    "glm": _cmd_glm,
    "verify": _cmd_verify,
    "plot": _cmd_plot,
}


class _InputError(Exception):
    pass


def _load_input(loader, path):
    try:
        return loader(path)
    except (OSError, ValueError, KeyError) as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.verb](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return int(exc.code or 0)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
