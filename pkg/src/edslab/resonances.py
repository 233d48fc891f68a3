"""Complex zero localization by the argument principle.

The zero finder quadrisects a rectangle until every cell isolates a single
zero (or shrinks below tolerance for genuine clusters), then polishes the
isolated zeros by Newton iteration with a centered-difference derivative.
Multiplicities come from the contour count of the final enclosing cell, so
the total always reconciles against the winding number of the full search
rectangle.

Every function `f` passed in here must accept a 1-d complex ndarray of
evaluation points and return the values with the same shape; all boundary
samples of a whole generation of cells are evaluated in one call, which is
what makes ODE-backed Jost functions affordable inside the search.
"""

from __future__ import annotations

import os
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np

PHASE_STEP_LIMIT = np.pi / 2.0
BOUNDARY_MIN_MOD = 1e-12
MODULUS_TIE_RTOL = 1e-12


class BoundaryZeroError(RuntimeError):
    """A zero appears to sit on (or hug) the contour; perturb the rectangle."""


@dataclass(frozen=True)
class Rect:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("rectangle must be nonempty")

    @property
    def size(self) -> float:
        return max(self.re_max - self.re_min, self.im_max - self.im_min)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max),
                       0.5 * (self.im_min + self.im_max))

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.re_min - margin <= z.real <= self.re_max + margin
                and self.im_min - margin <= z.imag <= self.im_max + margin)

    def dilated(self, rel: float) -> "Rect":
        dr = rel * (self.re_max - self.re_min)
        di = rel * (self.im_max - self.im_min)
        return Rect(self.re_min - dr, self.re_max + dr,
                    self.im_min - di, self.im_max + di)

    def quadrisect(self, fx: float = 0.5, fy: float = 0.5):
        rm = self.re_min + fx * (self.re_max - self.re_min)
        im = self.im_min + fy * (self.im_max - self.im_min)
        return (
            Rect(self.re_min, rm, self.im_min, im),
            Rect(rm, self.re_max, self.im_min, im),
            Rect(self.re_min, rm, im, self.im_max),
            Rect(rm, self.re_max, im, self.im_max),
        )

    def boundary_point(self, t):
        """Counterclockwise boundary parametrization by t in [0, 1)."""
        t = np.asarray(t, dtype=float) % 1.0
        w = self.re_max - self.re_min
        h = self.im_max - self.im_min
        out = np.empty(t.shape, dtype=complex)
        seg = np.floor(t * 4.0).astype(int)
        u = t * 4.0 - seg
        m = seg == 0
        out[m] = self.re_min + u[m] * w + 1j * self.im_min
        m = seg == 1
        out[m] = self.re_max + 1j * (self.im_min + u[m] * h)
        m = seg == 2
        out[m] = self.re_max - u[m] * w + 1j * self.im_max
        m = seg == 3
        out[m] = self.re_min + 1j * (self.im_max - u[m] * h)
        return out


@dataclass(frozen=True)
class ResonanceList:
    """Zeros with multiplicities, arranged by nondecreasing modulus; exact
    modulus ties are ordered by Re, then Im, for a deterministic total order."""

    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", _arranged(self.entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def points(self) -> np.ndarray:
        return np.array([z for z, _ in self.entries], dtype=complex)

    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.entries)


def _arranged(entries):
    es = sorted(((complex(z), int(m)) for z, m in entries), key=lambda e: abs(e[0]))
    out = []
    i = 0
    while i < len(es):
        j = i + 1
        base = abs(es[i][0])
        while j < len(es) and abs(abs(es[j][0]) - base) <= MODULUS_TIE_RTOL * max(1.0, base):
            j += 1
        out.extend(sorted(es[i:j], key=lambda e: (e[0].real, e[0].imag)))
        i = j
    return tuple(out)


def order_and_reflect(lst: ResonanceList):
    """The canonical arrangement of the list and of its reflection
    r -> -conj(r) through the imaginary axis."""
    ordered = ResonanceList(lst.entries)
    reflected = ResonanceList(tuple((-np.conj(z), m) for z, m in lst.entries))
    return ordered, reflected


def counting_function(lst: ResonanceList, r: float) -> int:
    """Number of zeros, counted with multiplicity, in the closed disc |k| <= r."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return sum(m for z, m in lst.entries if abs(z) <= r)


# --- winding engine ----------------------------------------------------------


class _Contour:
    """Adaptive boundary sampling of one rectangle.

    The initial density resolves the expected phase rate `freq_hint`
    (radians of arg f per unit of boundary length) below the aliasing
    threshold; segments whose phase step reaches pi/2 are bisected, and a
    converged winding is accepted only after one more global halving
    reproduces it (which catches a whole hidden turn inside a step).
    """

    __slots__ = ("rect", "ts", "vals", "done", "winding", "failed", "stable")

    def __init__(self, rect: Rect, samples_per_edge: int, freq_hint: float = 4.0):
        self.rect = rect
        w = rect.re_max - rect.re_min
        h = rect.im_max - rect.im_min
        parts = []
        for edge, length in enumerate((w, h, w, h)):
            m = max(4, samples_per_edge,
                    int(np.ceil(length * freq_hint * 2.0 / np.pi)))
            parts.append((edge + np.arange(m) / m) / 4.0)
        self.ts = np.concatenate(parts)
        self.vals = None
        self.done = False
        self.winding = None
        self.failed = False
        self.stable = 0

    def pending_points(self):
        if self.vals is None:
            return self.rect.boundary_point(self.ts)
        return None

    def absorb(self, new_vals):
        self.vals = np.asarray(new_vals)

    def _midpoints(self, mask):
        t_next = np.roll(self.ts, -1).copy()
        t_next[-1] += 1.0
        return ((self.ts[mask] + t_next[mask]) / 2.0) % 1.0

    def refine_targets(self):
        """Returns fractions of new sample points, or marks the contour done."""
        v = self.vals
        if np.min(np.abs(v)) <= BOUNDARY_MIN_MOD:
            self.failed = True
            return None
        dphi = np.angle(np.roll(v, -1) / v)
        bad = np.abs(dphi) >= PHASE_STEP_LIMIT
        if np.any(bad):
            self.stable = 0
            self.winding = None
            return self._midpoints(bad)
        w = int(np.rint(np.sum(dphi) / (2.0 * np.pi)))
        if self.winding == w:
            self.stable += 1
        else:
            self.stable = 1
            self.winding = w
        if self.stable >= 2:
            self.done = True
            return None
        return self._midpoints(np.ones(self.ts.size, dtype=bool))

    def insert(self, new_ts, new_vals):
        ts = np.concatenate([self.ts, new_ts])
        vs = np.concatenate([self.vals, new_vals])
        order = np.argsort(ts)
        self.ts = ts[order]
        self.vals = vs[order]

    def zero_centroid(self) -> complex:
        """First moment of the argument principle over this (converged)
        contour: (1/(2 pi i w)) oint k dlog f, the exact location of an
        isolated m-fold zero and the multiplicity-weighted mean of a tight
        cluster."""
        pts = self.rect.boundary_point(self.ts)
        v_next = np.roll(self.vals, -1)
        dlog = np.log(np.abs(v_next / self.vals)) + 1j * np.angle(v_next / self.vals)
        k_mid = 0.5 * (pts + np.roll(pts, -1))
        total = np.sum(k_mid * dlog)
        return complex(total / (2j * np.pi * self.winding))


def _run_contours(f, contours, max_rounds=40, max_points=60000):
    """Drive a batch of contours to completion with shared f evaluations."""
    live = [c for c in contours if not c.done]
    # first evaluation
    pts = [c.pending_points() for c in live]
    if any(p is not None for p in pts):
        flat = np.concatenate([p for p in pts if p is not None])
        vals = np.asarray(f(flat))
        pos = 0
        for c, p in zip(live, pts):
            if p is not None:
                c.absorb(vals[pos:pos + p.size])
                pos += p.size
    for _ in range(max_rounds):
        requests = []
        for c in live:
            if c.done or c.failed:
                continue
            t_new = c.refine_targets()
            if t_new is not None and t_new.size:
                if c.ts.size + t_new.size > max_points:
                    c.failed = True
                else:
                    requests.append((c, t_new))
        live = [c for c in contours if not (c.done or c.failed)]
        if not requests:
            break
        flat = np.concatenate([c.rect.boundary_point(t) for c, t in requests])
        vals = np.asarray(f(flat))
        pos = 0
        for c, t in requests:
            c.insert(t, vals[pos:pos + t.size])
            pos += t.size
    for c in contours:
        if not c.done and not c.failed:
            c.failed = True  # refinement exhausted: zero hugging the contour


_DILATIONS = (1e-6, 1e-3, 0.05, 0.35)


def _winding_with_retry(f, rect: Rect, samples_per_edge: int,
                        freq_hint: float = 4.0):
    """Winding number with a dilation fallback for boundary zeros; the
    dilation escalates because a multiple zero on the contour keeps |f|
    below the floor until the boundary moves well clear.
    Returns (winding, rect_actually_used)."""
    for rel in (0.0, *_DILATIONS):
        attempt = rect if rel == 0.0 else rect.dilated(rel)
        c = _Contour(attempt, samples_per_edge, freq_hint)
        _run_contours(f, [c])
        if c.done:
            return c.winding, attempt
    raise BoundaryZeroError(
        f"zero on or near the contour of {rect}; perturb the rectangle"
    )


def winding_count(f, rect: Rect, samples_per_edge: int = 32,
                  freq_hint: float = 4.0) -> int:
    """Number of zeros of f inside rect, by the argument principle with
    adaptive refinement until every phase step is below pi/2."""
    w, _ = _winding_with_retry(f, rect, samples_per_edge, freq_hint)
    return w


def _newton_polish(f, seeds, cells, tol, max_iter=40):
    """Batched Newton with centered-difference derivative.

    Returns (zeros, ok_mask); a seed fails when the iteration stalls or
    leaves the neighborhood of its cell.
    """
    z = np.asarray(seeds, dtype=complex)
    ok = np.ones(z.size, dtype=bool)
    active = np.ones(z.size, dtype=bool)
    for _ in range(max_iter):
        if not np.any(active):
            break
        za = z[active]
        d = 1e-7 * np.maximum(1.0, np.abs(za))
        pts = np.concatenate([za, za + d, za - d])
        vals = np.asarray(f(pts))
        m = za.size
        fz, fp, fm = vals[:m], vals[m:2 * m], vals[2 * m:]
        deriv = (fp - fm) / (2.0 * d)
        bad = (deriv == 0) | ~np.isfinite(deriv) | ~np.isfinite(fz)
        step = np.zeros_like(za)
        step[~bad] = fz[~bad] / deriv[~bad]
        z_new = za - step
        idx = np.flatnonzero(active)
        for local, gi in enumerate(idx):
            cell = cells[gi]
            if bad[local] or not cell.dilated(1.0).contains(z_new[local]):
                ok[gi] = False
                active[gi] = False
            elif abs(step[local]) < max(1e-3 * tol, 5e-15 * max(1.0, abs(z_new[local]))):
                z[gi] = z_new[local]
                active[gi] = False
            else:
                z[gi] = z_new[local]
    ok &= ~active  # still-active seeds never converged
    # the zero certified by the cell winding lies inside the cell; a seed
    # that converged elsewhere belongs to a neighbor and must be rejected
    for gi in range(z.size):
        if ok[gi] and not cells[gi].contains(z[gi], margin=1e-3 * cells[gi].size):
            ok[gi] = False
    return z, ok


def find_zeros(f, rect: Rect, tol: float, samples_per_edge: int = 24,
               freq_hint: float = 4.0, max_generations: int = 64) -> ResonanceList:
    """All zeros of f in rect, located to `tol`, with contour-counted
    multiplicities.  The total multiplicity is verified against the winding
    number of the full rectangle."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    total, outer = _winding_with_retry(f, rect, max(samples_per_edge, 32), freq_hint)
    if total == 0:
        return ResonanceList(())
    if total < 0:
        raise ValueError("negative winding: f is not holomorphic on the rect")

    found = []  # (z, mult)
    frontier = [(outer, 0)]  # (cell, retry_count)
    for _ in range(max_generations):
        if not frontier:
            break
        contours = [_Contour(cell, samples_per_edge, freq_hint) for cell, _ in frontier]
        _run_contours(f, contours)
        next_frontier = []
        newton_cells = []
        for (cell, retry), c in zip(frontier, contours):
            if c.failed:
                if retry >= len(_DILATIONS) - 1:
                    raise BoundaryZeroError(
                        f"persistent boundary zero near {cell}; "
                        "perturb the search rectangle"
                    )
                next_frontier.append((cell.dilated(_DILATIONS[retry + 1]), retry + 1))
                continue
            if c.winding == 0:
                continue
            if c.winding == 1:
                newton_cells.append(cell)
            elif cell.size <= max(4.0 * tol, 4e-6 * max(1.0, abs(cell.center))):
                # zeros closer than this are not separable by contours at
                # the 1e-12 modulus floor; report the cluster through the
                # argument-principle centroid (exact for an m-fold zero)
                if cell.size > tol:
                    warnings.warn(
                        f"zero cluster of order {c.winding} near "
                        f"{cell.center:.6g} merged at contour resolution",
                        RuntimeWarning,
                    )
                found.append((c.zero_centroid(), c.winding))
            else:
                # jitter the split lines after boundary-zero retries so a
                # zero sitting exactly on a dyadic line stops being hit;
                # fresh children start their own retry ladder
                jitter = 0.5 + 0.0173 * retry
                next_frontier.extend((child, 0) for child in
                                     cell.quadrisect(jitter, jitter))
        if newton_cells:
            seeds = [cell.center for cell in newton_cells]
            zs, ok = _newton_polish(f, seeds, newton_cells, tol)
            for cell, z, good in zip(newton_cells, zs, ok):
                if good:
                    found.append((complex(z), 1))
                elif cell.size < tol:
                    warnings.warn(
                        f"Newton refinement failed near {cell.center:.6g}; "
                        "reporting the cell center",
                        RuntimeWarning,
                    )
                    found.append((cell.center, 1))
                else:
                    # shrink the cell so the next seed starts nearer the zero
                    next_frontier.extend((child, 0) for child in cell.quadrisect())
        frontier = next_frontier
    if frontier:
        raise RuntimeError("zero search did not settle; frontier still active")

    merged = _merge_clusters(found, tol)
    merged = [(z, m) for z, m in merged if outer.contains(z, margin=1e-9 * outer.size)]
    got = sum(m for _, m in merged)
    if got != total:
        raise RuntimeError(
            f"zero count mismatch: contour says {total}, found {got}; "
            "perturb the rectangle or tighten tol"
        )
    return ResonanceList(tuple(merged))


def _merge_clusters(found, tol):
    merged = []
    for z, m in sorted(found, key=lambda e: (e[0].real, e[0].imag)):
        for i, (zi, mi) in enumerate(merged):
            d = abs(z - zi)
            if d <= max(1e-9 * max(1.0, abs(zi)), 1e-3 * tol):
                # the same zero, seen twice through a dilation overlap band
                merged[i] = (zi, max(mi, m))
                break
            if d <= tol:
                merged[i] = ((zi * mi + z * m) / (mi + m), mi + m)
                break
        else:
            merged.append((z, m))
    return merged


# --- verification reports ----------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + 1e-9

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: {self.lhs:.6g} <= {self.rhs:.6g}"


@dataclass(frozen=True)
class BoundReport:
    checks: tuple = ()

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]

    def extend(self, other: "BoundReport") -> "BoundReport":
        return BoundReport(self.checks + other.checks)


def verify_bounds_p(pot, eigenvalues: ResonanceList, res: ResonanceList) -> BoundReport:
    """Instantiate the eigenvalue/resonance magnitude bounds of the class-P
    Dirichlet problem for every entry of the two lists."""
    from .potentials import constants_p, norms

    cs = constants_p(pot)
    np_, nq = norms(pot.p), norms(pot.q)
    gamma = pot.gamma
    eig_cap = cs.c1 * (1.0 + np.exp(2.0 * np_.l1))
    im_cap = 0.5 * gamma * (nq.l2 + 2.0 * np_.l2) ** 4
    is_real = pot.p.is_real and pot.q.is_real

    checks = []
    for z, _ in eigenvalues:
        checks.append(BoundCheck(f"eig |k|<=C1(1+e^(2||p||1)) [k={z:.6g}]", abs(z), eig_cap))
        checks.append(BoundCheck(f"eig Im k >= 0 [k={z:.6g}]", 0.0, z.imag))
        if abs(z) >= 1.0:
            checks.append(BoundCheck(
                f"eig Im k <= (gamma/2)(||q||2+2||p||2)^4 [k={z:.6g}]", z.imag, im_cap))
        if is_real:
            checks.append(BoundCheck(f"eig Re k <= p_plus(+1e-6) [k={z:.6g}]",
                                     z.real, cs.p_plus + 1e-6))
            checks.append(BoundCheck(f"eig Re k >= p_minus(-1e-6) [k={z:.6g}]",
                                     cs.p_minus - 1e-6, z.real))
    for z, _ in res:
        cap = cs.c1 * np.exp(min(cs.c2 + 2.0 * gamma * abs(z.imag), 700.0))
        checks.append(BoundCheck(f"res |r|<=C1 e^(C2+2 gamma |Im r|) [r={z:.6g}]",
                                 abs(z), cap))
    return BoundReport(tuple(checks))


def fit_forbidden_constant(res: ResonanceList, gamma: float, eps: float) -> float:
    """Smallest C >= 0 with 2 gamma Im r <= ln(eps + C/|r|) for every entry."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = 0.0
    for z, _ in res:
        if z == 0:
            continue
        c = max(c, abs(z) * max(0.0, np.exp(2.0 * gamma * z.imag) - eps))
    return c


def verify_counting_and_forbidden(pot_or_v, res: ResonanceList, eps: float,
                                  r_values=None,
                                  extra_zeros: ResonanceList | None = None) -> BoundReport:
    """Counting bound (class P only) and forbidden-domain report.

    `extra_zeros` (e.g. eigenvalues) are included in the counting function;
    the forbidden-domain constant is fitted on the resonance list itself.
    """
    from .potentials import PotentialP, constants_p

    checks = []
    gamma = pot_or_v.gamma
    all_entries = list(res.entries) + (list(extra_zeros.entries) if extra_zeros else [])
    full = ResonanceList(tuple(all_entries))
    if isinstance(pot_or_v, PotentialP):
        cs = constants_p(pot_or_v)
        slope = 4.0 * gamma / (np.pi * np.log(2.0))
        radii = r_values if r_values is not None else range(1, 51)
        for r in radii:
            checks.append(BoundCheck(
                f"N({r}) <= (4 gamma/(pi log 2)) r + C3",
                float(counting_function(full, float(r))),
                slope * float(r) + cs.c3,
            ))
    c_fit = fit_forbidden_constant(res, gamma, eps)
    for z, _ in res.entries:
        if z == 0:
            continue
        checks.append(BoundCheck(
            f"2 gamma Im r <= ln(eps + C/|r|) [r={z:.6g}, C={c_fit:.4g}]",
            2.0 * gamma * z.imag,
            float(np.log(eps + c_fit / abs(z))),
        ))
    if res.entries:
        depths = sorted(-z.imag for z, _ in res.entries)
        a_cut = depths[len(depths) // 2] if depths else 1.0
        in_strip = sum(m for z, m in res.entries if z.imag > -a_cut)
        checks.append(BoundCheck(
            f"finitely many resonances in 0 > Im z > -{a_cut:.4g}",
            float(in_strip), float(res.total_multiplicity())))
    return BoundReport(tuple(checks))


def winding_index_S(table) -> int:
    """Winding index of a scattering matrix over its real k-grid: the
    accumulated continuous argument divided by 2 pi."""
    s = np.asarray(table.s_values, dtype=complex)
    steps = np.angle(s[1:] / s[:-1])
    if np.max(np.abs(steps), initial=0.0) > PHASE_STEP_LIMIT:
        raise ValueError("phase step above pi/2 between samples: grid too coarse")
    return int(np.rint(np.sum(steps) / (2.0 * np.pi)))


# --- resonance CSV -----------------------------------------------------------


def save_resonances(lst: ResonanceList, path: str, gamma=None, tol=None, rect=None):
    """Rows `Re k, Im k, multiplicity`; header carries gamma, tol and rect."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            rect_s = (f"{rect.re_min!r}:{rect.re_max!r}:{rect.im_min!r}:{rect.im_max!r}"
                      if rect is not None else "None")
            gamma_s = repr(float(gamma)) if gamma is not None else "None"
            tol_s = repr(float(tol)) if tol is not None else "None"
            fh.write(f"# gamma={gamma_s} tol={tol_s} rect={rect_s}\n")
            fh.write("re_k,im_k,multiplicity\n")
            for z, m in lst.entries:
                fh.write(f"{float(z.real)!r},{float(z.imag)!r},{m}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_resonances(path: str):
    """Returns (ResonanceList, metadata dict)."""
    meta = {}
    entries = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = val
                continue
            if line.startswith("re_k"):
                continue
            re_k, im_k, mult = line.split(",")
            entries.append((complex(float(re_k), float(im_k)), int(mult)))
    return ResonanceList(tuple(entries)), meta
