"""Multiplicity clustering, counting functions and the pseudopole lattice.

Counting is always performed inside a trust window {|lam| <= r,
Im lam >= -Gamma}: numerically validated spectra exist only there, so
full-disk counts would be meaningless.  Multiplicities combine the
clustered eigenvalue count with the degeneracy weight carried by each
entry (2l+1 for the spherically symmetric model, 2 for +-m pairs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParameterError, WindowError
from .spectral import Spectrum, Window

__all__ = [
    "Resonance",
    "CountingCurve",
    "PseudoLattice",
    "LatticePoint",
    "MatchReport",
    "cluster_multiplicities",
    "counting_curve",
    "fit_exponent",
    "build_lattice",
    "match_lattice",
]

ZERO_TOL = 1e-6


@dataclass(frozen=True)
class Resonance:
    lam: complex
    multiplicity: int
    mode_index: int = 0
    sector: str = ""


@dataclass
class CountingCurve:
    radii: np.ndarray
    counts: np.ndarray
    region: Window

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ParameterError("radii must be strictly increasing")
        if np.any(np.diff(self.counts) < 0):
            raise ParameterError("counts must be nondecreasing")


@dataclass(frozen=True)
class LatticePoint:
    lam: complex
    multiplicity: int
    sign: int
    ell: int
    k: int


@dataclass
class PseudoLattice:
    c: float
    points: list
    signs: str = "correlated"


@dataclass
class MatchReport:
    distances: dict            # ell -> distance of the (ell, k=0) mode
    nonincreasing_top_half: bool
    unmatched_lattice: list
    pairs: list                # (resonance, lattice point)


def cluster_multiplicities(spec: Spectrum, cluster_tol: float,
                           zero_tol: float = ZERO_TOL) -> list:
    """Accepted eigenvalues clustered into resonances with multiplicities.

    Single-linkage clustering with diameter <= cluster_tol, applied per
    (mode index, sector) group; the resonance multiplicity is the sum of
    the degeneracy weights of the cluster members, and its position the
    cluster mean.  Flagged zero modes are excluded.  Clusters whose
    diameter is within a factor 2 of the gap to the nearest neighbour
    get an ambiguity warning attached to the returned list.
    """
    groups = {}
    for e in spec.accepted():
        if e.zero or abs(e.lam) <= zero_tol:
            continue
        groups.setdefault((e.mode_index, e.sector), []).append(e)

    out = []
    warnings = []
    for (mode, sector), entries in sorted(groups.items()):
        entries.sort(key=lambda e: (e.lam.real, e.lam.imag))
        clusters = []
        for e in entries:
            for cl in clusters:
                if any(abs(e.lam - o.lam) <= cluster_tol for o in cl):
                    cl.append(e)
                    break
            else:
                clusters.append([e])
        centers = [np.mean([e.lam for e in cl]) for cl in clusters]
        for i, cl in enumerate(clusters):
            diam = max((abs(a.lam - b.lam) for a in cl for b in cl), default=0.0)
            gap = min((abs(centers[i] - centers[j]) for j in range(len(centers))
                       if j != i), default=math.inf)
            if diam > 0 and gap < 2.0 * diam:
                warnings.append(
                    f"mode {mode}{'/' + sector if sector else ''}: cluster at "
                    f"{centers[i]:.6g} has diameter {diam:.2g} vs gap {gap:.2g}"
                )
            out.append(Resonance(
                lam=complex(centers[i]),
                multiplicity=sum(e.weight for e in cl),
                mode_index=mode, sector=sector,
            ))
    out.sort(key=lambda r: (r.mode_index, r.lam.real, r.lam.imag))
    if warnings:
        out = _WarnedList(out, warnings)
    return out


class _WarnedList(list):
    """List of resonances with clustering-ambiguity warnings attached."""

    def __init__(self, items, warnings):
        super().__init__(items)
        self.warnings = list(warnings)


def counting_curve(resonances, region: Window, radii,
                   trust: Window = None) -> CountingCurve:
    """Multiplicity-weighted counts N(r) for each radius, inside region.

    `trust` is the window the spectrum was filtered in; a region that
    exceeds it is refused, since counts there would be meaningless.
    """
    if trust is not None and not region.within(trust):
        raise WindowError(
            f"counting region (rmax={region.rmax}, gamma={region.gamma}) exceeds "
            f"the trust window (rmax={trust.rmax}, gamma={trust.gamma})"
        )
    radii = np.asarray(sorted(float(r) for r in radii))
    lams = np.array([r.lam for r in resonances], dtype=complex)
    mults = np.array([r.multiplicity for r in resonances], dtype=int)
    counts = np.zeros(len(radii), dtype=int)
    if len(lams):
        inside = region.contains(lams)
        for i, r in enumerate(radii):
            counts[i] = int(np.sum(mults[inside & (np.abs(lams) <= r)]))
    return CountingCurve(radii=radii, counts=counts, region=region)


def fit_exponent(curve: CountingCurve, r_min: float, r_max: float) -> tuple:
    """Least-squares slope of log N against log r with its standard error."""
    sel = (curve.radii >= r_min) & (curve.radii <= r_max) & (curve.counts >= 1)
    if int(np.sum(sel)) < 6:
        raise InsufficientDataError(
            f"need >= 6 radii with nonzero counts in [{r_min}, {r_max}], "
            f"got {int(np.sum(sel))}"
        )
    x = np.log(curve.radii[sel])
    y = np.log(curve.counts[sel].astype(float))
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - ym - slope * (x - xm)
    if n > 2:
        stderr = math.sqrt(float(np.sum(resid**2)) / (n - 2) / sxx)
    else:
        stderr = 0.0
    return slope, stderr


def build_lattice(c: float, ell_max: int, k_max: int,
                  signs: str = "correlated") -> PseudoLattice:
    """Pseudopole lattice c (+-(l + 1/2) - i(k + 1/2)), multiplicity 2l+1.

    signs="correlated" reads the sign ambiguity as +-(l + 1/2) (two
    points per (l, k)); signs="independent" emits all four combinations
    +-l +- 1/2.
    """
    if not c > 0:
        raise ParameterError("lattice constant c must be positive")
    if signs not in ("correlated", "independent"):
        raise ParameterError(f"unknown sign convention {signs!r}")
    points = []
    for ell in range(1, ell_max + 1):
        for k in range(0, k_max + 1):
            if signs == "correlated":
                reals = {+1: ell + 0.5, -1: -(ell + 0.5)}
            else:
                reals = {}
                for s_ell in (+1, -1):
                    for s_half in (+1, -1):
                        reals[(s_ell, s_half)] = s_ell * ell + s_half * 0.5
            for sgn, re_part in reals.items():
                points.append(LatticePoint(
                    lam=c * complex(re_part, -(k + 0.5)),
                    multiplicity=2 * ell + 1,
                    sign=sgn if isinstance(sgn, int) else sgn[0],
                    ell=ell, k=k,
                ))
    return PseudoLattice(c=c, points=points, signs=signs)


def match_lattice(resonances, lattice: PseudoLattice,
                  window: Window = None) -> MatchReport:
    """Mutual-nearest matching of computed resonances to lattice points.

    Reports the per-ell distance d(ell) of the fundamental (k = 0,
    Re > 0) mode to its lattice point, whether d is nonincreasing over
    the top half of the ell range, and lattice points inside the window
    that drew no computed partner.
    """
    res = list(resonances)
    if not res:
        return MatchReport({}, True, [], [])
    pairs = []
    used = set()
    for r in res:
        if not lattice.points:
            break
        d = [abs(r.lam - p.lam) for p in lattice.points]
        j = int(np.argmin(d))
        back = min(res, key=lambda q: abs(q.lam - lattice.points[j].lam))
        if back is r:
            pairs.append((r, lattice.points[j]))
            used.add(j)

    fundamentals = {}
    for r in res:
        if r.lam.real <= 0:
            continue
        ell = r.mode_index
        if ell not in fundamentals or abs(r.lam.imag) < abs(fundamentals[ell].lam.imag):
            fundamentals[ell] = r
    distances = {}
    for ell, r in sorted(fundamentals.items()):
        target = [p for p in lattice.points if p.ell == ell and p.k == 0
                  and p.lam.real > 0]
        if target:
            distances[ell] = float(abs(r.lam - target[0].lam))
    ells = sorted(distances)
    top = ells[len(ells) // 2:]
    noninc = all(distances[a] >= distances[b] - 1e-15
                 for a, b in zip(top, top[1:]))

    unmatched = []
    if window is not None:
        matched_ells = {p.ell for _, p in pairs}
        for j, p in enumerate(lattice.points):
            if j not in used and window.contains(p.lam) and p.ell in set(
                    r.mode_index for r in res):
                if p.k == 0 and p.ell not in matched_ells:
                    unmatched.append(p)
    return MatchReport(distances=distances, nonincreasing_top_half=noninc,
                       unmatched_lattice=unmatched, pairs=pairs)
