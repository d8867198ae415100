"""Generic spectral machinery.

Chebyshev collocation grids, quadratic-pencil containers, the companion
linearization, the dense eigensolver, eigenvalue refinement and the
resolution-doubling filter.  Everything here is model-agnostic; the SdS
and funnel modules only assemble coefficient matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import refine as _refine
from .errors import (
    ConfigError,
    ConvergenceError,
    LinearizationError,
    MisuseError,
    ParameterError,
)

LD = np.longdouble
CLD = np.clongdouble
PI_LD = np.arccos(LD(-1.0))

__all__ = [
    "CollocationGrid",
    "PencilMatrices",
    "Spectrum",
    "SpectrumEntry",
    "Window",
    "RefineOptions",
    "build_grid",
    "linearize",
    "eig_dense",
    "solve_pencil",
    "filter_spectrum",
    "unpaired_entries",
]


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollocationGrid:
    """Chebyshev extreme points on [a, b] with differentiation matrices.

    nodes/d1/d2 are float64 views; nodes_x/d1_x/d2_x carry the same data
    in extended precision for pencil assembly (refinement needs matrix
    entries accurate beyond 1e-16).
    """

    n: int
    a: float
    b: float
    nodes: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    nodes_x: np.ndarray = field(repr=False, default=None)
    d1_x: np.ndarray = field(repr=False, default=None)
    d2_x: np.ndarray = field(repr=False, default=None)


def build_grid(n: int, a: float, b: float) -> CollocationGrid:
    """Chebyshev-point grid on [a, b] with first/second derivative matrices.

    Nodes are ascending and include both endpoints.  The matrices are
    built in extended precision (standard differencing formula with the
    negative-sum diagonal) and rounded to float64 views.
    """
    if n < 8:
        raise ConfigError(f"grid needs n >= 8 nodes, got {n}")
    if not a < b:
        raise ConfigError(f"interval endpoints must satisfy a < b, got [{a}, {b}]")
    j = np.arange(n)
    theta = PI_LD * j.astype(LD) / LD(n - 1)
    x = np.cos(theta)  # 1 .. -1
    aL, bL = LD(a), LD(b)
    nodes = (aL + bL) / 2 - (bL - aL) / 2 * x  # ascending a .. b
    c = np.ones(n, dtype=LD)
    c[0] = 2.0
    c[-1] = 2.0
    c *= (-1.0) ** j
    diff = nodes[:, None] - nodes[None, :] + np.eye(n, dtype=LD)
    d1 = np.outer(c, 1.0 / c) / diff
    d1 -= np.diag(d1.sum(axis=1))
    d2 = d1 @ d1
    return CollocationGrid(
        n=n, a=float(a), b=float(b),
        nodes=nodes.astype(float), d1=d1.astype(float), d2=d2.astype(float),
        nodes_x=nodes, d1_x=d1, d2_x=d2,
    )


# ---------------------------------------------------------------------------
# pencils
# ---------------------------------------------------------------------------

@dataclass
class PencilMatrices:
    """Dense coefficients of the quadratic pencil (a2 + lam a1 + lam^2 a0).

    The constant term a2 carries the highest differential order; a0 is
    diagonal and invertible for every in-scope model.  a2x/a1x/a0x are
    optional clongdouble copies used by the refinement ladder.
    """

    a2: np.ndarray
    a1: np.ndarray
    a0: np.ndarray
    meta: dict = field(default_factory=dict)
    a2x: Optional[np.ndarray] = field(repr=False, default=None)
    a1x: Optional[np.ndarray] = field(repr=False, default=None)
    a0x: Optional[np.ndarray] = field(repr=False, default=None)
    #: optional dps -> (A2, A1, A0) mp-matrix factory; defective clusters
    #: need entries beyond extended precision (their eigenvalue error
    #: scales like the square root of the entry error)
    mp_builder: Optional[object] = field(repr=False, default=None, compare=False)

    @property
    def n(self) -> int:
        return self.a2.shape[0]

    def __post_init__(self):
        for name in ("a2", "a1", "a0"):
            m = getattr(self, name)
            if m.shape != (self.n, self.n):
                raise ParameterError(f"{name} must be square of matching size")

    def value(self, lam: complex) -> np.ndarray:
        return self.a2 + lam * (self.a1 + lam * self.a0)

    def has_extended(self) -> bool:
        return self.a2x is not None and _refine.HAVE_EXTENDED


def linearize(p: PencilMatrices):
    """First-companion linearization with the leading coefficient folded in.

    Returns (b, c) with c the identity, so that the generalized problem
    b z = lam c z is the plain eigenproblem of the 2n x 2n companion
    matrix; its eigenvalues are exactly the pencil eigenvalues.
    """
    n = p.n
    diag = np.diag(p.a0)
    if not np.allclose(p.a0, np.diag(diag)):
        raise LinearizationError("a0 is expected to be diagonal for in-scope models")
    amax, amin = np.max(np.abs(diag)), np.min(np.abs(diag))
    if amin == 0 or amax / amin > 1e12:
        raise LinearizationError(
            f"a0 numerically singular (condition estimate {amax/max(amin, 1e-300):.2e})"
        )
    b = np.zeros((2 * n, 2 * n), dtype=complex)
    b[:n, n:] = np.eye(n)
    b[n:, :n] = -p.a2 / diag[:, None]
    b[n:, n:] = -p.a1 / diag[:, None]
    return b, np.eye(2 * n, dtype=complex)


def eig_dense(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a general dense complex matrix.

    Delegates to LAPACK's zgeev (balancing, Hessenberg reduction, shifted
    QR with deflation).  Non-convergence surfaces as ConvergenceError.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError("eig_dense expects a square matrix")
    if not np.all(np.isfinite(m)):
        raise ParameterError("matrix entries must be finite")
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(f"QR iteration did not converge: {exc}") from exc


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    """Trust region {|lam| <= rmax, Im lam >= -gamma}; gamma=inf is a disk."""

    rmax: float
    gamma: float = math.inf

    def contains(self, lam) -> np.ndarray:
        lam = np.asarray(lam)
        return (np.abs(lam) <= self.rmax) & (lam.imag >= -self.gamma)

    def within(self, other: "Window") -> bool:
        return self.rmax <= other.rmax and self.gamma <= other.gamma


@dataclass
class SpectrumEntry:
    lam: complex
    residual: float
    accepted: bool = False
    mode_index: int = 0
    resolution: int = 0
    weight: int = 1
    drift: Optional[float] = None
    zero: bool = False
    sector: str = ""


@dataclass
class Spectrum:
    """Eigenvalue records of one or several pencil solves."""

    entries: list
    window: Optional[Window] = None
    meta: dict = field(default_factory=dict)

    def values(self, accepted_only: bool = False) -> np.ndarray:
        es = self.accepted() if accepted_only else self.entries
        return np.array([e.lam for e in es], dtype=complex)

    def accepted(self) -> list:
        return [e for e in self.entries if e.accepted]

    def merged_with(self, other: "Spectrum") -> "Spectrum":
        ent = sorted(
            self.entries + other.entries,
            key=lambda e: (e.mode_index, e.lam.real, e.lam.imag),
        )
        return Spectrum(ent, window=self.window or other.window,
                        meta={**other.meta, **self.meta})


@dataclass(frozen=True)
class RefineOptions:
    """Controls the refinement ladder applied after the companion QR pass."""

    enabled: bool = True
    rqi_target: float = 1e-10
    extended: bool = True
    mp_for_multiple: bool = False
    mp_dps: int = 30
    pre_cluster_tol: float = 2e-3
    max_cluster: int = 4


ZERO_TOL = 1e-6


def solve_pencil(p: PencilMatrices, window: Optional[Window] = None,
                 options: RefineOptions = RefineOptions(),
                 mode_index: int = 0, weight: int = 1) -> Spectrum:
    """All 2n pencil eigenvalues with residuals; nothing accepted yet.

    Eigenvalues inside `window` are refined (Rayleigh iteration, then
    extended-precision Newton on the determinant where the double
    precision floor is not enough).  Residuals use the inverse-iteration
    eigenvector at the reported eigenvalue, normalized by
    ||a2|| + |lam| ||a1|| + |lam|^2 ||a0||.
    """
    b, _ = linearize(p)
    raw = eig_dense(b)
    n = p.n
    norms = (np.linalg.norm(p.a2), np.linalg.norm(p.a1), np.linalg.norm(p.a0))

    values = list(raw)
    refined_flag = [False] * len(values)
    if options.enabled and window is not None:
        idx = [i for i, z in enumerate(values)
               if window.contains(z) and abs(z) > ZERO_TOL]
        clusters = _single_linkage([values[i] for i in idx],
                                   [i for i in idx], options.pre_cluster_tol)
        for members in clusters:
            size = len(members)
            if size > options.max_cluster:
                continue
            center = np.mean([values[i] for i in members])
            lam_ref, ok = _refine_cluster(p, center, size, options)
            if ok:
                for i in members:
                    values[i] = lam_ref
                    refined_flag[i] = True

    entries = []
    for z, was_refined in zip(values, refined_flag):
        res = _pencil_residual(p, z, norms)
        entries.append(SpectrumEntry(
            lam=complex(z), residual=res, accepted=False,
            mode_index=mode_index, resolution=n, weight=weight,
            zero=abs(z) < ZERO_TOL,
        ))
    entries.sort(key=lambda e: (e.lam.real, e.lam.imag))
    return Spectrum(entries, window=window, meta=dict(p.meta))


def _refine_cluster(p, center, size, options):
    lam = complex(center)
    scale = max(1.0, abs(lam))
    if size == 1:
        lam_rqi, _, floor = _refine.rqi_refine(p.a2, p.a1, p.a0, lam)
        if abs(lam_rqi - lam) > 0.05 * scale:
            return lam, False
        lam = lam_rqi
        # escalate to extended precision only when the double-precision
        # floor is meaningfully above target yet the mode is not hopeless
        if (floor <= options.rqi_target * scale
                or floor > 3e-2 * scale
                or not (options.extended and p.has_extended())):
            return lam, True
        lam_x, _ = _refine.newton_det_refine(p.a2x, p.a1x, p.a0x, lam, mult=1)
        if abs(lam_x - lam) < 0.01 * scale:
            return lam_x, True
        return lam, True
    if options.mp_for_multiple:
        if p.mp_builder is not None:
            from .deep import mp_newton_det

            key = ("_mp_cache", options.mp_dps)
            mats = p.meta.get(key)
            if mats is None:
                mats = p.mp_builder(options.mp_dps)
                p.meta[key] = mats
            lam_mp, _ = mp_newton_det(*mats, lam, options.mp_dps, mult=size)
        else:
            lam_mp, _ = _refine.mp_det_refine(p.a2, p.a1, p.a0, lam, mult=size,
                                              dps=options.mp_dps)
        if abs(lam_mp - lam) < 0.05 * scale:
            return lam_mp, True
    if options.extended and p.has_extended():
        lam_x, _ = _refine.newton_det_refine(p.a2x, p.a1x, p.a0x, lam, mult=size)
        if abs(lam_x - lam) < 0.05 * scale:
            return lam_x, True
    return lam, True


def _pencil_residual(p, lam, norms):
    scale = norms[0] + abs(lam) * norms[1] + abs(lam) ** 2 * norms[2]
    mat = p.value(lam)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(p.n) + 1j * rng.standard_normal(p.n)
    with _refine._quiet():
        try:
            lu = lu_factor(mat, check_finite=False)
            for _ in range(2):
                v = lu_solve(lu, v, check_finite=False)
                nv = np.linalg.norm(v)
                if not np.isfinite(nv) or nv == 0:
                    return math.inf
                v /= nv
        except Exception:
            return math.inf
    return float(np.linalg.norm(mat @ v) / scale)


def _single_linkage(values, tags, rel_tol):
    """Greedy single-linkage clustering; returns lists of tags."""
    order = sorted(range(len(values)), key=lambda i: (values[i].real, values[i].imag))
    clusters = []
    for i in order:
        z = values[i]
        tol = rel_tol * max(1.0, abs(z))
        for cl in clusters:
            if any(abs(z - values[j]) < tol for j in cl):
                cl.append(i)
                break
        else:
            clusters.append([i])
    return [[tags[i] for i in cl] for cl in clusters]


# ---------------------------------------------------------------------------
# resolution-doubling filter
# ---------------------------------------------------------------------------

def filter_spectrum(low: Spectrum, high: Spectrum, drift_tol: float,
                    window: Window) -> Spectrum:
    """Accept eigenvalues present at both resolutions within drift_tol.

    The drift is relative for |lam| > 1 and absolute otherwise.  Matching
    is mutual-nearest; a low-resolution eigenvalue with two candidates
    within tolerance is rejected as ambiguous.  Accepted entries carry
    the high-resolution value and their matched drift.
    """
    res_lo = {e.resolution for e in low.entries}
    res_hi = {e.resolution for e in high.entries}
    if res_lo and res_hi and res_lo == res_hi:
        raise MisuseError("filter_spectrum needs two distinct resolutions")

    lo_in = [e for e in low.entries if window.contains(e.lam)]
    hi_all = high.entries
    hi_vals = np.array([e.lam for e in hi_all], dtype=complex)
    lo_vals = np.array([e.lam for e in lo_in], dtype=complex)

    out = []
    used_hi = set()
    for e in lo_in:
        tol = drift_tol * max(1.0, abs(e.lam))
        d = np.abs(hi_vals - e.lam)
        close = np.nonzero(d < tol)[0]
        if len(close) != 1:
            # several candidates are tolerated only when they are the
            # same refined value repeated (multiplicity cluster); two
            # genuinely distinct candidates are ambiguous and rejected
            identical = len(close) > 1 and all(
                abs(hi_vals[c] - hi_vals[close[0]]) < 1e-12 * max(1.0, abs(e.lam))
                for c in close)
            if not identical:
                continue
        j = int(close[np.argmin(d[close])])
        # mutual-nearest: the chosen high entry must prefer this low entry
        dl = np.abs(lo_vals - hi_vals[j])
        if len(dl) and np.min(dl) < abs(hi_vals[j] - e.lam) - 1e-300:
            back = int(np.argmin(dl))
            if lo_in[back] is not e and abs(lo_vals[back] - e.lam) > 1e-14 * max(1.0, abs(e.lam)):
                continue
        he = hi_all[j]
        out.append(SpectrumEntry(
            lam=he.lam, residual=he.residual, accepted=True,
            mode_index=he.mode_index, resolution=he.resolution,
            weight=he.weight, drift=float(d[j]), zero=he.zero or e.zero,
        ))
        used_hi.add(j)
    out.sort(key=lambda e: (e.lam.real, e.lam.imag))
    meta = {**low.meta, "resolutions": (min(res_lo or {0}), min(res_hi or {0})),
            "drift_tol": drift_tol}
    return Spectrum(out, window=window, meta=meta)


def unpaired_entries(spectrum: Spectrum, pair_tol: float) -> list:
    """Accepted entries without a -conj partner within pair_tol.

    Real-coefficient pencils have spectra closed under lam -> -conj(lam);
    entries on the imaginary axis pair with themselves.  A nonempty
    return value is an acceptance failure for in-scope models.
    """
    acc = spectrum.accepted()
    vals = np.array([e.lam for e in acc], dtype=complex)
    bad = []
    for e in acc:
        target = -np.conj(e.lam)
        tol = pair_tol * max(1.0, abs(e.lam))
        if not np.any(np.abs(vals - target) <= tol):
            bad.append(e)
    return bad
