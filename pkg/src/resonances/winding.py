"""Argument-principle root location for analytic functions.

Counts zeros inside rectangles by tracking the phase of f along the
boundary, subdivides cells with nonzero winding, and polishes isolated
zeros with Muller iteration.  Multiplicities come from the winding
number of a small verification contour, so double zeros (the defective
resonances of the symmetric models) are reported with multiplicity 2.
"""

from __future__ import annotations

import cmath
import math

from .errors import ConvergenceError

__all__ = ["muller", "winding_number", "find_zeros_rect"]


def muller(f, z0: complex, tol: float = 1e-12, maxit: int = 60) -> complex:
    """Muller's method from a single starting point.

    Derivative-free and tolerant of multiple roots (order drops to ~1.23
    there, hence the generous iteration cap).
    """
    h = 1e-4 * max(1.0, abs(z0))
    pts = [z0 + h, z0 - h * (0.5 + 0.5j), z0]
    vals = [f(z) for z in pts]
    best = min(zip(pts, vals), key=lambda t: abs(t[1]))
    for _ in range(maxit):
        (a, fa), (b, fb), (c, fc) = zip(pts[-3:], vals[-3:])
        if c == b or b == a:
            break
        q = (c - b) / (b - a)
        A = q * fc - q * (1 + q) * fb + q * q * fa
        B = (2 * q + 1) * fc - (1 + q) ** 2 * fb + q * q * fa
        C = (1 + q) * fc
        disc = cmath.sqrt(B * B - 4 * A * C)
        den = B + disc if abs(B + disc) >= abs(B - disc) else B - disc
        if den == 0:
            break
        z = c - (c - b) * 2 * C / den
        fz = f(z)
        pts.append(z)
        vals.append(fz)
        if abs(fz) < abs(best[1]):
            best = (z, fz)
        if abs(z - c) < tol * max(1.0, abs(z)):
            return z
    return best[0]


def _phase_increments(f, z1, z2, f1, f2, depth, max_depth):
    """Total phase change of f along the segment [z1, z2], adaptively.

    Refines on large phase steps and on large magnitude steps: a segment
    passing close to a zero can alias a near-2 pi phase spin into a small
    measured step while |f| dips, so the magnitude gate is what makes the
    tracking reliable there.
    """
    if abs(f1) == 0 or abs(f2) == 0:
        raise ConvergenceError("zero of f on the contour")
    if not (cmath.isfinite(f1) and cmath.isfinite(f2)):
        raise ConvergenceError("non-finite value of f on the contour")
    dphi = cmath.phase(f2 / f1)
    if abs(dphi) < 1.9 and abs(math.log(abs(f2) / abs(f1))) < 1.2:
        return dphi
    if depth >= max_depth:
        raise ConvergenceError(
            "winding-number refinement failure: phase step stays too large"
        )
    zm = 0.5 * (z1 + z2)
    fm = f(zm)
    return (_phase_increments(f, z1, zm, f1, fm, depth + 1, max_depth)
            + _phase_increments(f, zm, z2, fm, f2, depth + 1, max_depth))


def winding_number(f, zmin: complex, zmax: complex, samples_per_edge: int = 8,
                   max_depth: int = 28) -> int:
    """Number of zeros (with multiplicity) of f inside the rectangle.

    The rectangle has corners zmin (lower left) and zmax (upper right).
    Raises ConvergenceError when the phase cannot be tracked, e.g. when a
    zero sits on the boundary.
    """
    corners = [zmin, complex(zmax.real, zmin.imag), zmax,
               complex(zmin.real, zmax.imag), zmin]
    total = 0.0
    prev_z = corners[0]
    prev_f = f(prev_z)
    mags = [abs(prev_f)]
    for corner in corners[1:]:
        edge_start = prev_z
        for k in range(1, samples_per_edge + 1):
            z = edge_start + (corner - edge_start) * k / samples_per_edge
            fz = f(z)
            mags.append(abs(fz))
            total += _phase_increments(f, prev_z, z, prev_f, fz, 0, max_depth)
            prev_z, prev_f = z, fz
    if min(mags) < 1e-9 * max(mags):
        # a sample grazes a zero: the phase there is meaningless even
        # though tracking may have silently succeeded
        raise ConvergenceError("contour passes too close to a zero of f")
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 0.2:
        raise ConvergenceError(
            f"winding-number refinement failure: non-integer winding {w:.3f}"
        )
    return int(round(w))


def find_zeros_rect(f, zmin: complex, zmax: complex, refine_tol: float = 1e-10,
                    min_cell: float = 1e-4, max_cells: int = 4096) -> list:
    """All zeros of f in a rectangle, as (location, multiplicity) pairs.

    Recursive quadrisection: cells with zero winding are dropped; small
    cells are polished with Muller and the multiplicity verified on a
    tiny circle... rectangle around the refined zero.  Windows whose
    boundary passes through a zero are jittered deterministically.
    """
    cache = {}
    raw_f = f

    def f(z):
        v = cache.get(z)
        if v is None:
            v = raw_f(z)
            cache[z] = v
        return v

    zeros = []
    stack = [(zmin, zmax)]
    budget = max_cells
    while stack:
        lo, hi = stack.pop()
        budget -= 1
        if budget < 0:
            raise ConvergenceError("zero search exceeded its cell budget")
        w = _winding_with_jitter(f, lo, hi)
        if w == 0:
            continue
        diam = abs(hi - lo)
        if diam > min_cell:
            # split slightly off-center so subdivision lines (and the
            # corners they create) generically avoid zeros
            mid = lo + (hi - lo).real * 0.5182 + 1j * (hi - lo).imag * 0.5313
            stack.extend(_quadrants(lo, hi, mid))
            continue
        center = 0.5 * (lo + hi)
        z = muller(f, center, tol=refine_tol)
        if not (lo.real - diam <= z.real <= hi.real + diam
                and lo.imag - diam <= z.imag <= hi.imag + diam):
            z = center
        r = max(4 * refine_tol, 1e-3 * diam, 1e-12)
        mult = None
        for rr in (r, 8 * r, 64 * r):
            try:
                mult = _winding_with_jitter(
                    f, z - rr * (1 + 1j), z + rr * (1 + 1j))
                break
            except ConvergenceError:
                continue
        zeros.append((z, int(mult if mult else w)))
    merged = []
    for z, m in sorted(zeros, key=lambda t: (t[0].real, t[0].imag)):
        dup = None
        for i, (zm, mm) in enumerate(merged):
            if abs(zm - z) < max(1e-4 * max(1, abs(z)), 10 * refine_tol):
                dup = i
                break
        if dup is None:
            merged.append((z, m))
        else:
            # the same (possibly multiple) zero refined from two adjacent
            # cells: keep one representative, multiplicities agree
            zm, mm = merged[dup]
            merged[dup] = (0.5 * (zm + z), max(mm, m))
    return merged


def _quadrants(lo, hi, mid):
    return [
        (lo, mid),
        (complex(mid.real, lo.imag), complex(hi.real, mid.imag)),
        (complex(lo.real, mid.imag), complex(mid.real, hi.imag)),
        (mid, hi),
    ]


def _winding_with_jitter(f, lo, hi, tries: int = 4):
    """Winding number, nudging the rectangle if a zero sits on the contour."""
    scale = abs(hi - lo)
    for k in range(tries):
        eps = scale * 6.18e-4 * k * (1 + 1j)
        try:
            return winding_number(f, lo - eps, hi + eps)
        except ConvergenceError:
            if k == tries - 1:
                raise
    raise ConvergenceError("winding evaluation failed")  # pragma: no cover
