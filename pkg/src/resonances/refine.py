"""Eigenvalue refinement for quadratic pencils.

The companion-QR pass is backward stable on the 2n x 2n companion matrix,
whose norm grows like n^4; combined with the strong non-normality of the
collocated operators this limits raw eigenvalues to ~1e-5 accuracy for
deeper overtones.  Refinement recovers them:

* two-sided Rayleigh iteration in double precision (cheap, also yields
  the eigenvector used for the residual contract);
* Newton on det P(lambda) in 80-bit extended precision for clusters the
  double-precision pass cannot resolve;
* an mpmath fallback for defective clusters (multiplicity >= 2), whose
  eigenvalue condition scales like the square of the simple case.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

LD = np.longdouble
CLD = np.clongdouble

#: True when the platform longdouble is genuinely wider than float64.
HAVE_EXTENDED = np.finfo(LD).eps < 1e-18


class _quiet(warnings.catch_warnings):
    """Silence the expected near-singular warnings of inverse iteration."""

    def __enter__(self):
        super().__enter__()
        warnings.simplefilter("ignore", LinAlgWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        return self


def det_lu(a):
    """Determinant by LU with partial pivoting; dtype-preserving.

    Hand-rolled so it runs in clongdouble, which LAPACK does not cover.
    """
    a = a.copy()
    n = a.shape[0]
    det = a.dtype.type(1.0)
    for k in range(n - 1):
        p = int(np.argmax(np.abs(a[k:, k]))) + k
        if p != k:
            a[[k, p]] = a[[p, k]]
            det = -det
        piv = a[k, k]
        if piv == 0:
            return a.dtype.type(0.0)
        det *= piv
        a[k + 1:, k] /= piv
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return det * a[-1, -1]


def rqi_refine(a2, a1, a0, lam, maxit=10, seed=0):
    """Two-sided Rayleigh-quotient iteration in double precision.

    Returns (lambda, right_vector, step_floor).  The step floor, the
    smallest correction seen, estimates the attainable accuracy
    eps * kappa(lambda); the returned vector is the inverse-iteration
    eigenvector at the refined eigenvalue.
    """
    n = a2.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    best, best_step, best_v = lam, np.inf, v
    with _quiet():
        for _ in range(maxit):
            p = a2 + lam * (a1 + lam * a0)
            try:
                lu = lu_factor(p, check_finite=False)
                v = lu_solve(lu, v, check_finite=False)
                nv = np.linalg.norm(v)
                u = lu_solve(lu, u, trans=2, check_finite=False)
                nu = np.linalg.norm(u)
            except Exception:
                break
            if not (np.isfinite(nv) and np.isfinite(nu)) or nv == 0 or nu == 0:
                break
            v /= nv
            u /= nu
            den = u.conj() @ ((a1 + 2.0 * lam * a0) @ v)
            if den == 0 or not np.isfinite(den):
                break
            step = (u.conj() @ (p @ v)) / den
            if not np.isfinite(step):
                break
            lam = lam - step
            if abs(step) < best_step:
                best, best_step, best_v = lam, abs(step), v
            if abs(step) < 1e-14 * max(1.0, abs(lam)):
                break
    return best, best_v, best_step


def newton_det_refine(a2, a1, a0, lam, mult=1, maxit=8, tol=1e-16):
    """Multiplicity-aware Newton on det P(lambda) in extended precision.

    a2, a1, a0 must already be clongdouble.  Uses a one-sided finite
    difference for det' (two determinants per step) and stops when the
    steps start bouncing inside the conditioning noise ball.  Returns
    (lambda, step_floor) with the iterate of smallest step, which is the
    accurate one even after bouncing sets in.
    """
    lam = CLD(lam)
    best, best_step = lam, np.inf
    grew = 0
    for _ in range(maxit):
        h = LD(1e-10) * max(LD(1.0), abs(lam))
        d0 = det_lu(a2 + lam * (a1 + lam * a0))
        lp = lam + h
        dp = (det_lu(a2 + lp * (a1 + lp * a0)) - d0) / h
        if dp == 0 or not np.isfinite(abs(dp)):
            break
        step = CLD(mult) * d0 / dp
        lam = lam - step
        if abs(step) < best_step:
            best, best_step = lam, abs(step)
            grew = 0
        else:
            grew += 1
            if grew >= 2:
                break
        if abs(step) < tol * max(1.0, abs(lam)):
            break
    return complex(best), float(best_step)


def mp_det_refine(a2, a1, a0, lam, mult=1, dps=30, maxit=12):
    """mpmath Newton on det P(lambda) for defective clusters.

    Slow (seconds per call) and therefore reserved for multiplicity >= 2
    clusters where even extended precision loses too many digits.
    """
    import mpmath as mp

    n = a2.shape[0]
    with mp.workdps(dps):
        A2, A1, A0 = (mp.matrix(n, n) for _ in range(3))
        for i in range(n):
            for j in range(n):
                A2[i, j] = mp.mpc(complex(a2[i, j]))
                A1[i, j] = mp.mpc(complex(a1[i, j]))
                A0[i, j] = mp.mpc(complex(a0[i, j]))

        def det(z):
            return mp.det(A2 + z * A1 + (z * z) * A0)

        lam = mp.mpc(complex(lam))
        h = mp.mpf(10) ** (-dps // 3)
        best, best_step = lam, mp.inf
        for _ in range(maxit):
            d0 = det(lam)
            dp = (det(lam + h) - det(lam - h)) / (2 * h)
            if dp == 0:
                break
            step = mult * d0 / dp
            lam = lam - step
            if abs(step) < abs(best_step):
                best, best_step = lam, abs(step)
            if abs(step) < mp.mpf(10) ** (-(dps - 10)) * max(1, abs(lam)):
                break
        return complex(best), float(best_step)
