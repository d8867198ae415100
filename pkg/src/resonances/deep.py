"""Arbitrary-precision overtone ladders for the counting studies.

Eigenvalue condition numbers of the conjugated pencils grow by roughly
seven decimal digits per overtone, so double (and even 80-bit) arithmetic
resolves only the first couple of overtones.  The counting-function
exponents need ladders k ~ 6 deep; this module rebuilds the radial pencil
in mpmath under the plateau-free linear conjugation gauge (whose
low-degree rational coefficients keep the exact-arithmetic discretization
error spectrally small at n ~ 64) and chases individual lattice-guessed
modes with multiprecision determinant Newton at two resolutions.

Results feed the standard Spectrum/counting pipeline; acceptance is the
same two-resolution drift criterion used everywhere else.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .background import SdSParams, photon_sphere_constant
from .spectral import Spectrum, SpectrumEntry, Window

__all__ = ["LadderRequest", "qnm_ladder", "mp_linear_pencil", "mp_newton_det"]


@dataclass(frozen=True)
class LadderRequest:
    params: SdSParams
    ell_min: int = 1
    ell_max: int = 6
    k_max: int = 6
    n_low: int = 64
    n_high: int = 80
    drift_tol: float = 1e-6
    dps_base: int = 40
    dps_per_overtone: int = 8
    workers: int = 1
    #: when positive, per-ell depth is trimmed to the lattice cells whose
    #: modulus can reach this radius (saves the expensive deep digits)
    r_max: float = 0.0

    def k_max_for(self, ell: int) -> int:
        if self.r_max <= 0:
            return self.k_max
        c = photon_sphere_constant(self.params)
        reach = (self.r_max / c) ** 2 - (ell + 0.5) ** 2
        if reach < 0.25:
            return 0
        return min(self.k_max, int(math.floor(math.sqrt(reach) - 0.5)))


def mp_linear_pencil(mass, lam_c, ell, n, dps):
    """Radial pencil in mp matrices, linear conjugation gauge."""
    import mpmath as mp

    with mp.workdps(dps):
        one = mp.mpf(1)
        m0 = mp.mpf(repr(mass))
        lam = mp.mpf(repr(lam_c))
        mu = (9 * m0**2 * lam) ** (one / 3)
        sh = 1 / (2 * (1 - mu))

        def g_of(r):
            return 1 - lam * r**2 / 3 - 2 * m0 / r

        def gp_of(r):
            return -2 * lam * r / 3 + 2 * m0 / r**2

        def bis(a, b):
            fa = a * g_of(a)
            for _ in range(int(3.5 * dps)):
                mid = (a + b) / 2
                if fa * (mid * g_of(mid)) <= 0:
                    b = mid
                else:
                    a, fa = mid, mid * g_of(mid)
            return (a + b) / 2

        rm = bis(2 * m0, 3 * m0)
        rp = bis(3 * m0, mp.sqrt(3 / lam))
        width = rp - rm
        nodes = [(rm + rp) / 2 - width / 2 * mp.cos(mp.pi * j / (n - 1))
                 for j in range(n)]
        cw = [mp.mpf(2 if j in (0, n - 1) else 1) * (-1) ** j for j in range(n)]
        d1 = mp.matrix(n, n)
        for i in range(n):
            acc = mp.mpf(0)
            for k in range(n):
                if i != k:
                    d1[i, k] = cw[i] / cw[k] / (nodes[i] - nodes[k])
                    acc += d1[i, k]
            d1[i, i] = -acc
        d2 = d1 * d1
        a2 = mp.matrix(n, n)
        a1 = mp.matrix(n, n)
        a0 = mp.matrix(n, n)
        tiny = mp.mpf(10) ** (-(dps - 6))
        for i in range(n):
            r = nodes[i]
            g = g_of(r)
            gp = gp_of(r)
            rh = (2 * r - (rm + rp)) / width
            rhp = 2 / width
            gf = rh * (1 - g * sh)
            gfp = rhp * (1 - g * sh) - rh * gp * sh
            if abs(g) < tiny:
                l2 = -2 * rh * rhp / gp + rh * rh * (2 * sh - g * sh**2)
            else:
                l2 = (1 - rh) * (1 + rh) / g + rh * rh * (2 * sh - g * sh**2)
            for k in range(n):
                a2[i, k] = -g * d2[i, k] - (2 * g / r + gp) * d1[i, k]
                a1[i, k] = -2 * mp.mpc(0, 1) * gf * d1[i, k]
            a2[i, i] += ell * (ell + 1) / r**2
            a1[i, i] += -mp.mpc(0, 1) * (gfp + 2 * gf / r)
            a0[i, i] = -l2
        return a2, a1, a0


def mp_chebyshev(n, a, b, dps):
    """mp nodes and differentiation matrix on [a, b]."""
    import mpmath as mp

    with mp.workdps(dps):
        aa, bb = mp.mpf(repr(float(a))), mp.mpf(repr(float(b)))
        nodes = [(aa + bb) / 2 - (bb - aa) / 2 * mp.cos(mp.pi * j / (n - 1))
                 for j in range(n)]
        cw = [mp.mpf(2 if j in (0, n - 1) else 1) * (-1) ** j for j in range(n)]
        d1 = mp.matrix(n, n)
        for i in range(n):
            acc = mp.mpf(0)
            for k in range(n):
                if i != k:
                    d1[i, k] = cw[i] / cw[k] / (nodes[i] - nodes[k])
                    acc += d1[i, k]
            d1[i, i] = -acc
        return nodes, d1


def mp_funnel_pencil(m, n, bc, circumference, dps):
    """Funnel pencil with exact mp entries (coefficients are polynomial).

    Needed for the defective m = 0 doubles, whose eigenvalue error scales
    like sqrt(entry error): even 80-bit matrix entries leave ~3e-7 noise,
    too coarse for the resolution-doubling filter.
    """
    import mpmath as mp

    with mp.workdps(dps):
        x, d1 = mp_chebyshev(n, 0.0, 1.0, dps)
        d2 = d1 * d1
        mb2 = mp.mpf(m) ** 2 / mp.mpf(repr(float(circumference))) ** 2
        a2 = mp.matrix(n, n)
        a1 = mp.matrix(n, n)
        a0 = mp.matrix(n, n)
        for i in range(n):
            xi = x[i]
            for k in range(n):
                a2[i, k] = -xi * (1 + xi) ** 2 * d2[i, k] - (1 + xi) ** 2 * d1[i, k]
                a1[i, k] = mp.mpc(0, 1) * (1 - xi * xi) * d1[i, k]
            a2[i, i] += mb2 + mp.mpf(1) / 4
            a1[i, i] += mp.mpc(0, -1)
            a0[i, i] = mp.mpf(-1)
        nn = n - 1
        b2 = mp.matrix(nn, nn)
        b1 = mp.matrix(nn, nn)
        b0 = mp.matrix(nn, nn)
        if bc == "dirichlet":
            for i in range(nn):
                for k in range(nn):
                    b2[i, k] = a2[i, k]
                    b1[i, k] = a1[i, k]
                b0[i, i] = a0[i, i]
        else:
            w = [-d1[n - 1, k] / d1[n - 1, n - 1] for k in range(nn)]
            for i in range(nn):
                for k in range(nn):
                    b2[i, k] = a2[i, k] + a2[i, n - 1] * w[k]
                    b1[i, k] = a1[i, k] + a1[i, n - 1] * w[k]
                b0[i, i] = a0[i, i]
        return b2, b1, b0


def mp_newton_det(a2, a1, a0, lam0, dps, mult=1, maxit=14):
    """Newton on det within mp matrices; returns (lambda, step floor)."""
    import mpmath as mp

    with mp.workdps(dps):
        lam = mp.mpc(lam0)
        h = mp.mpf(10) ** (-dps // 3)

        def det(z):
            return mp.det(a2 + z * a1 + (z * z) * a0)

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
            if abs(step) < mp.mpf(10) ** (-(dps - 12)) * max(1, abs(lam)):
                break
        return complex(best), float(best_step)


def _ladder_for_ell(args):
    (mass, lam_c, ell, k_max, n_low, n_high, drift_tol, dps_base,
     dps_per_overtone) = args
    params = SdSParams(mass, lam_c)
    c = photon_sphere_constant(params)
    out = []
    pencils = {}
    found = {}
    for k in range(0, k_max + 1):
        dps = dps_base + dps_per_overtone * max(0, k - 1)
        # seed by continuing the ladder itself once it exists: overtone
        # strings bend away from the asymptotic lattice at low ell
        if k - 1 in found and k - 2 in found:
            guess = 2 * found[k - 1] - found[k - 2]
        elif k - 1 in found:
            guess = found[k - 1] - 1j * c
        else:
            guess = c * ((ell + 0.5) - 1j * (k + 0.5))
        key_lo, key_hi = (n_low, dps), (n_high, dps)
        if key_lo not in pencils:
            pencils[key_lo] = mp_linear_pencil(mass, lam_c, ell, n_low, dps)
        if key_hi not in pencils:
            pencils[key_hi] = mp_linear_pencil(mass, lam_c, ell, n_high, dps)
        lam_lo, _ = mp_newton_det(*pencils[key_lo], guess, dps)
        if abs(lam_lo - guess) > 0.45 * c * (1 + 0.2 * k):
            continue  # wandered outside the ladder cell
        lam_hi, _ = mp_newton_det(*pencils[key_hi], lam_lo, dps)
        drift = abs(lam_hi - lam_lo)
        if drift > drift_tol * max(1.0, abs(lam_hi)):
            continue
        found[k] = lam_hi
        out.append((k, lam_hi, drift))
    return ell, out


def funnel_axis_ladder(circumference: float, k_max: int = 4,
                       n_low: int = 48, n_high: int = 72,
                       drift_tol: float = 1e-8, dps_base: int = 30,
                       dps_per_overtone: int = 6) -> Spectrum:
    """The defective m = 0 resonance doubles down the imaginary axis.

    Companion-QR seeds scatter by O(1) for the deeper doubles, so each
    k is chased directly by multiplicity-2 Newton in exact mp arithmetic
    at two resolutions, seeded at the Im-spacing the computed m != 0
    spectra establish.  The working precision grows with the depth (a
    defective eigenvalue costs roughly twice the digits of a simple one).
    Entries are emitted twice (cluster multiplicity 2), alternating
    parity sector with k.
    """
    pencils = {}
    entries = []
    for k in range(0, k_max + 1):
        bc = "neumann" if k % 2 == 0 else "dirichlet"
        dps = dps_base + dps_per_overtone * k
        key_lo, key_hi = (bc, n_low, dps), (bc, n_high, dps)
        if key_lo not in pencils:
            pencils[key_lo] = mp_funnel_pencil(0, n_low, bc, circumference, dps)
            pencils[key_hi] = mp_funnel_pencil(0, n_high, bc, circumference, dps)
        guess = -1j * (k + 0.5)
        lam_lo, _ = mp_newton_det(*pencils[key_lo], guess, dps, mult=2)
        if abs(lam_lo - guess) > 0.25:
            continue
        lam_hi, _ = mp_newton_det(*pencils[key_hi], lam_lo, dps, mult=2)
        drift = abs(lam_hi - lam_lo)
        if drift > drift_tol * max(1.0, abs(lam_hi)):
            continue
        for _ in range(2):
            entries.append(SpectrumEntry(
                lam=complex(lam_hi), residual=math.nan, accepted=True,
                mode_index=0, resolution=n_high, weight=1, drift=drift,
                sector=bc,
            ))
    window = Window(rmax=k_max + 1.0, gamma=k_max + 1.0)
    meta = {"model": "funnel", "circumference": circumference,
            "method": "mp-axis-ladder", "n_low": n_low, "n_high": n_high,
            "drift_tol": drift_tol}
    return Spectrum(entries, window=window, meta=meta)


def qnm_ladder(req: LadderRequest) -> Spectrum:
    """Deep overtone ladders as an accepted Spectrum.

    Each (ell, k) lattice cell is chased at both resolutions; modes whose
    two-resolution drift passes are emitted with weight 2 ell + 1 on both
    conjugate branches (the Re < 0 partner follows from the exact
    -conj symmetry of the pencil).
    """
    c = photon_sphere_constant(req.params)
    window = Window(rmax=c * (req.ell_max + req.k_max + 2.0),
                    gamma=c * (req.k_max + 1.0))
    tasks = [
        (req.params.mass, req.params.lam, ell, req.k_max_for(ell), req.n_low,
         req.n_high, req.drift_tol, req.dps_base, req.dps_per_overtone)
        for ell in range(req.ell_min, req.ell_max + 1)
    ]
    if req.workers > 1:
        with ProcessPoolExecutor(max_workers=req.workers) as pool:
            results = dict(pool.map(_ladder_for_ell, tasks))
    else:
        results = dict(map(_ladder_for_ell, tasks))

    entries = []
    for ell in sorted(results):
        for k, lam, drift in results[ell]:
            for branch in (lam, -np.conj(lam)):
                entries.append(SpectrumEntry(
                    lam=complex(branch), residual=math.nan, accepted=True,
                    mode_index=ell, resolution=req.n_high,
                    weight=2 * ell + 1, drift=drift,
                ))
    entries.sort(key=lambda e: (e.mode_index, e.lam.real, e.lam.imag))
    meta = {"model": "sds", "mass": req.params.mass, "lam": req.params.lam,
            "method": "mp-ladder", "gauge": "linear",
            "n_low": req.n_low, "n_high": req.n_high,
            "drift_tol": req.drift_tol}
    return Spectrum(entries, window=window, meta=meta)
