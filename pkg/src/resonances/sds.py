"""Per-angular-momentum Schwarzschild-de Sitter pencils and QNM spectra.

The radial operator is the conjugated form of the wave operator between
the two horizons, collocated on the closed interval [r-, r+] with no
boundary conditions: polynomial collocation enforces analyticity across
the regular-singular horizon points, which is exactly the regularity
selection that defines quasinormal frequencies in this slicing.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .background import (
    Horizons,
    RhoProfile,
    SdSParams,
    conjugation_profile,
    horizon_roots,
    metric_g,
    photon_sphere_constant,
)
from .errors import ConvergenceError, GeometryMismatchError, ParameterError
from .spectral import (
    CollocationGrid,
    PencilMatrices,
    RefineOptions,
    Spectrum,
    Window,
    build_grid,
    filter_spectrum,
    solve_pencil,
)

__all__ = [
    "QnmRequest",
    "build_radial_pencil",
    "compute_qnm",
    "sds_wronskian",
    "sds_mode_oracle",
]

CLD = np.clongdouble


@dataclass(frozen=True)
class QnmRequest:
    """One QNM computation: parameter set, ell range, resolutions, window."""

    params: SdSParams
    ell_min: int = 0
    ell_max: int = 2
    n_low: int = 64
    n_high: int = 96
    window: Window = None
    rho: RhoProfile = field(default_factory=RhoProfile)
    drift_tol: float = 1e-7
    refine: RefineOptions = field(default_factory=RefineOptions)
    workers: int = 0

    def __post_init__(self):
        if self.ell_max < self.ell_min or self.ell_min < 0:
            raise ParameterError("ell range must be nonempty with ell_min >= 0")
        if 2 * self.n_high < 3 * self.n_low:
            raise ParameterError("resolutions must satisfy n_high >= 3 n_low / 2")

    def resolved_window(self, k_max: int = 8) -> Window:
        if self.window is not None:
            return self.window
        c = photon_sphere_constant(self.params)
        rmax = c * (self.ell_max + 1.5) + 3.0 * c * (k_max + 0.5)
        return Window(rmax=rmax, gamma=1.5 * c * (k_max + 0.5))


def _coefficient_diagonals(params, horizons, grid, rho):
    """Extended-precision coefficient values at the grid nodes."""
    r = grid.nodes_x
    g = metric_g(r, params.mass, params.lam, 0)
    gp = metric_g(r, params.mass, params.lam, 1)
    prof = conjugation_profile(r, params, horizons, rho)
    return r, g, gp, prof


def build_radial_pencil(ell: int, params: SdSParams, horizons: Horizons,
                        grid: CollocationGrid, rho: RhoProfile) -> PencilMatrices:
    """Collocate the conjugated radial operator for angular momentum ell.

    With D_r = -i d/dr the blocks are
      a2 = G D_r^2 - i (2G/r + G') D_r + l(l+1)/r^2,
      a1 = 2 (GF') D_r - i ((GF')' + 2 (GF')/r),
      a0 = -(1 - (GF')^2)/G          (diagonal),
    all with the horizon-extended coefficient values.
    """
    scale = max(1.0, horizons.r_plus)
    if (abs(grid.a - horizons.r_minus) > 1e-10 * scale
            or abs(grid.b - horizons.r_plus) > 1e-10 * scale):
        raise GeometryMismatchError(
            f"grid [{grid.a}, {grid.b}] does not span the horizons "
            f"[{horizons.r_minus}, {horizons.r_plus}]"
        )
    if ell < 0:
        raise ParameterError("angular momentum ell must be >= 0")
    r, g, gp, prof = _coefficient_diagonals(params, horizons, grid, rho)
    d1 = grid.d1_x.astype(CLD)
    d2 = grid.d2_x.astype(CLD)
    gf, gfp, lam2 = (prof.gf_prime.astype(CLD), prof.gf_prime_deriv.astype(CLD),
                     prof.lambda2_coeff.astype(CLD))
    gc, gpc, rc = g.astype(CLD), gp.astype(CLD), r.astype(CLD)
    n = grid.n
    a2 = (-gc[:, None] * d2 - (2 * gc / rc + gpc)[:, None] * d1
          + np.diag(ell * (ell + 1) / (rc * rc)))
    a1 = -2j * gf[:, None] * d1 - 1j * np.diag(gfp + 2 * gf / rc)
    a0 = np.diag(-lam2)
    meta = {"model": "sds", "ell": ell, "mass": params.mass, "lam": params.lam,
            "n": n}
    return PencilMatrices(
        a2=a2.astype(complex), a1=a1.astype(complex), a0=a0.astype(complex),
        meta=meta, a2x=a2, a1x=a1, a0x=a0,
    )


def compute_qnm(req: QnmRequest) -> Spectrum:
    """Filtered QNM spectrum merged over the requested ell range.

    Each ell is solved at both resolutions and passed through the
    resolution-doubling filter; accepted entries carry weight 2 ell + 1
    (spherical-harmonic degeneracy) and the exact lam = 0 mode of ell = 0
    is kept but flagged as the zero mode.
    """
    params = req.params
    horizons = horizon_roots(params)
    window = req.resolved_window()
    grid_lo = build_grid(req.n_low, horizons.r_minus, horizons.r_plus)
    grid_hi = build_grid(req.n_high, horizons.r_minus, horizons.r_plus)

    def solve_ell(ell):
        spectra = []
        for grid in (grid_lo, grid_hi):
            pencil = build_radial_pencil(ell, params, horizons, grid, req.rho)
            spectra.append(solve_pencil(pencil, window=window, options=req.refine,
                                        mode_index=ell, weight=2 * ell + 1))
        return ell, filter_spectrum(spectra[0], spectra[1], req.drift_tol, window)

    ells = list(range(req.ell_min, req.ell_max + 1))
    if req.workers and req.workers > 1:
        with ThreadPoolExecutor(max_workers=req.workers) as pool:
            results = dict(pool.map(solve_ell, ells))
    else:
        results = dict(solve_ell(ell) for ell in ells)

    entries = []
    warnings = []
    for ell in ells:
        spec = results[ell]
        if not spec.entries:
            warnings.append(f"ell={ell}: no accepted eigenvalues in window")
        entries.extend(spec.entries)
    entries.sort(key=lambda e: (e.mode_index, e.lam.real, e.lam.imag))
    meta = {"model": "sds", "mass": params.mass, "lam": params.lam,
            "ell_min": req.ell_min, "ell_max": req.ell_max,
            "n_low": req.n_low, "n_high": req.n_high,
            "drift_tol": req.drift_tol, "warnings": warnings}
    return Spectrum(entries, window=window, meta=meta)


# ---------------------------------------------------------------------------
# independent shooting oracle
# ---------------------------------------------------------------------------

def _ode_coefficients(params, horizons, rho):
    """Scalar closed-form coefficients, pure-python fast path for the ODE."""
    import math

    m0, lam_c = params.mass, params.lam
    sh = 1.0 / (2.0 * (1.0 - params.mu))
    lo, hi = rho.transition(horizons)
    width = hi - lo
    order = rho.smoothstep_order
    q = rho.erf_sharpness
    kind = rho.kind
    if kind == "erf":
        norm = math.erf(q)

    inv_beta = (2 * order + 1) * math.comb(2 * order, order)

    def rho_pair(r):
        if kind == "linear":
            return (2.0 * r - (lo + hi)) / width, 2.0 / width
        if kind == "smoothstep":
            t = (r - lo) / width
            if t <= 0.0:
                return -1.0, 0.0
            if t >= 1.0:
                return 1.0, 0.0
            tt = t if t <= 0.5 else 1.0 - t
            acc = 0.0
            for k in range(order, -1, -1):
                ck = math.comb(order + k, k) * math.comb(2 * order + 1, order - k)
                acc = acc * (-tt) + ck
            s_val = tt ** (order + 1) * acc
            if t > 0.5:
                s_val = 1.0 - s_val
            dv = t**order * (1.0 - t) ** order * inv_beta
            return -1.0 + 2.0 * s_val, 2.0 * dv / width
        u = (2.0 * r - (lo + hi)) / width
        if u <= -1.0:
            return -1.0, 0.0
        if u >= 1.0:
            return 1.0, 0.0
        val = math.erf(q * u) / norm
        dv = (2.0 * q / width) * 2.0 / math.sqrt(math.pi) * math.exp(-(q * u) ** 2) / norm
        return val, dv

    def coef(r):
        g = 1.0 - lam_c * r * r / 3.0 - 2.0 * m0 / r
        gp = -2.0 * lam_c * r / 3.0 + 2.0 * m0 / (r * r)
        rh, rhp = rho_pair(r)
        gf = rh * (1.0 - g * sh)
        gfp = rhp * (1.0 - g * sh) - rh * gp * sh
        l2 = (1.0 - rh) * (1.0 + rh) / g + rh * rh * (2.0 * sh - g * sh * sh)
        return g, gp, gf, gfp, l2

    return coef


def _horizon_series(params, ell, lam, r0, rho0, rho_slope, order):
    """Taylor data of the conjugated ODE around one horizon.

    The profile enters through its local jet: rho0 = rho(r0) = -+1 and
    rho_slope = rho'(r0) (zero for plateau profiles, 2/width for the
    linear gauge; higher profile derivatives vanish for both families on
    a neighbourhood of the horizon).  All other coefficients have exact
    closed-form expansions in s = r - r0.
    """
    from .series import (
        taylor_derivative,
        taylor_divide,
        taylor_inverse,
        taylor_product,
    )

    m0 = params.mass
    sh = 1.0 / (2.0 * (1.0 - params.mu))
    n = order
    g = np.zeros(n + 3, dtype=complex)
    g[0] = 0.0  # exact root
    g[1] = float(metric_g(r0, params.mass, params.lam, 1))
    g[2] = float(metric_g(r0, params.mass, params.lam, 2)) / 2.0
    for k in range(3, n + 3):
        g[k] = 2.0 * m0 * (-1.0) ** (k + 1) / r0 ** (k + 1)
    inv_r = taylor_inverse(r0, n + 2)
    gp = np.concatenate([taylor_derivative(g), [0.0]])
    rho_ser = np.zeros(n + 3, dtype=complex)
    rho_ser[0] = rho0
    rho_ser[1] = rho_slope
    one_minus_gs = -sh * g
    one_minus_gs[0] += 1.0
    gf = taylor_product(rho_ser, one_minus_gs, n + 2)
    gfp = np.concatenate([taylor_derivative(gf), [0.0]])
    # (1 - rho^2)/G + rho^2 (2 sh - G sh^2); the first ratio has an exact
    # simple zero over simple zero (profiles reach -+1 at the horizon)
    rho_sq = taylor_product(rho_ser, rho_ser, n + 2)
    num = -rho_sq
    num[0] += 1.0
    ratio = taylor_divide(num[1:], g[1:], n + 1)
    plateau_part = -sh * sh * g
    plateau_part[0] += 2.0 * sh
    lam2 = np.zeros(n + 3, dtype=complex)
    lam2[:n + 2] = ratio[:n + 2] if len(ratio) >= n + 2 else np.pad(
        ratio, (0, n + 2 - len(ratio)))
    lam2[:n + 3] += taylor_product(rho_sq, plateau_part, n + 2)

    acoef = -g
    bcoef = -(2.0 * taylor_product(g, inv_r, n + 2) + gp) - 2j * lam * gf
    ccoef = (ell * (ell + 1) * taylor_product(inv_r, inv_r, n + 2)
             - 1j * lam * (gfp + 2.0 * taylor_product(gf, inv_r, n + 2))
             - lam * lam * lam2[:n + 3])
    return acoef[:n + 1], bcoef[:n + 1], ccoef[:n + 1]


def sds_wronskian(params: SdSParams, ell: int, lam: complex,
                  rho: RhoProfile = RhoProfile(), rtol: float = 1e-12,
                  order: int = 24) -> complex:
    """Connection Wronskian of the two horizon-analytic solutions at 3M.

    Integrates the conjugated radial ODE from each horizon toward the
    photon sphere, starting on the analytic Frobenius branch via an
    order-M series (first-order starts seed the forbidden branch and
    fake zeros once 2|Im lam| exceeds the surface gravity scale).  The
    start normalization is entire in lam; its artificial zeros all lie
    on the imaginary axis, so windows off the axis count true
    quasinormal frequencies only.
    """
    from .series import series_start

    horizons = horizon_roots(params)
    coef = _ode_coefficients(params, horizons, rho)
    ll1 = ell * (ell + 1)

    def rhs(r, y):
        v, dv = y[0] + 1j * y[1], y[2] + 1j * y[3]
        g, gp, gf, gfp, l2 = coef(r)
        num = ((-(2 * g / r + gp) - 2j * lam * gf) * dv
               + (ll1 / r**2 - 1j * lam * (gfp + 2 * gf / r) - lam * lam * l2) * v)
        ddv = num / g
        return [dv.real, dv.imag, ddv.real, ddv.imag]

    r_mid = 3.0 * params.mass
    if rho.kind == "linear":
        delta = 0.05 * horizons.width
    else:
        delta = 0.2 * rho.plateau_fraction * horizons.width
    sols = []
    for r0, rho0, sgn in ((horizons.r_minus, -1.0, +1.0),
                          (horizons.r_plus, +1.0, -1.0)):
        slope0 = float(rho.slope(np.float64(r0), horizons))
        acoef, bcoef, ccoef = _horizon_series(params, ell, lam, r0, rho0,
                                              slope0, order)
        v0, dv0, _ = series_start(acoef, bcoef, ccoef, order, sgn * delta)
        # absolute floor tied to the start scale: components cross zero
        # along the way, and a purely relative control underflows there
        scale0 = max(1.0, abs(v0), abs(dv0))
        sol = solve_ivp(rhs, [r0 + sgn * delta, r_mid],
                        [v0.real, v0.imag, dv0.real, dv0.imag],
                        method="DOP853", rtol=rtol, atol=rtol * scale0 * 1e-3)
        if sol.status != 0:
            raise ConvergenceError(
                f"horizon-to-photon-sphere integration failed at r={sol.t[-1]:.6f}"
            )
        y = sol.y[:, -1]
        sols.append((y[0] + 1j * y[1], y[2] + 1j * y[3]))
    (vm, dvm), (vp, dvp) = sols
    return vm * dvp - dvm * vp


def sds_mode_oracle(params: SdSParams, ell: int, guess: complex,
                    rho: RhoProfile = RhoProfile(), tol: float = 1e-11,
                    rtol: float = 1e-12) -> complex:
    """Refine one quasinormal frequency by Muller iteration on the Wronskian."""
    from .winding import muller

    return muller(lambda z: sds_wronskian(params, ell, z, rho, rtol=rtol),
                  guess, tol=tol)
