"""Schwarzschild-de Sitter background geometry.

Provides the metric function G(r), the two horizon radii, surface
gravities, and the conjugation profile used to build the radial operator
pencils.  All scalar functions are closed-form and preserve the floating
dtype of their input, so they can be evaluated in extended precision
when assembling pencils for refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    InsufficientDataError,
    NearDegenerateError,
    ParameterError,
    SingularityError,
)

__all__ = [
    "SdSParams",
    "Horizons",
    "RhoProfile",
    "ConjugationProfile",
    "metric_function",
    "horizon_roots",
    "surface_gravities",
    "conjugation_profile",
    "photon_sphere_constant",
    "photon_constant_fit",
    "smoothstep",
]


@dataclass(frozen=True)
class SdSParams:
    """Black-hole mass and cosmological constant, with 9 M^2 L < 1."""

    mass: float
    lam: float

    def __post_init__(self):
        if not (self.mass > 0):
            raise ParameterError(f"mass must be positive, got {self.mass}")
        if not (0 < self.lam < 1.0 / (9.0 * self.mass**2)):
            raise ParameterError(
                f"lambda must lie in (0, 1/(9 mass^2)) = (0, {1/(9*self.mass**2)}), "
                f"got {self.lam}"
            )

    @property
    def mu(self) -> float:
        """(9 M^2 L)^(1/3), strictly inside (0, 1) for admissible parameters."""
        return (9.0 * self.mass**2 * self.lam) ** (1.0 / 3.0)


@dataclass(frozen=True)
class Horizons:
    """Event and cosmological horizon radii, r_minus < r_plus."""

    r_minus: float
    r_plus: float

    @property
    def width(self) -> float:
        return self.r_plus - self.r_minus


def metric_function(r, params: SdSParams, derivative: int = 0):
    """G(r) = 1 - L r^2/3 - 2M/r, or its first/second derivative.

    Accepts scalars or arrays of any float dtype and preserves it.
    """
    return metric_g(r, params.mass, params.lam, derivative)


def metric_g(r, mass, lam, derivative: int = 0):
    """Dtype-preserving G(r) and derivatives from raw mass/lambda values."""
    r = np.asarray(r)
    if np.any(r <= 0):
        raise ParameterError("metric function is defined for r > 0 only")
    if derivative == 0:
        out = 1.0 - lam * r * r / 3.0 - 2.0 * mass / r
    elif derivative == 1:
        out = -2.0 * lam * r / 3.0 + 2.0 * mass / (r * r)
    elif derivative == 2:
        out = -2.0 * lam / 3.0 - 4.0 * mass / (r * r * r)
    else:
        raise ParameterError(f"derivative order must be 0, 1 or 2, got {derivative}")
    return out if out.ndim else out[()]


def horizon_roots(params: SdSParams, tol: float = 1e-13) -> Horizons:
    """Locate the two positive simple roots of r G(r).

    Brackets are analytic (sign pattern of r G(r) at 2M, 3M, sqrt(3/L));
    each root is narrowed by bisection and polished by Newton to the
    requested relative tolerance, in extended precision.
    """
    m, lam = params.mass, params.lam
    if 1.0 / (9.0 * m * m) - lam < 1e-10:
        raise NearDegenerateError(
            "horizons merge at r = 3M as lambda -> 1/(9 M^2); "
            f"lambda = {lam} is within 1e-10 of the extremal value"
        )
    ld = np.longdouble

    def rg(r):
        return r - lam * r**3 / ld(3) - ld(2) * m

    r_big = np.sqrt(ld(3) / lam)
    r_minus = _bisect_newton(rg, ld(2) * m, ld(3) * m, lam, tol)
    r_plus = _bisect_newton(rg, ld(3) * m, r_big, lam, tol)
    return Horizons(float(r_minus), float(r_plus))


def _bisect_newton(rg, a, b, lam, tol):
    fa, fb = rg(a), rg(b)
    if not fa * fb < 0:
        raise NearDegenerateError("horizon bracket lost its sign change")
    for _ in range(80):
        mid = (a + b) / 2
        fm = rg(mid)
        if fa * fm <= 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    x = (a + b) / 2
    for _ in range(8):
        # d/dr of r G(r) = 1 - lam r^2
        step = rg(x) / (1 - lam * x * x)
        x = x - step
        if abs(step) <= tol * abs(x) / 16:
            break
    return x


def surface_gravities(params: SdSParams, horizons: Horizons) -> tuple:
    """kappa_pm = |G'(r_pm)| / 2.  Both vanish in the extremal limit."""
    km = abs(float(metric_function(horizons.r_minus, params, 1))) / 2.0
    kp = abs(float(metric_function(horizons.r_plus, params, 1))) / 2.0
    return km, kp


# ---------------------------------------------------------------------------
# plateau profile rho
# ---------------------------------------------------------------------------

def smoothstep(t, order: int = 6):
    """Polynomial smoothstep S_N on [0,1] with N vanishing derivatives at 0, 1.

    order = N; degree of the polynomial is 2N+1 (order 2 is the classic
    quintic).  Input is clipped to [0,1], so the plateaus are exact.
    Evaluated on t <= 1/2 only and reflected (S_N(t) = 1 - S_N(1-t)):
    the expanded polynomial cancels catastrophically near t = 1, which
    would break monotonicity at the 1e-12 level.
    """
    if order < 1:
        raise ParameterError("smoothstep order must be >= 1")
    t = np.clip(np.asarray(t), 0.0, 1.0)
    lower = np.where(t <= 0.5, t, 1.0 - t)
    acc = np.zeros_like(lower)
    for k in range(order, -1, -1):
        c = math.comb(order + k, k) * math.comb(2 * order + 1, order - k)
        acc = acc * (-lower) + c
    base = lower ** (order + 1) * acc
    out = np.where(t <= 0.5, base, 1.0 - base)
    return out if out.ndim else out[()]


def smoothstep_deriv(t, order: int = 6):
    """Derivative of smoothstep: t^N (1-t)^N / B(N+1, N+1), clipped to zero.

    The closed form is a product of nonnegative factors, so monotonicity
    of the step survives floating-point evaluation.
    """
    t = np.asarray(t)
    inside = (t > 0) & (t < 1)
    tc = np.clip(t, 0.0, 1.0)
    inv_beta = (2 * order + 1) * math.comb(2 * order, order)
    val = tc**order * (1.0 - tc) ** order * inv_beta
    out = np.where(inside, val, 0.0 * val)
    return out if out.ndim else out[()]


@dataclass(frozen=True)
class RhoProfile:
    """Conjugation profile rho: [r-, r+] -> [-1, 1] with rho(r+-) = +-1.

    The plateau kinds are identically -1 on the first `plateau_fraction`
    of the interval and +1 on the last, monotone in between:
    kind="smoothstep" uses the C^order polynomial family (default C^6;
    the classic quintic limits spectral eigenvalue accuracy to ~1e-5),
    kind="erf" the normalized error function erf(q u)/erf(q), analytic on
    the transition zone and matching the plateaus to ~2e-17.

    kind="linear" is the plateau-free affine gauge: the conjugated
    coefficients become low-degree rationals, which removes the
    coefficient-smoothness ceiling entirely and lets overtone ladders
    converge far deeper.  The horizon identities (GF'(r+-) = +-1 and the
    endpoint value of the lambda^2 coefficient) only need the endpoint
    values of rho, so they hold for every kind.
    """

    plateau_fraction: float = 0.15
    smoothstep_order: int = 6
    kind: str = "smoothstep"
    erf_sharpness: float = 6.0

    def __post_init__(self):
        if not (0.0 < self.plateau_fraction < 0.5):
            raise ParameterError(
                f"plateau_fraction must be in (0, 0.5), got {self.plateau_fraction}"
            )
        if self.kind not in ("smoothstep", "erf", "linear"):
            raise ParameterError(f"unknown profile kind {self.kind!r}")
        if self.smoothstep_order < 1:
            raise ParameterError("smoothstep_order must be >= 1")

    def transition(self, horizons: Horizons) -> tuple:
        """(lo, hi): endpoints of the transition zone between the plateaus."""
        if self.kind == "linear":
            return horizons.r_minus, horizons.r_plus
        w = horizons.width * self.plateau_fraction
        return horizons.r_minus + w, horizons.r_plus - w

    def value(self, r, horizons: Horizons):
        lo, hi = self.transition(horizons)
        r = np.asarray(r)
        if self.kind == "linear":
            out = (2.0 * r - (lo + hi)) / (hi - lo)
            return out if out.ndim else out[()]
        if self.kind == "smoothstep":
            t = (r - lo) / (hi - lo)
            return -1.0 + 2.0 * smoothstep(t, self.smoothstep_order)
        u = (2.0 * r - (lo + hi)) / (hi - lo)
        return _erf_clipped(u * self.erf_sharpness, self.erf_sharpness)

    def slope(self, r, horizons: Horizons):
        lo, hi = self.transition(horizons)
        r = np.asarray(r)
        if self.kind == "linear":
            out = 2.0 / (hi - lo) + 0.0 * r
            return out if out.ndim else out[()]
        if self.kind == "smoothstep":
            t = (r - lo) / (hi - lo)
            return 2.0 * smoothstep_deriv(t, self.smoothstep_order) / (hi - lo)
        q = self.erf_sharpness
        u = (2.0 * r - (lo + hi)) / (hi - lo)
        inside = np.abs(u) < 1.0
        norm = _erf_dtype(np.asarray(q, dtype=r.dtype if r.dtype.kind == "f" else None))
        du = 2.0 * q / (hi - lo)
        gauss = np.exp(-(q * u) ** 2) * (2.0 / np.sqrt(np.pi)) / norm
        out = np.where(inside, gauss * du, 0.0 * gauss)
        return out if out.ndim else out[()]


def _erf_dtype(x):
    """erf evaluated at the dtype of x (mpmath-backed for extended precision)."""
    x = np.asarray(x)
    if x.dtype == np.longdouble:
        import mpmath as mp

        with mp.workdps(26):
            flat = [
                np.longdouble(
                    mp.nstr(mp.erf(mp.mpf(np.format_float_positional(v, unique=True))), 24)
                )
                for v in np.atleast_1d(x)
            ]
        out = np.array(flat, dtype=np.longdouble).reshape(x.shape)
        return out if out.ndim else out[()]
    vec = np.vectorize(math.erf, otypes=[float])
    out = vec(x)
    return out if np.ndim(out) else np.asarray(out)[()]


def _erf_clipped(qu, q):
    """erf(qu)/erf(q), clipped to exactly +-1 outside |u| = 1."""
    qu = np.asarray(qu)
    norm = _erf_dtype(np.asarray(q, dtype=qu.dtype if qu.dtype.kind == "f" else None))
    core = _erf_dtype(np.clip(qu, -q, q)) / norm
    out = np.where(qu <= -q, -1.0 + 0.0 * core, np.where(qu >= q, 1.0 + 0.0 * core, core))
    return out if out.ndim else out[()]


# ---------------------------------------------------------------------------
# conjugation profile
# ---------------------------------------------------------------------------

class ConjugationProfile(NamedTuple):
    """Pointwise data of the conjugation: raw F', (GF'), (GF')', (1-(GF')^2)/G."""

    fprime: np.ndarray
    gf_prime: np.ndarray
    gf_prime_deriv: np.ndarray
    lambda2_coeff: np.ndarray


def conjugation_profile(r, params: SdSParams, horizons: Horizons,
                        rho: RhoProfile) -> ConjugationProfile:
    """Evaluate the conjugation data on r in [r-, r+].

    GF', (GF')' and the lambda^2 coefficient are the real-analytic
    extensions and stay finite at the horizons; on the plateaus the
    lambda^2 coefficient uses the algebraically cancelled form
    1/(1-mu) - G/(4 (1-mu)^2), never a 0/0 limit.  The raw F' diverges at
    the horizons (its entries become +-inf there); requesting it at a
    horizon that is not covered by a plateau raises SingularityError,
    since no analytic extension exists in that case.
    """
    r = np.asarray(r)
    g = metric_g(r, params.mass, params.lam, 0)
    gp = metric_g(r, params.mass, params.lam, 1)
    s = 1.0 / (2.0 * (1.0 - params.mu))
    rh = rho.value(r, horizons)
    rhp = rho.slope(r, horizons)

    at_horizon = np.abs(g) < 1e-13
    if np.any(at_horizon & (np.abs(np.abs(rh) - 1.0) > 1e-13)):
        raise SingularityError(
            "raw F' evaluated at a horizon outside the plateau region"
        )

    gf = rh * (1.0 - g * s)
    gf_deriv = rhp * (1.0 - g * s) - rh * gp * s
    # (1 - (GF')^2)/G = (1-rho)(1+rho)/G + rho^2 (2s - G s^2); the first
    # ratio is identically zero on plateaus and has the L'Hopital value
    # -2 rho rho'/G' where the profile reaches +-1 exactly at a horizon
    safe_g = np.where(at_horizon, 1.0, g)
    ratio = np.where(
        at_horizon,
        -2.0 * rh * rhp / gp,
        (1.0 - rh) * (1.0 + rh) / safe_g,
    )
    lam2 = ratio + rh * rh * (2.0 * s - g * s * s)
    with np.errstate(divide="ignore"):
        # 1/G -> +inf approaching either horizon from inside, so the raw
        # F' limit carries the sign of rho(r+-)
        fprime = np.where(at_horizon, np.sign(rh) * np.inf,
                          rh * (1.0 / safe_g - s))
    return ConjugationProfile(fprime, gf, gf_deriv, lam2)


# ---------------------------------------------------------------------------
# photon-sphere constant
# ---------------------------------------------------------------------------

def photon_sphere_constant(params: SdSParams) -> float:
    """Lattice spacing sqrt(G(3M))/(3M) = sqrt(1 - 9 M^2 L) / (3 sqrt(3) M).

    The peak of the centrifugal potential G(r)/r^2 sits exactly at the
    photon sphere r = 3M; the leading WKB frequency of angular momentum l
    is c (l + 1/2) with this c.  Used as the independent cross-check for
    the fitted lattice constant.
    """
    m = params.mass
    return math.sqrt(1.0 - 9.0 * m * m * params.lam) / (3.0 * math.sqrt(3.0) * m)


def photon_constant_fit(modes, ell_min: int = 10) -> tuple:
    """Least-squares fit Re(lambda) ~ c (l + 1/2) through the origin.

    `modes` is an iterable of (ell, lambda) pairs; for each ell >= ell_min
    the entry with the smallest |Im lambda| among Re > 0 is used.  Returns
    (c, relative_residual).  Fewer than 3 distinct ell raise
    InsufficientDataError.
    """
    best = {}
    for ell, lam in modes:
        lam = complex(lam)
        if ell < ell_min or lam.real <= 0:
            continue
        if ell not in best or abs(lam.imag) < abs(best[ell].imag):
            best[ell] = lam
    if len(best) < 3:
        raise InsufficientDataError(
            f"need >= 3 distinct ell >= {ell_min} with Re > 0 modes, got {len(best)}"
        )
    x = np.array([ell + 0.5 for ell in sorted(best)])
    y = np.array([best[ell].real for ell in sorted(best)])
    c = float(x @ y / (x @ x))
    resid = float(np.linalg.norm(y - c * x) / np.linalg.norm(y))
    return c, resid
