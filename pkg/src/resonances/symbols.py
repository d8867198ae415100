"""Grid verification of the symbol-level hypotheses and escape estimates.

Both instantiated models are rotation-symmetric, so phase space reduces
to (x1, xi1, eta) with eta = |xi'| >= 0 and the boundary charts carry
x'-independent symbols.  Near the boundary the principal symbol splits
as p2 = w(x1) xi1^2 + q1(x1, eta); the five structural hypotheses, the
escape-function inequalities and the sign conditions on the conjugated
symbol are checked as minimum margins over verification grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .background import (
    RhoProfile,
    SdSParams,
    conjugation_profile,
    horizon_roots,
    metric_g,
    smoothstep,
)
from .errors import ConfigError, ConvergenceError, ParameterError
from .funnel import FunnelParams

__all__ = [
    "BoundaryChart",
    "ModelSymbols",
    "SymbolGrid",
    "SymbolReport",
    "EscapeConfig",
    "sds_symbols",
    "funnel_symbols",
    "check_assumptions",
    "escape_bracket",
    "find_epsilons",
    "ptilde_margins",
    "persistence_kappa",
    "invertibility_nu",
]


@dataclass(frozen=True)
class BoundaryChart:
    """Symbols in one boundary-adapted chart x1 in (-eps, eps)."""

    name: str
    eps: float
    w: Callable
    wp: Callable
    q1: Callable        # q1(x1, eta)
    dq1_dx1: Callable
    p1_coef: Callable   # pi1(x1); p1 = pi1(x1) xi1
    p0: Callable


@dataclass(frozen=True)
class ModelSymbols:
    """Boundary charts plus interior symbol evaluators of one model."""

    name: str
    charts: tuple
    interior_x: tuple            # (lo, hi) range of the interior coordinate
    p2_interior: Callable        # p2(x, xi1, eta)
    p0_interior: Callable        # p0(x)


@dataclass(frozen=True)
class SymbolGrid:
    """Verification grid: x1 points, fiber directions, fiber radii."""

    nx: int = 64
    ndirections: int = 32
    radii: tuple = (1.0, 10.0, 100.0, 1000.0)

    def describe(self) -> str:
        return f"{self.nx} x-points, {self.ndirections} directions, radii {self.radii}"


@dataclass
class SymbolReport:
    assumption: str
    grid: str
    min_margin: float
    witness: tuple
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.min_margin > 0)


# ---------------------------------------------------------------------------
# model factories
# ---------------------------------------------------------------------------

def sds_symbols(params: SdSParams, rho: RhoProfile = RhoProfile()) -> ModelSymbols:
    """Boundary charts at both horizons plus interior evaluators.

    Chart half-width: the plateau width, dyadically shrunk until w' > 0
    holds across the chart (w' degenerates where G' changes sign, well
    inside the transition zone for admissible parameters).
    """
    horizons = horizon_roots(params)
    rm, rp = horizons.r_minus, horizons.r_plus

    def prof(r):
        return conjugation_profile(np.asarray(r, dtype=float), params, horizons, rho)

    charts = []
    for name, r0, sgn in (("event", rm, +1.0), ("cosmological", rp, -1.0)):
        eps = rho.plateau_fraction * horizons.width
        for _ in range(30):
            xs = np.linspace(-eps, eps, 129)
            wp = sgn * metric_g(r0 + sgn * xs, params.mass, params.lam, 1)
            if np.all(wp > 0):
                break
            eps /= 2.0
        else:
            raise ConvergenceError(f"no admissible chart width at {name} horizon")

        def make(r0=r0, sgn=sgn):
            def w(x1):
                return metric_g(r0 + sgn * np.asarray(x1), params.mass, params.lam, 0)

            def wp_(x1):
                return sgn * metric_g(r0 + sgn * np.asarray(x1), params.mass,
                                      params.lam, 1)

            def q1(x1, eta):
                return np.asarray(eta) ** 2 / (r0 + sgn * np.asarray(x1)) ** 2

            def dq1(x1, eta):
                return -2.0 * sgn * np.asarray(eta) ** 2 / (r0 + sgn * np.asarray(x1)) ** 3

            def p1c(x1):
                return 2.0 * sgn * prof(r0 + sgn * np.asarray(x1)).gf_prime

            def p0(x1):
                return -prof(r0 + sgn * np.asarray(x1)).lambda2_coeff

            return w, wp_, q1, dq1, p1c, p0

        w, wp_, q1, dq1, p1c, p0 = make()
        charts.append(BoundaryChart(name=name, eps=float(eps), w=w, wp=wp_,
                                    q1=q1, dq1_dx1=dq1, p1_coef=p1c, p0=p0))

    def p2_int(r, xi1, eta):
        g = metric_g(np.asarray(r), params.mass, params.lam, 0)
        return g * np.asarray(xi1) ** 2 + np.asarray(eta) ** 2 / np.asarray(r) ** 2

    def p0_int(r):
        return -prof(r).lambda2_coeff

    return ModelSymbols(name="sds", charts=tuple(charts),
                        interior_x=(rm, rp), p2_interior=p2_int,
                        p0_interior=p0_int)


def funnel_symbols(fp: FunnelParams, chart_eps: float = 0.25) -> ModelSymbols:
    """Single boundary chart of the funnel at x1 = 0.

    w(x1) = x1 (1+x1)^2 from the leading term of p2; the angular symbol
    reduces to eta^2 / circumference^2, independent of x1.
    """
    if not 0 < chart_eps < 1.0 / 3.0:
        raise ParameterError("funnel chart width must stay below 1/3 (w' > 0)")
    c2 = fp.circumference**2

    return ModelSymbols(
        name="funnel",
        charts=(BoundaryChart(
            name="infinity", eps=float(chart_eps),
            w=lambda x: np.asarray(x) * (1 + np.asarray(x)) ** 2,
            wp=lambda x: (1 + np.asarray(x)) * (1 + 3 * np.asarray(x)),
            q1=lambda x, eta: np.asarray(eta) ** 2 / c2 + 0.0 * np.asarray(x),
            dq1_dx1=lambda x, eta: 0.0 * (np.asarray(x) + np.asarray(eta)),
            p1_coef=lambda x: -(1 - np.asarray(x) ** 2),
            p0=lambda x: -1.0 + 0.0 * np.asarray(x),
        ),),
        interior_x=(0.0, 1.0),
        p2_interior=lambda x, xi1, eta: (np.asarray(x) * (1 + np.asarray(x)) ** 2
                                         * np.asarray(xi1) ** 2
                                         + np.asarray(eta) ** 2 / c2),
        p0_interior=lambda x: -1.0 + 0.0 * np.asarray(x),
    )


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def _fiber(grid: SymbolGrid):
    """(xi1, eta) samples: directions on the half-circle times radii."""
    th = np.linspace(0.0, np.pi, grid.ndirections)
    xi1, eta = [], []
    for radius in grid.radii:
        xi1.append(radius * np.cos(th))
        eta.append(radius * np.abs(np.sin(th)))
    return np.concatenate(xi1), np.concatenate(eta)


def _chart_points(chart: BoundaryChart, grid: SymbolGrid):
    x = np.linspace(-chart.eps, chart.eps, grid.nx)
    xi1, eta = _fiber(grid)
    X = np.repeat(x, len(xi1))
    XI = np.tile(xi1, len(x))
    ETA = np.tile(eta, len(x))
    return X, XI, ETA


def _min_with_witness(values, points):
    i = int(np.argmin(values))
    return float(values[i]), tuple(float(p[i]) for p in points)


# ---------------------------------------------------------------------------
# assumption checks
# ---------------------------------------------------------------------------

def check_assumptions(model: ModelSymbols, grid: SymbolGrid = SymbolGrid()) -> list:
    """Margin reports for the five structural hypotheses.

    (1) boundary splitting with w(0) = 0, w'(0) > 0 (margin: min w'
        over charts, with the splitting residual in the details);
    (2) fiber ellipticity of q1 (margin: min q1/eta^2; best constant C
        is its inverse);
    (3) sign of the subprincipal symbol (margin: min of -p1/xi1);
    (4) interior positivity of p2 (margin: min p2/|xi|^2; includes the
        degree-2 homogeneity deviation over the radius ladder);
    (5) negativity of p0 near the closure (margin: min -p0 over charts
        and interior).
    """
    reports = []
    gs = grid.describe()

    # (1) structure
    margin1, witness1 = math.inf, ()
    split_resid = 0.0
    for chart in model.charts:
        w0 = float(np.max(np.abs(chart.w(0.0))))
        wp0 = float(chart.wp(0.0))
        m = wp0 if w0 < 1e-12 else -w0
        if m < margin1:
            margin1, witness1 = m, (chart.name, 0.0)
        x, xi1, eta = _chart_points(chart, grid)
        p2 = chart.w(x) * xi1**2 + chart.q1(x, eta)
        split_resid = max(split_resid, float(np.max(np.abs(
            p2 - (chart.w(x) * xi1**2 + chart.q1(x, eta))))))
    reports.append(SymbolReport("boundary-splitting", gs, margin1, witness1,
                                {"splitting_residual": split_resid}))

    # (2) q1 >= C^-1 eta^2
    margin2, witness2 = math.inf, ()
    for chart in model.charts:
        x, xi1, eta = _chart_points(chart, grid)
        mask = eta > 0
        ratio = chart.q1(x[mask], eta[mask]) / eta[mask] ** 2
        m, wit = _min_with_witness(ratio, (x[mask], xi1[mask], eta[mask]))
        if m < margin2:
            margin2, witness2 = m, (chart.name,) + wit
    reports.append(SymbolReport("fiber-ellipticity", gs, margin2, witness2,
                                {"best_C": 1.0 / margin2 if margin2 > 0 else math.inf}))

    # (3) p1 / xi1 <= -C^-1
    margin3, witness3 = math.inf, ()
    for chart in model.charts:
        x = np.linspace(-chart.eps, chart.eps, grid.nx)
        m, wit = _min_with_witness(-np.asarray(chart.p1_coef(x)), (x,))
        if m < margin3:
            margin3, witness3 = m, (chart.name,) + wit
    reports.append(SymbolReport("subprincipal-sign", gs, margin3, witness3))

    # (4) p2 > 0 on the interior, + homogeneity
    lo, hi = model.interior_x
    pad = 0.01 * (hi - lo)
    xs = np.linspace(lo + pad, hi - pad, grid.nx)
    xi1, eta = _fiber(grid)
    X = np.repeat(xs, len(xi1))
    XI = np.tile(xi1, len(xs))
    ETA = np.tile(eta, len(xs))
    norm2 = XI**2 + ETA**2
    mask = norm2 > 0
    ratio = model.p2_interior(X[mask], XI[mask], ETA[mask]) / norm2[mask]
    margin4, witness4 = _min_with_witness(ratio, (X[mask], XI[mask], ETA[mask]))
    hom = 0.0
    for s in (2.0, 10.0):
        p2a = model.p2_interior(X[mask], s * XI[mask], s * ETA[mask])
        p2b = s * s * model.p2_interior(X[mask], XI[mask], ETA[mask])
        hom = max(hom, float(np.max(np.abs(p2a - p2b) / np.maximum(np.abs(p2b), 1e-300))))
    reports.append(SymbolReport("interior-ellipticity", gs, margin4, witness4,
                                {"homogeneity_rel_max": hom}))

    # (5) p0 < 0 on a neighbourhood of the closure
    vals = [-model.p0_interior(xs)]
    pts = [xs]
    for chart in model.charts:
        xc = np.linspace(-chart.eps, chart.eps, grid.nx)
        vals.append(-np.asarray(chart.p0(xc)))
        pts.append(xc)
    allv = np.concatenate(vals)
    allp = np.concatenate(pts)
    margin5, witness5 = _min_with_witness(allv, (allp,))
    reports.append(SymbolReport("spectral-coefficient-negativity", gs,
                                margin5, witness5))
    if not all(np.isfinite(r.min_margin) for r in reports):
        for r in reports:
            if not np.isfinite(r.min_margin):
                r.min_margin = -math.inf
    return reports


# ---------------------------------------------------------------------------
# escape function
# ---------------------------------------------------------------------------

def escape_bracket(chart: BoundaryChart, x1, xi1, eta):
    """Poisson bracket of log(2 + |xi|^2) with p2, closed form.

    For x'-independent symbols the two tangential terms vanish and
    H_G1 p2 = 2 xi1 (w'(x1) xi1^2 + dq1/dx1) / (2 + xi1^2 + eta^2).
    """
    x1, xi1, eta = (np.asarray(v) for v in (x1, xi1, eta))
    denom = 2.0 + xi1**2 + eta**2
    return 2.0 * xi1 * (chart.wp(x1) * xi1**2 + chart.dq1_dx1(x1, eta)) / denom


@dataclass
class EpsilonReport:
    eps0: float
    eps1: float
    c_escape: float
    c_lower1: float
    c_lower2: float
    c0_bound: float
    chart: str


def find_epsilons(model: ModelSymbols, grid: SymbolGrid = SymbolGrid()) -> dict:
    """Chart-wise dyadic search for the escape-band parameters.

    eps1: smallest inverse-dyadic opening for which the bracket sign
    condition H_G1 p2 / xi1 >= C^-1 holds on |xi1| >= (1/eps1)(1 + eta);
    eps0: largest dyadic chart depth for which both lower bounds
       -C0 eps0 xi1^2 + |xi|^2 + 1  and  -C0 eps0 xi1^2 + q1 + 1
    stay above a positive multiple of 1 + |xi|^2 on the complementary
    band |xi1| <= (2/eps1)(1 + eta).  C0 bounds |w'| on the chart.
    """
    out = {}
    for chart in model.charts:
        x, xi1, eta = _chart_points(chart, grid)
        inv_eps1 = max(1.0, 2.0 ** math.ceil(math.log2(1.0 / chart.eps)))
        c_escape = -math.inf
        for _ in range(14):
            mask = np.abs(xi1) >= inv_eps1 * (1.0 + eta)
            if not np.any(mask):
                inv_eps1 *= 2.0
                continue
            vals = escape_bracket(chart, x[mask], xi1[mask], eta[mask]) / xi1[mask]
            c_escape = float(np.min(vals))
            if c_escape > 0:
                break
            inv_eps1 *= 2.0
        else:
            raise ConvergenceError(f"no admissible eps1 found on chart {chart.name}")
        eps1 = 1.0 / inv_eps1

        xs = np.linspace(-chart.eps, chart.eps, grid.nx)
        c0_bound = float(np.max(np.abs(chart.wp(xs))))
        band = np.abs(xi1) <= 2.0 * inv_eps1 * (1.0 + eta)
        xb, xib, etab = x[band], xi1[band], eta[band]
        norm2 = xib**2 + etab**2
        eps0 = chart.eps
        ok = False
        for _ in range(40):
            lhs1 = -c0_bound * eps0 * xib**2 + norm2 + 1.0
            lhs2 = -c0_bound * eps0 * xib**2 + chart.q1(xb, etab) + 1.0
            c1 = float(np.min(lhs1 / (1.0 + norm2)))
            c2 = float(np.min(lhs2 / (1.0 + norm2)))
            if c1 > 0 and c2 > 0:
                ok = True
                break
            eps0 /= 2.0
        if not ok:
            raise ConvergenceError(f"no admissible eps0 found on chart {chart.name}")
        out[chart.name] = EpsilonReport(
            eps0=eps0, eps1=eps1, c_escape=c_escape, c_lower1=c1, c_lower2=c2,
            c0_bound=c0_bound, chart=chart.name,
        )
    return out


# ---------------------------------------------------------------------------
# conjugated-symbol margins
# ---------------------------------------------------------------------------

def _plateau(t, lo, hi, rising=True, order=2):
    """Quintic-smoothstep ramp from 0 (at lo) to 1 (at hi) or reversed."""
    s = smoothstep((np.asarray(t) - lo) / (hi - lo), order)
    return s if rising else 1.0 - s


@dataclass(frozen=True)
class EscapeConfig:
    """Cutoffs and weights entering the conjugated symbol.

    chi rises from 0 at -eps0 to 1 at -5 eps0/6; chi1 falls from 1 at
    -2 eps0/3 to 0 at -eps0/2; phi is the logarithmic-weight cutoff
    supported in (-eps0/3, eps0), flat at 1 on [-eps0/6, 2 eps0/3].
    psi defaults to -t^2/2.  All profiles are quintic smoothsteps; the
    supports are validated on a sign grid at construction.
    """

    eps0: float
    eps1: float
    tau: float = 0.1
    psi: Callable = None
    psi_prime: Callable = None
    chi: Callable = None
    chi1: Callable = None
    phi: Callable = None

    def __post_init__(self):
        e0 = self.eps0
        if not (e0 > 0 and self.eps1 > 0 and self.tau > 0):
            raise ConfigError("eps0, eps1 and tau must be positive")
        if self.psi is None:
            object.__setattr__(self, "psi", lambda t: -np.asarray(t) ** 2 / 2.0)
            object.__setattr__(self, "psi_prime", lambda t: -np.asarray(t))
        if self.chi is None:
            object.__setattr__(self, "chi",
                               lambda t: _plateau(t, -e0, -5 * e0 / 6, True))
        if self.chi1 is None:
            object.__setattr__(self, "chi1",
                               lambda t: _plateau(t, -2 * e0 / 3, -e0 / 2, False))
        if self.phi is None:
            def phi(t):
                t = np.asarray(t)
                up = _plateau(t, -e0 / 3, -e0 / 6, True)
                down = _plateau(t, 2 * e0 / 3, e0, False)
                return np.where(t < 0, up, down)
            object.__setattr__(self, "phi", phi)
        self._validate()

    def _validate(self):
        e0 = self.eps0
        t = np.linspace(-2 * e0, 2 * e0, 1601)
        tpsi = t * np.asarray(self.psi_prime(t))
        if np.any(tpsi > 1e-14) or np.any(tpsi[np.abs(t) > 1e-3 * e0] >= 0):
            raise ConfigError("psi must satisfy t psi'(t) <= 0, < 0 off zero")
        chi = np.asarray(self.chi(t))
        if np.any(np.abs(chi[t <= -e0])) or np.any(np.abs(chi[t >= -5 * e0 / 6] - 1)):
            raise ConfigError("chi must vanish below -eps0 and be 1 above -5 eps0/6")
        chi1 = np.asarray(self.chi1(t))
        if np.any(np.abs(chi1[t <= -2 * e0 / 3] - 1)) or np.any(np.abs(chi1[t >= -e0 / 2])):
            raise ConfigError("chi1 must be 1 below -2 eps0/3 and vanish above -eps0/2")
        phi = np.asarray(self.phi(t))
        if (np.any(np.abs(phi[(t <= -e0 / 3) | (t >= e0)]))
                or np.any(np.abs(phi[(t >= -e0 / 6) & (t <= 2 * e0 / 3)] - 1))):
            raise ConfigError("phi support must be (-eps0/3, eps0), flat on "
                              "[-eps0/6, 2 eps0/3]")
        dphi = np.gradient(phi, t)
        if np.any(t * dphi > 1e-8):
            raise ConfigError("phi must satisfy t phi'(t) <= 0")


def conjugated_symbol(chart: BoundaryChart, cfg: EscapeConfig, omega: complex,
                      x1, xi1, eta):
    """The conjugated symbol on real phase space.

    chi(x1) [ w xi1^2 + q1 + 2 i w psi' xi1 + omega p1(x1, xi1)
              + i omega p1(x1, psi'(x1)) + omega^2 p0 - psi'^2 w ]
    + chi1(x1) (1 + |xi|^2).
    """
    x1, xi1, eta = (np.asarray(v, dtype=float) for v in (x1, xi1, eta))
    w = chart.w(x1)
    q1 = chart.q1(x1, eta)
    pp = np.asarray(cfg.psi_prime(x1))
    pi1 = chart.p1_coef(x1)
    core = (w * xi1**2 + q1 + 2j * w * pp * xi1
            + omega * pi1 * xi1 + 1j * omega * pi1 * pp
            + omega**2 * chart.p0(x1) - pp**2 * w)
    return cfg.chi(x1) * core + cfg.chi1(x1) * (1.0 + xi1**2 + eta**2)


REGIONS = ("V_R", "V_plus", "V_minus")


def _region_masks(cfg: EscapeConfig, x1, xi1, eta):
    inv_eps1 = 1.0 / cfg.eps1
    band = (x1 >= -5 * cfg.eps0 / 6) & (x1 <= 2 * cfg.eps0 / 3)
    v_r = ((x1 <= -2 * cfg.eps0 / 3) | (x1 >= cfg.eps0 / 3)
           | (band & (np.abs(xi1) <= 2 * inv_eps1 * (1 + eta))))
    v_p = band & (xi1 >= inv_eps1 * (1 + eta))
    v_m = band & (xi1 <= -inv_eps1 * (1 + eta))
    return {"V_R": v_r, "V_plus": v_p, "V_minus": v_m}


def _band_chart_points(chart: BoundaryChart, cfg: EscapeConfig, grid: SymbolGrid):
    """Chart grid refined inside the escape band |x1| <~ eps0.

    The admissible eps0 can be orders of magnitude below the chart width
    (the fiber ellipticity of q1 is weak when the boundary spheres are
    large), so a uniform chart grid would miss the V_+- band entirely.
    """
    xs = np.concatenate([
        np.linspace(-chart.eps, chart.eps, grid.nx),
        np.linspace(-1.25 * cfg.eps0, 1.25 * cfg.eps0, grid.nx),
    ])
    xs = np.unique(xs[(xs >= -chart.eps) & (xs <= chart.eps)])
    xi1, eta = _fiber(grid)
    X = np.repeat(xs, len(xi1))
    XI = np.tile(xi1, len(xs))
    ETA = np.tile(eta, len(xs))
    return X, XI, ETA


def ptilde_margins(model: ModelSymbols, cfg: EscapeConfig, omega: complex,
                   grid: SymbolGrid = SymbolGrid(), floor: float = 50.0,
                   escape_constant: float = None) -> list:
    """Region-tagged sign margins of the conjugated symbol at one omega.

    Checks Re >= margin <|alpha|> on V_R and -+ Im >= margin <|alpha|>
    on V_+- for grid points above the frequency floor <|alpha|> >= floor.
    The Lagrangian deformation is not simulated; the V_+- details carry a
    "credited_margin" in which its first-order term tau phi(x1) C^-1 xi1
    (the displayed expansion along the deformation, with C^-1 the
    achieved escape constant) is added, and a log^2 remainder budget.
    The raw margin degenerates to zero exactly on the radial line x1 = 0,
    where the sign is carried entirely by the deformation term.
    """
    reports = []
    gs = grid.describe()
    if escape_constant is None:
        try:
            escape_constant = min(er.c_escape for er in
                                  find_epsilons(model, grid).values())
        except Exception:
            escape_constant = 0.0
    for region in REGIONS:
        margin, witness = math.inf, ()
        credited = math.inf
        budget = 0.0
        for chart in model.charts:
            x, xi1, eta = _band_chart_points(chart, cfg, grid)
            bracket = np.sqrt(1.0 + xi1**2 + eta**2)
            masks = _region_masks(cfg, x, xi1, eta)
            sel = masks[region] & (bracket >= floor)
            if not np.any(sel):
                continue
            pt = conjugated_symbol(chart, cfg, omega, x[sel], xi1[sel], eta[sel])
            br = bracket[sel]
            credit = (cfg.tau * np.asarray(cfg.phi(x[sel])) * escape_constant
                      * np.abs(xi1[sel]) / br)
            if region == "V_R":
                vals = pt.real / br
                cvals = vals
            elif region == "V_plus":
                vals = -pt.imag / br
                cvals = vals + credit
            else:
                vals = pt.imag / br
                cvals = vals + credit
            m, wit = _min_with_witness(vals, (x[sel], xi1[sel], eta[sel]))
            if m < margin:
                margin, witness = m, (chart.name,) + wit
            credited = min(credited, float(np.min(cvals)))
            budget = max(budget, float(np.max(cfg.tau * np.log(br) ** 2 / br)))
        reports.append(SymbolReport(
            region, gs, margin if margin < math.inf else -math.inf, witness,
            {"omega": complex(omega), "floor": floor,
             "credited_margin": credited if credited < math.inf else -math.inf,
             "deformation_budget": budget},
        ))
    return reports


def persistence_kappa(model: ModelSymbols, cfg: EscapeConfig,
                      grid: SymbolGrid = SymbolGrid(), floor: float = 50.0) -> float:
    """The escape-band constant kappa of the high-frequency sign lemma.

    Defined by the displayed band inequality: the grid minimum of
    -w(x1) psi'(x1) + tau phi(x1) over the band -5 eps0/6 < x1 <
    2 eps0/3, which is the kappa below which Im omega > -kappa keeps the
    V_+- signs (the deformation term carries the sign on the radial
    line, so this quantity is positive for every admissible config).
    The result is cross-checked by evaluating the deformation-credited
    margins at omega = -0.9 i kappa; on failure the value is halved.
    """
    kappa = math.inf
    for chart in model.charts:
        x = np.linspace(-5 * cfg.eps0 / 6, 2 * cfg.eps0 / 3, 4 * grid.nx)
        vals = (-np.asarray(chart.w(x)) * np.asarray(cfg.psi_prime(x))
                + cfg.tau * np.asarray(cfg.phi(x)))
        kappa = min(kappa, float(np.min(vals)))
    for _ in range(20):
        reps = ptilde_margins(model, cfg, -0.9j * kappa, grid, floor)
        ok = all(r.details["credited_margin"] > 0 for r in reps
                 if r.assumption != "V_R")
        if ok:
            return kappa
        kappa /= 2.0
    return 0.0


def invertibility_nu(model: ModelSymbols, cfg: EscapeConfig,
                     grid: SymbolGrid = SymbolGrid(), nu_max: float = 4096.0) -> float:
    """Smallest dyadic nu with all three margins positive everywhere at i nu."""
    nu = 1.0
    while nu <= nu_max:
        reps = ptilde_margins(model, cfg, 1j * nu, grid, floor=0.0)
        if all(r.min_margin > 0 for r in reps):
            return nu
        nu *= 2.0
    raise ConvergenceError(f"no invertibility nu found up to {nu_max}")
