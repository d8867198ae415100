"""Resonance and quasinormal-frequency computation via quadratic pencils.

Builds the conjugated Schwarzschild-de Sitter radial operators and the
even asymptotically hyperbolic funnel operators as quadratic matrix
pencils, solves and validates their spectra, verifies the underlying
symbol hypotheses on grids, and tests the counting-function growth at
desk scale.
"""

__version__ = "0.1.0"

from .background import (
    Horizons,
    RhoProfile,
    SdSParams,
    conjugation_profile,
    horizon_roots,
    metric_function,
    photon_constant_fit,
    photon_sphere_constant,
    surface_gravities,
)
from .counting import (
    CountingCurve,
    PseudoLattice,
    Resonance,
    build_lattice,
    cluster_multiplicities,
    counting_curve,
    fit_exponent,
    match_lattice,
)
from .funnel import (
    FunnelParams,
    build_funnel_pencil,
    compute_funnel_resonances,
    funnel_coefficients,
    wronskian_oracle,
)
from .sds import QnmRequest, build_radial_pencil, compute_qnm, sds_mode_oracle
from .spectral import (
    CollocationGrid,
    PencilMatrices,
    RefineOptions,
    Spectrum,
    Window,
    build_grid,
    eig_dense,
    filter_spectrum,
    linearize,
    solve_pencil,
    unpaired_entries,
)
from .symbols import (
    EscapeConfig,
    ModelSymbols,
    SymbolGrid,
    check_assumptions,
    escape_bracket,
    find_epsilons,
    funnel_symbols,
    invertibility_nu,
    persistence_kappa,
    ptilde_margins,
    sds_symbols,
)
