"""Command-line interface.

Subcommands: sds, funnel, symbols, count, lattice, report.
Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-property violation (e.g. conjugate-symmetry pairing).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .background import RhoProfile, SdSParams, photon_constant_fit, photon_sphere_constant
from .config import Cache, RunConfig, build_config, load_config_file
from .counting import build_lattice, cluster_multiplicities, counting_curve, fit_exponent
from .errors import (
    ConfigError,
    ParameterError,
    ResonancesError,
    SymmetryViolationError,
    WindowError,
)
from .funnel import FunnelParams, compute_funnel_resonances
from .recordio import (
    load_spectrum_csv,
    load_spectrum_record,
    spectrum_csv,
    spectrum_record,
    write_spectrum_csv,
    write_spectrum_record,
)
from .sds import QnmRequest, compute_qnm
from .spectral import RefineOptions, Window, unpaired_entries
from .svg import counting_svg, scatter_svg


def _common_flags(p):
    p.add_argument("--config", help="TOML-style config file; flags override it")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--json", dest="json_out", help="JSON record output path")
    p.add_argument("--svg", dest="svg_out", help="SVG scatter output path")
    p.add_argument("--n", dest="n_low", type=int, help="low resolution")
    p.add_argument("--n-high", dest="n_high", type=int, help="high resolution")
    p.add_argument("--drift-tol", dest="drift_tol", type=float)
    p.add_argument("--rmax", type=float, help="trust window radius")
    p.add_argument("--gamma", type=float, help="trust window depth")
    p.add_argument("--threads", type=int)
    p.add_argument("--no-cache", dest="cache", action="store_false", default=None)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--mp-refine", dest="mp_refine", action="store_true", default=None)


def _parser():
    ap = argparse.ArgumentParser(prog="resonances",
                                 description="resonance/QNM pencil computations")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sds", help="Schwarzschild-de Sitter quasinormal modes")
    p.add_argument("--mass", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lmin", dest="ell_min", type=int)
    p.add_argument("--lmax", dest="ell_max", type=int)
    p.add_argument("--plateau", dest="plateau_fraction", type=float)
    p.add_argument("--profile", dest="profile_kind", choices=["smoothstep", "erf"])
    p.add_argument("--smoothstep-order", dest="smoothstep_order", type=int)
    p.add_argument("--kmax", dest="k_max", type=int)
    p.add_argument("--lattice-c", type=float, default=None,
                   help="overlay the pseudopole lattice with this constant on the SVG")
    _common_flags(p)

    p = sub.add_parser("funnel", help="hyperbolic funnel scattering resonances")
    p.add_argument("--circumference", type=float)
    p.add_argument("--mmin", dest="mode_min", type=int)
    p.add_argument("--mmax", dest="mode_max", type=int)
    p.add_argument("--bc", dest="neck_bc", choices=["dirichlet", "neumann", "both"])
    _common_flags(p)

    p = sub.add_parser("symbols", help="verify symbol hypotheses and escape margins")
    p.add_argument("--model", choices=["sds", "funnel", "both"], default="both")
    p.add_argument("--mass", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--circumference", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--config", help="TOML-style config file")
    p.add_argument("--json", dest="json_out", help="JSON report output path")

    p = sub.add_parser("count", help="counting curve and exponent fit from a CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--rmin", type=float, default=None, help="fit range lower end")
    p.add_argument("--fit-rmax", type=float, default=None, help="fit range upper end")
    p.add_argument("--radii", type=int, default=24, help="number of radii samples")
    p.add_argument("--per-mode", type=int, default=None,
                   help="restrict to one ell/m before counting")
    p.add_argument("--cluster-tol", type=float, default=1e-6)
    p.add_argument("--json", dest="json_out")
    p.add_argument("--svg", dest="svg_out")

    p = sub.add_parser("lattice", help="generate the pseudopole lattice")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--signs", choices=["correlated", "independent"],
                   default="correlated")
    p.add_argument("--json", dest="json_out")
    p.add_argument("--svg", dest="svg_out")

    p = sub.add_parser("report", help="summarize a stored spectrum record")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--json", dest="json_out")
    return ap


def _config_from_args(args, model) -> RunConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {k: v for k, v in vars(args).items()
                 if k in RunConfig.__dataclass_fields__ and v is not None}
    overrides["model"] = model
    return build_config(file_values, overrides)


def _window(cfg: RunConfig):
    if cfg.rmax > 0 and cfg.gamma > 0:
        return Window(rmax=cfg.rmax, gamma=cfg.gamma)
    return None


def _run_sds(args) -> int:
    cfg = _config_from_args(args, "sds")
    params = SdSParams(cfg.mass, cfg.lam)
    rho = RhoProfile(plateau_fraction=cfg.plateau_fraction,
                     smoothstep_order=cfg.smoothstep_order, kind=cfg.profile_kind)
    req = QnmRequest(
        params=params, ell_min=cfg.ell_min, ell_max=cfg.ell_max,
        n_low=cfg.n_low, n_high=cfg.n_high, window=_window(cfg), rho=rho,
        drift_tol=cfg.drift_tol,
        refine=RefineOptions(mp_for_multiple=cfg.mp_refine),
        workers=cfg.threads,
    )
    spec = _cached_compute(cfg, lambda: compute_qnm(req))
    _check_symmetry(spec, cfg.drift_tol)
    lattice_pts = None
    if getattr(args, "lattice_c", None):
        lat = build_lattice(args.lattice_c, cfg.ell_max, cfg.k_max)
        lattice_pts = [p.lam for p in lat.points if spec.window.contains(p.lam)]
    _emit_spectrum(spec, cfg, lattice_pts)
    return 0


def _run_funnel(args) -> int:
    cfg = _config_from_args(args, "funnel")
    fp = FunnelParams(circumference=cfg.circumference, mode_min=cfg.mode_min,
                      mode_max=cfg.mode_max, neck_bc=cfg.neck_bc)
    refine = RefineOptions(mp_for_multiple=True if cfg.mp_refine is not False else True)
    spec = _cached_compute(cfg, lambda: compute_funnel_resonances(
        fp, n_low=cfg.n_low, n_high=cfg.n_high, window=_window(cfg),
        drift_tol=cfg.drift_tol, refine=refine))
    _check_symmetry(spec, cfg.drift_tol)
    _emit_spectrum(spec, cfg, None)
    return 0


def _cached_compute(cfg: RunConfig, compute):
    from .recordio import load_spectrum_record as load_rec

    if not cfg.cache:
        return compute()
    cache = Cache(cfg.resolved_cache_dir())
    key = cfg.cache_key()
    hit = cache.lookup(key)
    if hit is not None:
        return load_rec(hit)
    spec = compute()
    record_text = json.dumps(spectrum_record(spec), indent=1, sort_keys=True) + "\n"
    cache.store(key, record_text)
    return spec


def _check_symmetry(spec, drift_tol):
    bad = unpaired_entries(spec, pair_tol=10 * drift_tol)
    if bad:
        vals = ", ".join(f"{e.lam:.6g}" for e in bad[:5])
        raise SymmetryViolationError(
            f"{len(bad)} accepted eigenvalue(s) without -conj partner: {vals}"
        )


def _emit_spectrum(spec, cfg: RunConfig, lattice_pts):
    if cfg.out:
        write_spectrum_csv(spec, cfg.out)
    if cfg.json_out:
        write_spectrum_record(spec, cfg.json_out)
    if cfg.svg_out:
        pts = [e.lam for e in spec.accepted()]
        Path(cfg.svg_out).write_bytes(
            scatter_svg(pts, title=f"{spec.meta.get('model', '')} spectrum",
                        lattice=lattice_pts).encode("ascii"))
    acc = spec.accepted()
    print(f"{spec.meta.get('model')}: {len(acc)} accepted eigenvalue(s)"
          f" in window rmax={spec.window.rmax:.4g} gamma={spec.window.gamma:.4g}")


def _run_symbols(args) -> int:
    from .symbols import (
        EscapeConfig,
        check_assumptions,
        find_epsilons,
        funnel_symbols,
        invertibility_nu,
        persistence_kappa,
        ptilde_margins,
        sds_symbols,
    )

    file_values = load_config_file(args.config) if args.config else {}
    cfg = build_config(file_values, {
        "model": "symbols",
        **{k: v for k, v in vars(args).items()
           if k in ("mass", "lam", "circumference", "tau") and v is not None},
    })
    models = []
    if args.model in ("sds", "both"):
        models.append(sds_symbols(SdSParams(cfg.mass, cfg.lam),
                                  RhoProfile(plateau_fraction=cfg.plateau_fraction,
                                             smoothstep_order=cfg.smoothstep_order,
                                             kind=cfg.profile_kind)))
    if args.model in ("funnel", "both"):
        models.append(funnel_symbols(FunnelParams(circumference=cfg.circumference)))

    report = {}
    ok = True
    for model in models:
        entry = {"assumptions": [], "epsilons": {}, "margins": []}
        for rep in check_assumptions(model):
            entry["assumptions"].append({
                "assumption": rep.assumption, "min_margin": rep.min_margin,
                "witness": rep.witness, "pass": rep.passed, **rep.details,
            })
            ok &= rep.passed
            print(f"{model.name:7s} {rep.assumption:32s} margin={rep.min_margin:+.4e} "
                  f"{'PASS' if rep.passed else 'FAIL'}")
        eps = find_epsilons(model)
        for name, er in eps.items():
            entry["epsilons"][name] = vars(er)
        eps0 = min(er.eps0 for er in eps.values())
        eps1 = min(er.eps1 for er in eps.values())
        ecfg = EscapeConfig(eps0=eps0, eps1=eps1, tau=cfg.tau)
        for rep in ptilde_margins(model, ecfg, omega=0.0):
            entry["margins"].append({
                "region": rep.assumption, "min_margin": rep.min_margin,
                "pass": rep.passed, **{k: str(v) for k, v in rep.details.items()},
            })
            ok &= rep.passed
            print(f"{model.name:7s} {rep.assumption:32s} margin={rep.min_margin:+.4e} "
                  f"{'PASS' if rep.passed else 'FAIL'}")
        kappa = persistence_kappa(model, ecfg)
        nu = invertibility_nu(model, ecfg)
        entry["kappa"] = kappa
        entry["invertibility_nu"] = nu
        print(f"{model.name:7s} kappa={kappa:.4e} nu={nu:g}")
        report[model.name] = entry
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report, indent=1, sort_keys=True,
                                                  default=str) + "\n")
    if not ok:
        raise SymmetryViolationError("symbol margins include failures")
    return 0


def _run_count(args) -> int:
    spec = load_spectrum_csv(args.infile)
    if args.per_mode is not None:
        spec.entries = [e for e in spec.entries if e.mode_index == args.per_mode]
    region = Window(rmax=args.rmax, gamma=args.gamma)
    resonances = cluster_multiplicities(spec, cluster_tol=args.cluster_tol)
    radii = np.geomspace(args.rmax / 30.0, args.rmax, args.radii)
    curve = counting_curve(resonances, region, radii)
    fit = None
    r_lo = args.rmin if args.rmin is not None else args.rmax / 8.0
    r_hi = args.fit_rmax if args.fit_rmax is not None else args.rmax
    try:
        slope, err = fit_exponent(curve, r_lo, r_hi)
        fit = {"slope": slope, "stderr": err, "r_min": r_lo, "r_max": r_hi}
        print(f"N(r) exponent {slope:.3f} +- {err:.3f} over [{r_lo:.3g}, {r_hi:.3g}]")
    except ResonancesError as exc:
        print(f"exponent fit skipped: {exc}")
    payload = {
        "region": {"rmax": args.rmax, "gamma": args.gamma},
        "radii": [float(r) for r in curve.radii],
        "counts": [int(c) for c in curve.counts],
        "fit": fit,
        "warnings": getattr(resonances, "warnings", []),
    }
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(payload, indent=1, sort_keys=True)
                                       + "\n")
    if args.svg_out:
        Path(args.svg_out).write_bytes(counting_svg(curve).encode("ascii"))
    return 0


def _run_lattice(args) -> int:
    lat = build_lattice(args.c, args.lmax, args.kmax, signs=args.signs)
    rows = [{"ell": p.ell, "k": p.k, "sign": p.sign,
             "re_lambda": p.lam.real, "im_lambda": p.lam.imag,
             "mult": p.multiplicity} for p in lat.points]
    print(f"lattice: {len(rows)} points, c={args.c}")
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(
            {"c": args.c, "signs": args.signs, "points": rows},
            indent=1, sort_keys=True) + "\n")
    if args.svg_out:
        Path(args.svg_out).write_bytes(
            scatter_svg([p.lam for p in lat.points], title="pseudopole lattice")
            .encode("ascii"))
    return 0


def _run_report(args) -> int:
    spec = load_spectrum_record(args.infile)
    acc = spec.accepted()
    model = spec.meta.get("model", "?")
    summary = {
        "model": model,
        "meta": spec.meta,
        "accepted": len(acc),
        "total_entries": len(spec.entries),
        "zero_modes": sum(1 for e in acc if e.zero),
        "per_mode": {},
    }
    for e in acc:
        summary["per_mode"][str(e.mode_index)] = summary["per_mode"].get(
            str(e.mode_index), 0) + 1
    if model == "sds" and acc:
        try:
            c, resid = photon_constant_fit(
                [(e.mode_index, e.lam) for e in acc], ell_min=10)
            summary["lattice_constant_fit"] = {"c": c, "relative_residual": resid}
            params_ok = all(k in spec.meta for k in ("mass", "lam"))
            if params_ok:
                summary["lattice_constant_wkb"] = photon_sphere_constant(
                    SdSParams(spec.meta["mass"], spec.meta["lam"]))
        except ResonancesError:
            pass
    text = json.dumps(summary, indent=1, sort_keys=True, default=str)
    print(text)
    if args.json_out:
        Path(args.json_out).write_text(text + "\n")
    return 0


_RUNNERS = {
    "sds": _run_sds,
    "funnel": _run_funnel,
    "symbols": _run_symbols,
    "count": _run_count,
    "lattice": _run_lattice,
    "report": _run_report,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _RUNNERS[args.command](args)
    except (ConfigError, ParameterError, WindowError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SymmetryViolationError as exc:
        print(f"acceptance-property violation: {exc}", file=sys.stderr)
        return 4
    except ResonancesError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
