"""On-disk spectrum records: CSV tables and JSON sidecars.

CSV numbers carry 17 significant digits with LF line endings, so floats
round-trip bit-exactly and reloading a table reproduces in-memory counts
identically.  The JSON record is the full-fidelity form (parameters,
window, drift data); the CSV is the interchange table.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import ConfigError
from .spectral import Spectrum, SpectrumEntry, Window

SCHEMA_VERSION = 1

SDS_HEADER = "ell,re_lambda,im_lambda,mult,residual,accepted"
FUNNEL_HEADER = "m,bc,re_lambda,im_lambda,mult,residual,accepted"


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.17g}"


def spectrum_csv(spec: Spectrum) -> str:
    """Render a spectrum as the contracted CSV table (LF endings)."""
    model = spec.meta.get("model", "sds")
    lines = []
    if model == "funnel":
        lines.append(FUNNEL_HEADER)
        for e in sorted(spec.entries, key=_entry_key):
            lines.append(",".join([
                str(e.mode_index), e.sector, _fmt(e.lam.real), _fmt(e.lam.imag),
                str(e.weight), _fmt(e.residual), str(int(e.accepted)),
            ]))
    else:
        lines.append(SDS_HEADER)
        for e in sorted(spec.entries, key=_entry_key):
            lines.append(",".join([
                str(e.mode_index), _fmt(e.lam.real), _fmt(e.lam.imag),
                str(e.weight), _fmt(e.residual), str(int(e.accepted)),
            ]))
    return "\n".join(lines) + "\n"


def _entry_key(e: SpectrumEntry):
    return (e.mode_index, e.sector, e.lam.real, e.lam.imag)


def write_spectrum_csv(spec: Spectrum, path) -> None:
    Path(path).write_bytes(spectrum_csv(spec).encode("ascii"))


def spectrum_record(spec: Spectrum) -> dict:
    """Full-fidelity JSON-ready record of a spectrum."""
    win = spec.window
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": _jsonable(spec.meta),
        "window": None if win is None else {
            "rmax": win.rmax,
            "gamma": None if math.isinf(win.gamma) else win.gamma,
        },
        "entries": [
            {
                "mode_index": e.mode_index,
                "sector": e.sector,
                "re_lambda": e.lam.real,
                "im_lambda": e.lam.imag,
                "mult": e.weight,
                "residual": e.residual,
                "drift": e.drift,
                "accepted": bool(e.accepted),
                "zero": bool(e.zero),
            }
            for e in sorted(spec.entries, key=_entry_key)
        ],
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_spectrum_record(spec: Spectrum, path) -> None:
    Path(path).write_bytes(
        (json.dumps(spectrum_record(spec), indent=1, sort_keys=True) + "\n")
        .encode("ascii")
    )


def load_spectrum_record(path) -> Spectrum:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported record schema {data.get('schema_version')}")
    win = data.get("window")
    window = None
    if win is not None:
        window = Window(rmax=win["rmax"],
                        gamma=math.inf if win["gamma"] is None else win["gamma"])
    entries = [
        SpectrumEntry(
            lam=complex(row["re_lambda"], row["im_lambda"]),
            residual=row["residual"], accepted=row["accepted"],
            mode_index=row["mode_index"], weight=row["mult"],
            drift=row.get("drift"), zero=row.get("zero", False),
            sector=row.get("sector", ""),
        )
        for row in data["entries"]
    ]
    return Spectrum(entries, window=window, meta=data.get("meta", {}))


def load_spectrum_csv(path, window: Window = None) -> Spectrum:
    """Reconstruct a spectrum from a CSV table written by this package."""
    lines = Path(path).read_text().strip().split("\n")
    if not lines:
        raise ConfigError(f"empty CSV file {path}")
    header = lines[0].strip()
    entries = []
    if header == SDS_HEADER:
        model = "sds"
        for line in lines[1:]:
            ell, re, im, mult, res, acc = line.split(",")
            entries.append(SpectrumEntry(
                lam=complex(float(re), float(im)), residual=float(res),
                accepted=bool(int(acc)), mode_index=int(ell), weight=int(mult),
                zero=abs(complex(float(re), float(im))) < 1e-6,
            ))
    elif header == FUNNEL_HEADER:
        model = "funnel"
        for line in lines[1:]:
            m, bc, re, im, mult, res, acc = line.split(",")
            entries.append(SpectrumEntry(
                lam=complex(float(re), float(im)), residual=float(res),
                accepted=bool(int(acc)), mode_index=int(m), weight=int(mult),
                sector=bc, zero=abs(complex(float(re), float(im))) < 1e-6,
            ))
    else:
        raise ConfigError(f"unrecognized CSV header {header!r} in {path}")
    return Spectrum(entries, window=window, meta={"model": model})
