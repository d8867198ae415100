"""Run configuration: TOML-style files, flag overrides, cache keys.

Config files use plain sectioned key = value syntax (a TOML subset);
command-line flags override file values.  The cache key is the 64-bit
BLAKE2 digest of the canonicalized subset of the configuration that
determines the numerical result, with collisions resolved by comparing
the stored canonical key text.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:  # pragma: no cover - version dependent
    import tomli as _toml

CACHE_ENV = "RESONANCES_CACHE_DIR"


@dataclass(frozen=True)
class RunConfig:
    """Everything a compute subcommand needs, flattened."""

    model: str = "sds"
    # sds
    mass: float = 1.0
    lam: float = 0.04
    ell_min: int = 0
    ell_max: int = 2
    plateau_fraction: float = 0.15
    smoothstep_order: int = 6
    profile_kind: str = "smoothstep"
    # funnel
    circumference: float = 6.283185307179586
    mode_min: int = 0
    mode_max: int = 4
    neck_bc: str = "both"
    # shared numerics
    n_low: int = 64
    n_high: int = 96
    drift_tol: float = 1e-7
    residual_tol: float = 1e-8
    rmax: float = 0.0          # 0 -> derived default
    gamma: float = 0.0         # 0 -> derived default
    k_max: int = 8
    mp_refine: bool = False
    # symbols
    tau: float = 0.1
    # execution
    threads: int = 1
    cache: bool = True
    cache_dir: str = ""
    out: str = ""
    json_out: str = ""
    svg_out: str = ""

    def __post_init__(self):
        if self.model not in ("sds", "funnel", "symbols"):
            raise ConfigError(f"unknown model {self.model!r}")
        for name in ("drift_tol", "residual_tol", "tau"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if 2 * self.n_high < 3 * self.n_low:
            raise ConfigError("resolutions must satisfy n_high >= 3 n_low / 2")

    def resolved_cache_dir(self) -> Path:
        if self.cache_dir:
            return Path(self.cache_dir)
        env = os.environ.get(CACHE_ENV)
        if env:
            return Path(env)
        return Path.home() / ".cache" / "resonances"

    def cache_subset(self) -> dict:
        """The fields that determine the numerical result."""
        keys = {
            "sds": ["model", "mass", "lam", "ell_min", "ell_max",
                    "plateau_fraction", "smoothstep_order", "profile_kind",
                    "n_low", "n_high", "drift_tol", "rmax", "gamma", "k_max",
                    "mp_refine"],
            "funnel": ["model", "circumference", "mode_min", "mode_max",
                       "neck_bc", "n_low", "n_high", "drift_tol", "rmax",
                       "gamma", "mp_refine"],
            "symbols": ["model", "mass", "lam", "plateau_fraction",
                        "smoothstep_order", "profile_kind", "circumference",
                        "tau"],
        }[self.model]
        d = asdict(self)
        return {k: d[k] for k in keys}

    def cache_key(self) -> tuple:
        canon = json.dumps(self.cache_subset(), sort_keys=True, separators=(",", ":"))
        digest = hashlib.blake2b(canon.encode(), digest_size=8).hexdigest()
        return digest, canon


def load_config_file(path) -> dict:
    """Flatten a sectioned key = value file into config fields."""
    try:
        data = _toml.loads(Path(path).read_text())
    except Exception as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            for k, v in value.items():
                flat[k] = v
        else:
            flat[key] = value
    return flat


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    """File values first, CLI overrides on top, defaults underneath."""
    merged = {}
    valid = set(RunConfig.__dataclass_fields__)
    for source in (file_values, overrides):
        for k, v in source.items():
            if v is None:
                continue
            if k not in valid:
                raise ConfigError(f"unknown configuration key {k!r}")
            merged[k] = v
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


class Cache:
    """Content-addressed store for spectrum records."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def lookup(self, key: tuple):
        digest, canon = key
        d = self.root / digest
        keyfile = d / "key.json"
        record = d / "record.json"
        if keyfile.exists() and record.exists():
            if keyfile.read_text() == canon:
                return record
        return None

    def store(self, key: tuple, record_text: str) -> Path:
        digest, canon = key
        d = self.root / digest
        d.mkdir(parents=True, exist_ok=True)
        (d / "key.json").write_text(canon)
        path = d / "record.json"
        path.write_text(record_text)
        return path
