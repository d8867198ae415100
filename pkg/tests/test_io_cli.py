"""Persistence, SVG, configuration, caching, and the CLI surface."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from resonances import cli
from resonances.config import Cache, RunConfig, build_config, load_config_file
from resonances.counting import cluster_multiplicities, counting_curve
from resonances.errors import ConfigError
from resonances.recordio import (
    load_spectrum_csv,
    load_spectrum_record,
    spectrum_csv,
    write_spectrum_csv,
    write_spectrum_record,
)
from resonances.spectral import Spectrum, SpectrumEntry, Window
from resonances.svg import counting_svg, scatter_svg


def sample_spectrum():
    entries = [
        SpectrumEntry(lam=0.3807839374 - 0.0787588213j, residual=3.2e-15,
                      accepted=True, mode_index=2, resolution=72, weight=5,
                      drift=1.2e-9),
        SpectrumEntry(lam=-0.3807839374 - 0.0787588213j, residual=3.1e-15,
                      accepted=True, mode_index=2, resolution=72, weight=5,
                      drift=1.2e-9),
        SpectrumEntry(lam=0.9 - 0.9j, residual=2e-3, accepted=False,
                      mode_index=2, resolution=72, weight=5),
    ]
    return Spectrum(entries, window=Window(rmax=1.0, gamma=0.5),
                    meta={"model": "sds", "mass": 1.0, "lam": 0.04})


class TestRecordIO:
    def test_csv_header_contract(self):
        text = spectrum_csv(sample_spectrum())
        assert text.splitlines()[0] == "ell,re_lambda,im_lambda,mult,residual,accepted"
        assert "\r" not in text

    def test_csv_roundtrip_recount(self, tmp_path):
        spec = sample_spectrum()
        path = tmp_path / "spec.csv"
        write_spectrum_csv(spec, path)
        loaded = load_spectrum_csv(path, window=spec.window)
        region = Window(rmax=1.0, gamma=0.5)
        radii = np.linspace(0.1, 1.0, 12)
        c0 = counting_curve(cluster_multiplicities(spec, 1e-6), region, radii)
        c1 = counting_curve(cluster_multiplicities(loaded, 1e-6), region, radii)
        assert np.array_equal(c0.counts, c1.counts)

    def test_json_record_roundtrip(self, tmp_path):
        spec = sample_spectrum()
        path = tmp_path / "spec.json"
        write_spectrum_record(spec, path)
        loaded = load_spectrum_record(path)
        assert loaded.window.rmax == spec.window.rmax
        for a, b in zip(sorted(spec.entries, key=lambda e: (e.lam.real, e.lam.imag)),
                        sorted(loaded.entries, key=lambda e: (e.lam.real, e.lam.imag))):
            assert a.lam == b.lam  # bit-exact float round trip
            assert a.accepted == b.accepted and a.weight == b.weight

    def test_csv_17_digit_roundtrip(self, tmp_path):
        spec = sample_spectrum()
        path = tmp_path / "x.csv"
        write_spectrum_csv(spec, path)
        loaded = load_spectrum_csv(path)
        key = lambda z: (z.real, z.imag)
        orig = sorted((e.lam for e in spec.entries if e.accepted), key=key)
        back = sorted((e.lam for e in loaded.entries if e.accepted), key=key)
        assert orig == back


class TestSVG:
    def test_two_marker_scatter(self):
        doc = scatter_svg([0.3 - 0.1j, -0.3 - 0.1j])
        assert doc.count("<circle") == 2
        assert doc.startswith("<svg")

    def test_lattice_overlay(self):
        doc = scatter_svg([0.3 - 0.1j], lattice=[0.25 - 0.15j, -0.25 - 0.15j])
        assert doc.count("<circle") == 1
        assert doc.count("<path") == 2

    def test_empty_refused(self):
        with pytest.raises(ConfigError):
            scatter_svg([])

    def test_byte_identical(self):
        pts = [0.1 - 0.2j, 0.4 - 0.3j, -0.1 - 0.5j]
        assert scatter_svg(pts) == scatter_svg(list(pts))

    def test_counting_curve_svg(self):
        curve = type("C", (), {"radii": np.array([1.0, 2.0, 4.0]),
                               "counts": np.array([1, 4, 16])})()
        doc = counting_svg(curve)
        assert "<path" in doc and doc.count("<circle") == 3


class TestConfig:
    def test_file_and_overrides(self, tmp_path):
        cfgfile = tmp_path / "run.toml"
        cfgfile.write_text("[sds]\nmass = 2.0\nlam = 0.01\nn_low = 48\nn_high = 72\n")
        values = load_config_file(cfgfile)
        cfg = build_config(values, {"model": "sds", "mass": 1.5})
        assert cfg.mass == 1.5 and cfg.lam == 0.01 and cfg.n_low == 48

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            build_config({"meaning": 42}, {})

    def test_validation(self):
        with pytest.raises(ConfigError):
            build_config({}, {"model": "sds", "n_low": 64, "n_high": 80})

    def test_cache_key_stability(self):
        a = RunConfig(model="sds").cache_key()
        b = RunConfig(model="sds").cache_key()
        c = RunConfig(model="sds", lam=0.02).cache_key()
        assert a == b and a[0] != c[0]

    def test_cache_out_path_not_in_key(self):
        a = RunConfig(model="sds", out="x.csv").cache_key()
        b = RunConfig(model="sds", out="y.csv").cache_key()
        assert a == b

    def test_cache_store_lookup(self, tmp_path):
        cache = Cache(tmp_path)
        key = RunConfig(model="sds").cache_key()
        assert cache.lookup(key) is None
        cache.store(key, '{"schema_version": 1}')
        assert cache.lookup(key) is not None
        # collision with different canonical key text is not a hit
        fake = (key[0], key[1] + "x")
        assert cache.lookup(fake) is None


SDS_ARGS = ["sds", "--mass", "1.0", "--lambda", "0.04", "--lmin", "2",
            "--lmax", "2", "--n", "48", "--n-high", "72",
            "--rmax", "0.75", "--gamma", "0.25"]


class TestCLI:
    def test_sds_csv_contract(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RESONANCES_CACHE_DIR", str(tmp_path / "cache"))
        out = tmp_path / "qnm.csv"
        rc = cli.main(SDS_ARGS + ["--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "ell,re_lambda,im_lambda,mult,residual,accepted"
        assert len(lines) > 1

    def test_rerun_identical_bytes_and_thread_independence(self, tmp_path,
                                                           monkeypatch):
        monkeypatch.setenv("RESONANCES_CACHE_DIR", str(tmp_path / "cache"))
        outs = []
        for i, extra in enumerate((["--threads", "1"], ["--threads", "3"],
                                   ["--threads", "1", "--no-cache"])):
            out = tmp_path / f"qnm{i}.csv"
            assert cli.main(SDS_ARGS + ["--out", str(out)] + extra) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_config_error_exit_2(self, capsys):
        rc = cli.main(["sds", "--mass", "1.0", "--lambda", "0.2"])
        assert rc == 2

    def test_missing_input_exit_2(self):
        rc = cli.main(["count", "--in", "/nonexistent.csv",
                       "--rmax", "1.0", "--gamma", "0.5"])
        assert rc == 2

    def test_symmetry_violation_exit_4(self, monkeypatch, tmp_path):
        monkeypatch.setenv("RESONANCES_CACHE_DIR", str(tmp_path / "cache"))
        broken = Spectrum(
            [SpectrumEntry(lam=0.5 - 0.2j, residual=0.0, accepted=True,
                           mode_index=2, resolution=72, weight=5)],
            window=Window(rmax=1.0, gamma=0.5),
            meta={"model": "sds"})
        monkeypatch.setattr(cli, "compute_qnm", lambda req: broken)
        rc = cli.main(SDS_ARGS + ["--no-cache"])
        assert rc == 4

    def test_empty_svg_exit_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RESONANCES_CACHE_DIR", str(tmp_path / "cache"))
        rc = cli.main(["sds", "--mass", "1.0", "--lambda", "0.04",
                       "--lmin", "2", "--lmax", "2", "--n", "48",
                       "--n-high", "72", "--rmax", "0.05", "--gamma", "0.01",
                       "--svg", str(tmp_path / "x.svg")])
        assert rc == 2

    def test_count_pipeline(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RESONANCES_CACHE_DIR", str(tmp_path / "cache"))
        csv = tmp_path / "qnm.csv"
        assert cli.main(SDS_ARGS + ["--out", str(csv)]) == 0
        js = tmp_path / "count.json"
        svg = tmp_path / "count.svg"
        rc = cli.main(["count", "--in", str(csv), "--rmax", "0.7",
                       "--gamma", "0.25", "--json", str(js),
                       "--svg", str(svg)])
        assert rc == 0
        payload = json.loads(js.read_text())
        assert payload["counts"][-1] >= payload["counts"][0]
        assert svg.read_text().startswith("<svg")

    def test_lattice_command(self, tmp_path):
        js = tmp_path / "lat.json"
        rc = cli.main(["lattice", "--c", "1.0", "--lmax", "1", "--kmax", "0",
                       "--json", str(js)])
        assert rc == 0
        data = json.loads(js.read_text())
        assert len(data["points"]) == 2

    def test_report_command(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RESONANCES_CACHE_DIR", str(tmp_path / "cache"))
        rec = tmp_path / "qnm.json"
        assert cli.main(SDS_ARGS + ["--json", str(rec)]) == 0
        out = tmp_path / "report.json"
        rc = cli.main(["report", "--in", str(rec), "--json", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["model"] == "sds" and data["accepted"] >= 2
