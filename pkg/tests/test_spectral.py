"""Spectral machinery tests: grids, linearization, eigensolver, filtering."""

import numpy as np
import pytest

from resonances.errors import (
    ConfigError,
    LinearizationError,
    MisuseError,
    ParameterError,
)
from resonances.spectral import (
    PencilMatrices,
    RefineOptions,
    Spectrum,
    SpectrumEntry,
    Window,
    build_grid,
    eig_dense,
    filter_spectrum,
    linearize,
    solve_pencil,
    unpaired_entries,
)

rng = np.random.default_rng(42)


class TestGrid:
    def test_config_errors(self):
        with pytest.raises(ConfigError):
            build_grid(4, 0.0, 1.0)
        with pytest.raises(ConfigError):
            build_grid(16, 1.0, 1.0)

    def test_nodes_ascending_with_endpoints(self):
        g = build_grid(17, -2.0, 3.0)
        assert g.nodes[0] == pytest.approx(-2.0, abs=1e-14)
        assert g.nodes[-1] == pytest.approx(3.0, abs=1e-14)
        assert np.all(np.diff(g.nodes) > 0)

    def test_annihilates_constants(self):
        g = build_grid(32, 0.0, 1.0)
        assert np.max(np.abs(g.d1 @ np.ones(32))) < 1e-10 * 32**2

    def test_differentiates_identity(self):
        g = build_grid(32, -1.0, 2.0)
        assert np.max(np.abs(g.d1 @ g.nodes - 1.0)) < 1e-9 * 32**2

    def test_quadratic_exact(self):
        g = build_grid(16, 0.0, 1.0)
        err = g.d1 @ g.nodes**2 - 2 * g.nodes
        assert np.max(np.abs(err)) < 1e-10

    def test_second_derivative_consistent(self):
        g = build_grid(24, 0.0, 2.0)
        assert np.max(np.abs(g.d2 - g.d1 @ g.d1)) < 1e-8 * 24**3

    def test_sine_derivative_oracle(self):
        # derivative of sin on the SdS-sized interval matches cos
        a, b = 2.1286, 7.3975
        g = build_grid(64, a, b)
        err = g.d1 @ np.sin(g.nodes) - np.cos(g.nodes)
        assert np.max(np.abs(err)) < 1e-10


def diag_pencil(a2d, a1d, a0d):
    return PencilMatrices(a2=np.diag(a2d).astype(complex),
                          a1=np.diag(a1d).astype(complex),
                          a0=np.diag(a0d).astype(complex))


class TestLinearize:
    def test_scalar_plus_minus_one(self):
        p = diag_pencil([-1.0], [0.0], [1.0])
        b, c = linearize(p)
        ev = np.sort_complex(np.linalg.eigvals(b))
        assert np.allclose(sorted(ev.real), [-1.0, 1.0], atol=1e-12)
        assert np.allclose(c, np.eye(2))

    def test_scalar_pm_i(self):
        p = diag_pencil([1.0], [0.0], [1.0])
        b, _ = linearize(p)
        ev = np.linalg.eigvals(b)
        assert sorted(np.round(ev.imag, 10)) == [-1.0, 1.0]
        assert np.allclose(ev.real, 0.0, atol=1e-12)

    def test_diagonal_quadratic_formula_oracle(self):
        n = 30
        a2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a0 += 2.0 * np.sign(a0.real)  # keep away from zero
        p = diag_pencil(a2, a1, a0)
        b, _ = linearize(p)
        ev = np.linalg.eigvals(b)
        expected = []
        for c2, c1, c0 in zip(a2, a1, a0):
            disc = np.sqrt(c1**2 - 4 * c0 * c2)
            expected += [(-c1 + disc) / (2 * c0), (-c1 - disc) / (2 * c0)]
        expected = np.array(expected)
        for z in expected:
            assert np.min(np.abs(ev - z)) < 1e-10 * max(1, abs(z))

    def test_singular_a0(self):
        p = diag_pencil([1.0, 1.0], [0.0, 0.0], [1.0, 1e-14])
        with pytest.raises(LinearizationError):
            linearize(p)


class TestEigDense:
    def test_diagonal(self):
        d = np.array([1.0 + 2j, -3.0, 0.5j])
        ev = np.sort_complex(eig_dense(np.diag(d)))
        assert np.allclose(ev, np.sort_complex(d))

    def test_rotation_block(self):
        ev = eig_dense(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert sorted(np.round(ev.imag, 12)) == [-1.0, 1.0]

    def test_trace_determinant_oracle(self):
        for _ in range(5):
            m = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
            ev = eig_dense(m)
            assert np.sum(ev) == pytest.approx(np.trace(m), abs=1e-8 * 50)
            det = np.linalg.det(m)
            assert np.prod(ev) == pytest.approx(det, rel=1e-6)

    def test_rejects_nonfinite(self):
        m = np.eye(3, dtype=complex)
        m[0, 1] = np.nan
        with pytest.raises(ParameterError):
            eig_dense(m)


class TestSolvePencil:
    def test_block_diagonal_closed_form(self):
        p = diag_pencil([-1.0, 1.0], [0.0, 0.0], [1.0, 1.0])
        spec = solve_pencil(p, window=None)
        vals = spec.values()
        for root in (1.0, -1.0, 1.0j, -1.0j):
            assert np.min(np.abs(vals - root)) < 1e-10

    def test_count_conservation(self):
        n = 12
        a2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        p = PencilMatrices(a2=a2, a1=a1, a0=np.diag(2.0 + rng.random(n)).astype(complex))
        spec = solve_pencil(p)
        assert len(spec.entries) == 2 * n

    def test_residuals_small_for_well_conditioned(self):
        n = 16
        a2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        p = PencilMatrices(a2=a2, a1=a1,
                           a0=np.diag(2.0 + rng.random(n)).astype(complex))
        spec = solve_pencil(p)
        assert all(e.residual < 1e-8 for e in spec.entries)

    def test_shift_consistency(self):
        # solving for mu = lam - s with shifted coefficients shifts the spectrum
        n = 10
        a2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a0 = np.diag(2.0 + rng.random(n)).astype(complex)
        s = 0.7 - 0.3j
        p = PencilMatrices(a2=a2, a1=a1, a0=a0)
        shifted = PencilMatrices(a2=a2 + s * a1 + s * s * a0,
                                 a1=a1 + 2 * s * a0, a0=a0)
        ev = np.array(sorted(solve_pencil(p).values(),
                             key=lambda z: (z.real, z.imag)))
        mv = np.array(sorted(solve_pencil(shifted).values() + s,
                             key=lambda z: (z.real, z.imag)))
        assert np.max(np.abs(ev - mv)) < 1e-8 * max(1.0, np.max(np.abs(ev)))


def entry(lam, res=32, mode=0, accepted=False):
    return SpectrumEntry(lam=lam, residual=1e-14, accepted=accepted,
                         mode_index=mode, resolution=res)


class TestFilter:
    def test_identical_spectra_all_accepted(self):
        win = Window(rmax=10.0, gamma=5.0)
        vals = [1.0 - 0.5j, -1.0 - 0.5j, 2.0 - 0.1j]
        lo = Spectrum([entry(v, 32) for v in vals], window=win)
        hi = Spectrum([entry(v, 48) for v in vals], window=win)
        out = filter_spectrum(lo, hi, 1e-7, win)
        assert len(out.entries) == 3
        assert all(e.accepted and e.drift == 0.0 for e in out.entries)

    def test_low_only_entry_rejected(self):
        win = Window(rmax=10.0, gamma=5.0)
        lo = Spectrum([entry(1.0 - 0.5j, 32), entry(3.0 - 1.0j, 32)], window=win)
        hi = Spectrum([entry(1.0 - 0.5j, 48)], window=win)
        out = filter_spectrum(lo, hi, 1e-7, win)
        assert [e.lam for e in out.entries] == [1.0 - 0.5j]

    def test_equal_resolution_misuse(self):
        win = Window(rmax=10.0, gamma=5.0)
        lo = Spectrum([entry(1.0, 32)], window=win)
        with pytest.raises(MisuseError):
            filter_spectrum(lo, lo, 1e-7, win)

    def test_window_restriction(self):
        win = Window(rmax=1.5, gamma=0.2)
        lo = Spectrum([entry(1.0 - 0.1j, 32), entry(1.0 - 1.0j, 32),
                       entry(2.0 - 0.1j, 32)], window=win)
        hi = Spectrum([entry(1.0 - 0.1j, 48), entry(1.0 - 1.0j, 48),
                       entry(2.0 - 0.1j, 48)], window=win)
        out = filter_spectrum(lo, hi, 1e-7, win)
        assert [e.lam for e in out.entries] == [1.0 - 0.1j]

    def test_ambiguous_pair_rejected(self):
        win = Window(rmax=10.0, gamma=5.0)
        lo = Spectrum([entry(1.0 - 0.5j, 32)], window=win)
        hi = Spectrum([entry(1.0 - 0.5j + 2e-8, 48),
                       entry(1.0 - 0.5j - 2e-8, 48)], window=win)
        out = filter_spectrum(lo, hi, 1e-7, win)
        assert out.entries == []

    def test_relative_vs_absolute_drift(self):
        win = Window(rmax=100.0, gamma=50.0)
        lo = Spectrum([entry(50.0 - 1.0j, 32)], window=win)
        hi = Spectrum([entry(50.0 - 1.0j + 4e-6, 48)], window=win)
        # |lam| = 50: tolerance 1e-7 relative = 5e-6 absolute: accepted
        out = filter_spectrum(lo, hi, 1e-7, win)
        assert len(out.entries) == 1


class TestSymmetry:
    def test_unpaired_detection(self):
        win = Window(rmax=10.0, gamma=5.0)
        spec = Spectrum([
            entry(1.0 - 0.5j, accepted=True),
            entry(-1.0 - 0.5j, accepted=True),
            entry(2.0 - 0.3j, accepted=True),
        ], window=win)
        bad = unpaired_entries(spec, pair_tol=1e-6)
        assert [b.lam for b in bad] == [2.0 - 0.3j]

    def test_axis_self_pairing(self):
        spec = Spectrum([entry(-0.5j, accepted=True)])
        assert unpaired_entries(spec, pair_tol=1e-6) == []
