"""Symbol hypothesis checks, escape function, conjugated-symbol margins."""

import numpy as np
import pytest

from resonances.background import RhoProfile, SdSParams, horizon_roots, metric_function
from resonances.errors import ConfigError
from resonances.funnel import FunnelParams
from resonances.symbols import (
    EscapeConfig,
    SymbolGrid,
    check_assumptions,
    conjugated_symbol,
    escape_bracket,
    find_epsilons,
    funnel_symbols,
    invertibility_nu,
    persistence_kappa,
    ptilde_margins,
    sds_symbols,
)

GRID = SymbolGrid()
P = SdSParams(1.0, 0.04)


@pytest.fixture(scope="module")
def sds_model():
    return sds_symbols(P)


@pytest.fixture(scope="module")
def funnel_model():
    return funnel_symbols(FunnelParams())


@pytest.fixture(scope="module")
def sds_cfg(sds_model):
    eps = find_epsilons(sds_model, GRID)
    return EscapeConfig(eps0=min(e.eps0 for e in eps.values()),
                        eps1=min(e.eps1 for e in eps.values()))


class TestAssumptions:
    def test_all_pass_both_models(self, sds_model, funnel_model):
        for model in (sds_model, funnel_model):
            reports = check_assumptions(model, GRID)
            assert len(reports) == 5
            assert all(r.passed for r in reports)
            assert all(r.min_margin > 0 for r in reports)

    def test_sds_w_values(self, sds_model):
        # w(0) = G(r-) = 0 and w'(0) = G'(r-) > 0 on the event chart
        h = horizon_roots(P)
        chart = sds_model.charts[0]
        assert abs(float(chart.w(0.0))) < 1e-12
        assert float(chart.wp(0.0)) == pytest.approx(
            float(metric_function(h.r_minus, P, 1)), rel=1e-12)
        # cosmological chart: w'(0) = -G'(r+) > 0
        chart2 = sds_model.charts[1]
        assert float(chart2.wp(0.0)) == pytest.approx(
            -float(metric_function(h.r_plus, P, 1)), rel=1e-12)

    def test_funnel_w_values(self, funnel_model):
        chart = funnel_model.charts[0]
        assert float(chart.w(0.0)) == 0.0
        assert float(chart.wp(0.0)) == 1.0

    def test_sds_p0_at_boundary(self, sds_model):
        chart = sds_model.charts[0]
        assert float(chart.p0(0.0)) == pytest.approx(-1.0 / (1.0 - P.mu), rel=1e-12)

    def test_homogeneity(self, sds_model):
        rep = [r for r in check_assumptions(sds_model, GRID)
               if r.assumption == "interior-ellipticity"][0]
        assert rep.details["homogeneity_rel_max"] < 1e-10


class TestEscapeBracket:
    def test_reduction_at_zero_transverse(self, sds_model):
        # at xi' = 0 the bracket reduces to 2 xi1^3 w'(x1)/(2 + xi1^2)
        chart = sds_model.charts[0]
        for x1 in (-0.2, 0.0, 0.3):
            for xi1 in (0.5, -2.0, 7.0):
                val = escape_bracket(chart, x1, xi1, 0.0)
                expect = 2 * xi1**3 * float(chart.wp(x1)) / (2 + xi1**2)
                assert val == pytest.approx(expect, rel=1e-13)

    def test_sign_in_escape_region(self, sds_model, funnel_model):
        for model in (sds_model, funnel_model):
            eps = find_epsilons(model, GRID)
            for chart in model.charts:
                inv_eps1 = 1.0 / eps[chart.name].eps1
                x = np.linspace(-chart.eps, chart.eps, 31)
                for eta in (0.0, 1.0, 30.0):
                    xi1 = inv_eps1 * (1 + eta) * 1.01
                    vals = escape_bracket(chart, x, xi1, eta)
                    assert np.all(np.sign(vals) == 1.0)
                    vals = escape_bracket(chart, x, -xi1, eta)
                    assert np.all(np.sign(vals) == -1.0)

    def test_flow_finite_difference_oracle(self, sds_model):
        # d/dt p2 along the Hamiltonian flow of the log weight matches the
        # closed form to O(step^2); the flow is an exact drift in x1
        chart = sds_model.charts[0]
        pts = [(-0.1, 3.0, 1.5), (0.2, -4.0, 0.5), (0.0, 2.0, 2.0)]
        for x1, xi1, eta in pts:
            closed = escape_bracket(chart, x1, xi1, eta)
            denom = 2 + xi1**2 + eta**2
            vx = 2 * xi1 / denom  # dG1/dxi1; xi stays fixed along the flow
            errs = []
            for h in (1e-3, 5e-4):
                p2 = lambda t: (chart.w(x1 + vx * t) * xi1**2
                                + chart.q1(x1 + vx * t, eta))
                fd = (p2(h) - p2(-h)) / (2 * h)
                errs.append(abs(fd - closed))
            assert errs[1] < errs[0] / 2.0 + 1e-14


class TestEpsilons:
    def test_succeeds_both_models(self, sds_model, funnel_model):
        for model in (sds_model, funnel_model):
            eps = find_epsilons(model, GRID)
            for rep in eps.values():
                assert rep.eps0 > 0 and rep.eps1 > 0
                assert rep.c_escape > 0
                assert rep.c_lower1 > 0 and rep.c_lower2 > 0

    def test_trivial_at_zero_xi1(self, sds_model):
        # both lower bounds hold with constant 1 at xi1 = 0
        eps = find_epsilons(sds_model, GRID)
        chart = sds_model.charts[0]
        er = eps[chart.name]
        eta = np.linspace(0, 100, 51)
        lhs1 = 0.0 + eta**2 + 1.0
        assert np.all(lhs1 >= 1.0 * (1 + eta**2) - 1e-12)
        lhs2 = np.asarray(chart.q1(0.0, eta)) + 1.0
        assert np.all(lhs2 > 0)


class TestEscapeConfig:
    def test_support_validation(self):
        cfg = EscapeConfig(eps0=0.01, eps1=0.1)
        t = np.linspace(-0.02, 0.02, 101)
        chi = np.asarray(cfg.chi(t))
        assert np.all(chi[t <= -0.01] == 0)
        assert np.all(chi[t >= -0.01 * 5 / 6] == 1)

    def test_bad_psi_rejected(self):
        with pytest.raises(ConfigError):
            EscapeConfig(eps0=0.01, eps1=0.1,
                         psi=lambda t: np.asarray(t) ** 2 / 2,
                         psi_prime=lambda t: np.asarray(t))

    def test_bad_cutoff_rejected(self):
        with pytest.raises(ConfigError):
            EscapeConfig(eps0=0.01, eps1=0.1,
                         chi=lambda t: np.ones_like(np.asarray(t, dtype=float)))


class TestPtilde:
    def test_deep_region_exact(self, sds_model, sds_cfg):
        rng = np.random.default_rng(3)
        chart = sds_model.charts[0]
        x = rng.uniform(-chart.eps, -sds_cfg.eps0, 20)
        xi1 = 3 * rng.standard_normal(20)
        eta = np.abs(3 * rng.standard_normal(20))
        pt = conjugated_symbol(chart, sds_cfg, 0.25 - 0.1j, x, xi1, eta)
        assert np.max(np.abs(pt - (1 + xi1**2 + eta**2))) == 0.0

    def test_vplus_imaginary_sign_structure(self, sds_model, sds_cfg):
        # at omega=0, large xi1 > 0: Im ptilde = 2 w psi' xi1 < 0 where
        # x1 psi'(x1) < 0
        chart = sds_model.charts[0]
        x1 = sds_cfg.eps0 / 3.0
        xi1 = 200.0
        pt = complex(conjugated_symbol(chart, sds_cfg, 0.0, x1, xi1, 0.0))
        expect = 2 * float(chart.w(x1)) * float(sds_cfg.psi_prime(x1)) * xi1
        assert pt.imag == pytest.approx(expect, rel=1e-9)
        assert pt.imag < 0

    def test_margins_positive_at_small_real_omega(self, sds_model, funnel_model):
        for model in (sds_model, funnel_model):
            eps = find_epsilons(model, GRID)
            cfg = EscapeConfig(eps0=min(e.eps0 for e in eps.values()),
                               eps1=min(e.eps1 for e in eps.values()))
            kappa = persistence_kappa(model, cfg, GRID)
            assert kappa > 0
            for rep in ptilde_margins(model, cfg, kappa / 2.0, GRID):
                assert rep.min_margin > 0
                assert rep.details["credited_margin"] > 0

    def test_invertibility_nu(self, sds_model, sds_cfg):
        nu = invertibility_nu(sds_model, sds_cfg, GRID)
        assert nu >= 1.0
        reps = ptilde_margins(sds_model, sds_cfg, 1j * nu, GRID, floor=0.0)
        assert all(r.min_margin > 0 for r in reps)
