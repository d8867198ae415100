"""Funnel pencil, neck sectors, oracle, and the symbolic conjugation check."""

import numpy as np
import pytest

from resonances.errors import GeometryMismatchError, ParameterError
from resonances.funnel import (
    FunnelParams,
    build_funnel_pencil,
    compute_funnel_resonances,
    funnel_coefficients,
    funnel_wronskian,
    printed_zeroth_order_gap,
    wronskian_oracle,
)
from resonances.spectral import Window, build_grid

FP = FunnelParams()  # circumference 2 pi
LAT = 1.0 / (2.0 * np.pi)  # Re spacing of the exact lattice at this size


class TestParams:
    def test_invariants(self):
        with pytest.raises(ParameterError):
            FunnelParams(circumference=-1.0)
        with pytest.raises(ParameterError):
            FunnelParams(mode_min=2, mode_max=1)
        with pytest.raises(ParameterError):
            FunnelParams(mode_min=-1, mode_max=3)
        with pytest.raises(ParameterError):
            FunnelParams(neck_bc="robin")
        assert FunnelParams(mode_min=-2, mode_max=2).modes == [0, 1, 2]


class TestCoefficients:
    def test_second_order_coefficient(self):
        co = funnel_coefficients(0.25)
        x = np.linspace(0, 1, 40)
        assert np.allclose(co.dxx(x), -x * (1 + x) ** 2, rtol=0, atol=1e-15)

    def test_angular_constant(self):
        # m=3, circumference 2 pi: potential 9/(4 pi^2) at every node
        co = funnel_coefficients((3 / (2 * np.pi)) ** 2)
        x = np.linspace(0, 1, 11)
        assert np.allclose(co.c00(x) - 0.25, 9.0 / (4 * np.pi**2), rtol=1e-14)

    def test_two_routes_agree(self):
        a = funnel_coefficients(0.3, route="conjugation")
        b = funnel_coefficients(0.3, route="structural")
        x = np.linspace(0.0, 0.1, 64)
        for f, g in ((a.dxx, b.dxx), (a.dx0, b.dx0), (a.dx1, b.dx1),
                     (a.c00, b.c00), (a.c01, b.c01), (a.c02, b.c02)):
            assert np.max(np.abs(np.asarray(f(x), dtype=complex)
                                 - np.asarray(g(x), dtype=complex))) < 1e-10

    def test_lambda2_strictly_negative_constant(self):
        co = funnel_coefficients(0.1)
        assert complex(co.c02(0.0)) == -1.0

    def test_printed_gap_formula(self):
        # the display's zeroth-order slip: (1 - x^2)(2 i lam - 1)/4
        gap = printed_zeroth_order_gap(0.0, 0.5j)
        assert gap == pytest.approx((2j * 0.5j - 1) / 4)
        assert printed_zeroth_order_gap(1.0, 0.3 - 0.2j) == 0.0


@pytest.mark.slow
class TestSymbolicConjugation:
    def test_coefficients_match_symbolic_derivation(self):
        sp = pytest.importorskip("sympy")
        x, lam, mb = sp.symbols("x lam mb")
        lt = sp.symbols("lt", positive=True)
        gxx = 1 / (4 * x**2)
        gtt = (lt**2 / 4) * (1 + x) ** 2 / x
        sq = sp.sqrt(gxx * gtt)
        u = sp.Function("u")(x)
        wt = 4 * x / (1 + x) ** 2
        a_right = wt ** (sp.Rational(1, 4) - sp.I * lam / 2)
        a_left = wt ** (sp.I * lam / 2 - sp.Rational(5, 4))
        lap = (sp.diff(sq * (1 / gxx) * sp.diff(a_right * u, x), x) / sq
               - (1 / gtt) * (mb * lt) ** 2 * a_right * u)
        expr = sp.expand(a_left * (-lap - sp.Rational(1, 4) * a_right * u
                                   - lam**2 * a_right * u))
        c2 = sp.simplify(expr.coeff(sp.diff(u, x, 2)))
        c1 = sp.simplify(expr.coeff(sp.diff(u, x, 1)))
        c0 = sp.simplify(sp.expand(expr - c2 * sp.diff(u, x, 2)
                                   - c1 * sp.diff(u, x)).subs(u, 1))
        co = funnel_coefficients(0.0)  # mb2 enters only through c00
        assert sp.simplify(c2 - (-x * (1 + x) ** 2)) == 0
        assert sp.simplify(c1 - (sp.I * lam * (1 - x**2) - (1 + x) ** 2)) == 0
        expect_c0 = mb**2 + sp.Rational(1, 4) - sp.I * lam - lam**2
        assert sp.simplify(c0 - expect_c0) == 0

    def test_even_structure_no_square_roots(self):
        sp = pytest.importorskip("sympy")
        x = sp.symbols("x")
        for expr in (-x * (1 + x) ** 2, (1 - x**2), -(1 + x) ** 2):
            p = sp.Poly(expr, x)
            assert all(isinstance(e, int) or int(e) == e
                       for e in range(p.degree() + 1))


class TestPencil:
    def test_requires_unit_interval(self):
        grid = build_grid(24, 0.0, 0.9)
        with pytest.raises(GeometryMismatchError):
            build_funnel_pencil(0, FP, grid, "neumann")

    def test_neck_reduction_shapes(self):
        grid = build_grid(24, 0.0, 1.0)
        for bc in ("dirichlet", "neumann"):
            pen = build_funnel_pencil(1, FP, grid, bc)
            assert pen.n == 23
            assert np.allclose(np.diag(pen.a0), -1.0)


class TestResonances:
    @pytest.fixture(scope="class")
    def spec(self):
        fp = FunnelParams(mode_min=0, mode_max=2)
        return compute_funnel_resonances(fp, n_low=32, n_high=48,
                                         window=Window(rmax=1.2, gamma=1.0))

    def test_known_lattice_values(self, spec):
        # exact cylinder lattice: +-m/circ - i(k+1/2)
        acc = [e for e in spec.accepted() if not e.zero]
        assert acc
        for e in acc:
            k = round(-e.lam.imag - 0.5)
            expected = abs(e.mode_index) * LAT * np.sign(e.lam.real) - 1j * (k + 0.5)
            if abs(e.lam.real) < 1e-9:
                expected = -1j * (k + 0.5)
            assert abs(e.lam - expected) < 1e-6

    def test_sector_parity(self, spec):
        for e in spec.accepted():
            k = round(-e.lam.imag - 0.5)
            assert e.sector in ("dirichlet", "neumann")
            if e.sector == "neumann":
                assert k % 2 == 0
            else:
                assert k % 2 == 1

    def test_weights(self, spec):
        for e in spec.accepted():
            assert e.weight == (1 if e.mode_index == 0 else 2)

    def test_conjugate_symmetry(self, spec):
        vals = spec.values(accepted_only=True)
        for z in vals:
            assert np.min(np.abs(vals - (-np.conj(z)))) < 1e-6

    def test_plus_minus_m_coincide(self):
        fp = FunnelParams(mode_min=-1, mode_max=1)
        spec = compute_funnel_resonances(fp, n_low=32, n_high=48,
                                         window=Window(rmax=1.0, gamma=1.0))
        # modes list deduplicates to {0, 1}; entries tagged by |m|
        assert {e.mode_index for e in spec.accepted()} <= {0, 1}


class TestWronskianOracle:
    def test_empty_window(self):
        zeros = wronskian_oracle(1, FP, Window(rmax=0.3, gamma=0.25),
                                 bc="neumann")
        assert zeros == []

    def test_m1_fundamental_pair(self):
        win = Window(rmax=0.8, gamma=0.8)
        zeros = wronskian_oracle(1, FP, win, bc="neumann", min_cell=0.1)
        exact = {LAT - 0.5j, -LAT - 0.5j}
        assert len(zeros) == 2
        for z, mult, sec in zeros:
            assert mult == 1
            assert min(abs(z - e) for e in exact) < 1e-8

    def test_m0_double_zero(self):
        from resonances.winding import winding_number
        f = lambda z: funnel_wronskian(0, FP, z, "neumann")
        w = winding_number(f, -0.1 - 0.6j, 0.1 - 0.4j)
        assert w == 2

    def test_winding_additivity(self):
        # subdivision lines chosen off the zero row Im = -1/2
        from resonances.winding import winding_number
        f = lambda z: funnel_wronskian(1, FP, z, "neumann")
        lo, hi = -0.4 - 0.85j, 0.4 - 0.25j
        total = winding_number(f, lo, hi)
        mid = 0.5 * (lo + hi)
        parts = [
            winding_number(f, lo, mid),
            winding_number(f, complex(mid.real, lo.imag), complex(hi.real, mid.imag)),
            winding_number(f, complex(lo.real, mid.imag), complex(mid.real, hi.imag)),
            winding_number(f, mid, hi),
        ]
        assert total == sum(parts) == 2
