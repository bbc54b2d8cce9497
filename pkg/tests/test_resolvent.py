import numpy as np
import pytest

from qfads import resolvent
from qfads.core import (
    BoundaryRay,
    IsometryPair,
    QuadricPoint,
    chart_convert,
    conformal_factor,
    isometry_apply,
    q_eval,
)
from qfads.errors import IntegerPole, LightConeProximity
from qfads.resolvent import BoundaryDensity, F_h, F_lambda

from conftest import random_isometry

E = np.array([1.0, 0, 0, 0])


class TestFKernels:
    def test_integer_pole_guard(self):
        with pytest.raises(IntegerPole):
            F_lambda(0.0, np.cosh(1.0))

    def test_spacelike_value(self):
        # lam = 1/4: tan(1.25 pi) = 1, so F = e^{-1.25}/(4 pi sinh 1)
        kv = F_lambda(0.25, np.cosh(1.0))
        expect = np.exp(-1.25) / (4.0 * np.pi * np.sinh(1.0))
        assert abs(kv.value - expect) < 1e-14
        assert kv.region == "zeta>1"

    def test_fh_spacelike(self):
        kv = F_h(0.0, np.cosh(1.0))
        expect = 1j * np.exp(-1.0) / (4.0 * np.pi * np.sinh(1.0))
        assert abs(kv.value - expect) < 1e-15

    def test_fh_timelike_zero(self):
        kv = F_h(0.0, 0.0)
        assert abs(kv.value - (-1j / (4.0 * np.pi))) < 1e-15

    def test_fh_vanishes_past(self):
        assert F_h(0.7, -2.0).value == 0.0
        assert F_h(-3.3, -1.5).value == 0.0

    def test_lightcone_guard(self):
        with pytest.raises(LightConeProximity):
            F_h(0.5, 1.0 + 1e-8)

    def test_ratio_constant_in_zeta(self):
        # F_lambda / F_h = C0+(lam) 4 pi / i on the spacelike side
        lam = 0.37
        expect = resolvent.c0_plus(lam) * 4.0 * np.pi / 1j
        for zeta in (1.3, 2.0, 5.5, 11.0):
            ratio = F_lambda(lam, zeta).value / F_h(lam, zeta).value
            assert abs(ratio - expect) < 1e-12 * abs(expect)

    def test_expansion_large_zeta(self):
        lam = 0.25
        val = F_lambda(lam, 10.0).value
        ser = resolvent.expansion_F_lambda(lam, 10.0, 5)
        assert abs(val - ser) < 1e-8 * abs(val)


class TestOdeResidual:
    @pytest.mark.parametrize("zeta", [2.0, 0.4, -0.6, -2.5])
    def test_fh_small_residual(self, zeta):
        res, scale = resolvent.ode_residual_scale(F_h, 0.25, zeta, 1e-4)
        assert res < 1e-6 * scale

    def test_constant_solves_at_lambda_zero(self):
        kernel = lambda lam, zeta: type("KV", (), {"value": 1.0})()
        lam = 0.0
        # lam(lam+2) = 0: constants solve the ODE exactly
        res = resolvent.ode_residual(kernel, lam, 1.7, 1e-4)
        assert res == 0.0

    def test_order_two_in_h(self):
        lam, zeta = 0.6, 1.8
        r1 = resolvent.ode_residual(F_lambda, lam, zeta, 2e-3)
        r2 = resolvent.ode_residual(F_lambda, lam, zeta, 1e-3)
        assert 3.0 < r1 / r2 < 5.0


class TestDSeriesIdentity:
    def test_single_term_closed_form(self):
        # F^h(cosh d) = (i/2 pi) sum_k e^{-(lam+2k) d}; at lam=0, d=1 both
        # equal i e^{-1}/(4 pi sinh 1) = (i/2 pi)/(e^2 - 1)
        d = 1.0
        lhs = F_h(0.0, np.cosh(d)).value
        rhs = 1j / (2.0 * np.pi) / (np.exp(2.0) - 1.0)
        assert abs(lhs - rhs) < 1e-15

    def test_matched_truncation_grid(self):
        # per-term geometric identity on a (lam, d) grid
        for lam in (0.5, 1.5, 3.0):
            for d in (0.8, 1.5, 3.0):
                lhs = F_h(lam, np.cosh(d)).value
                ks = np.arange(1, 61)
                rhs = 1j / (2.0 * np.pi) * np.sum(np.exp(-(lam + 2.0 * ks) * d))
                assert abs(lhs - rhs) < 1e-10 * abs(lhs)

    def test_quotient_identity_small_ball(self, torus_ball8, slice_basepoints):
        x, y = slice_basepoints
        res, scale, info = resolvent.dseries_identity(2.0, x, y, torus_ball8, 40)
        assert info["terms"] > 1000
        assert res < 1e-10 * scale

    def test_quotient_kernel_flags(self, torus_ball8, slice_basepoints):
        x, _ = slice_basepoints
        val, info = resolvent.quotient_kernel(1.5, x, x, torus_ball8)
        # gamma = Id lands on the light cone -q = 1 and is skipped
        assert info["terms_cone_skipped"] >= 1
        assert np.isfinite(val.real) and np.isfinite(val.imag)


class TestPoissonTransform:
    def setup_method(self):
        self.x = QuadricPoint(chart_convert(
            (0.25, np.array([np.cosh(0.4), np.sinh(0.4), 0.0])), "slice", "quadric"))

    def test_constant_density_quadrature_consistency(self):
        val, tol = resolvent.poisson_selfcheck(-6.0, 0, BoundaryDensity.constant(), self.x, 96)
        assert tol < 1e-9 * abs(val)

    def test_noninteger_exponent_consistency(self):
        val, tol = resolvent.poisson_selfcheck(-5.5, 0, BoundaryDensity.constant(),
                                               self.x, 256)
        assert tol < 2e-7 * abs(val)

    def test_parity_sigma(self):
        omega = BoundaryDensity({(1, 0): 0.7, (0, 2): 0.4, (0, 0): 1.0})
        xm = QuadricPoint(-self.x.p)
        for lam in (-6.0, -5.2):
            p0 = resolvent.poisson_transform(lam, 0, omega, self.x, 64)
            p0m = resolvent.poisson_transform(lam, 0, omega, xm, 64)
            p1 = resolvent.poisson_transform(lam, 1, omega, self.x, 64)
            p1m = resolvent.poisson_transform(lam, 1, omega, xm, 64)
            assert abs(p0 - p0m) < 1e-12 * max(abs(p0), 1.0)
            assert abs(p1 + p1m) < 1e-12 * max(abs(p1), 1.0)

    def test_equivariance(self, rng):
        # P(h x) = P applied to N_h^lam (omega o h) at x
        lam = -6.0
        omega = BoundaryDensity({(0, 0): 1.0, (1, -1): 0.5})
        h = random_isometry(rng, scale=0.25)

        def transported(theta, phi):
            th = np.atleast_1d(np.asarray(theta, dtype=float))
            ph = np.atleast_1d(np.asarray(phi, dtype=float))
            out = np.empty(np.broadcast(th, ph).shape, dtype=complex)
            it = np.nditer([np.broadcast_to(th, out.shape),
                            np.broadcast_to(ph, out.shape)], flags=["multi_index"])
            for a, b in it:
                nu = BoundaryRay.from_angles(float(a), float(b))
                img = isometry_apply(h, nu)
                nh = conformal_factor(h, nu)
                out[it.multi_index] = nh ** lam * omega(*img.angles)
            return out if out.shape else complex(out)

        hx = isometry_apply(h, self.x)
        lhs = resolvent.poisson_transform(lam, 0, omega, hx, 72)
        rhs = resolvent.poisson_transform(lam, 0, transported, self.x, 72)
        assert abs(lhs - rhs) < 1e-7 * max(abs(lhs), 1.0)


class TestPushforwardIdentity:
    def setup_method(self):
        xbar = np.array([np.cosh(0.5), np.sinh(0.5) * np.cos(1.1),
                         np.sinh(0.5) * np.sin(1.1)])
        self.x = QuadricPoint(chart_convert((0.2, xbar), "slice", "quadric"))

    def test_constant_density(self):
        res = resolvent.pushforward_identity_residual(-6.0, BoundaryDensity.constant(),
                                                      self.x, 128, 160)
        assert res < 1e-6

    def test_fourier_mode(self):
        res = resolvent.pushforward_identity_residual(
            -6.0, BoundaryDensity.mode(1, 1), self.x, 128, 160)
        assert res < 1e-5   # relative to a smaller scale

    def test_lambda_minus_two_collapses(self):
        # exponent 2 + lam = 0: both sides reduce to the omega integral over
        # the forward region
        omega = BoundaryDensity.constant()
        a = resolvent.poisson_transform(-2.0, 0, omega, self.x, 200,
                                        restrict_oplus=True)
        res = resolvent.pushforward_identity_residual(-2.0, omega, self.x, 200, 200)
        assert res < 1e-6
        assert a.real > 0


class TestKleinGordon:
    def test_constant_at_lambda_zero(self):
        u = lambda t, th, ph: 1.0
        res = resolvent.kg_fd_residual(u, 0.0, (0.9, 0.3, 1.1), h=1e-3)
        assert res < 1e-13

    def test_kernel_function_annihilated(self):
        # u(x) = F^h(-q(x, y)) solves the equation off-diagonal
        lam = 0.35
        y = QuadricPoint(chart_convert((0.3, np.array([np.cosh(0.8),
                                                       np.sinh(0.8), 0.0])),
                                       "slice", "quadric"))
        u = resolvent.kernel_chart_function(lam, y)
        for point in ((0.8, 0.25, 0.9), (1.5, 0.2, 0.1)):
            r1 = resolvent.kg_fd_residual(u, lam, point, h=2e-3)
            r2 = resolvent.kg_fd_residual(u, lam, point, h=1e-3)
            scale = abs(u(*point))
            assert r2 < 2e-4 * max(scale, 1e-3)
            assert 3.5 < r1 / r2 < 4.5   # order 2 in h

    def test_poisson_transform_annihilated(self):
        lam = -6.0
        omega = BoundaryDensity.mode(1, 1)
        u = resolvent.poisson_chart_function(lam, 0, omega, 64)
        point = (0.85, 0.4, -0.6)
        r1 = resolvent.kg_fd_residual(u, lam, point, h=4e-3)
        r2 = resolvent.kg_fd_residual(u, lam, point, h=2e-3)
        scale = abs(u(*point))
        assert r2 < 2e-4 * scale
        assert 3.5 < r1 / r2 < 4.5   # order 2 in h

    def test_chart_boundary(self):
        from qfads.errors import ChartBoundary

        with pytest.raises(ChartBoundary):
            resolvent.kg_fd_residual(lambda *a: 1.0, 0.0, (1e-4, 0, 0), h=1e-3)
