import numpy as np
import pytest

from qfads import flow
from qfads.core import (
    BoundaryRay,
    IsometryPair,
    QuadricPoint,
    conformal_factor,
    isometry_apply,
    q_eval,
)
from qfads.errors import DivergentParameter, NotInOPlus, NotTangent

from conftest import (
    random_isometry,
    random_point,
    random_tangent_vector,
    random_unit_tangent,
)

E = np.array([1.0, 0, 0, 0])
VE = np.array([0.0, 0, 1.0, 0])


class TestFlowMap:
    def test_explicit_boost(self):
        p = flow.UnitTangent.base()
        q1 = flow.flow_map(p, 1.0)
        assert np.allclose(q1.x, [np.cosh(1.0), 0, np.sinh(1.0), 0], atol=1e-14)
        assert np.allclose(q1.v, [np.sinh(1.0), 0, np.cosh(1.0), 0], atol=1e-14)

    def test_t_zero(self, rng):
        p = random_unit_tangent(rng)
        q0 = flow.flow_map(p, 0.0)
        assert np.allclose(q0.x, p.x) and np.allclose(q0.v, p.v)

    def test_group_law(self, rng):
        for _ in range(20):
            p = random_unit_tangent(rng)
            back = flow.flow_map(flow.flow_map(p, 1.0), -1.0)
            assert np.abs(back.x - p.x).max() < 1e-12
            assert np.abs(back.v - p.v).max() < 1e-12


class TestFlowDiff:
    def test_stable_scaling(self):
        p = flow.UnitTangent.base()
        w = np.array([0.0, 1.0, 0, 0])
        out = flow.flow_diff(p, (w, -w), 2.0)
        assert np.allclose(out[0], np.exp(-2.0) * w, atol=1e-14)
        assert np.allclose(out[1], -np.exp(-2.0) * w, atol=1e-14)

    def test_unstable_scaling(self):
        p = flow.UnitTangent.base()
        w = np.array([0.0, 1.0, 0, 0])
        out = flow.flow_diff(p, (w, w), 2.0)
        assert np.allclose(out[0], np.exp(2.0) * w, atol=1e-12)

    def test_flow_direction_invariant(self, rng):
        p = random_unit_tangent(rng)
        t = 1.3
        out = flow.flow_diff(p, flow.generator(p), t)
        pt = flow.flow_map(p, t)
        assert np.allclose(out[0], pt.v, atol=1e-12)
        assert np.allclose(out[1], pt.x, atol=1e-12)

    def test_exact_hyperbolicity(self, rng):
        # euclidean norms of stable/unstable inputs scale exactly by e^{-+t}
        for _ in range(20):
            p = random_unit_tangent(rng)
            wl, wr = flow.lr_lines(p)
            for t in (0.5, 2.0):
                for w, sgn in ((wl, -1), (wr, -1)):
                    out = flow.flow_diff(p, (w, -w), t)
                    ratio = np.linalg.norm(out[0]) / np.linalg.norm(w)
                    assert abs(ratio - np.exp(-t)) < 1e-12
                out = flow.flow_diff(p, (wl, wl), t)
                assert abs(np.linalg.norm(out[0]) / np.linalg.norm(wl)
                           - np.exp(t)) < 1e-12

    def test_rejects_nontangent(self):
        p = flow.UnitTangent.base()
        with pytest.raises(NotTangent):
            flow.flow_diff(p, (np.ones(4), np.ones(4)), 1.0)


class TestAnosovSplit:
    def test_flow_vector(self, rng):
        p = random_unit_tangent(rng)
        sp = flow.anosov_split(p, flow.generator(p))
        assert abs(sp.a - 1.0) < 1e-12
        assert np.abs(sp.ws).max() < 1e-12 and np.abs(sp.wu).max() < 1e-12

    def test_pure_stable(self):
        p = flow.UnitTangent.base()
        w = np.array([0.0, 1.0, 0, 0])
        sp = flow.anosov_split(p, (w, -w))
        assert abs(sp.a) < 1e-14
        assert np.allclose(sp.ws, w) and np.abs(sp.wu).max() < 1e-14

    def test_mixed_half_half(self):
        p = flow.UnitTangent.base()
        w = np.array([0.0, 1.0, 0, 0])
        sp = flow.anosov_split(p, (w, np.zeros(4)))
        assert np.allclose(sp.ws, w / 2) and np.allclose(sp.wu, w / 2)

    def test_reconstruction_and_orthogonality(self, rng):
        for _ in range(40):
            p = random_unit_tangent(rng)
            xi = random_tangent_vector(rng, p)
            sp = flow.anosov_split(p, xi)
            back = sp.reconstruct(p)
            scale = max(1.0, np.abs(xi[0]).max(), np.abs(xi[1]).max())
            assert np.abs(back[0] - xi[0]).max() < 1e-10 * scale
            assert np.abs(back[1] - xi[1]).max() < 1e-10 * scale
            for w in (sp.ws, sp.wu):
                assert abs(q_eval(w, p.x)) < 1e-10 * scale
                assert abs(q_eval(w, p.v)) < 1e-10 * scale

    def test_splitting_invariance(self, rng):
        # components transform as (a, e^{-t} ws, e^{t} wu)
        for _ in range(10):
            p = random_unit_tangent(rng)
            xi = random_tangent_vector(rng, p)
            sp = flow.anosov_split(p, xi)
            t = 1.7
            pt = flow.flow_map(p, t)
            spt = flow.anosov_split(pt, flow.flow_diff(p, xi, t))
            scale = max(1.0, np.abs(sp.ws).max(), np.abs(sp.wu).max())
            assert abs(spt.a - sp.a) < 1e-10 * scale
            assert np.abs(spt.ws - np.exp(-t) * sp.ws).max() < 1e-10 * scale
            assert np.abs(spt.wu - np.exp(t) * sp.wu).max() < 1e-10 * scale


class TestLRLines:
    def test_base_point(self):
        p = flow.UnitTangent.base()
        wl, wr = flow.lr_lines(p)
        # null directions proportional to (0, 1, 0, +-1), future-oriented
        for w in (wl, wr):
            assert abs(q_eval(w)) < 1e-14
            assert abs(np.linalg.norm(w) ** 2 - 0.5) < 1e-14
            assert q_eval(w, np.array([0.0, -1.0, 0, 0])) < 0
        assert np.linalg.det(np.column_stack([p.x, wl, wr, p.v])) > 0

    def test_flow_invariance(self, rng):
        p = random_unit_tangent(rng)
        wl, wr = flow.lr_lines(p)
        wl2, wr2 = flow.lr_lines(flow.flow_map(p, 1.9))
        assert np.abs(wl - wl2).max() < 1e-9
        assert np.abs(wr - wr2).max() < 1e-9

    def test_isometry_equivariance(self, rng):
        for _ in range(20):
            p = random_unit_tangent(rng)
            h = random_isometry(rng)
            wl, wr = flow.lr_lines(p)
            hp = flow.UnitTangent(*isometry_apply(h, (p.x, p.v)), tol=1e-8)
            wl2, wr2 = flow.lr_lines(hp)
            img = isometry_apply(h, wl)
            # same line, positive multiple
            c = np.linalg.norm(img) / np.linalg.norm(wl2)
            assert np.abs(img - c * wl2).max() < 1e-8 * max(1.0, c)
            img_r = isometry_apply(h, wr)
            c_r = np.linalg.norm(img_r) / np.linalg.norm(wr2)
            assert np.abs(img_r - c_r * wr2).max() < 1e-8 * max(1.0, c_r)


class TestBoundaryData:
    def test_base(self):
        bd = flow.boundary_data(flow.UnitTangent.base())
        assert np.isclose(bd.phi_plus, 1.0) and np.isclose(bd.phi_minus, 1.0)
        assert np.allclose(bd.bplus.nu, [1.0, 0, 1.0, 0])
        assert np.allclose(bd.bminus.nu, [1.0, 0, -1.0, 0])

    def test_fiber_vector_round_trip(self, rng):
        for _ in range(30):
            x = random_point(rng)
            th, ph = rng.uniform(-np.pi, np.pi, size=2)
            nu = BoundaryRay.from_angles(th, ph)
            if q_eval(x, nu.nu) >= -1e-3:
                continue
            for sign in (+1, -1):
                vt = flow.fiber_vector(x, nu, sign)
                assert abs(q_eval(vt.x) + 1) < 1e-10
                assert abs(q_eval(vt.x, vt.v)) < 1e-9
                assert abs(q_eval(vt.v) - 1) < 1e-9
                bd = flow.boundary_data(vt)
                got = bd.bplus if sign > 0 else bd.bminus
                assert np.abs(got.nu - nu.nu).max() < 1e-9

    def test_fiber_vector_base(self):
        vt = flow.fiber_vector(E, BoundaryRay(np.array([1.0, 0, 1.0, 0])), +1)
        assert np.allclose(vt.v, VE, atol=1e-14)

    def test_not_in_oplus(self):
        with pytest.raises(NotInOPlus):
            flow.fiber_vector(E, BoundaryRay(np.array([-1.0, 0, 1.0, 0])), +1)

    def test_phi_flow_scaling(self, rng):
        for _ in range(20):
            p = random_unit_tangent(rng)
            bd0 = flow.boundary_data(p)
            bd2 = flow.boundary_data(flow.flow_map(p, 2.0))
            assert abs(bd2.phi_plus - np.exp(2.0) * bd0.phi_plus) < 1e-10 * bd2.phi_plus
            assert abs(bd2.phi_minus - np.exp(-2.0) * bd0.phi_minus) < 1e-10

    def test_q_pairings(self, rng):
        for _ in range(30):
            p = random_unit_tangent(rng)
            bd = flow.boundary_data(p)
            assert abs(q_eval(p.x, bd.bplus.nu) + 1.0 / bd.phi_plus) < 1e-11
            assert abs(q_eval(p.x, bd.bminus.nu) + 1.0 / bd.phi_minus) < 1e-11
            assert abs(q_eval(bd.bplus.nu, bd.bminus.nu)
                       + 2.0 / (bd.phi_plus * bd.phi_minus)) < 1e-11

    def test_isometry_equivariance(self, rng):
        # Phi_pm(h p) = N_h(B_pm(p)) Phi_pm(p)
        for _ in range(20):
            p = random_unit_tangent(rng)
            h = random_isometry(rng)
            bd = flow.boundary_data(p)
            hp = flow.UnitTangent(*isometry_apply(h, (p.x, p.v)), tol=1e-8)
            bdh = flow.boundary_data(hp)
            for phi0, phih, ray in ((bd.phi_plus, bdh.phi_plus, bd.bplus),
                                    (bd.phi_minus, bdh.phi_minus, bd.bminus)):
                expect = conformal_factor(h, ray) * phi0
                assert abs(phih - expect) < 1e-10 * max(1.0, expect)


class TestForms:
    def test_alpha_on_generator(self, rng):
        p = random_unit_tangent(rng)
        assert abs(flow.alpha_form(p, flow.generator(p)) - 1.0) < 1e-12

    def test_alpha_kills_splitting(self, rng):
        p = random_unit_tangent(rng)
        wl, wr = flow.lr_lines(p)
        assert abs(flow.alpha_form(p, (wl, -wl))) < 1e-12
        assert abs(flow.alpha_form(p, (wr, wr))) < 1e-12

    def test_omega_u_flow_scaling(self, rng):
        # evaluating on flow-propagated unstable frames multiplies by e^{2t}
        for _ in range(10):
            p = random_unit_tangent(rng)
            wl, wr = flow.lr_lines(p)
            xi1, xi2 = (wl, wl), (wr, wr)
            val0 = flow.omega_u(p, xi1, xi2)
            t = 1.1
            pt = flow.flow_map(p, t)
            val_t = flow.omega_u(pt, flow.flow_diff(p, xi1, t), flow.flow_diff(p, xi2, t))
            assert abs(val_t - np.exp(2 * t) * val0) < 1e-9 * abs(val_t)

    def test_omega_s_flow_scaling(self, rng):
        p = random_unit_tangent(rng)
        wl, wr = flow.lr_lines(p)
        xi1, xi2 = (wl, -wl), (wr, -wr)
        val0 = flow.omega_s(p, xi1, xi2)
        t = 0.8
        pt = flow.flow_map(p, t)
        val_t = flow.omega_s(pt, flow.flow_diff(p, xi1, t), flow.flow_diff(p, xi2, t))
        assert abs(val_t - np.exp(-2 * t) * val0) < 1e-9 * abs(val0)

    def test_omega_u_invariant_under_isometries(self, rng):
        p = random_unit_tangent(rng)
        h = random_isometry(rng)
        wl, wr = flow.lr_lines(p)
        val0 = flow.omega_u(p, (wl, wl), (wr, wr))
        hp = flow.UnitTangent(*isometry_apply(h, (p.x, p.v)), tol=1e-8)
        hwl = isometry_apply(h, wl)
        hwr = isometry_apply(h, wr)
        val1 = flow.omega_u(hp, (hwl, hwl), (hwr, hwr))
        assert abs(val0 - val1) < 1e-9 * abs(val0)


class TestFiberMeasure:
    def test_jacobian_is_phi_plus_squared(self, rng):
        # S_x-area of the coordinate frame of nu -> fiber_vector(x, nu, +)
        for _ in range(10):
            x = random_point(rng)
            th, ph = rng.uniform(-np.pi, np.pi, size=2)
            if q_eval(x, BoundaryRay.from_angles(th, ph).nu) > -0.15:
                continue
            h = 1e-5

            def vec(a, b):
                return flow.fiber_vector(x, BoundaryRay.from_angles(a, b), +1).v

            dth = (vec(th + h, ph) - vec(th - h, ph)) / (2 * h)
            dph = (vec(th, ph + h) - vec(th, ph - h)) / (2 * h)
            gram = q_eval(dth, dph) ** 2 - q_eval(dth) * q_eval(dph)
            area = np.sqrt(max(gram, 0.0))
            vt = flow.fiber_vector(x, BoundaryRay.from_angles(th, ph), +1)
            phi2 = flow.boundary_data(vt).phi_plus ** 2
            assert abs(area - phi2) < 1e-6 * phi2


class TestFlowResolvent:
    def test_zero_field(self):
        p = flow.UnitTangent.base()
        val, tail = flow.flow_resolvent_apply(lambda q: 0.0, 1.0, p, 8.0, 64)
        assert val == 0.0

    def test_constant_field(self):
        p = flow.UnitTangent.base()
        val, tail = flow.flow_resolvent_apply(lambda q: 1.0, 1.0, p, 6.0, 1200)
        assert abs(val - (1.0 - np.exp(-6.0))) < 1e-10
        assert abs(tail - np.exp(-6.0)) < 1e-12

    def test_divergent_parameter(self):
        p = flow.UnitTangent.base()
        with pytest.raises(DivergentParameter):
            flow.flow_resolvent_apply(lambda q: 1.0, -0.5, p, 5.0, 64)

    def test_resolvent_identity_fd(self, rng):
        # (X + lam) R f = f up to FD error and the truncation tail
        p = random_unit_tangent(rng)
        lam = 1.5

        def f(q):
            return np.exp(-q.x[1] ** 2 - 0.5 * q.x[3] ** 2)

        def rf(q):
            return flow.flow_resolvent_apply(f, lam, q, 25.0, 600)[0]

        h = 1e-4
        xr = (rf(flow.flow_map(p, h)) - rf(flow.flow_map(p, -h))) / (2 * h)
        resid = abs(xr + lam * rf(p) - f(p))
        assert resid < 5e-4


class TestPairFrame:
    def test_matches_isometry_action(self, rng):
        from scipy.linalg import expm

        for _ in range(10):
            m1 = rng.normal(size=(2, 2)) * 0.5
            m2 = rng.normal(size=(2, 2)) * 0.5
            m1[1, 1] = -m1[0, 0]
            m2[1, 1] = -m2[0, 0]
            h1, h2 = expm(m1), expm(m2)
            pt = flow.pair_frame_tangent(h1, h2)
            base = flow.UnitTangent.base()
            img = isometry_apply(IsometryPair(h1, h2), (base.x, base.v))
            assert np.abs(pt.x - img[0]).max() < 1e-9
            assert np.abs(pt.v - img[1]).max() < 1e-9


class TestPullbackEigenrelation:
    def test_x_derivative_and_unstable_annihilation(self, rng):
        lam = 0.7

        def u(pt):
            bd = flow.boundary_data(pt)
            th, ph = bd.bminus.angles
            return bd.phi_minus ** lam * np.exp(1j * (2 * th - ph))

        for _ in range(10):
            p = random_unit_tangent(rng)
            # exact scaling along the flow: u(phi_t p) = e^{-lam t} u(p)
            t = 0.9
            assert abs(u(flow.flow_map(p, t)) - np.exp(-lam * t) * u(p)) < 1e-9 * abs(u(p))
            # constant along unstable null curves
            wl, wr = flow.lr_lines(p)
            for w in (wl, wr):
                pe = flow.unstable_curve(p, w, 1e-3)
                assert abs(u(pe) - u(p)) < 1e-9 * abs(u(p))
