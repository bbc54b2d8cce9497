"""Spacelike geodesic flow on the unit spacelike tangent bundle of AdS3.

Flow map and differential, the exact stable/unstable splitting with its
left/right refinement, boundary maps with their radial weights, invariant
forms, fiber measures and a truncated flow resolvent.
"""

from __future__ import annotations

import numpy as np

from .core import (
    BoundaryRay,
    QuadricPoint,
    q_eval,
    time_orientation,
)
from .errors import DegenerateFrame, DivergentParameter, NotInOPlus, NotTangent

TANGENT_TOL = 1e-10


class UnitTangent:
    """Pair (x, v) with q(x) = -1, q(x, v) = 0, q(v) = 1."""

    __slots__ = ("x", "v")

    def __init__(self, x, v, tol=TANGENT_TOL):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        defects = (abs(q_eval(x) + 1.0), abs(q_eval(x, v)), abs(q_eval(v) - 1.0))
        if max(defects) > tol:
            raise ValueError(f"unit-tangent defects {defects} exceed {tol:g}")
        self.x = x
        self.v = v

    @classmethod
    def base(cls):
        return cls(np.array([1.0, 0, 0, 0]), np.array([0.0, 0, 1.0, 0]))

    def renormalized(self):
        """Clean up drift: project x to the quadric, then v to the unit shell."""
        x = self.x / np.sqrt(-q_eval(self.x))
        v = self.v + q_eval(self.v, x) * x
        v = v / np.sqrt(q_eval(v))
        out = UnitTangent.__new__(UnitTangent)
        out.x, out.v = x, v
        return out

    def __repr__(self):
        return f"UnitTangent(x={np.array2string(self.x, precision=5)}, v={np.array2string(self.v, precision=5)})"


def check_tangent_of_t1(p, xi, tol=1e-8):
    """Validate (xi_x, xi_v) against the three tangency constraints at p."""
    xi_x, xi_v = (np.asarray(c, dtype=float) for c in xi)
    scale = max(1.0, float(np.abs(xi_x).max()), float(np.abs(xi_v).max()))
    d1 = abs(q_eval(p.x, xi_x))
    d2 = abs(q_eval(p.x, xi_v) + q_eval(xi_x, p.v))
    d3 = abs(q_eval(p.v, xi_v))
    if max(d1, d2, d3) > tol * scale:
        raise NotTangent(f"tangency defects ({d1:.2e}, {d2:.2e}, {d3:.2e})")
    return xi_x, xi_v


def flow_map(p, t):
    """phi_t(x, v) = (x cosh t + v sinh t, x sinh t + v cosh t)."""
    c, s = np.cosh(t), np.sinh(t)
    out = UnitTangent.__new__(UnitTangent)
    out.x = c * p.x + s * p.v
    out.v = s * p.x + c * p.v
    return out


def flow_diff(p, xi, t):
    """Differential of phi_t applied to a tangent vector of T^1 AdS3.

    Acts by the same hyperbolic rotation as the flow itself: stable vectors
    (w, -w) scale by e^{-t}, unstable vectors (w, w) by e^{t}.
    """
    xi_x, xi_v = check_tangent_of_t1(p, xi)
    c, s = np.cosh(t), np.sinh(t)
    return (c * xi_x + s * xi_v, s * xi_x + c * xi_v)


def generator(p):
    """The flow vector field X(x, v) = (v, x)."""
    return (p.v.copy(), p.x.copy())


class SplitVector:
    """Components of a tangent vector in the flow/stable/unstable splitting.

    Reconstruction: a * (v, x) + (ws, -ws) + (wu, wu), with ws, wu in the
    spacelike 2-plane orthogonal to both x and v.
    """

    __slots__ = ("a", "ws", "wu")

    def __init__(self, a, ws, wu):
        self.a = float(a)
        self.ws = np.asarray(ws, dtype=float)
        self.wu = np.asarray(wu, dtype=float)

    def reconstruct(self, p):
        xi_x = self.a * p.v + self.ws + self.wu
        xi_v = self.a * p.x - self.ws + self.wu
        return xi_x, xi_v


def anosov_split(p, xi):
    """Decompose xi = a X + (ws, -ws) + (wu, wu) at the point p.

    The flow component is a = alpha(xi) = q(xi_x, v); the remaining stable
    and unstable legs come out of half-sum / half-difference and are
    automatically q-orthogonal to x and v.
    """
    xi_x, xi_v = check_tangent_of_t1(p, xi)
    a = q_eval(xi_x, p.v)
    ws = 0.5 * (xi_x - xi_v) - 0.5 * a * (p.v - p.x)
    wu = 0.5 * (xi_x + xi_v) - 0.5 * a * (p.v + p.x)
    return SplitVector(a, ws, wu)


def lr_lines(p):
    """Future-oriented null directions (wL, wR) of the plane x-perp ∩ v-perp.

    Both satisfy q(w) = 0, euclidean norm^2 = 1/2 and q(w, T(x)) < 0; the
    labels are fixed by det(x, wL, wR, v) > 0.
    """
    # orthonormal basis of the orthocomplement under q
    basis = []
    for seed in np.eye(4):
        w = seed - _q_project(seed, p.x, -1.0) - _q_project(seed, p.v, 1.0)
        for b, sgn in basis:
            w = w - sgn * q_eval(w, b) * b
        nrm = q_eval(w)
        if abs(nrm) > 1e-8:
            basis.append((w / np.sqrt(abs(nrm)), np.sign(nrm)))
        if len(basis) == 2:
            break
    if len(basis) < 2 or basis[0][1] * basis[1][1] >= 0:
        raise DegenerateFrame("restricted form is not of signature (1,1)")
    (b1, s1), (b2, _) = basis
    em = b1 if s1 < 0 else b2   # timelike leg
    ep = b2 if s1 < 0 else b1   # spacelike leg
    cands = []
    for null in (em + ep, em - ep):
        w = null / (np.linalg.norm(null) * np.sqrt(2.0))
        if q_eval(w, time_orientation(p.x)) > 0:
            w = -w
        cands.append(w)
    wa, wb = cands
    if np.linalg.det(np.column_stack([p.x, wa, wb, p.v])) > 0:
        return wa, wb
    return wb, wa


def _q_project(w, u, qu):
    return (q_eval(w, u) / qu) * u


def alpha_form(p, xi):
    """Tautological one-form alpha(xi) = q(xi_x, v); alpha(X) = 1."""
    xi_x, _ = check_tangent_of_t1(p, xi)
    return float(q_eval(xi_x, p.v))


def _area_on_plane(p, w1, w2):
    val = q_eval(w1, w2) ** 2 - q_eval(w1) * q_eval(w2)
    if val < 0:
        raise DegenerateFrame("arguments do not span a signature-(1,1) plane")
    sign = np.sign(np.linalg.det(np.column_stack([p.x, w1, w2, p.v])))
    return float(sign * np.sqrt(val))


def omega_u(p, xi1, xi2):
    """Invariant unstable area form on pairs of unstable vectors (w, w)."""
    w1 = _unstable_leg(p, xi1)
    w2 = _unstable_leg(p, xi2)
    return _area_on_plane(p, w1, w2)


def omega_s(p, xi1, xi2):
    """Invariant stable area form on pairs of stable vectors (w, -w)."""
    w1 = _stable_leg(p, xi1)
    w2 = _stable_leg(p, xi2)
    return _area_on_plane(p, w1, w2)


def _unstable_leg(p, xi):
    xi_x, xi_v = check_tangent_of_t1(p, xi)
    if np.abs(xi_x - xi_v).max() > 1e-8 * max(1.0, np.abs(xi_x).max()):
        raise NotTangent("not an unstable vector (w, w)")
    return xi_x


def _stable_leg(p, xi):
    xi_x, xi_v = check_tangent_of_t1(p, xi)
    if np.abs(xi_x + xi_v).max() > 1e-8 * max(1.0, np.abs(xi_x).max()):
        raise NotTangent("not a stable vector (w, -w)")
    return xi_x


class BoundaryData:
    """Forward/backward endpoints with their radial weights.

    x + v = phi_plus * bplus.nu and x - v = phi_minus * bminus.nu hold
    componentwise, and q(bplus, bminus) = -2 / (phi_plus * phi_minus).
    """

    __slots__ = ("bplus", "bminus", "phi_plus", "phi_minus")

    def __init__(self, bplus, bminus, phi_plus, phi_minus):
        self.bplus = bplus
        self.bminus = bminus
        self.phi_plus = float(phi_plus)
        self.phi_minus = float(phi_minus)


def boundary_data(p):
    """Endpoints B_pm(x, v) = [x +- v] and weights Phi_pm."""
    fwd = p.x + p.v
    bwd = p.x - p.v
    phi_p = float(np.hypot(fwd[0], fwd[1]))
    phi_m = float(np.hypot(bwd[0], bwd[1]))
    return BoundaryData(BoundaryRay(fwd, tol=1e-8), BoundaryRay(bwd, tol=1e-8), phi_p, phi_m)


def fiber_vector(x, ray, sign=+1):
    """Unit tangent at x whose forward (sign=+1) or backward endpoint is the ray.

    Inverse of the fiber restriction of the endpoint map:
    v = -sign * (x + nu / q(x, nu)), defined for q(x, nu) < 0.
    """
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    qv = q_eval(xv, ray.nu)
    if qv >= 0:
        raise NotInOPlus(f"q(x, nu) = {qv:.6e} is not < 0")
    v = -float(sign) * (xv + ray.nu / qv)
    out = UnitTangent.__new__(UnitTangent)
    out.x, out.v = xv, v
    return out


def unstable_curve(p, w, eps):
    """Point of the unstable leaf reached by sliding along a null direction w.

    For null w orthogonal to x and v the pair (x + eps*w, v + eps*w) lies on
    T^1 AdS3 exactly and stays on the leaf {x - v = const}.
    """
    out = UnitTangent.__new__(UnitTangent)
    out.x = p.x + eps * w
    out.v = p.v + eps * w
    return out


def stable_curve(p, w, eps):
    out = UnitTangent.__new__(UnitTangent)
    out.x = p.x + eps * w
    out.v = p.v - eps * w
    return out


def flow_resolvent_apply(f, lam, p, tmax, n_steps):
    """Truncated resolvent integral of the flow applied to a scalar field.

    Composite-Simpson approximation of integral_0^tmax e^{-lam t} f(phi_{-t} p) dt
    together with the truncation tail bound ||f||_inf e^{-Re(lam) tmax}/Re(lam)
    estimated from the samples seen.

    Returns (value, tail_bound).
    """
    lam = complex(lam)
    if lam.real <= 0:
        raise DivergentParameter(f"Re(lambda) = {lam.real:.6f} must be positive")
    if n_steps % 2:
        n_steps += 1
    ts = np.linspace(0.0, tmax, n_steps + 1)
    vals = np.empty(len(ts), dtype=complex)
    sup = 0.0
    for i, t in enumerate(ts):
        ft = f(flow_map(p, -t))
        sup = max(sup, abs(ft))
        vals[i] = np.exp(-lam * t) * ft
    h = tmax / n_steps
    weights = np.ones(len(ts))
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    value = h / 3.0 * np.sum(weights * vals)
    tail = sup * np.exp(-lam.real * tmax) / lam.real
    return complex(value), float(tail)


def pair_frame_tangent(h1, h2):
    """Unit tangent associated to a pair of frames: (psi^{-1}(h1 h2^{-1}), h1 psi(v_e) h2^{-1}).

    Test utility for cross-checking the isometry action on tangents against
    the homogeneous-space description of the unit tangent bundle.
    """
    from .core import from_sl2, to_sl2, _sl2_inv

    ve = np.array([0.0, 0.0, 1.0, 0.0])
    x = from_sl2(h1 @ _sl2_inv(h2))
    v = from_sl2(h1 @ to_sl2(ve) @ _sl2_inv(h2))
    return UnitTangent(x, v, tol=1e-8)
