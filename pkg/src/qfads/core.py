"""Exact AdS3 geometry on the quadric {q = -1} in R^4.

The ambient bilinear form is q(x, y) = -x1*y1 - x2*y2 + x3*y3 + x4*y4.
Points, boundary rays, isometries (pairs of real 2x2 unimodular matrices
acting by x -> psi^{-1}(h1 psi(x) h2^{-1})), causal classification,
geodesics, distance and all coordinate charts live here.

Sign convention for the trace identity: Tr(psi(x)^{-1} psi(y)) = -2 q(x, y)
for x on the quadric.  (The alternative convention that flips this sign
fails at x = y = basepoint, where Tr(Id) = 2 = -2 q = +2.)
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import (
    AmbiguousClass,
    NotSpacelikeSeparated,
    NotTangent,
    OutOfChartDomain,
)

#: signature (-,-,+,+) metric matrix
Q_METRIC = np.diag([-1.0, -1.0, 1.0, 1.0])

#: basepoint of the quadric
E_BASE = np.array([1.0, 0.0, 0.0, 0.0])

#: reference spacelike unit tangent at the basepoint
V_BASE = np.array([0.0, 0.0, 1.0, 0.0])

QUADRIC_TOL = 1e-10
RAY_TOL = 1e-12
SL2_TOL = 1e-10
CLASSIFY_TOL = 1e-9


def q_eval(x, y=None):
    """Bilinear form -x1*y1 - x2*y2 + x3*y3 + x4*y4, vectorized over leading axes.

    With one argument returns the quadratic form q(x, x).
    """
    x = np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    return (-x[..., 0] * y[..., 0] - x[..., 1] * y[..., 1]
            + x[..., 2] * y[..., 2] + x[..., 3] * y[..., 3])


def time_orientation(x):
    """The future-pointing timelike field T(x) = (x2, -x1, x4, -x3)."""
    x = np.asarray(x, dtype=float)
    return np.stack([x[..., 1], -x[..., 0], x[..., 3], -x[..., 2]], axis=-1)


class QuadricPoint:
    """A point of AdS3: vector p in R^4 with q(p, p) = -1.

    The constructor renormalizes p -> p / sqrt(-q(p)) when the defect is
    within tolerance and raises otherwise; accumulated drift after long
    isometry words is cleaned up the same way via :meth:`renormalized`.
    """

    __slots__ = ("p",)

    def __init__(self, p, tol=QUADRIC_TOL):
        p = np.asarray(p, dtype=float)
        if p.shape != (4,) or not np.all(np.isfinite(p)):
            raise ValueError("quadric point needs 4 finite coordinates")
        qp = q_eval(p)
        if abs(qp + 1.0) > tol:
            raise ValueError(f"q(p,p) = {qp:.12f} is not -1 within {tol:g}")
        self.p = p / np.sqrt(-qp)

    @classmethod
    def renormalized(cls, p):
        """Project a vector with q(p) < 0 onto the quadric."""
        p = np.asarray(p, dtype=float)
        qp = q_eval(p)
        if qp >= 0:
            raise ValueError("cannot renormalize a vector with q >= 0")
        out = cls.__new__(cls)
        out.p = p / np.sqrt(-qp)
        return out

    def __repr__(self):
        return f"QuadricPoint({np.array2string(self.p, precision=6)})"


class BoundaryRay:
    """Null ray of the conformal boundary, stored as the torus representative.

    The representative satisfies nu1^2 + nu2^2 = nu3^2 + nu4^2 = 1; it is the
    unique positive rescaling of the input with that property.
    """

    __slots__ = ("nu",)

    def __init__(self, nu, tol=RAY_TOL):
        nu = np.asarray(nu, dtype=float)
        if nu.shape != (4,):
            raise ValueError("boundary ray needs 4 coordinates")
        r1 = np.hypot(nu[0], nu[1])
        if r1 == 0.0:
            raise ValueError("null vector has vanishing (nu1, nu2) part")
        qn = q_eval(nu)
        if abs(qn) > tol * max(1.0, r1 * r1):
            raise ValueError(f"q(nu) = {qn:.3e} is not 0 within tolerance")
        self.nu = nu / r1

    @property
    def angles(self):
        """Torus angles (theta, phi) in (-pi, pi]."""
        th = np.arctan2(self.nu[1], self.nu[0])
        ph = np.arctan2(self.nu[3], self.nu[2])
        return (canonical_angle(th), canonical_angle(ph))

    @classmethod
    def from_angles(cls, theta, phi):
        out = cls.__new__(cls)
        out.nu = np.array([np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)])
        return out

    def __repr__(self):
        th, ph = self.angles
        return f"BoundaryRay(theta={th:.6f}, phi={ph:.6f})"


def canonical_angle(a):
    """Reduce an angle to the canonical interval (-pi, pi]."""
    a = np.mod(a, 2.0 * np.pi)
    return np.where(a > np.pi, a - 2.0 * np.pi, a) if np.ndim(a) else (
        a - 2.0 * np.pi if a > np.pi else a)


def validate_sl2(m, tol=SL2_TOL):
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    d = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(d - 1.0) > tol:
        raise ValueError(f"det = {d:.12f} is not 1 within {tol:g}")
    return m


class IsometryPair:
    """Orientation-preserving isometry given by a pair of SL(2, R) matrices.

    (h1, h2) and (-h1, -h2) act identically; the stored pair is normalized so
    the first entry of h1 exceeding 1e-9 in absolute value is positive.
    `word` optionally records the generator word (signed 1-based indices)
    that produced the element.
    """

    __slots__ = ("h1", "h2", "word")

    def __init__(self, h1, h2, word=None, check=True):
        h1 = np.asarray(h1, dtype=float)
        h2 = np.asarray(h2, dtype=float)
        if check:
            validate_sl2(h1)
            validate_sl2(h2)
        h1, h2 = sign_normalize_pair(h1, h2)
        self.h1 = h1
        self.h2 = h2
        self.word = None if word is None else tuple(word)

    @classmethod
    def identity(cls):
        return cls(np.eye(2), np.eye(2), word=())

    def inverse(self):
        w = None if self.word is None else tuple(-g for g in reversed(self.word))
        return IsometryPair(_sl2_inv(self.h1), _sl2_inv(self.h2), word=w, check=False)

    def compose(self, other):
        """Product self * other (apply `other` first)."""
        w = None
        if self.word is not None and other.word is not None:
            w = self.word + other.word
        return IsometryPair(self.h1 @ other.h1, self.h2 @ other.h2, word=w, check=False)

    def __repr__(self):
        tag = "" if self.word is None else f", word={self.word}"
        return f"IsometryPair(tr1={np.trace(self.h1):.4f}, tr2={np.trace(self.h2):.4f}{tag})"


def sign_normalize_pair(h1, h2, tol=1e-9):
    flat = h1.ravel()
    for v in flat:
        if abs(v) > tol:
            if v < 0:
                return -h1, -h2
            return h1, h2
    return h1, h2


def _sl2_inv(m):
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


class PairClass(enum.Enum):
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"
    TIMELIKE = "timelike"
    NO_GEODESIC = "no-geodesic"
    O_PLUS = "o-plus"
    O_MINUS = "o-minus"
    O_ZERO = "o-zero"


def classify_pair(x, y, tol=CLASSIFY_TOL, strict=True):
    """Causal class of an interior pair or of a (point, boundary ray) pair.

    Interior: spacelike iff q < -1, lightlike iff q = -1, timelike iff
    -1 < q < 1, no connecting geodesic iff q >= 1.  Boundary: the sign of
    q(x, nu) sorts the ray into O+, O0 or O-.

    In strict mode a value within `tol` of a class boundary raises
    AmbiguousClass; with strict=False it snaps to the boundary class.
    """
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    if isinstance(y, BoundaryRay):
        qv = q_eval(xv, y.nu)
        if abs(qv) <= tol:
            return PairClass.O_ZERO
        return PairClass.O_PLUS if qv < 0 else PairClass.O_MINUS
    yv = y.p if isinstance(y, QuadricPoint) else np.asarray(y, dtype=float)
    qv = q_eval(xv, yv)
    for boundary, snapped in ((-1.0, PairClass.LIGHTLIKE), (1.0, PairClass.NO_GEODESIC)):
        if abs(qv - boundary) <= tol:
            if strict:
                raise AmbiguousClass(
                    f"q(x,y) = {qv:.12e} within {tol:g} of {boundary:+.0f}")
            return snapped
    if qv < -1.0:
        return PairClass.SPACELIKE
    if qv < 1.0:
        return PairClass.TIMELIKE
    return PairClass.NO_GEODESIC


def distance(x, y):
    """Geodesic distance arccosh(-q(x, y)) of a spacelike-separated pair."""
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    yv = y.p if isinstance(y, QuadricPoint) else np.asarray(y, dtype=float)
    qv = q_eval(xv, yv)
    if not qv < -1.0:
        raise NotSpacelikeSeparated(f"q(x,y) = {qv:.12f} is not < -1")
    return float(np.arccosh(-qv))


def geodesic(x, v, t, tol=1e-9):
    """Geodesic through (x, v) at parameter t; returns (position, velocity).

    Uses the cosh/sinh, cos/sin or affine parametrization according to the
    sign of q(v).  Requires q(x, v) = 0 within tolerance.
    """
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    vv = np.asarray(v, dtype=float)
    mix = q_eval(xv, vv)
    if abs(mix) > tol * max(1.0, float(np.abs(vv).max())):
        raise NotTangent(f"q(x,v) = {mix:.3e} is not 0 within tolerance")
    qv = q_eval(vv)
    if qv > tol:
        s = np.sqrt(qv)
        pos = np.cosh(s * t) * xv + np.sinh(s * t) * vv / s
        vel = s * np.sinh(s * t) * xv + np.cosh(s * t) * vv
    elif qv < -tol:
        s = np.sqrt(-qv)
        pos = np.cos(s * t) * xv + np.sin(s * t) * vv / s
        vel = -s * np.sin(s * t) * xv + np.cos(s * t) * vv
    else:
        pos = xv + t * vv
        vel = vv
    return pos, vel


# --- coordinate charts --------------------------------------------------------
#
# Supported chart names:
#   "quadric"   x in R^4 with q(x) = -1
#   "sl2"       2x2 matrix of determinant 1
#   "torus"     (theta, z) with z complex, |z| < 1
#   "torus-t"   (t, theta, phi) with r = tanh(t/2), t >= 0
#   "halfspace" (y1, y2, s) with s > 0, image {x2 + x4 > 0}
#   "slice"     (t, xbar) with |x1| < 1 and xbar on the hyperboloid
#               {-x2^2 + x3^2 + x4^2 = -1, x2 > 0}

def to_sl2(x):
    x = np.asarray(x, dtype=float)
    return np.array([[x[0] + x[2], x[1] + x[3]],
                     [x[3] - x[1], x[0] - x[2]]])


def from_sl2(m):
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    return np.array([(a + d) / 2.0, (b - c) / 2.0, (a - d) / 2.0, (b + c) / 2.0])


def to_torus(x):
    """(theta, z) coordinates on the solid torus S^1 x D."""
    x = np.asarray(x, dtype=float)
    r1 = np.hypot(x[0], x[1])
    theta = canonical_angle(np.arctan2(x[1], x[0]))
    z = complex(x[2], x[3]) / (1.0 + r1)
    return theta, z


def from_torus(theta, z):
    z = complex(z)
    r2 = abs(z) ** 2
    if r2 >= 1.0:
        raise OutOfChartDomain(f"|z| = {abs(z):.6f} violates |z| < 1")
    w = complex(np.cos(theta), np.sin(theta)) * (1.0 + r2) / (1.0 - r2)
    u = 2.0 * z / (1.0 - r2)
    return np.array([w.real, w.imag, u.real, u.imag])


def to_torus_t(x):
    """(t, theta, phi) with radial coordinate r = tanh(t/2)."""
    theta, z = to_torus(x)
    r = abs(z)
    t = 2.0 * np.arctanh(r)
    phi = canonical_angle(np.arctan2(z.imag, z.real)) if r > 0 else 0.0
    return t, theta, phi


def from_torus_t(t, theta, phi):
    if t < 0:
        raise OutOfChartDomain(f"t = {t:.6f} violates t >= 0")
    r = np.tanh(t / 2.0)
    return from_torus(theta, r * complex(np.cos(phi), np.sin(phi)))


def to_halfspace(x):
    x = np.asarray(x, dtype=float)
    denom = x[1] + x[3]
    if denom <= 0:
        raise OutOfChartDomain(f"x2 + x4 = {denom:.6f} violates x2 + x4 > 0")
    s = 1.0 / denom
    return x[0] * s, x[2] * s, s


def from_halfspace(y1, y2, s):
    if s <= 0:
        raise OutOfChartDomain(f"s = {s:.6f} violates s > 0")
    m = -y1 * y1 + y2 * y2
    return np.array([y1 / s, (1.0 + m + s * s) / (2.0 * s),
                     y2 / s, (1.0 - m - s * s) / (2.0 * s)])


def halfspace_boundary_ray(y1, y2):
    """Boundary extension of the half-space embedding (a null ray)."""
    m = -y1 * y1 + y2 * y2
    return BoundaryRay(np.array([y1, (1.0 + m) / 2.0, y2, (1.0 - m) / 2.0]))


def to_slice(x):
    """Fuchsian warped-product coordinates (t, xbar), domain |x1| < 1."""
    x = np.asarray(x, dtype=float)
    if abs(x[0]) >= 1.0:
        raise OutOfChartDomain(f"|x1| = {abs(x[0]):.6f} violates |x1| < 1")
    t = np.arcsin(x[0])
    ct = np.cos(t)
    xbar = x[1:] / ct
    if xbar[0] <= 0:
        raise OutOfChartDomain("slice chart requires x2 > 0")
    return t, xbar


def from_slice(t, xbar):
    xbar = np.asarray(xbar, dtype=float)
    if abs(t) >= np.pi / 2.0:
        raise OutOfChartDomain(f"|t| = {abs(t):.6f} violates |t| < pi/2")
    h = -xbar[0] ** 2 + xbar[1] ** 2 + xbar[2] ** 2
    if abs(h + 1.0) > 1e-8 or xbar[0] <= 0:
        raise OutOfChartDomain("xbar is not on the hyperboloid sheet x2 > 0")
    return np.concatenate([[np.sin(t)], np.cos(t) * xbar])


_TO_QUADRIC = {
    "quadric": lambda p: np.asarray(p, dtype=float),
    "sl2": lambda p: from_sl2(p),
    "torus": lambda p: from_torus(*p),
    "torus-t": lambda p: from_torus_t(*p),
    "halfspace": lambda p: from_halfspace(*p),
    "slice": lambda p: from_slice(*p),
}

_FROM_QUADRIC = {
    "quadric": lambda x: x,
    "sl2": to_sl2,
    "torus": to_torus,
    "torus-t": to_torus_t,
    "halfspace": to_halfspace,
    "slice": to_slice,
}


def chart_convert(point, from_chart, to_chart):
    """Convert between any two supported charts, passing through the quadric."""
    try:
        enc = _TO_QUADRIC[from_chart]
        dec = _FROM_QUADRIC[to_chart]
    except KeyError as exc:
        raise ValueError(f"unknown chart {exc.args[0]!r}") from None
    return dec(enc(point))


# --- isometries ----------------------------------------------------------------

def isometry_apply(h, target):
    """Apply an isometry pair to a point, ray, tangent pair or raw vector.

    The action on R^4 is x -> psi^{-1}(h1 psi(x) h2^{-1}); points are
    renormalized onto the quadric and rays onto the torus representative.
    """
    if isinstance(target, QuadricPoint):
        return QuadricPoint.renormalized(_apply_vec(h, target.p))
    if isinstance(target, BoundaryRay):
        return BoundaryRay(_apply_vec(h, target.nu), tol=1e-9)
    if isinstance(target, tuple) and len(target) == 2:
        return (_apply_vec(h, target[0]), _apply_vec(h, target[1]))
    return _apply_vec(h, np.asarray(target, dtype=float))


def _apply_vec(h, x):
    return from_sl2(h.h1 @ to_sl2(x) @ _sl2_inv(h.h2))


def linear_rep4(h):
    """The 4x4 matrix of the isometry action on R^4 (preserves q, det = 1)."""
    return np.column_stack([_apply_vec(h, e) for e in np.eye(4)])


def conformal_factor(h, ray):
    """Conformal factor N_h(nu) = sqrt((h nu)_1^2 + (h nu)_2^2).

    Evaluated on the torus representative of nu before renormalizing the
    image; equals 1 identically for h in the maximal compact rotation group.
    """
    img = _apply_vec(h, ray.nu)
    return float(np.hypot(img[0], img[1]))
