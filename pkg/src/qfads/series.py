"""Orbit series on the quotient and their diagnostics.

Partial sums of the distance series with reported truncation data, the
invariance and leading-pole probes, the dynamical zeta log-derivative built
from the marked length spectrum, and the hyperbolic-plane reduction: the
free radial kernel, the modified orbit series, and their expansion identity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import QuadricPoint, q_eval
from .errors import (
    DegenerateClass,
    DivergentParameter,
    EmptyBall,
    PoleProximity,
    SlowConvergence,
)
from .groups import orbit_log_coefficient, orbit_stats
from .modes import gamma_complex


class Region(enum.Enum):
    CONVERGENT = "convergent"
    MARGINAL = "marginal"
    DIVERGENT = "divergent"


@dataclass
class SeriesValue:
    value: complex
    terms_used: int
    tail_bound: float
    region_flag: Region


def orbit_distances(x, y, ball):
    """AdS distances over the spacelike translates {-q(x, gamma y) > 1}."""
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    yv = y.p if isinstance(y, QuadricPoint) else np.asarray(y, dtype=float)
    qs = q_eval(xv[None, :], ball.apply_to_vec(yv))
    mask = qs < -1.0
    return np.arccosh(-qs[mask]), qs


def poincare_partial(lam, x, y, ball, stats=None, margin=0.0, flag_gap=0.1):
    """Truncated distance series sum over gamma in the ball with -q > 1.

    The tail bound uses the fitted counting model N(T) ~ N0 exp(delta T):
    tail = N0 delta exp((delta - Re lam) T_max) / (Re lam - delta).  `stats`
    (an OrbitStats) supplies the fit; when omitted it is computed from the
    same ball.  Raises DivergentParameter when Re lam <= delta + margin.
    """
    lam = complex(lam)
    if stats is None:
        stats = orbit_stats(x, y, ball)
    d, _ = orbit_distances(x, y, ball)
    if d.size == 0:
        raise EmptyBall("no spacelike translates in the ball")
    delta = stats.delta_hat
    if lam.real <= delta + margin:
        raise DivergentParameter(
            f"Re(lambda) = {lam.real:.4f} <= delta_hat + margin = {delta + margin:.4f}")
    value = complex(np.sum(np.exp(-lam * d)))
    n0 = orbit_log_coefficient(stats)
    t_max = float(d.max())
    gap = lam.real - delta
    tail = float(n0 * delta * np.exp(-gap * t_max)) / gap if delta > 0 else 0.0
    flag = Region.CONVERGENT if gap > flag_gap else Region.MARGINAL
    return SeriesValue(value, int(d.size), tail, flag)


def poincare_diagnostics(lams, x, y, gamma0, ball, stats=None):
    """Invariance residuals |D(x, gamma0 y) - D(x, y)| on a shared ball.

    Both series run over the same depth-L ball, so the residual is a pure
    truncation-boundary effect and is reported against the sum of the two
    tail bounds.
    """
    from .core import isometry_apply

    if stats is None:
        stats = orbit_stats(x, y, ball)
    y2 = isometry_apply(gamma0, y if isinstance(y, QuadricPoint)
                        else QuadricPoint(np.asarray(y, dtype=float)))
    rows = []
    for lam in lams:
        sv1 = poincare_partial(lam, x, y, ball, stats=stats)
        sv2 = poincare_partial(lam, x, y2, ball, stats=stats)
        rows.append({
            "lambda": complex(lam),
            "value": sv1.value,
            "translated": sv2.value,
            "residual": abs(sv1.value - sv2.value),
            "tail_bound": sv1.tail_bound + sv2.tail_bound,
        })
    return rows


def pole_probe(x, y, ball, stats=None, ks=(3, 4, 5, 6, 7)):
    """Stabilization probe (lam - delta) * D_lam along lam = delta + 2^-k.

    The truncated sum is tail-completed with the fitted counting model: the
    series is summed for d <= T_hi of the fit window and the model tail
    N0 delta exp((delta - lam) T) integrated beyond it, so the probe tends
    to the model residue scale N0 * delta as lam decreases to delta.
    """
    if stats is None:
        stats = orbit_stats(x, y, ball)
    d, _ = orbit_distances(x, y, ball)
    delta = stats.delta_hat
    t_hi = stats.window[1]
    n0 = orbit_log_coefficient(stats)
    d_win = d[d <= t_hi]
    probes = []
    for k in ks:
        eps = 2.0 ** (-k)
        lam = delta + eps
        partial = float(np.sum(np.exp(-lam * d_win)))
        tail = n0 * delta * np.exp(-eps * t_hi) / eps
        probes.append((lam, eps * (partial + tail)))
    return probes


def rank_one_probe(x, y, ball_xy, stats=None, ks=(5, 6, 7)):
    """Ratio probe of the rank-1 residue structure at the leading pole.

    Returns (pxy, pxx, pyy, ratio) with ratio = pxy^2 / (pxx * pyy) built
    from the last stabilized pole probes.
    """
    def last_probe(a, b):
        st = stats if stats is not None else orbit_stats(a, b, ball_xy)
        return pole_probe(a, b, ball_xy, stats=st, ks=ks)[-1][1]

    pxy = last_probe(x, y)
    pxx = last_probe(x, x)
    pyy = last_probe(y, y)
    return pxy, pxx, pyy, (pxy * pxy) / (pxx * pyy)


# --- dynamical zeta -----------------------------------------------------------------

def zeta_det_factor(lam1, lam2, m):
    """|det(1 - P^m)| from the linearized return eigenvalues e^{+-(lam1 +- lam2)}."""
    gap = lam1 - lam2
    if 0.0 < gap < 1e-6:
        raise DegenerateClass(
            f"lam1 - lam2 = {gap:.2e} underflows the determinant denominator")
    return (np.exp(2.0 * m * lam1)
            * (1.0 - np.exp(-m * gap)) ** 2
            * (1.0 - np.exp(-m * (lam1 + lam2))) ** 2)


def zeta_logderiv_partial(lam, spectrum, m_max):
    """Partial log-derivative of the dynamical zeta function.

    Sum over primitive classes (lam1, lam2, multiplicity) and repetition
    numbers m <= m_max of lam1 e^{-m lam lam1} / |det(1 - P^m)|, each class
    weighted by its orbit multiplicity.
    """
    lam = complex(lam)
    total = 0.0 + 0.0j
    for lam1, lam2, mult in spectrum:
        for m in range(1, m_max + 1):
            total += (mult * lam1 * np.exp(-m * lam * lam1)
                      / zeta_det_factor(lam1, lam2, m))
    return total


# --- hyperbolic-plane reduction -------------------------------------------------------

def h2_coeff(lam, j):
    """Series coefficient 2^{-lam-2j-1} Gamma(lam+2j) / (Gamma(lam+1/2+j) j!)."""
    lam = complex(lam)
    return (2.0 ** (-lam - 2.0 * j - 1.0) * gamma_complex(lam + 2.0 * j)
            / (gamma_complex(lam + 0.5 + j) * gamma_complex(j + 1.0)))


@dataclass
class H2Kernel:
    lam: complex
    rho: float
    value: complex
    terms: int
    remainder: float


def h2_resolvent_kernel(lam, rho, j_terms, slow_tol=1e-10):
    """Free radial kernel on the hyperbolic plane as a power series in 1/rho^2.

    value = pi^{-1/2} sum_{j<=J} coeff_j(lam) rho^{-lam-2j}, rho = cosh d > 1.
    Raises PoleProximity near lam in {0, -1, -2, ...} and SlowConvergence
    when the remainder estimate exceeds `slow_tol` (e.g. rho - 1 < 0.1 with
    too few terms).
    """
    lam = complex(lam)
    rho = float(rho)
    if rho <= 1.0:
        raise ValueError("need rho = cosh d > 1")
    if abs(lam.imag) < 1e-8 and lam.real <= 1e-8:
        n = round(lam.real)
        if abs(lam.real - n) < 1e-8:
            raise PoleProximity(f"lambda = {lam} within 1e-8 of a non-positive integer")
    acc = 0.0 + 0.0j
    last = np.inf
    for j in range(j_terms + 1):
        term = h2_coeff(lam, j) * rho ** (-lam - 2.0 * j)
        acc += np.pi ** (-0.5) * term
        last = abs(term)
    ratio = 1.0 / (rho * rho)
    remainder = np.pi ** (-0.5) * last * ratio / max(1.0 - ratio, 1e-12)
    if remainder > slow_tol * max(abs(acc), 1e-300):
        raise SlowConvergence(
            f"remainder {remainder:.2e} after {j_terms} terms at rho = {rho:.4f}")
    return H2Kernel(lam, rho, complex(acc), j_terms + 1, float(remainder))


def h2_distance(xbar, ybar):
    """Hyperboloid distance: cosh d = x2 y2 - x3 y3 - x4 y4."""
    xbar = np.asarray(xbar, dtype=float)
    ybar = np.asarray(ybar, dtype=float)
    c = xbar[0] * ybar[0] - xbar[1] * ybar[1] - xbar[2] * ybar[2]
    return float(np.arccosh(max(c, 1.0)))


def _h2_orbit_cosh(xbar, ybar, ball):
    """cosh distances over the first-factor orbit of a Fuchsian-diagonal ball."""
    x = np.concatenate([[0.0], xbar])
    y = np.concatenate([[0.0], ybar])
    imgs = ball.apply_to_vec(y)
    cosh_d = -(q_eval(x[None, :], imgs))
    wl = ball.wlen
    keep = ~((wl == 0))     # gamma != Id
    return cosh_d[keep]


def modified_series(lam, xbar, ybar, ball):
    """C^Sigma_lam = Gamma(lam+1/2)^{-1} sum_{gamma != Id} cosh(d)^{-lam} over the ball."""
    lam = complex(lam)
    cosh_d = _h2_orbit_cosh(xbar, ybar, ball)
    return complex(np.sum(cosh_d ** (-lam)) / gamma_complex(lam + 0.5))


def modified_poincare_identity(lam, xbar, ybar, ball, j_terms):
    """Residual of the kernel-periodization identity on the hyperbolic plane.

    Left side: sum over gamma != Id in the ball of the free radial kernel at
    cosh d(x, gamma y).  Right side: pi^{-1/2} sum_{j<=J} coeff_j(lam)
    Gamma(lam+1/2+2j) C^Sigma_{lam+2j}(x, y) over the same ball.  For matched
    truncations the difference is the j > J tail, which shrinks with J and
    with the minimal orbit distance.

    Returns (residual, lhs, info).
    """
    lam = complex(lam)
    if lam.real <= 1.0:
        raise DivergentParameter("need Re(lambda) > 1 for the modified series")
    cosh_d = _h2_orbit_cosh(xbar, ybar, ball)
    if cosh_d.size == 0:
        return 0.0, 0.0 + 0.0j, {"terms": 0}
    if cosh_d.min() <= 1.0 + 1e-12:
        raise DivergentParameter("orbit point on the diagonal; move the basepoints")
    lhs = 0.0 + 0.0j
    for rho in cosh_d:
        lhs += h2_resolvent_kernel(lam, float(rho), j_terms + 40).value
    rhs = 0.0 + 0.0j
    for j in range(j_terms + 1):
        cs = complex(np.sum(cosh_d ** (-(lam + 2.0 * j))))
        rhs += np.pi ** (-0.5) * h2_coeff(lam, j) * cs
    tail_rate = float(cosh_d.min()) ** (-2.0 * (j_terms + 1))
    return abs(lhs - rhs), lhs, {"terms": int(cosh_d.size), "tail_rate": tail_rate}


def modified_series_bound(lams, slice_points, ball, threshold=4.0):
    """Empirical envelope constant for the warped-slice series bound.

    For AdS points x = (sin t, cos t * xbar) the series sum_{-q > threshold}
    |q(x, gamma x')|^{-lam} is compared against the shape
    (2/3)^lam / ((lam - 1) cos t cos t'); returns the fitted constant
    C = max over the grid of LHS / shape and the per-point table.
    """
    rows = []
    c_fit = 0.0
    for lam in lams:
        lam = float(lam)
        if lam <= 1.0:
            raise DivergentParameter("bound check needs lambda > 1")
        for (t, xbar), (tp, ybar) in slice_points:
            x = np.concatenate([[np.sin(t)], np.cos(t) * np.asarray(xbar)])
            y = np.concatenate([[np.sin(tp)], np.cos(tp) * np.asarray(ybar)])
            qs = q_eval(x[None, :], ball.apply_to_vec(y))
            sel = -qs > threshold
            lhs = float(np.sum(np.abs(qs[sel]) ** (-lam)))
            shape = (2.0 / 3.0) ** lam / ((lam - 1.0) * np.cos(t) * np.cos(tp))
            c_here = lhs / shape
            c_fit = max(c_fit, c_here)
            rows.append({"lambda": lam, "t": t, "tp": tp, "lhs": lhs,
                         "shape": shape, "c": c_here})
    return c_fit, rows
