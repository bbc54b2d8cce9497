"""Discrete groups of AdS3 isometries given by pairs of surface-group matrices.

Representation validation, breadth-first word-ball enumeration with exact
dedup keys, axes and boundary fixed points, limit-set sampling with
acausality reports, invisible-domain and convex-hull membership tests,
orbit counting with critical-exponent fits, and the marked length spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoundaryRay,
    IsometryPair,
    QuadricPoint,
    _sl2_inv,
    from_sl2,
    linear_rep4,
    q_eval,
    sign_normalize_pair,
    to_sl2,
)
from .errors import (
    DepthLimit,
    EmptyBall,
    FixedBasepoint,
    NonUnimodular,
    NotHyperbolic,
    RelatorViolation,
    SolverNonConvergence,
)

DEDUP_DECIMALS = 8
DEFAULT_ELEMENT_CAP = 20_000_000


# --- representations -----------------------------------------------------------

class Representation:
    """Pair of matrix tuples (images of the surface-group generators).

    Both factors must be unimodular to 1e-10 and the relator word must
    evaluate to +-Id in each factor to 1e-8.
    """

    def __init__(self, gens1, gens2, relator, label=""):
        gens1 = [np.asarray(g, dtype=float) for g in gens1]
        gens2 = [np.asarray(g, dtype=float) for g in gens2]
        if len(gens1) != len(gens2):
            raise NonUnimodular("factor generator lists differ in length")
        for i, g in enumerate(gens1 + gens2):
            d = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
            if abs(d - 1.0) > 1e-10:
                raise NonUnimodular(f"generator {i}: det = {d:.2e} is not 1")
        self.gens1 = gens1
        self.gens2 = gens2
        self.relator = tuple(int(s) for s in relator)
        self.label = label
        self._validate_relator()

    @property
    def rank(self):
        return len(self.gens1)

    def _word_matrix(self, word, gens):
        m = np.eye(2)
        for s in word:
            g = gens[s - 1] if s > 0 else _sl2_inv(gens[-s - 1])
            m = m @ g
        return m

    def _validate_relator(self):
        if not self.relator:
            return
        for fac, gens in ((1, self.gens1), (2, self.gens2)):
            m = self._word_matrix(self.relator, gens)
            res = min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max())
            if res > 1e-8:
                raise RelatorViolation(res, fac)

    def generator_pair(self, s):
        """IsometryPair of the signed generator index s (1-based, sign = inverse)."""
        if s > 0:
            return IsometryPair(self.gens1[s - 1], self.gens2[s - 1], word=(s,), check=False)
        return IsometryPair(_sl2_inv(self.gens1[-s - 1]), _sl2_inv(self.gens2[-s - 1]),
                            word=(s,), check=False)

    def word_element(self, word):
        m1 = self._word_matrix(word, self.gens1)
        m2 = self._word_matrix(word, self.gens2)
        return IsometryPair(m1, m2, word=word, check=False)

    def is_fuchsian_diagonal(self, tol=1e-10):
        return all(np.abs(a - b).max() <= tol for a, b in zip(self.gens1, self.gens2))


def _rotation(alpha):
    c, s = np.cos(alpha / 2.0), np.sin(alpha / 2.0)
    return np.array([[c, s], [-s, c]])


def octagon_gens():
    """Hyperbolic side-pairing generators of the regular-octagon surface group.

    Four conjugates of the translation with cosh(l/2) = 1 + sqrt(2) by
    rotations in steps of pi/4 about the disk center.
    """
    half = np.arccosh(1.0 + np.sqrt(2.0))
    t = np.diag([np.exp(half), np.exp(-half)])
    return [_rotation(k * np.pi / 4.0) @ t @ _rotation(-k * np.pi / 4.0) for k in range(4)]


#: relator of the octagon generators (validated numerically at load time)
OCTAGON_RELATOR = (1, -2, 3, -4, -1, 2, -3, 4)


def modular_torus_gens():
    """Integer generators of the hyperbolic once-punctured torus."""
    a = np.array([[1.0, 1.0], [1.0, 2.0]])
    b = np.array([[1.0, -1.0], [-1.0, 2.0]])
    return [a, b]


def markov_torus_gens(x=3.1, y=3.5):
    """Generic once-punctured torus from a point of the trace variety.

    Solves x^2 + y^2 + z^2 = xyz for the larger z and realizes the traces
    (tr a, tr b, tr ab) = (x, y, z); the commutator is parabolic and the
    trace field is irrational, so the length spectrum has essentially
    multiplicity-free classes (unlike the integral modular torus).
    """
    z = (x * y + np.sqrt((x * y) ** 2 - 4.0 * (x * x + y * y))) / 2.0
    a = np.array([[x, 1.0], [-1.0, 0.0]])
    p = (y + np.sqrt(y * y - 4.0)) / 2.0
    b = np.array([[p, 0.0], [z - x * p, 1.0 / p]])
    return [a, b]


def fenchel_nielsen_twist(gens, t):
    """Twist the second generator along the axis of the first.

    Returns a new generator list [a, b exp(t log a)]; the commutator trace is
    unchanged, so the twisted tuple satisfies the same (parabolic-commutator)
    relator constraint and stays discrete for all real t.
    """
    a, b = gens[0], gens[1]
    evals, evecs = np.linalg.eig(a)
    log_a = evecs @ np.diag(np.log(evals.real)) @ np.linalg.inv(evecs)
    # matrix exponential of the 2x2 traceless-ish log via eigen form
    amt = evecs @ np.diag(np.exp(t * np.log(evals.real))) @ np.linalg.inv(evecs)
    twisted = b @ amt
    twisted /= np.sqrt(twisted[0, 0] * twisted[1, 1] - twisted[0, 1] * twisted[1, 0])
    return [a.copy(), twisted], log_a


def load_representation(config):
    """Build a Representation from a config mapping.

    Recognized keys: `preset` ("octagon-genus2" or "modular-torus", with
    optional `twist` applied to the second factor), or explicit `gens1`,
    `gens2`, `relator`.  `label` is carried through.
    """
    label = config.get("label", "")
    if "preset" in config and ("gens1" in config or "gens2" in config):
        from .errors import ValidationError

        raise ValidationError("preset and explicit generators are mutually exclusive")
    if "preset" in config:
        name = config["preset"]
        twist = float(config.get("twist", 0.0))
        if name == "octagon-genus2":
            g = octagon_gens()
            if twist != 0.0:
                from .errors import ValidationError

                raise ValidationError("twist deformation is only wired for modular-torus")
            return Representation(g, [m.copy() for m in g], OCTAGON_RELATOR,
                                  label=label or name)
        if name in ("modular-torus", "markov-torus"):
            g = modular_torus_gens() if name == "modular-torus" else markov_torus_gens()
            g2 = [m.copy() for m in g]
            if twist != 0.0:
                g2, _ = fenchel_nielsen_twist(g, twist)
            # free group: validated through the parabolic-commutator trace instead
            rep = Representation(g, g2, (), label=label or name)
            for fac, gens in ((1, rep.gens1), (2, rep.gens2)):
                comm = _commutator(gens[0], gens[1])
                if abs(np.trace(comm) + 2.0) > 1e-8:
                    raise RelatorViolation(abs(np.trace(comm) + 2.0), fac)
            return rep
        from .errors import ValidationError

        raise ValidationError(f"unknown preset {name!r}")
    gens1 = [np.asarray(m, dtype=float).reshape(2, 2) for m in config["gens1"]]
    gens2 = [np.asarray(m, dtype=float).reshape(2, 2) for m in config["gens2"]]
    relator = tuple(config.get("relator", ()))
    return Representation(gens1, gens2, relator, label=label)


def _commutator(a, b):
    return a @ b @ _sl2_inv(a) @ _sl2_inv(b)


# --- word-ball enumeration --------------------------------------------------------

def _pair_keys(h1, h2):
    """Quantized dedup keys of sign-normalized matrix pairs, one bytes object per row."""
    n = h1.shape[0]
    flat = np.concatenate([h1.reshape(n, 4), h2.reshape(n, 4)], axis=1)
    # sign normalization: first entry of h1 with |e| > 1e-9 must be positive
    sign = np.ones(n)
    undecided = np.ones(n, dtype=bool)
    for j in range(4):
        col = flat[:, j]
        pick = undecided & (np.abs(col) > 1e-9)
        sign[pick] = np.sign(col[pick])
        undecided &= ~pick
    flat = flat * sign[:, None]
    quant = np.round(flat * 10.0 ** DEDUP_DECIMALS).astype(np.int64)
    # kill negative zeros introduced by rounding
    quant[quant == 0] = 0
    return [row.tobytes() for row in quant], flat, sign


class OrbitBall:
    """Deduplicated ball of group elements up to a word length.

    `h1`, `h2` hold the sign-normalized matrix factors as (n, 2, 2) arrays in
    canonical order (word length, then lexicographic word); `words` is an
    (n, depth) int8 array padded with zeros.
    """

    def __init__(self, rep, depth, h1, h2, words, wlen):
        self.rep = rep
        self.depth = depth
        self.h1 = h1
        self.h2 = h2
        self.words = words
        self.wlen = wlen

    def __len__(self):
        return self.h1.shape[0]

    def element(self, i):
        word = tuple(int(s) for s in self.words[i] if s != 0)
        return IsometryPair(self.h1[i], self.h2[i], word=word, check=False)

    def word_tuple(self, i):
        return tuple(int(s) for s in self.words[i] if s != 0)

    def apply_to_vec(self, y):
        """Orbit gamma * y of a vector, vectorized: psi^{-1}(h1 psi(y) h2^{-1})."""
        ym = to_sl2(np.asarray(y, dtype=float))
        h2inv = np.empty_like(self.h2)
        h2inv[:, 0, 0] = self.h2[:, 1, 1]
        h2inv[:, 0, 1] = -self.h2[:, 0, 1]
        h2inv[:, 1, 0] = -self.h2[:, 1, 0]
        h2inv[:, 1, 1] = self.h2[:, 0, 0]
        prod = np.einsum("nij,jk,nkl->nil", self.h1, ym, h2inv)
        a = prod[:, 0, 0]
        b = prod[:, 0, 1]
        c = prod[:, 1, 0]
        d = prod[:, 1, 1]
        return np.stack([(a + d) / 2.0, (b - c) / 2.0, (a - d) / 2.0, (b + c) / 2.0],
                        axis=1)

    def traces(self):
        return (self.h1[:, 0, 0] + self.h1[:, 1, 1],
                self.h2[:, 0, 0] + self.h2[:, 1, 1])

    def inverted(self):
        """Ball of the inverses (same element set when the ball is symmetric)."""
        h1inv = np.empty_like(self.h1)
        h1inv[:, 0, 0] = self.h1[:, 1, 1]
        h1inv[:, 0, 1] = -self.h1[:, 0, 1]
        h1inv[:, 1, 0] = -self.h1[:, 1, 0]
        h1inv[:, 1, 1] = self.h1[:, 0, 0]
        h2inv = np.empty_like(self.h2)
        h2inv[:, 0, 0] = self.h2[:, 1, 1]
        h2inv[:, 0, 1] = -self.h2[:, 0, 1]
        h2inv[:, 1, 0] = -self.h2[:, 1, 0]
        h2inv[:, 1, 1] = self.h2[:, 0, 0]
        words = -self.words[:, ::-1]
        return OrbitBall(self.rep, self.depth, h1inv, h2inv, words, self.wlen.copy())


def ball_enumerate(rep, depth, cap=DEFAULT_ELEMENT_CAP):
    """Breadth-first enumeration of distinct elements up to word length `depth`.

    Words are freely reduced; elements are deduplicated by the quantized
    sign-normalized matrix key, so relator coincidences collapse.  Output is
    canonically ordered and deterministic.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    k = rep.rank
    n_sym = 2 * k
    sym_list = [i + 1 for i in range(k)] + [-(i + 1) for i in range(k)]
    gen1 = np.stack([rep.gens1[i] for i in range(k)]
                    + [_sl2_inv(rep.gens1[i]) for i in range(k)])
    gen2 = np.stack([rep.gens2[i] for i in range(k)]
                    + [_sl2_inv(rep.gens2[i]) for i in range(k)])

    width = max(depth, 1)
    seen = set()
    acc_h1, acc_h2, acc_words, acc_wlen = [], [], [], []

    id1 = np.eye(2)[None, :, :]
    keys, flat, _ = _pair_keys(id1.copy(), id1.copy())
    seen.add(keys[0])
    acc_h1.append(id1.copy())
    acc_h2.append(id1.copy())
    acc_words.append(np.zeros((1, width), dtype=np.int8))
    acc_wlen.append(np.zeros(1, dtype=np.int32))

    lvl_h1, lvl_h2 = id1.copy(), id1.copy()
    lvl_words = np.zeros((1, width), dtype=np.int8)
    lvl_last = np.zeros(1, dtype=np.int8)
    total = 1

    for level in range(1, depth + 1):
        n_prev = lvl_h1.shape[0]
        if total + n_prev * (n_sym - 1) > cap:
            raise DepthLimit(
                f"projected element count exceeds cap {cap} at level {level}")
        cand_h1 = []
        cand_h2 = []
        cand_words = []
        cand_last = []
        for j, s in enumerate(sym_list):
            mask = lvl_last != -s        # free reduction: no immediate backtracking
            if not np.any(mask):
                continue
            cand_h1.append(np.einsum("nij,jk->nik", lvl_h1[mask], gen1[j]))
            cand_h2.append(np.einsum("nij,jk->nik", lvl_h2[mask], gen2[j]))
            w = lvl_words[mask].copy()
            w[:, level - 1] = s
            cand_words.append(w)
            cand_last.append(np.full(w.shape[0], s, dtype=np.int8))
        cand_h1 = np.concatenate(cand_h1)
        cand_h2 = np.concatenate(cand_h2)
        cand_words = np.concatenate(cand_words)
        cand_last = np.concatenate(cand_last)

        keys, flat, sign = _pair_keys(cand_h1, cand_h2)
        keep = np.zeros(len(keys), dtype=bool)
        for i, key in enumerate(keys):
            if key not in seen:
                seen.add(key)
                keep[i] = True
        # store the sign-normalized factors
        norm_h1 = flat[:, :4].reshape(-1, 2, 2)[keep]
        norm_h2 = flat[:, 4:].reshape(-1, 2, 2)[keep]
        lvl_h1, lvl_h2 = norm_h1, norm_h2
        lvl_words = cand_words[keep]
        lvl_last = cand_last[keep]
        order = np.lexsort(lvl_words.T[::-1])
        lvl_h1, lvl_h2 = lvl_h1[order], lvl_h2[order]
        lvl_words = lvl_words[order]
        lvl_last = lvl_last[order]
        total += lvl_h1.shape[0]
        acc_h1.append(lvl_h1)
        acc_h2.append(lvl_h2)
        acc_words.append(lvl_words)
        acc_wlen.append(np.full(lvl_h1.shape[0], level, dtype=np.int32))
        if lvl_h1.shape[0] == 0:
            break

    return OrbitBall(rep, depth,
                     np.concatenate(acc_h1), np.concatenate(acc_h2),
                     np.concatenate(acc_words), np.concatenate(acc_wlen))


# --- axes and fixed points ---------------------------------------------------------

@dataclass
class AxisData:
    gamma_plus: BoundaryRay
    gamma_minus: BoundaryRay
    lam1: float
    lam2: float
    mid_rays: tuple


def translation_lengths(pair):
    """(l1, l2) = arccosh(|tr|/2) of the two factors; raises NotHyperbolic."""
    out = []
    for fac, m in ((1, pair.h1), (2, pair.h2)):
        tr = float(np.trace(m))
        if abs(tr) <= 2.0:
            raise NotHyperbolic(fac, tr)
        out.append(float(np.arccosh(abs(tr) / 2.0)))
    return out[0], out[1]


def _power_iterate(m, n_iter=300, tol=1e-13):
    v = np.array([1.0, 0.71, 0.31, 0.53])
    for _ in range(n_iter):
        w = m @ v
        w /= np.linalg.norm(w)
        # sign-insensitive vector convergence (eigenvalues here are positive)
        if min(np.abs(w - v).max(), np.abs(w + v).max()) < tol:
            lam = w @ m @ w
            return w, lam, True
        v = w
    return v, v @ m @ v, False


def axis_data(pair, eig_gap=0.05):
    """Attracting and repelling boundary fixed rays with eigenvalue data.

    lam1 = l1 + l2 and lam2 = |l1 - l2| from the factor traces; the dominant
    and recessive rays come from power iteration on the 4x4 action (with an
    eigendecomposition fallback when the spectral gap is below `eig_gap`),
    and the middle eigendirections are returned as the two null rays of the
    fixed 2-plane.
    """
    l1, l2 = translation_lengths(pair)
    lam1 = l1 + l2
    lam2 = abs(l1 - l2)
    m4 = linear_rep4(pair)
    use_eig = (lam1 - lam2) < eig_gap
    if not use_eig:
        vp, _, ok_p = _power_iterate(m4)
        vm, _, ok_m = _power_iterate(np.linalg.inv(m4))
        use_eig = not (ok_p and ok_m)
    if use_eig:
        evals, evecs = np.linalg.eig(m4)
        idx = np.argsort(evals.real)
        vp = evecs[:, idx[-1]].real
        vm = evecs[:, idx[0]].real
    gp = BoundaryRay(_orient_ray(vp), tol=1e-6)
    gm = BoundaryRay(_orient_ray(vm), tol=1e-6)
    mids = _mid_rays(m4, gp, gm, lam2)
    return AxisData(gp, gm, lam1, lam2, mids)


def _orient_ray(v):
    # rays live in the quotient by positive scaling only; pick the lift whose
    # first nonzero coordinate of (v1, v2) points along +theta consistently
    if np.hypot(v[0], v[1]) < 1e-12:
        raise NotHyperbolic(1, 2.0)
    return v if (v[0] if abs(v[0]) > 1e-9 else v[1]) > 0 else -v


def _mid_rays(m4, gp, gm, lam2, tol=1e-6):
    if lam2 > tol:
        evals, evecs = np.linalg.eig(m4)
        order = np.argsort(np.abs(evals))
        mids = []
        for j in order[1:3]:
            v = evecs[:, j].real
            mids.append(BoundaryRay(_orient_ray(v), tol=1e-5))
        return tuple(mids)
    # degenerate middle eigenvalue: the fixed 2-plane carries two null lines
    plane = _fixed_plane(m4, gp, gm)
    return _null_lines_in_plane(plane)


def _fixed_plane(m4, gp, gm):
    # orthogonal complement of the two extreme eigenrays under q
    g_metric = np.diag([-1.0, -1.0, 1.0, 1.0])
    a = np.vstack([gp.nu @ g_metric, gm.nu @ g_metric])
    _, _, vt = np.linalg.svd(a)
    return vt[2:].T


def _null_lines_in_plane(plane):
    b1, b2 = plane[:, 0], plane[:, 1]
    g11, g12, g22 = q_eval(b1), q_eval(b1, b2), q_eval(b2)
    # solve q(b1 + t b2) = 0
    disc = g12 * g12 - g11 * g22
    if disc <= 0:
        raise NotHyperbolic(1, 2.0)
    roots = [(-g12 + np.sqrt(disc)) / g22, (-g12 - np.sqrt(disc)) / g22]
    return tuple(BoundaryRay(_orient_ray(b1 + t * b2), tol=1e-5) for t in roots)


# --- limit-set sampling --------------------------------------------------------------

@dataclass
class LimitSample:
    rays: np.ndarray          # (m, 4) torus representatives
    angles: np.ndarray        # (m, 2) canonical (theta, phi)
    source_count: int

    def __len__(self):
        return self.rays.shape[0]


def limit_sample(ball, angle_quantum=2e-3, trace_margin=1e-9):
    """Axis endpoints of the hyperbolic ball elements, angle-deduplicated.

    An acausal circle is a graph over the second torus angle, so after the
    coarse bin dedup the sample is thinned greedily along phi until
    consecutive rays are at least `angle_quantum` apart; the pairwise causal
    separations then stay bounded away from zero.
    """
    if len(ball) <= 1:
        raise EmptyBall("need a ball of depth >= 1")
    tr1, tr2 = ball.traces()
    hyp = (np.abs(tr1) > 2.0 + trace_margin) & (np.abs(tr2) > 2.0 + trace_margin)
    idx = np.nonzero(hyp)[0]
    if idx.size == 0:
        raise EmptyBall("no hyperbolic elements in the ball")
    m4 = _linear_rep4_batch(ball, idx)
    rays = []
    rays.append(_batched_dominant(m4))
    rays.append(_batched_dominant(np.linalg.inv(m4)))
    nus = np.concatenate(rays)
    r1 = np.hypot(nus[:, 0], nus[:, 1])
    nus = nus / r1[:, None]
    theta = np.arctan2(nus[:, 1], nus[:, 0])
    phi = np.arctan2(nus[:, 3], nus[:, 2])
    ang = np.stack([theta, phi], axis=1)
    bins = np.round(ang / angle_quantum).astype(np.int64)
    _, uniq = np.unique(bins, axis=0, return_index=True)
    uniq.sort()
    nus, ang = nus[uniq], ang[uniq]
    order = np.argsort(ang[:, 1])
    keep = []
    last_phi = None
    first_phi = None
    for j in order:
        ph = ang[j, 1]
        if last_phi is None:
            keep.append(j)
            last_phi = ph
            first_phi = ph
            continue
        if ph - last_phi >= angle_quantum:
            # also respect the circular wrap against the first kept ray
            if (first_phi + 2.0 * np.pi) - ph >= angle_quantum:
                keep.append(j)
                last_phi = ph
    keep = np.array(keep)
    return LimitSample(nus[keep], ang[keep], int(idx.size))


def _linear_rep4_batch(ball, idx):
    basis = np.eye(4)
    cols = [ball.apply_to_vec(basis[j])[idx] for j in range(4)]
    return np.stack(cols, axis=2)


def _batched_dominant(m4, n_iter=200, tol=1e-13):
    n = m4.shape[0]
    v = np.tile(np.array([1.0, 0.71, 0.31, 0.53]), (n, 1))
    for _ in range(n_iter):
        w = np.einsum("nij,nj->ni", m4, v)
        w /= np.linalg.norm(w, axis=1)[:, None]
        if np.abs(w - v).max() < tol or np.abs(w + v).max() < tol:
            v = w
            break
        v = w
    return v


def acausal_check(sample):
    """Pairwise causal separations and the chordal graph-slope report.

    Returns a dict with the worst pairwise q (acausality needs max_q < 0),
    the sampled-pair count, and the maximal |d theta| / |d phi| ratio over
    phi-adjacent samples (the discrete shadow of the distance-decreasing
    graph property; 0 for a round circle).
    """
    nus = sample.rays
    m = nus.shape[0]
    if m < 2:
        return {"pairs": 0, "max_q": -np.inf, "max_slope": 0.0}
    dth = sample.angles[:, 0][:, None] - sample.angles[:, 0][None, :]
    dph = sample.angles[:, 1][:, None] - sample.angles[:, 1][None, :]
    qmat = -np.cos(dth) + np.cos(dph)
    np.fill_diagonal(qmat, -np.inf)
    max_q = float(qmat.max())
    order = np.argsort(sample.angles[:, 1])
    th = sample.angles[order, 0]
    ph = sample.angles[order, 1]
    dth_adj = _circle_diff(np.roll(th, -1) - th)
    dph_adj = _circle_diff(np.roll(ph, -1) - ph)
    good = np.abs(dph_adj) > 1e-12
    ratios = np.abs(dth_adj[good]) / np.abs(dph_adj[good])
    return {
        "pairs": m * (m - 1) // 2,
        "max_q": max_q,
        "max_slope": float(ratios.max()) if ratios.size else 0.0,
    }


def _circle_diff(d):
    return (d + np.pi) % (2.0 * np.pi) - np.pi


# --- membership tests -----------------------------------------------------------------

def domain_tests(x, sample, fw_iters=500, tol=1e-6):
    """Invisible-domain and convex-hull membership against a limit sample.

    invisible <=> max over sampled rays of q(x, nu) < 0 (the max is returned
    as `margin`).  Hull membership asks for a convex combination of the
    lifted rays landing on the ray through x; decided by Frank-Wolfe descent
    on the simplex with the scale eliminated analytically.
    """
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    margins = q_eval(xv[None, :], sample.rays)
    margin = float(margins.max())
    invisible = margin < 0.0
    hull, resid, iters = _hull_membership(xv, sample.rays, fw_iters, tol)
    return {"invisible": invisible, "margin": margin,
            "hull": hull, "hull_residual": resid, "hull_iterations": iters}


def _hull_membership(xv, rays, n_iters, tol):
    n = rays.shape[0]
    c = np.full(n, 1.0 / n)
    target = xv

    def objective_grad(c):
        y = rays.T @ c
        qy = q_eval(y)
        if qy >= -1e-14:
            # infeasible scale: push toward negative q
            grad_q = 2.0 * (rays @ (np.diag([-1.0, -1.0, 1.0, 1.0]) @ y))
            return 1.0 + qy, grad_q, None
        s = 1.0 / np.sqrt(-qy)
        yhat = s * y
        r = yhat - target
        val = float(r @ r)
        # d yhat / d c = s * rays_row + y * ds/dc ; ds/dc = s^3 * q(ray, y)
        qry = q_eval(rays, y[None, :])
        grad = 2.0 * (rays @ r) * s + 2.0 * (r @ y) * (s ** 3) * qry
        return val, grad, yhat

    best = np.inf
    val = np.inf
    for it in range(n_iters):
        val, grad, _ = objective_grad(c)
        best = min(best, val)
        if val <= tol * tol:
            return True, float(np.sqrt(val)), it + 1
        j = int(np.argmin(grad))
        direction = -c
        direction[j] += 1.0
        # exact-ish line search by golden section on [0, 1]
        step = _golden_step(lambda a: objective_grad(c + a * direction)[0])
        c = c + step * direction
        c = np.clip(c, 0.0, None)
        c /= c.sum()
    if best > 100.0 * tol * tol and val > best * 1.5:
        raise SolverNonConvergence(n_iters, float(np.sqrt(best)))
    return False, float(np.sqrt(best)), n_iters


def _golden_step(f, lo=0.0, hi=1.0, n=40):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - phi * (b - a)
    c2 = a + phi * (b - a)
    f1, f2 = f(c1), f(c2)
    for _ in range(n):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - phi * (b - a)
            f1 = f(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + phi * (b - a)
            f2 = f(c2)
    return 0.5 * (a + b)


# --- orbit statistics -------------------------------------------------------------------

@dataclass
class OrbitStats:
    distances: np.ndarray
    spacelike_idx: np.ndarray
    finite_idx: np.ndarray
    delta_hat: float
    window: tuple
    slope_ci: float
    n_table: list = field(default_factory=list)


def counting_window(values, quantile=0.03, margin=1.0):
    """Fit window [T_max/2, T_max - margin] for a sorted counting variable.

    A word ball undercounts beyond a scale proportional to the depth; the
    onset is located empirically as the low `quantile` of the value
    distribution (the bulk piles up near the saturated radius).
    """
    t_max = float(np.quantile(values, quantile))
    t_max = max(t_max, float(np.min(values)) + 2.0 * margin)
    return 0.5 * t_max, t_max - margin


def orbit_stats(x, y, ball, window=None):
    """Distances over the orbit, the counting table and the exponent fit.

    Splits the ball into the spacelike translates {-q(x, gamma y) > 1} (with
    AdS distances) and the finite near set.  The growth exponent is the
    least-squares slope of log N(T) against T on `counting_window` (or an
    explicit (t_lo, t_hi) window).
    """
    xv = x.p if isinstance(x, QuadricPoint) else np.asarray(x, dtype=float)
    yv = y.p if isinstance(y, QuadricPoint) else np.asarray(y, dtype=float)
    imgs = ball.apply_to_vec(yv)
    qs = q_eval(xv[None, :], imgs)
    moved = np.abs(imgs - yv[None, :]).max(axis=1) > 1e-9
    fixed_count = int(np.count_nonzero(~moved))
    if fixed_count >= 3:
        raise FixedBasepoint(
            f"{fixed_count} ball elements fix the basepoint; move it off the axis")
    spacelike = qs < -1.0
    d = np.arccosh(-qs[spacelike])
    if d.size < 8:
        raise EmptyBall("too few spacelike translates for a counting fit")
    d_sorted = np.sort(d)
    t_lo, t_hi = counting_window(d_sorted) if window is None else window
    counts = np.arange(1, d_sorted.size + 1, dtype=float)
    in_win = (d_sorted >= t_lo) & (d_sorted <= t_hi)
    if np.count_nonzero(in_win) < 8:
        raise EmptyBall(
            f"counting window [{t_lo:.2f}, {t_hi:.2f}] holds too few orbit points")
    ts = d_sorted[in_win]
    logn = np.log(counts[in_win])
    slope, intercept, se = _ols_slope(ts, logn)
    table = _count_table(d_sorted, t_lo, t_hi)
    return OrbitStats(
        distances=d,
        spacelike_idx=np.nonzero(spacelike)[0],
        finite_idx=np.nonzero(~spacelike)[0],
        delta_hat=float(slope),
        window=(float(t_lo), float(t_hi)),
        slope_ci=float(2.0 * se),
        n_table=table,
    )


def _ols_slope(ts, ys):
    a = np.vstack([ts, np.ones_like(ts)]).T
    coef, res, _, _ = np.linalg.lstsq(a, ys, rcond=None)
    n = ts.size
    if n > 2 and res.size:
        sigma2 = res[0] / (n - 2)
        sxx = np.sum((ts - ts.mean()) ** 2)
        se = np.sqrt(sigma2 / sxx)
    else:
        se = 0.0
    return coef[0], coef[1], se


def _count_table(d_sorted, t_lo, t_hi, n_rows=12):
    ts = np.linspace(max(d_sorted[0], 1e-6), d_sorted[-1], n_rows)
    return [(float(t), int(np.searchsorted(d_sorted, t, side="right"))) for t in ts]


def orbit_log_coefficient(stats):
    """Coefficient N0 of the fitted counting model N(T) = N0 exp(delta T)."""
    t_hi = stats.window[1]
    n_hi = float(np.count_nonzero(stats.distances <= t_hi))
    return n_hi * np.exp(-stats.delta_hat * t_hi)


# --- length spectrum --------------------------------------------------------------------

def length_spectrum(ball, trace_margin=1e-9, quant=1e-8, mult_tol=1e-6):
    """Primitive conjugacy classes (lam1, lam2, multiplicity), sorted by lam1.

    Classes are merged by the quantized conjugacy invariant (|tr1|, |tr2|)
    (which also folds gamma with its inverse).  The multiplicity estimates
    the number of distinct closed orbits sharing the invariant: the number
    of ball elements at the minimal word length of the class divided by
    twice that length (the cyclic rotations and inverses of each orbit word).
    A class is dropped as non-primitive when its (lam1, lam2) is an integer
    multiple >= 2 of an earlier class within tolerance.
    """
    if len(ball) <= 1:
        raise EmptyBall("need a ball of depth >= 1")
    tr1, tr2 = ball.traces()
    hyp = (np.abs(tr1) > 2.0 + trace_margin) & (np.abs(tr2) > 2.0 + trace_margin)
    a1 = np.abs(tr1[hyp])
    a2 = np.abs(tr2[hyp])
    wl = ball.wlen[hyp].astype(np.int64)
    keys = np.round(np.stack([a1, a2], axis=1) / quant).astype(np.int64)
    uniq, inverse_idx = np.unique(keys, axis=0, return_inverse=True)
    n_min = np.full(uniq.shape[0], np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(n_min, inverse_idx, wl)
    at_min = np.zeros(uniq.shape[0])
    np.add.at(at_min, inverse_idx, (wl == n_min[inverse_idx]).astype(float))
    mult = np.maximum(np.round(at_min / (2.0 * np.maximum(n_min, 1))), 1.0)
    l1 = np.arccosh(np.clip(uniq[:, 0] * quant, 2.0, None) / 2.0)
    l2 = np.arccosh(np.clip(uniq[:, 1] * quant, 2.0, None) / 2.0)
    lam1 = l1 + l2
    lam2 = np.abs(l1 - l2)
    order = np.argsort(lam1)
    lam1, lam2, mult = lam1[order], lam2[order], mult[order]
    classes = []
    kept_lam1 = []
    kept_lam2 = []
    for i in range(lam1.size):
        primitive = True
        for j in range(len(kept_lam1)):
            base1 = kept_lam1[j]
            if base1 < 1e-9:
                continue
            k = round(lam1[i] / base1)
            if k >= 2 and abs(lam1[i] - k * base1) <= mult_tol * k \
                    and abs(lam2[i] - k * kept_lam2[j]) <= mult_tol * k:
                primitive = False
                break
        if primitive:
            classes.append((float(lam1[i]), float(lam2[i]), int(mult[i])))
            kept_lam1.append(lam1[i])
            kept_lam2.append(lam2[i])
    return classes


def spectrum_growth_fit(classes, window=None):
    """Exponential-growth fit of the primitive class counting function.

    Counts classes with multiplicity and fits the standard primitive-orbit
    form N(T) ~ e^{hT} / (hT), i.e. regresses log(N(T) * T) on T; the window
    follows the same saturation rule as the orbit fit.
    """
    lam1 = np.array([c[0] for c in classes])
    mult = np.array([max(c[2], 1) for c in classes], dtype=float)
    order = np.argsort(lam1)
    lam1, mult = lam1[order], mult[order]
    if lam1.size < 8:
        raise EmptyBall("too few primitive classes for a growth fit")
    counts = np.cumsum(mult)
    t_lo, t_hi = counting_window(np.repeat(lam1, mult.astype(int))) \
        if window is None else window
    in_win = (lam1 >= t_lo) & (lam1 <= t_hi)
    if np.count_nonzero(in_win) < 6:
        raise EmptyBall("class-counting window too sparse")
    slope, _, se = _ols_slope(lam1[in_win], np.log(counts[in_win] * lam1[in_win]))
    return {"h_hat": float(slope), "window": (float(t_lo), float(t_hi)),
            "ci": float(2.0 * se), "classes": int(lam1.size),
            "orbits": float(counts[-1])}
