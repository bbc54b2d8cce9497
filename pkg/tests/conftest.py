import numpy as np
import pytest

from qfads import flow, groups
from qfads.core import QuadricPoint, q_eval


def random_point(rng):
    # keep coordinates O(1) so absolute conservation tolerances are meaningful
    while True:
        x = rng.normal(size=4)
        if q_eval(x) < -0.5:
            return x / np.sqrt(-q_eval(x))


def random_unit_tangent(rng):
    x = random_point(rng)
    while True:
        w = rng.normal(size=4)
        v = w + q_eval(w, x) * x
        if q_eval(v) > 0.5:
            return flow.UnitTangent(x, v / np.sqrt(q_eval(v)))


def random_tangent_vector(rng, p):
    a = rng.normal(size=4)
    b = rng.normal(size=4)
    xi_x = a + q_eval(a, p.x) * p.x
    xi_v = b - q_eval(b, p.v) * p.v
    xi_v = xi_v + (q_eval(p.x, xi_v) + q_eval(xi_x, p.v)) * p.x
    return (xi_x, xi_v)


def random_isometry(rng, scale=0.6):
    from scipy.linalg import expm

    def rand_sl2():
        m = rng.normal(size=(2, 2)) * scale
        m[1, 1] = -m[0, 0]
        return expm(m)

    from qfads.core import IsometryPair

    return IsometryPair(rand_sl2(), rand_sl2())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def torus_rep():
    return groups.load_representation({"preset": "modular-torus"})


@pytest.fixture(scope="session")
def torus_ball8(torus_rep):
    return groups.ball_enumerate(torus_rep, 8)


@pytest.fixture(scope="session")
def torus_ball10(torus_rep):
    return groups.ball_enumerate(torus_rep, 10)


@pytest.fixture(scope="session")
def torus_ball12(torus_rep):
    return groups.ball_enumerate(torus_rep, 12)


@pytest.fixture(scope="session")
def octagon_rep():
    return groups.load_representation({"preset": "octagon-genus2"})


@pytest.fixture(scope="session")
def octagon_ball4(octagon_rep):
    return groups.ball_enumerate(octagon_rep, 4)


@pytest.fixture(scope="session")
def slice_basepoints():
    x = QuadricPoint(np.array([0.0, 1.0, 0.0, 0.0]))
    y = QuadricPoint(np.array([0.0, np.cosh(0.3), np.sinh(0.3), 0.0]))
    return x, y
