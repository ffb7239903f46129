import numpy as np
import pytest

from jmbounds.joint import Triple, coplanar_jm_sum, lambda_points
from jmbounds.fermat import ft_point

ACCEPTANCE_LINES = []


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_ball(rng, radius=1.0):
    return random_unit(rng) * radius * rng.uniform() ** (1 / 3)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _shrink(lam, lhs, rng, boundary):
    # scale onto (or inside) the compatible region; lhs is degree-1 homogeneous
    c = 4.0 / lhs if lhs > 0 else 1.0
    if not boundary:
        c *= rng.uniform(0.2, 1.0)
    return lam * min(1.0, c) if boundary is None else lam * c


def random_jm_general(rng, boundary=False):
    lam = np.array([random_ball(rng) for _ in range(3)])
    lhs = ft_point(lambda_points(lam)).total_distance
    lam = lam * ((4.0 / lhs) * (1.0 if boundary else rng.uniform(0.2, 1.0)))
    return Triple.from_array(lam)


def random_jm_orthogonal(rng, boundary=False):
    frame = random_rotation(rng)
    lengths = rng.uniform(size=3)
    lengths /= np.linalg.norm(lengths)
    if not boundary:
        lengths *= rng.uniform(0.2, 1.0)
    return Triple.from_array(frame * lengths[:, None])


def random_jm_coplanar(rng, boundary=False):
    u, w, _ = random_rotation(rng)
    ang = rng.uniform(0, 2 * np.pi, 3)
    rad = rng.uniform(size=3)
    lam = rad[:, None] * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * w)
    lhs = float(coplanar_jm_sum(*lam))
    lam = lam * ((4.0 / lhs) * (1.0 if boundary else rng.uniform(0.2, 1.0)))
    return Triple.from_array(lam)


def random_jm_one_orthogonal(rng, boundary=False):
    u, w, n = random_rotation(rng)
    f = n * rng.uniform(-1, 1)
    d, e = (r * (np.cos(a) * u + np.sin(a) * w) for r, a in zip(rng.uniform(size=2), rng.uniform(0, 2 * np.pi, 2)))
    s = np.linalg.norm(d + e) + np.linalg.norm(d - e)
    c = 2.0 / np.sqrt(s * s + 4 * (f @ f))
    if not boundary:
        c *= rng.uniform(0.2, 1.0)
    return Triple(c * d, c * e, c * f)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES
