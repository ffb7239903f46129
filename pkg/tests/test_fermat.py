import math

import numpy as np
import pytest

from jmbounds.fermat import ft_point, ft_point_oracle, total_distance

from conftest import random_unit

TETRA = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)
COLLINEAR = np.array([[0, 0, 0], [0, 0, 1], [0, 0, 2], [0, 0, 3]], dtype=float)


def test_identical_points():
    p = np.array([0.3, -0.2, 0.5])
    res = ft_point(np.tile(p, (4, 1)))
    assert np.allclose(res.point, p) and res.total_distance == 0
    assert np.allclose(ft_point_oracle(np.tile(p, (4, 1))), p, atol=1e-9)


def test_tetrahedron_origin():
    res = ft_point(TETRA)
    assert np.linalg.norm(res.point) <= 1e-8
    assert res.total_distance == pytest.approx(4.0, abs=1e-12)
    assert np.linalg.norm(ft_point_oracle(TETRA)) <= 1e-6


def test_collinear_total_distance():
    assert ft_point(COLLINEAR).total_distance == pytest.approx(4.0, abs=1e-10)
    assert total_distance(COLLINEAR, ft_point_oracle(COLLINEAR)) == pytest.approx(4.0, abs=1e-6)


def test_total_distance_examples():
    assert total_distance([[0, 0, 1], [0, 0, -1], [0, 0, 1]], [0, 0, 0]) == 3
    assert total_distance([[0, 0, 1], [0, 0, -1]], [0, 0, 0]) == 2
    assert total_distance(TETRA, [0, 0, 0]) == pytest.approx(4.0)
    assert total_distance(TETRA, TETRA[0]) == pytest.approx(3 * math.sqrt(8 / 3))


def test_result_distance_is_recomputed(rng):
    for _ in range(50):
        pts = rng.normal(size=(4, 3))
        res = ft_point(pts)
        assert res.converged
        assert res.total_distance == pytest.approx(total_distance(pts, res.point), abs=1e-12)


def test_vertex_optimum_detected():
    # unit pulls +x, -x, +y on the origin have resultant of length exactly 1
    pts = np.array([[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0]], dtype=float)
    res = ft_point(pts)
    assert res.at_vertex == 0 and np.allclose(res.point, 0)
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    res = ft_point(pts)
    assert res.at_vertex is None
    assert np.allclose(ft_point_oracle(pts), res.point, atol=1e-6)


def test_repeated_anchor_counts_multiplicity():
    pts = np.array([[0, 0, 0], [0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    res = ft_point(pts)
    assert np.allclose(res.point, 0) and res.at_vertex in (0, 1)


def test_first_order_optimality(rng):
    for _ in range(100):
        pts = rng.normal(size=(4, 3))
        res = ft_point(pts)
        if res.at_vertex is None:
            diff = pts - res.point
            grad = (diff / np.linalg.norm(diff, axis=1)[:, None]).sum(axis=0)
            assert np.linalg.norm(grad) <= 1e-8


def test_convexity_under_perturbation(rng):
    tol = 1e-12
    for _ in range(20):
        pts = rng.normal(size=(4, 3))
        res = ft_point(pts, tol=tol)
        for _ in range(100):
            v = res.point + 10 * tol * random_unit(rng)
            assert res.total_distance <= total_distance(pts, v) + 1e-13


def test_translation_and_scale_equivariance(rng):
    for _ in range(100):
        pts = rng.normal(size=(4, 3))
        u = rng.normal(size=3)
        c = rng.uniform(0.1, 10)
        base = ft_point(pts).point
        assert np.allclose(ft_point(pts + u).point, base + u, atol=1e-9)
        assert np.allclose(ft_point(c * pts).point, c * base, atol=1e-9)


def test_oracle_agreement(rng):
    for _ in range(100):
        pts = rng.uniform(-1, 1, size=(4, 3))
        res = ft_point(pts)
        assert abs(res.total_distance - total_distance(pts, ft_point_oracle(pts))) <= 1e-4


def test_nonconvergence_is_reported(rng):
    pts = rng.normal(size=(5, 3))
    res = ft_point(pts, max_iter=1, accelerate=False)
    if res.at_vertex is None:
        assert not res.converged
        assert np.all(np.isfinite(res.point))


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((4, 2)), np.array([[0, 0, np.inf]] * 3)])
def test_invalid_points_rejected(bad):
    with pytest.raises(ValueError):
        ft_point(bad)
