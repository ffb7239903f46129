import math

import numpy as np
import pytest

from jmbounds.fermat import ft_point, ft_point_oracle
from jmbounds.joint import (
    SIGNS2,
    SIGNS3,
    PovmConstructionError,
    Triple,
    build_povm_general,
    build_povm_orthogonal,
    build_povm_pair,
    coplanar_jm_sum,
    is_rank_one,
    jm_check_coplanar,
    jm_check_one_orthogonal,
    jm_check_orthogonal,
    jm_check_pair,
    jm_check_triple,
    lambda_points,
    one_orthogonal_ft,
    triangle_contains,
)
from jmbounds.qubit import Effect

from conftest import (
    random_jm_coplanar,
    random_jm_general,
    random_jm_one_orthogonal,
    random_jm_orthogonal,
    random_rotation,
    random_unit,
)

X, Y, Z = np.eye(3)
S3 = 1 / math.sqrt(3)


def check_povm(povm, lams, tol=1e-12):
    total = povm.total()
    assert abs(total.s - 1) <= tol and np.max(np.abs(total.v)) <= tol
    for e in povm.outcomes.values():
        assert e.eigenvalues[0] >= -tol
    for i, lam in enumerate(lams):
        for sign in (1, -1):
            m = povm.marginal(i, sign)
            assert abs(m.s - 0.5) <= tol
            assert np.allclose(m.v, sign * np.asarray(lam) / 2, atol=tol, rtol=0)


# ---------------------------------------------------------------- triple test


def test_orthogonal_boundary_triple():
    rep = jm_check_triple(Triple(S3 * Z, S3 * Y, S3 * X))
    assert rep.satisfied and abs(rep.margin) <= 1e-9
    pts = lambda_points(Triple(S3 * Z, S3 * Y, S3 * X))
    oracle = ft_point_oracle(pts)
    assert np.linalg.norm(pts - oracle, axis=1).sum() == pytest.approx(4.0, abs=1e-6)


def test_colinear_sharp_triple_is_compatible():
    rep = jm_check_triple(Triple(Z, Z, Z))
    assert rep.satisfied and rep.reliable


def test_pauli_axes_are_incompatible():
    rep = jm_check_triple(Triple(X, Y, Z))
    assert rep.lhs > 4 and not rep.satisfied


def test_triple_rejects_long_vectors():
    with pytest.raises(ValueError):
        Triple(1.01 * Z, Y, X)


# ---------------------------------------------------------------- reductions


def test_orthogonal_examples():
    assert jm_check_orthogonal(Triple(S3 * Z, S3 * Y, S3 * X))
    assert jm_check_orthogonal(Triple(Z, 0 * Y, 0 * X))
    assert not jm_check_orthogonal(Triple(0.6 * Z, 0.6 * Y, 0.6 * X))
    with pytest.raises(ValueError):
        jm_check_orthogonal(Triple(0.5 * Z, 0.5 * (Z + Y) / math.sqrt(2), 0.5 * X))


def test_pair_examples():
    assert jm_check_pair(Z, Z)
    assert not jm_check_pair(Z, Y)
    assert jm_check_pair(Z / math.sqrt(2), Y / math.sqrt(2))


def test_coplanar_examples():
    d, e = 0.6 * Z, 0.6 * Y
    assert np.linalg.norm(d + e) + np.linalg.norm(d - e) <= 2
    assert jm_check_coplanar(Triple(d, e, (d + e) / 2))
    assert jm_check_coplanar(Triple(Z, Z, Z))
    assert jm_check_coplanar(Triple(Z, Z, Z), rule="triangle")
    t = Triple([0, 0, 0.9], [0, 0.9, 0], [0, 0.9 * 0.7, 0.9 * 0.7])
    assert not jm_check_coplanar(t)
    assert not jm_check_coplanar(t, rule="triangle")
    with pytest.raises(ValueError):
        jm_check_coplanar(Triple(0.5 * X, 0.5 * Y, 0.5 * Z))
    with pytest.raises(ValueError):
        jm_check_coplanar(t, rule="other")


def test_coplanar_printed_example_is_rejected_by_both_rules():
    # |(0,0.9,0.9)| > 1 so it is not a valid observable; both rules reject its normalisation
    f = np.array([0, 0.9, 0.9]) / np.linalg.norm([0, 0.9, 0.9])
    t = Triple([0, 0, 0.9], [0, 0.9, 0], f)
    assert not jm_check_triple(t).satisfied
    assert not jm_check_coplanar(t) and not jm_check_coplanar(t, rule="triangle")


def test_triangle_rule_misclassifies_a_compatible_triple():
    t = Triple([0, -0.8, -0.4], [0, -0.8, -0.4], [0, -0.6, -0.4])
    assert jm_check_triple(t).lhs == pytest.approx(3.6249, abs=1e-4)
    check_povm(build_povm_general(t), t)
    assert jm_check_coplanar(t)
    assert not jm_check_coplanar(t, rule="triangle")


def test_triangle_contains_examples():
    d, e = np.array([0, 0.2, 0.9]), np.array([0, 0.8, -0.1])
    assert triangle_contains(d, e, (d + e) / 3)
    assert not triangle_contains(d, e, 2 * (d + e))
    assert triangle_contains(d, e, d)
    assert not triangle_contains(d, e, d).degenerate


def test_triangle_contains_degenerate():
    res = triangle_contains(0.5 * Z, 0.9 * Z, 0.7 * Z)
    assert res.inside and res.degenerate
    assert not triangle_contains(0.5 * Z, 0.9 * Z, 0.7 * Y)
    assert not triangle_contains(0.5 * Z, -0.9 * Z, 0.95 * Z)
    assert triangle_contains(0 * Z, 0 * Z, 0 * Z).degenerate


def test_one_orthogonal_examples():
    d, e = 0.6 * Z, 0.3 * Y
    assert jm_check_one_orthogonal(Triple(d, e, 0 * X)) == jm_check_pair(d, e)
    for x, y in ((0.5, 0.8), (0.6, 0.8), (0.7, 0.8), (0.3, 0.95)):
        assert jm_check_one_orthogonal(Triple(x * Z, x * Z, y * X)) == (2 * x <= 2 * math.sqrt(1 - y * y) + 1e-9)
    assert not jm_check_one_orthogonal(Triple(0.5 * Z, 0.5 * Y, 0.9 * X))
    with pytest.raises(ValueError):
        jm_check_one_orthogonal(Triple(0.5 * Z, 0.5 * Y, 0.5 * Z))


@pytest.mark.parametrize(
    "gen, reduced",
    [
        (random_jm_orthogonal, jm_check_orthogonal),
        (random_jm_coplanar, jm_check_coplanar),
        (random_jm_one_orthogonal, jm_check_one_orthogonal),
    ],
)
def test_reductions_agree_with_general_test(rng, gen, reduced):
    for _ in range(1000):
        t = gen(rng)
        # stretch some triples out of the compatible region while staying in the unit ball
        c = rng.uniform(0.5, 1.5)
        lam = t.as_array() * c
        if np.max(np.linalg.norm(lam, axis=1)) > 1:
            continue
        t = Triple.from_array(lam)
        rep = jm_check_triple(t)
        if abs(rep.margin) > 1e-7:
            assert reduced(t) == rep.satisfied


def test_coplanar_sum_matches_ft(rng):
    for _ in range(300):
        t = random_jm_coplanar(rng)
        lam = t.as_array() * rng.uniform(0.3, 1.4)
        lam /= max(1.0, np.max(np.linalg.norm(lam, axis=1)))
        assert coplanar_jm_sum(*lam) == pytest.approx(ft_point(lambda_points(lam)).total_distance, abs=1e-9)


def test_coplanar_sum_vectorised(rng):
    lam = np.array([random_jm_coplanar(rng).as_array() for _ in range(20)])
    batch = coplanar_jm_sum(lam[:, 0], lam[:, 1], lam[:, 2])
    single = [coplanar_jm_sum(*x) for x in lam]
    assert np.allclose(batch, single, atol=1e-14)


def test_one_orthogonal_ft_matches_weiszfeld(rng):
    for _ in range(100):
        t = random_jm_one_orthogonal(rng, boundary=bool(rng.integers(2)))
        assert np.linalg.norm(one_orthogonal_ft(t) - ft_point(lambda_points(t)).point) <= 1e-8


def test_one_orthogonal_ft_closed_form():
    d, e, f = np.array([0, 0.3, 0.4]), np.array([0, 0.5, -0.1]), np.array([0.6, 0, 0])
    s, m = np.linalg.norm(d + e), np.linalg.norm(d - e)
    got = one_orthogonal_ft(Triple(d, e, f))
    assert np.allclose(got, (m - s) / (s + m) * f, atol=1e-15)
    assert np.allclose(got, ft_point(lambda_points(Triple(d, e, f))).point, atol=1e-9)


# ---------------------------------------------------------------- POVMs


def test_general_povm_colinear_sharp():
    povm = build_povm_general(Triple(Z, Z, Z))
    check_povm(povm, (Z, Z, Z))
    assert povm.outcomes[(1, 1, 1)].close_to(Effect(0.5, Z / 2))
    assert povm.outcomes[(-1, -1, -1)].close_to(Effect(0.5, -Z / 2))
    for mu in SIGNS3[1:-1]:
        assert povm.outcomes[mu].close_to(Effect.zero())


def test_general_povm_random_triples(rng):
    for gen in (random_jm_general, random_jm_coplanar, random_jm_orthogonal):
        for _ in range(100):
            t = gen(rng, boundary=bool(rng.integers(2)))
            check_povm(build_povm_general(t), t)


def test_general_povm_with_analytic_ft(rng):
    for _ in range(50):
        t = random_jm_one_orthogonal(rng)
        a = build_povm_general(t, one_orthogonal_ft(t))
        b = build_povm_general(t)
        for mu in SIGNS3:
            assert a.outcomes[mu].close_to(b.outcomes[mu], atol=1e-9)


def test_general_povm_is_rotation_covariant(rng):
    t = random_jm_general(rng)
    rot = random_rotation(rng)
    a = build_povm_general(t)
    b = build_povm_general(Triple.from_array(t.as_array() @ rot.T))
    for mu in SIGNS3:
        assert a.outcomes[mu].s == pytest.approx(b.outcomes[mu].s, abs=1e-10)
        assert np.allclose(rot @ a.outcomes[mu].v, b.outcomes[mu].v, atol=1e-10)


def test_general_povm_rejects_incompatible():
    with pytest.raises(PovmConstructionError):
        build_povm_general(Triple(X, Y, Z))


def test_orthogonal_povm_examples():
    povm = build_povm_orthogonal(Triple(S3 * Z, S3 * Y, S3 * X))
    check_povm(povm, (S3 * Z, S3 * Y, S3 * X))
    for e in povm.outcomes.values():
        assert e.s == pytest.approx(1 / 8) and np.linalg.norm(e.v) == pytest.approx(1 / 8)
        assert is_rank_one(e)
    zero = build_povm_orthogonal(Triple(0 * Z, 0 * Y, 0 * X))
    assert all(e.close_to(Effect(1 / 8, [0, 0, 0])) for e in zero.outcomes.values())
    with pytest.raises(PovmConstructionError):
        build_povm_orthogonal(Triple(0.6 * Z, 0.6 * Y, 0.6 * X))


def test_orthogonal_povm_random(rng):
    for _ in range(200):
        t = random_jm_orthogonal(rng, boundary=bool(rng.integers(2)))
        check_povm(build_povm_orthogonal(t), t)


def test_pair_povm_examples():
    povm = build_povm_pair(Z, Z)
    assert povm.arity == 2
    assert povm.outcomes[(1, 1)].close_to(Effect(0.5, Z / 2))
    assert povm.outcomes[(-1, -1)].close_to(Effect(0.5, -Z / 2))
    assert povm.outcomes[(1, -1)].close_to(Effect.zero()) and povm.outcomes[(-1, 1)].close_to(Effect.zero())
    povm = build_povm_pair(Z / math.sqrt(2), Y / math.sqrt(2))
    check_povm(povm, (Z / math.sqrt(2), Y / math.sqrt(2)))
    assert all(is_rank_one(povm.outcomes[mu]) for mu in SIGNS2)
    with pytest.raises(PovmConstructionError):
        build_povm_pair(Z, Y)


def test_pair_povm_random(rng):
    for _ in range(200):
        l1, l2 = random_unit(rng) * rng.uniform(), random_unit(rng) * rng.uniform()
        c = min(1.0, 2 / (np.linalg.norm(l1 + l2) + np.linalg.norm(l1 - l2)))
        check_povm(build_povm_pair(c * l1, c * l2), (c * l1, c * l2))


def test_is_rank_one_examples():
    assert is_rank_one(Effect(1 / 8, [0, 0, 1 / 8]))
    assert not is_rank_one(Effect(0.5, [0, 0, 0]))
    assert is_rank_one(Effect(0.25, [0.25, 0, 0]))
    assert not is_rank_one(Effect.zero())
