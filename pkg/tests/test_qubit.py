import math

import numpy as np
import pytest

from jmbounds.qubit import (
    PAULI,
    TOL,
    Effect,
    Observable,
    PulseParams,
    QubitState,
    effect_of_observable,
    prob,
    rotate_bloch,
)

from conftest import random_ball, random_unit


def carrier_unitary(theta, phi):
    gen = PAULI[0] * math.cos(phi) - PAULI[1] * math.sin(phi)
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * gen


def bloch_of(rho):
    return np.real([np.trace(rho @ p) for p in PAULI])


def test_effect_of_observable_examples():
    z = Observable([0, 0, 1])
    plus, minus = effect_of_observable(z, 1), effect_of_observable(z, -1)
    assert plus.s == 0.5 and np.allclose(plus.v, [0, 0, 0.5])
    assert minus.s == 0.5 and np.allclose(minus.v, [0, 0, -0.5])
    e = effect_of_observable(Observable([0, 0, 1 / math.sqrt(3)]), 1)
    assert e.v[2] == pytest.approx(0.2887, abs=1e-4)
    lo, hi = e.eigenvalues
    assert (hi, lo) == pytest.approx((0.7887, 0.2113), abs=1e-4)


def test_effect_of_observable_rejects_bad_input():
    with pytest.raises(ValueError):
        Observable([0, 0, 1 + 1e-6])
    with pytest.raises(ValueError):
        Observable([0, np.nan, 0])
    with pytest.raises(ValueError):
        effect_of_observable(Observable([0, 0, 1]), 0)


def test_observable_clamps_tiny_overshoot():
    o = Observable([0, 0, 1 + 1e-12])
    assert np.linalg.norm(o.bloch) <= 1
    assert o.sharp


def test_sharpness_and_purity_flags():
    assert Observable([0, 0.6, 0.8]).sharp
    assert not Observable([0, 0.6, 0.7]).sharp
    assert QubitState([1, 0, 0]).pure
    assert not QubitState([0.5, 0, 0]).pure


def test_prob_examples():
    a_plus = effect_of_observable(Observable([0, 0, 1]), 1)
    assert prob(a_plus, QubitState([0, 0, 1])) == 1.0
    assert prob(a_plus, QubitState([0, 0, -1])) == 0.0
    for phi in np.linspace(0.1, 1.5, 5):
        varphi = math.pi / 4
        m = np.array([math.cos(phi), math.cos(varphi) * math.sin(phi), math.sin(varphi) * math.sin(phi)])
        e = Effect(1 / 8, m / 8)
        assert prob(e, QubitState([0, 0, 1])) == pytest.approx((1 + math.sin(varphi) * math.sin(phi)) / 8, abs=1e-15)


def test_prob_matches_trace_formula(rng):
    for _ in range(200):
        v = random_ball(rng) * 0.5
        e = Effect(rng.uniform(np.linalg.norm(v), 1), v)
        r = random_ball(rng)
        rho = (np.eye(2) + np.einsum("i,ijk->jk", r, PAULI)) / 2
        assert prob(e, QubitState(r)) == pytest.approx(np.trace(e.matrix() @ rho).real, abs=1e-14)


def test_sharp_outcomes_sum_to_one(rng):
    for _ in range(500):
        o, r = Observable(random_unit(rng)), QubitState(random_unit(rng))
        total = prob(effect_of_observable(o, 1), r) + prob(effect_of_observable(o, -1), r)
        assert abs(total - 1) <= 1e-12


def test_prob_range(rng):
    for _ in range(500):
        v = random_ball(rng)
        e = Effect(np.linalg.norm(v) + rng.uniform(0, 0.5), v)
        p = prob(e, QubitState(random_ball(rng)))
        assert -1e-12 <= p <= 2 * e.s + 1e-12


def test_effect_invariants():
    e = Effect(0.3, [0.1, 0.2, -0.2])
    assert e.trace == pytest.approx(0.6)
    assert e.eigenvalues == pytest.approx((0.0, 0.6))
    assert e.positive and e.rank_one
    assert not Effect(0.5, [0, 0, 0]).rank_one
    assert not Effect(0.1, [0, 0, 0.2]).positive
    assert (Effect(0.25, [0, 0, 0.25]) + Effect(0.25, [0, 0, -0.25])).close_to(Effect(0.5, [0, 0, 0]))
    assert Effect.identity().close_to(Effect(1.0, [0, 0, 0]))


def test_positivity_matches_matrix_eigenvalues(rng):
    for _ in range(1000):
        v = random_ball(rng)
        e = Effect(rng.uniform(-0.2, 1.2), v)
        lo = np.linalg.eigvalsh(e.matrix())[0]
        assert e.positive == (lo >= -TOL.positivity)
        assert e.eigenvalues == pytest.approx(tuple(np.linalg.eigvalsh(e.matrix())), abs=1e-12)


def test_rotate_bloch_examples():
    assert np.allclose(rotate_bloch([0, 0, -1], PulseParams(math.pi, 0)), [0, 0, 1], atol=1e-15)
    for phi in (0.0, 0.7, 2.5):
        assert np.allclose(rotate_bloch([1, 0, 0], PulseParams(2 * math.pi, phi)), [1, 0, 0], atol=1e-12)
    for theta, phi in ((0.4, 0.3), (1.3, -2.0), (2.9, 4.0)):
        r = rotate_bloch([0, 0, -1], PulseParams(theta, phi))
        expected = [math.sin(theta) * math.sin(phi), math.sin(theta) * math.cos(phi), -math.cos(theta)]
        assert np.allclose(r, expected, atol=1e-12)


def test_rotate_bloch_matches_unitary(rng):
    for _ in range(200):
        r = random_ball(rng)
        theta, phi = rng.uniform(0, 2 * math.pi, 2)
        u = carrier_unitary(theta, phi)
        rho = (np.eye(2) + np.einsum("i,ijk->jk", r, PAULI)) / 2
        assert np.allclose(rotate_bloch(r, PulseParams(theta, phi)), bloch_of(u @ rho @ u.conj().T), atol=1e-12)


def test_rotate_bloch_norm_and_composition(rng):
    for _ in range(200):
        r = random_unit(rng)
        t1, t2, phi = rng.uniform(0, 2 * math.pi, 3)
        once = rotate_bloch(r, PulseParams(t1 + t2, phi))
        twice = rotate_bloch(rotate_bloch(r, PulseParams(t2, phi)), PulseParams(t1, phi))
        assert abs(np.linalg.norm(once) - 1) <= 1e-12
        assert np.allclose(once, twice, atol=1e-10)


def test_pulse_duration():
    p = PulseParams(math.pi, 0.0)
    assert p.duration == pytest.approx(1 / (2 * 47.0e3))
