"""Wasserstein-type error functionals between binary qubit observables.

For binary observables ``X = x.sigma`` and ``Y = y.sigma`` measured on
``rho = (I + r.sigma)/2`` the distance used throughout is

    2 * sum_mu |p(X_mu) - p(Y_mu)| = 2 |(x - y).r|

and its worst case over states is ``2|x - y|``. The name follows common usage
in this field even though the formula is an L1 distance of the outcome
statistics scaled by two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubit import TOL, Observable, QubitState, effect_of_observable, prob

__all__ = [
    "UncertaintyBreakdown",
    "WorstCase",
    "wasserstein_state",
    "worst_case_delta",
    "delta_total",
    "wasserstein_empirical",
    "wasserstein_empirical_full",
]


@dataclass(frozen=True)
class UncertaintyBreakdown:
    """Worst-case terms ``Delta(A,D)``, ``Delta(B,E)``, ``Delta(C,F)`` and their sum."""

    d_ad: float
    d_be: float
    d_cf: float
    total: float

    def terms(self) -> tuple[float, float, float]:
        return self.d_ad, self.d_be, self.d_cf


@dataclass(frozen=True, eq=False)
class WorstCase:
    """Maximal state-dependent distance and a state attaining it.

    ``degenerate`` is set when ``x == y``: every state attains the value 0 and
    ``state`` is then an arbitrary placeholder (+z) that must not be used to
    synthesize pulses.
    """

    value: float
    state: QubitState
    degenerate: bool

    def __iter__(self):
        # allows ``value, state = worst_case_delta(x, y)``
        yield self.value
        yield self.state


def _bloch(x) -> np.ndarray:
    return x.bloch if isinstance(x, (Observable, QubitState)) else Observable(x).bloch


def wasserstein_state(rho: QubitState, x: Observable, y: Observable) -> float:
    """State-dependent distance ``2 sum_mu |p(X_mu) - p(Y_mu)|``.

    Computed from the outcome probabilities; the closed form ``2|(x-y).r|`` is
    evaluated alongside and must agree to 1e-12.
    """
    if not isinstance(rho, QubitState):
        rho = QubitState(rho)
    xo = x if isinstance(x, Observable) else Observable(x)
    yo = y if isinstance(y, Observable) else Observable(y)
    total = 0.0
    for mu in (1, -1):
        total += abs(prob(effect_of_observable(xo, mu), rho) - prob(effect_of_observable(yo, mu), rho))
    value = 2 * total
    closed = 2 * abs((xo.bloch - yo.bloch) @ rho.bloch)
    if abs(value - closed) > 1e-12:
        raise ArithmeticError(f"probability form {value!r} and closed form {closed!r} disagree")
    return value


def worst_case_delta(x: Observable, y: Observable) -> WorstCase:
    """``max_rho`` of :func:`wasserstein_state`: ``2|x - y|`` at ``r = (x-y)/|x-y|``."""
    diff = _bloch(x) - _bloch(y)
    norm = float(np.linalg.norm(diff))
    if norm <= TOL.identity:
        return WorstCase(0.0, QubitState(np.array([0.0, 0.0, 1.0])), True)
    return WorstCase(2 * norm, QubitState(diff / norm), False)


def delta_total(a, b, c, d, e, f) -> UncertaintyBreakdown:
    """Total worst-case deviation ``2(|a-d| + |b-e| + |c-f|)``.

    The targets ``a, b, c`` must be sharp. Joint measurability of ``d, e, f``
    is not checked here.
    """
    targets = [x if isinstance(x, Observable) else Observable(x) for x in (a, b, c)]
    for name, o in zip("abc", targets):
        if not o.sharp:
            raise ValueError(f"target {name} is not sharp (|{name}| = {np.linalg.norm(o.bloch):.12g})")
    approx = [x if isinstance(x, Observable) else Observable(x) for x in (d, e, f)]
    terms = [2 * float(np.linalg.norm(t.bloch - s.bloch)) for t, s in zip(targets, approx)]
    return UncertaintyBreakdown(terms[0], terms[1], terms[2], terms[0] + terms[1] + terms[2])


def _check_prob(p, name):
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} = {p!r} is not a probability")
    return p


def _plus(p, name):
    # accept either p(+) or the pair (p(+), p(-))
    if np.ndim(p) == 0:
        return _check_prob(p, name)
    plus, minus = (_check_prob(q, name) for q in p)
    if abs(plus + minus - 1) > 1e-9:
        raise ValueError(f"{name} does not sum to one: {plus!r} + {minus!r}")
    return plus


def wasserstein_empirical(p_x, p_y) -> float:
    """Distance from measured (+)-outcome frequencies, ``4|p_x+ - p_y+|``.

    Uses ``|p(X+) - p(Y+)| = |p(X-) - p(Y-)|`` so only the (+) outcomes need to
    be measured. Each argument may be ``p(+)`` or the pair ``(p(+), p(-))``.
    """
    return 4 * abs(_plus(p_x, "p_x") - _plus(p_y, "p_y"))


def wasserstein_empirical_full(p_x, p_y) -> float:
    """Distance from both outcome frequencies, ``2 sum_mu |p_x,mu - p_y,mu|``."""
    px = [_check_prob(q, "p_x") for q in p_x]
    py = [_check_prob(q, "p_y") for q in p_y]
    return 2 * (abs(px[0] - py[0]) + abs(px[1] - py[1]))
