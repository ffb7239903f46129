"""Joint measurability of two or three unsharp qubit observables.

A triple of observables with Bloch vectors ``l1, l2, l3`` is jointly
measurable iff the four points

    L0 = l1 + l2 + l3,   Lk = 2 lk - L0   (k = 1, 2, 3)

have a Fermat-Toricelli point whose summed distance to them is at most 4.
Reduced closed forms exist when the vectors are mutually orthogonal, coplanar,
or when one of them is orthogonal to the other two.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fermat import FtResult, ft_point
from .qubit import TOL, Effect, _bounded_bloch

__all__ = [
    "Triple",
    "JmReport",
    "JointPovm",
    "PovmConstructionError",
    "Containment",
    "SIGNS3",
    "SIGNS2",
    "sign_label",
    "lambda_points",
    "jm_check_triple",
    "jm_check_orthogonal",
    "jm_check_pair",
    "jm_check_coplanar",
    "coplanar_jm_sum",
    "triangle_contains",
    "jm_check_one_orthogonal",
    "one_orthogonal_ft",
    "build_povm_general",
    "build_povm_orthogonal",
    "build_povm_pair",
    "is_rank_one",
]

SIGNS3 = tuple(itertools.product((1, -1), repeat=3))
SIGNS2 = tuple(itertools.product((1, -1), repeat=2))


def sign_label(mu) -> str:
    return "".join("+" if m > 0 else "-" for m in mu)


@dataclass(frozen=True, eq=False)
class Triple:
    """Bloch vectors of three candidate compatible observables."""

    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            object.__setattr__(self, name, _bounded_bloch(getattr(self, name), name))

    @classmethod
    def from_array(cls, arr) -> Triple:
        arr = np.asarray(arr, dtype=float).reshape(3, 3)
        return cls(arr[0], arr[1], arr[2])

    def as_array(self) -> np.ndarray:
        return np.stack([self.l1, self.l2, self.l3])

    def __iter__(self):
        return iter((self.l1, self.l2, self.l3))

    def __getitem__(self, i: int) -> np.ndarray:
        return (self.l1, self.l2, self.l3)[i]


@dataclass(frozen=True, eq=False)
class JmReport:
    lhs: float
    margin: float
    satisfied: bool
    ft: FtResult

    @property
    def reliable(self) -> bool:
        return self.ft.converged


class PovmConstructionError(ValueError):
    """A joint POVM failed positivity, completeness or marginal validation."""

    def __init__(self, message: str, outcome=None):
        super().__init__(message)
        self.outcome = outcome


def lambda_points(t) -> np.ndarray:
    """The four points ``L0, L1, L2, L3`` as rows of a (4, 3) array.

    ``t`` is a :class:`Triple` or any array reshapeable to (3, 3).
    """
    lam = t.as_array() if isinstance(t, Triple) else np.asarray(t, dtype=float).reshape(3, 3)
    l0 = lam.sum(axis=0)
    return np.vstack([l0, 2 * lam - l0])


def jm_check_triple(t: Triple, tol: float = TOL.jm) -> JmReport:
    """General triplewise test via the Fermat-Toricelli point of the lambda points."""
    ft = ft_point(lambda_points(t))
    lhs = ft.total_distance
    margin = 4.0 - lhs
    return JmReport(lhs, margin, margin >= -tol, ft)


def _check_orthogonal_input(t: Triple):
    for (i, x), (j, y) in itertools.combinations(enumerate(t, 1), 2):
        if abs(x @ y) > TOL.sharp:
            raise ValueError(f"l{i} and l{j} are not orthogonal (dot = {x @ y:.3g})")


def jm_check_orthogonal(t: Triple, tol: float = TOL.jm) -> bool:
    """Mutually orthogonal triples are compatible iff the squared lengths sum to at most 1."""
    _check_orthogonal_input(t)
    return float(sum(x @ x for x in t)) <= 1 + tol


def jm_check_pair(l1, l2, tol: float = TOL.jm) -> bool:
    """Two unsharp qubit observables are compatible iff ``|l1+l2| + |l1-l2| <= 2``."""
    l1 = _bounded_bloch(l1, "l1")
    l2 = _bounded_bloch(l2, "l2")
    return float(np.linalg.norm(l1 + l2) + np.linalg.norm(l1 - l2)) <= 2 + tol


@dataclass(frozen=True)
class Containment:
    inside: bool
    degenerate: bool = False

    def __bool__(self):
        return self.inside


def _area(p, q) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(p, q)))


def triangle_contains(d, e, f, rel_tol: float = 1e-9) -> Containment:
    """Whether ``f`` lies in the triangle with vertices ``0, d, e``.

    Uses the area identity ``S(0de) = S(0df) + S(def) + S(e0f)``. When ``0, d,
    e`` are collinear the triangle collapses to a segment and membership of
    that segment is returned with ``degenerate=True``.
    """
    d, e, f = (np.asarray(x, dtype=float) for x in (d, e, f))
    if np.linalg.norm(np.cross(d, e)) < 1e-12:
        ends = [v for v in (d, e) if np.linalg.norm(v) > 1e-12]
        if not ends:
            return Containment(bool(np.linalg.norm(f) <= 1e-12), True)
        u = max(ends, key=np.linalg.norm)
        u = u / np.linalg.norm(u)
        t = f @ u
        off_line = np.linalg.norm(f - t * u)
        ts = [0.0, d @ u, e @ u]
        on = off_line <= 1e-12 and min(ts) - 1e-12 <= t <= max(ts) + 1e-12
        return Containment(bool(on), True)
    whole = _area(d, e)
    parts = _area(d, f) + _area(e - d, f - d) + _area(e, f)
    return Containment(bool(abs(whole - parts) <= rel_tol * whole))


def _norm(x):
    return np.sqrt((x * x).sum(axis=-1))


def _in_diamond(z, x, y):
    """Whether ``z`` lies in conv(+-x, +-y); False where x, y are (nearly) parallel."""
    xx = (x * x).sum(axis=-1)
    yy = (y * y).sum(axis=-1)
    xy = (x * y).sum(axis=-1)
    xz = (x * z).sum(axis=-1)
    yz = (y * z).sum(axis=-1)
    det = xx * yy - xy * xy
    ok = det > 1e-14 * np.maximum(xx * yy, 1e-300)
    safe = np.where(ok, det, 1.0)
    alpha = (yy * xz - xy * yz) / safe
    beta = (xx * yz - xy * xz) / safe
    return ok & (np.abs(alpha) + np.abs(beta) <= 1.0)


def _dot(x, y):
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def _in_diamond_scalar(z, x, y) -> bool:
    xx, yy, xy = _dot(x, x), _dot(y, y), _dot(x, y)
    det = xx * yy - xy * xy
    if not det > 1e-14 * max(xx * yy, 1e-300):
        return False
    xz, yz = _dot(x, z), _dot(y, z)
    return abs(yy * xz - xy * yz) + abs(xx * yz - xy * xz) <= det


def _coplanar_jm_sum_scalar(d, e, f) -> float:
    # same formula as the array path, unrolled for one triple (hot in the optimiser)
    def n(x, y, sgn):
        a, b, c = x[0] + sgn * y[0], x[1] + sgn * y[1], x[2] + sgn * y[2]
        return math.sqrt(a * a + b * b + c * c)

    n_dpe, n_dme = n(d, e, 1), n(d, e, -1)
    n_dpf, n_dmf = n(d, f, 1), n(d, f, -1)
    n_epf, n_emf = n(e, f, 1), n(e, f, -1)
    p_de, p_df, p_ef = n_dpe + n_dme, n_dpf + n_dmf, n_epf + n_emf
    inner = min(
        n_epf + n_dpf + n_dpe,
        n_epf + n_dme + n_dmf,
        n_dpf + n_dme + n_emf,
        n_dpe + n_dmf + n_emf,
    )
    if _in_diamond_scalar(f, d, e):
        inner = min(inner, p_de)
    if _in_diamond_scalar(e, d, f):
        inner = min(inner, p_df)
    if _in_diamond_scalar(d, e, f):
        inner = min(inner, p_ef)
    return 2.0 * max(p_de, p_df, p_ef, inner)


def coplanar_jm_sum(d, e, f):
    """Closed-form Fermat-Toricelli sum of the lambda points for coplanar triples.

    Four coplanar points either form a convex quadrilateral, whose median is
    the crossing of the diagonals, or one of them lies inside the triangle of
    the others and is itself the median. The diagonals ``L0L3`` and ``L1L2``
    cross exactly when ``f`` lies in conv(+-d, +-e), and similarly for the other
    two pairings. Each pairing sum is also a lower bound for any point set, so
    the result is clipped from below by the largest of them; this keeps the
    formula a valid necessary condition on slightly non-planar input.

    Accepts arrays of shape (..., 3) and returns shape (...).
    """
    if np.ndim(d) == 1 and np.ndim(e) == 1 and np.ndim(f) == 1:
        return _coplanar_jm_sum_scalar(*(tuple(map(float, x)) for x in (d, e, f)))
    d, e, f = (np.asarray(x, dtype=float) for x in (d, e, f))
    n_dpe, n_dme = _norm(d + e), _norm(d - e)
    n_dpf, n_dmf = _norm(d + f), _norm(d - f)
    n_epf, n_emf = _norm(e + f), _norm(e - f)
    p_de = n_dpe + n_dme
    p_df = n_dpf + n_dmf
    p_ef = n_epf + n_emf
    inner = np.minimum.reduce(
        [
            n_epf + n_dpf + n_dpe,
            n_epf + n_dme + n_dmf,
            n_dpf + n_dme + n_emf,
            n_dpe + n_dmf + n_emf,
            np.where(_in_diamond(f, d, e), p_de, np.inf),
            np.where(_in_diamond(e, d, f), p_df, np.inf),
            np.where(_in_diamond(d, e, f), p_ef, np.inf),
        ]
    )
    return 2.0 * np.maximum.reduce([p_de, p_df, p_ef, inner])


def _triangle_rule_sum(d, e, f) -> float:
    if triangle_contains(d, e, f):
        return 2.0 * float(np.linalg.norm(d + e) + np.linalg.norm(d - e))
    return 2.0 * float(np.linalg.norm(d + e) + np.linalg.norm(d - f) + np.linalg.norm(e - f))


def jm_check_coplanar(t: Triple, tol: float = TOL.jm, rule: str = "exact") -> bool:
    """Compatibility test for coplanar triples.

    ``rule="exact"`` uses :func:`coplanar_jm_sum` and agrees with
    :func:`jm_check_triple`. ``rule="triangle"`` applies the two-case rule keyed
    on whether ``f`` lies in the triangle ``0de`` (pair test if inside, else
    ``|d+e| + |d-f| + |e-f| <= 2``); it is kept for comparison and misclassifies
    some triples.
    """
    d, e, f = t
    if abs(np.cross(d, e) @ f) > TOL.coplanar:
        raise ValueError(f"triple is not coplanar (|d x e . f| = {abs(np.cross(d, e) @ f):.3g})")
    if rule == "exact":
        lhs = float(coplanar_jm_sum(d, e, f))
    elif rule == "triangle":
        lhs = _triangle_rule_sum(d, e, f)
    else:
        raise ValueError(f"unknown rule {rule!r}; expected 'exact' or 'triangle'")
    return lhs <= 4 + 2 * tol


def jm_check_one_orthogonal(t: Triple, tol: float = TOL.jm) -> bool:
    """Test for ``f`` orthogonal to ``d`` and ``e``: ``|d+e| + |d-e| <= 2 sqrt(1 - |f|^2)``."""
    d, e, f = t
    if abs(d @ f) + abs(e @ f) > TOL.ortho:
        raise ValueError("l3 is not orthogonal to l1 and l2")
    rhs = 2 * np.sqrt(max(0.0, 1 - f @ f))
    return float(np.linalg.norm(d + e) + np.linalg.norm(d - e)) <= rhs + tol


def one_orthogonal_ft(t: Triple) -> np.ndarray:
    """Closed-form Fermat-Toricelli point of the lambda points when ``f`` is orthogonal to ``d, e``.

    The four points are ``+-(d+e) + f`` and ``+-(d-e) - f``; by symmetry the
    median sits on the ``f`` axis at ``(|d-e| - |d+e|) / (|d+e| + |d-e|) * f``.
    """
    d, e, f = t
    s, w = np.linalg.norm(d + e), np.linalg.norm(d - e)
    if s + w == 0:
        return np.zeros(3)
    return (w - s) / (s + w) * f


@dataclass(frozen=True, eq=False)
class JointPovm:
    """Joint POVM whose marginals are the observables ``lambdas``.

    Instances are validated on construction: completeness, positivity and every
    marginal identity must hold, otherwise :class:`PovmConstructionError`.
    """

    outcomes: dict
    construction: str
    lambdas: tuple
    ft: Optional[np.ndarray] = None
    tol: float = field(default=TOL.identity, repr=False)
    pos_tol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        self.validate()

    @property
    def arity(self) -> int:
        return len(self.lambdas)

    def total(self) -> Effect:
        acc = Effect.zero()
        for eff in self.outcomes.values():
            acc = acc + eff
        return acc

    def marginal(self, index: int, sign: int) -> Effect:
        """Sum of the outcomes whose ``index``-th label (0-based) equals ``sign``."""
        acc = Effect.zero()
        for mu, eff in self.outcomes.items():
            if mu[index] == sign:
                acc = acc + eff
        return acc

    def validate(self, pos_tol: Optional[float] = None):
        tol = self.tol
        pos_tol = self.pos_tol if pos_tol is None else pos_tol
        if not self.total().close_to(Effect.identity(), tol):
            raise PovmConstructionError("outcomes do not sum to the identity")
        for mu, eff in self.outcomes.items():
            lo, _ = eff.eigenvalues
            if lo < -pos_tol:
                raise PovmConstructionError(
                    f"outcome {sign_label(mu)} is not positive (min eigenvalue {lo:.3g})", outcome=mu
                )
        for i, lam in enumerate(self.lambdas):
            for sign in (1, -1):
                target = Effect(0.5, sign * np.asarray(lam) / 2)
                if not self.marginal(i, sign).close_to(target, tol):
                    raise PovmConstructionError(f"marginal {i + 1}{'+' if sign > 0 else '-'} is wrong")


def build_povm_general(t: Triple, ft_vector=None) -> JointPovm:
    """Eight-outcome joint POVM for any compatible triple.

    ``M_mu = (1/8)[(1 + sum_{i>j} mu_i mu_j Z_ij) I + (sum_i mu_i l_i - mu1 mu2 mu3 L_FT).sigma]``
    with ``Z_ij = 1 - (r_i + r_j)/2`` and ``r_k = |L_k - L_FT|``. This puts
    ``r_k`` on the identity part of the outcomes pointing along ``L_k - L_FT``
    for ``k = 1, 2, 3`` and the remaining slack ``4 - r1 - r2 - r3`` on the
    ``(+,+,+)`` pair, so positivity is equivalent to the triplewise condition.

    ``ft_vector`` overrides the numerically computed Fermat-Toricelli point.
    """
    pts = lambda_points(t)
    if ft_vector is None:
        report = jm_check_triple(t)
        ft = report.ft.point
        lhs = report.lhs
    else:
        ft = np.asarray(ft_vector, dtype=float)
        lhs = float(np.linalg.norm(pts - ft, axis=1).sum())
    if lhs > 4 + 1e-9:
        raise PovmConstructionError(f"triple is not jointly measurable (sum = {lhs:.12g} > 4)")
    r = np.linalg.norm(pts - ft, axis=1)
    z = {(i, j): 1 - (r[i] + r[j]) / 2 for (i, j) in ((2, 1), (3, 1), (3, 2))}
    lam = t.as_array()
    outcomes = {}
    for mu in SIGNS3:
        m = (None,) + mu  # 1-based access
        scalar = 1 + sum(m[i] * m[j] * zij for (i, j), zij in z.items())
        vec = np.asarray(mu, dtype=float) @ lam - mu[0] * mu[1] * mu[2] * ft
        outcomes[mu] = Effect(scalar / 8, vec / 8)
    return JointPovm(outcomes, "general", (t.l1, t.l2, t.l3), ft=ft, tol=TOL.identity)


def build_povm_orthogonal(t: Triple) -> JointPovm:
    """Compact joint POVM ``(1/8)(I + sum_i mu_i l_i.sigma)`` for orthogonal triples."""
    if not jm_check_orthogonal(t):
        raise PovmConstructionError("orthogonal triple has sum of squared lengths > 1")
    lam = t.as_array()
    outcomes = {mu: Effect(1 / 8, (np.asarray(mu, dtype=float) @ lam) / 8) for mu in SIGNS3}
    return JointPovm(outcomes, "orthogonal_compact", (t.l1, t.l2, t.l3))


def build_povm_pair(l1, l2) -> JointPovm:
    """Four-outcome joint POVM ``(1/4)(G I + sum_i mu_i l_i.sigma)``, ``G = 1 + mu1 mu2 l1.l2``."""
    if not jm_check_pair(l1, l2):
        raise PovmConstructionError("pair is not jointly measurable")
    l1 = _bounded_bloch(l1, "l1")
    l2 = _bounded_bloch(l2, "l2")
    outcomes = {}
    for mu in SIGNS2:
        g = 1 + mu[0] * mu[1] * (l1 @ l2)
        outcomes[mu] = Effect(g / 4, (mu[0] * l1 + mu[1] * l2) / 4)
    return JointPovm(outcomes, "pairwise", (l1, l2))


def is_rank_one(e: Effect) -> bool:
    """Whether the effect is a positive multiple of a pure-state projector."""
    return e.rank_one
