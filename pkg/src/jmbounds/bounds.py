"""Lower bounds of the total worst-case deviation over compatible approximations.

The bound for sharp targets ``a, b, c`` is

    min 2(|a-d| + |b-e| + |c-f|)   over jointly measurable (d, e, f),

solved here by penalising the compatibility constraint and running restarted
Nelder-Mead simplex descent on the nine components of ``(d, e, f)``. Four
objectives are available:

``general``
    Fermat-Toricelli sum of the lambda points, one-sided squared penalty on
    ``lhs - 4``.
``orthogonal``
    ``g1 = (|d|^2 + |e|^2 + |f|^2 - 1)^2`` and ``g2`` the squared pairwise dot
    products.
``coplanar``
    ``g1 = (S - 2)^2`` with ``S`` half the exact coplanar Fermat-Toricelli sum,
    ``g2 = (d x e . f)^2``.
``one_orthogonal``
    ``g1 = (|d+e| + |d-e| - 2 sqrt(1 - |f|^2))^2``, ``g2 = (d.f)^2 + (e.f)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .fermat import FtResult, ft_point
from .joint import Triple, _coplanar_jm_sum_scalar, _triangle_rule_sum, coplanar_jm_sum, lambda_points
from .qubit import TOL

__all__ = [
    "VARIANTS",
    "ObjectiveKind",
    "ObjectiveTerms",
    "SolverConfig",
    "BoundResult",
    "AnalyticBound",
    "PenaltyStudy",
    "objective_terms",
    "objective_eval",
    "project_feasible",
    "constraint_residuals",
    "solve_lower_bound",
    "analytic_orthogonal_bound",
    "orthogonal_family_objective",
    "brute_force_bound",
    "penalty_scaling_study",
]

VARIANTS = ("general", "orthogonal", "coplanar", "one_orthogonal")
FEASIBILITY_TOL = 1e-6
ORTHOGONAL_BOUND = 2 * math.sqrt(3) * (math.sqrt(3) - 1)


@dataclass(frozen=True)
class ObjectiveKind:
    """Which objective to minimise and how to penalise it.

    ``hinge`` swaps the squared compatibility penalty for ``Np * max(0, excess)``.
    ``coplanar_rule`` selects the compatibility sum of the coplanar objective:
    ``"exact"`` (default) or the two-case ``"triangle"`` rule.
    """

    variant: str = "general"
    hinge: bool = False
    coplanar_rule: str = "exact"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; valid: {', '.join(VARIANTS)}")
        if self.coplanar_rule not in ("exact", "triangle"):
            raise ValueError(f"unknown coplanar rule {self.coplanar_rule!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`solve_lower_bound`.

    ``penalty_schedule`` is the continuation sequence; an empty schedule means a
    single stage at ``penalty_Np``. ``restarts`` counts every start, the
    default initial iterate included.
    """

    penalty_Np: float = 1e5
    penalty_schedule: tuple = (1e2, 1e3, 1e4, 1e5)
    restarts: int = 4
    simplex_tol: float = 1e-10
    max_evals: int = 200_000
    seed: int = 0
    initial_step: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "penalty_schedule", tuple(float(x) for x in self.penalty_schedule))
        if not self.penalty_Np > 0:
            raise ValueError("penalty_Np must be positive")
        sched = self.penalty_schedule
        if any(x <= 0 for x in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("penalty_schedule must be positive and strictly increasing")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")

    @property
    def stages(self) -> tuple:
        return self.penalty_schedule or (float(self.penalty_Np),)


@dataclass(frozen=True, eq=False)
class ObjectiveTerms:
    distance: float
    excess: float  # signed compatibility excess, <= 0 when compatible
    g1: float
    g2: float
    penalty: float
    value: float
    ft: Optional[FtResult] = None

    @property
    def reliable(self) -> bool:
        return self.ft is None or self.ft.converged


@dataclass(frozen=True, eq=False)
class BoundResult:
    """Outcome of a lower-bound solve.

    ``value`` is the objective recomputed at the certified ``argmin`` with the
    final penalty factor; ``penalized_value`` is the raw optimiser minimum
    before projection onto the feasible set.
    """

    value: float
    distance: float
    penalized_value: float
    argmin: Triple
    residual_g1: float
    residual_g2: float
    evals: int
    ft_diag: Optional[FtResult]
    feasible: bool
    restart: int = 0
    variant: str = "general"
    Np: float = 0.0


@dataclass(frozen=True)
class AnalyticBound:
    value: float
    k: float
    varphi: float
    phi: float


def _triad_array(triad) -> np.ndarray:
    arr = np.asarray([np.asarray(x, dtype=float) for x in triad], dtype=float)
    if arr.shape != (3, 3) or not np.all(np.isfinite(arr)):
        raise ValueError("triad must be three finite 3-vectors")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1) > TOL.sharp):
        raise ValueError(f"triad vectors must be sharp (unit length), got lengths {norms}")
    return arr


def _lam_array(t) -> np.ndarray:
    if isinstance(t, Triple):
        return t.as_array()
    return np.asarray(t, dtype=float).reshape(3, 3)


def orthogonal_family_objective(k, varphi, phi):
    """``2[3 - k(sin varphi sin phi + cos varphi sin phi + cos phi)]`` (vectorised)."""
    return 2 * (3 - k * (np.sin(varphi) * np.sin(phi) + np.cos(varphi) * np.sin(phi) + np.cos(phi)))


def _dot(x, y) -> float:
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def _norm(x) -> float:
    return math.sqrt(_dot(x, x))


def _triple_product(d, e, f) -> float:
    return (
        (d[1] * e[2] - d[2] * e[1]) * f[0]
        + (d[2] * e[0] - d[0] * e[2]) * f[1]
        + (d[0] * e[1] - d[1] * e[0]) * f[2]
    )


def _compatibility(lam: np.ndarray, kind: ObjectiveKind):
    """Signed compatibility excess, equality penalty ``g2`` and FT diagnostics.

    The reduced variants work on plain floats: they sit in the optimiser's
    inner loop, where numpy call overhead dominates for 3-vectors.
    """
    if kind.variant == "general":
        ft = ft_point(lambda_points(lam))
        return ft.total_distance - 4.0, 0.0, ft
    d, e, f = lam.tolist()
    if kind.variant == "orthogonal":
        de, df, ef = _dot(d, e), _dot(d, f), _dot(e, f)
        return _dot(d, d) + _dot(e, e) + _dot(f, f) - 1.0, de * de + df * df + ef * ef, None
    if kind.variant == "coplanar":
        if kind.coplanar_rule == "exact":
            half = 0.5 * _coplanar_jm_sum_scalar(d, e, f)
        else:
            half = 0.5 * _triangle_rule_sum(*lam)
        tp = _triple_product(d, e, f)
        return half - 2.0, tp * tp, None
    # one_orthogonal
    dpe = [d[i] + e[i] for i in range(3)]
    dme = [d[i] - e[i] for i in range(3)]
    ff = _dot(f, f)
    # |f| > 1 leaves no room at all; keep the excess growing with |f|
    excess = _norm(dpe) + _norm(dme) - 2.0 * math.sqrt(max(0.0, 1.0 - ff)) + 2.0 * max(0.0, ff - 1.0)
    df, ef = _dot(d, f), _dot(e, f)
    return excess, df * df + ef * ef, None


def objective_terms(t, triad, kind: ObjectiveKind = ObjectiveKind(), Np: float = 1e4) -> ObjectiveTerms:
    """Distance term, constraint terms and penalised objective at ``t``.

    The general variant penalises only a positive excess ``lhs - 4`` (the zero
    triple is compatible and carries no penalty). The reduced variants use the
    two-sided squares ``g1``, which pin the solution to the constraint boundary
    where the bound is attained. With ``kind.hinge`` the compatibility term is
    ``Np * max(0, excess)`` for every variant.
    """
    lam = _lam_array(t)
    tri = np.asarray(triad, dtype=float).reshape(3, 3)
    diff = (tri - lam).tolist()
    distance = 2.0 * (_norm(diff[0]) + _norm(diff[1]) + _norm(diff[2]))
    excess, g2, ft = _compatibility(lam, kind)
    if kind.hinge:
        g1 = max(0.0, excess)
    elif kind.variant == "general":
        g1 = max(0.0, excess) ** 2
    else:
        g1 = excess * excess
    penalty = Np * (g1 + g2)
    return ObjectiveTerms(distance, excess, g1, g2, penalty, distance + penalty, ft)


def objective_eval(t, triad, kind: ObjectiveKind = ObjectiveKind(), Np: float = 1e4) -> float:
    """Penalised objective ``2(|a-d| + |b-e| + |c-f|) + Np * (g1 + g2)``."""
    return objective_terms(t, triad, kind, Np).value


def constraint_residuals(t, kind: ObjectiveKind) -> tuple[float, float]:
    """``(inequality violation, equality residual)`` of the variant's constraints.

    The equality residual is 0 for the general variant, the largest absolute
    pairwise dot product for the orthogonal one, ``|d x e . f|`` for the
    coplanar one and ``|d.f| + |e.f|`` for the one-orthogonal one.
    """
    lam = _lam_array(t)
    d, e, f = lam
    excess, _, _ = _compatibility(lam, kind)
    if kind.variant == "general":
        eq = 0.0
    elif kind.variant == "orthogonal":
        eq = float(max(abs(d @ e), abs(d @ f), abs(e @ f)))
    elif kind.variant == "coplanar":
        eq = float(abs(np.cross(d, e) @ f))
    else:
        eq = float(abs(d @ f) + abs(e @ f))
    return max(0.0, excess), eq


def _scale_to_fit(lam: np.ndarray, lhs_of) -> np.ndarray:
    # lhs_of is positively homogeneous of degree one
    lhs = lhs_of(lam)
    if lhs > 4.0:
        lam = lam * (4.0 / lhs)
        # guard against the last ulp
        while lhs_of(lam) > 4.0:
            lam = lam * (1 - 1e-15)
    return lam


def project_feasible(t, kind: ObjectiveKind) -> Triple:
    """Map a near-feasible triple onto the variant's feasible set.

    Equality constraints are restored first (orthogonalisation, projection on
    the best-fit plane, removal of the ``f`` components of ``d`` and ``e``);
    the triple is then scaled by the largest factor ``c <= 1`` that satisfies
    the compatibility inequality.
    """
    lam = _lam_array(t).copy()
    v = kind.variant
    if v == "general":
        lam = _scale_to_fit(lam, lambda x: ft_point(lambda_points(x)).total_distance)
    elif v == "orthogonal":
        norms = np.linalg.norm(lam, axis=1)
        u, _, vt = np.linalg.svd(lam.T)
        q = u @ vt  # nearest matrix with orthonormal columns
        lam = (q * np.einsum("ij,ji->i", q.T, lam.T)).T
        lam = np.where(norms[:, None] > 0, lam, 0.0)
        ss = float((lam * lam).sum())
        if ss > 1:
            lam = lam / math.sqrt(ss)
    elif v == "coplanar":
        _, _, vt = np.linalg.svd(lam)
        normal = vt[-1]
        lam = lam - np.outer(lam @ normal, normal)
        if kind.coplanar_rule == "exact":
            lam = _scale_to_fit(lam, lambda x: float(coplanar_jm_sum(*x)))
        else:
            lam = _scale_to_fit(lam, lambda x: _triangle_rule_sum(*x))
    else:
        d, e, f = lam
        nf = np.linalg.norm(f)
        if nf > 0:
            fh = f / nf
            d = d - (d @ fh) * fh
            e = e - (e @ fh) * fh
        s = np.linalg.norm(d + e) + np.linalg.norm(d - e)
        c = min(1.0, 2.0 / math.sqrt(s * s + 4 * nf * nf)) if s or nf else 1.0
        lam = c * np.array([d, e, f])
        while True:
            d, e, f = lam
            if np.linalg.norm(d + e) + np.linalg.norm(d - e) <= 2 * math.sqrt(max(0.0, 1 - f @ f)):
                break
            lam = lam * (1 - 1e-15)
    return Triple.from_array(lam)


def _initial_points(tri: np.ndarray, variant: str, cfg: SolverConfig) -> list[np.ndarray]:
    a, b, c = tri
    if variant == "one_orthogonal":
        first = np.concatenate([(2 * a + b) / 3, (a + 2 * b) / 2, c / 2])
    else:
        first = np.concatenate([a / 2, b / 2, c / 2])
    starts = [first]
    for i in range(1, cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(i,)))
        g = rng.normal(size=(3, 3))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.uniform(size=(3, 1)) ** (1 / 3)
        starts.append((g * r).ravel())
    return starts


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([x0, x0 + step * np.eye(len(x0))])


def _descend(x0, fun, cfg: SolverConfig, budget: int, step: float):
    """Nelder-Mead restarted from its own optimum until it stops improving."""
    x, best, evals = np.asarray(x0, dtype=float), math.inf, 0
    while evals < budget:
        res = minimize(
            fun,
            x,
            method="Nelder-Mead",
            options={
                "xatol": cfg.simplex_tol,
                "fatol": cfg.simplex_tol,
                "maxfev": budget - evals,
                "adaptive": True,
                "initial_simplex": _simplex(x, step),
            },
        )
        evals += res.nfev
        improved = res.fun < best - 1e-13 * max(1.0, abs(best))
        if res.fun < best:
            x, best = res.x, float(res.fun)
        if not improved:
            break
        step = max(10 * cfg.simplex_tol, min(step, 1e-2))
    return x, best, evals


def _solve_from(tri, kind, cfg, x0, restart: int) -> BoundResult:
    x = x0
    evals = 0
    raw = math.inf
    stages = cfg.stages
    per_stage = max(1, cfg.max_evals // len(stages))
    step = cfg.initial_step
    for Np in stages:
        fun = lambda z, Np=Np: objective_eval(z, tri, kind, Np)  # noqa: E731
        x, raw, n = _descend(x, fun, cfg, per_stage, step)
        evals += n
        step = min(step, 1e-2)
    final_Np = stages[-1]
    proj = project_feasible(x, kind)
    terms = objective_terms(proj, tri, kind, final_Np)
    g1, g2 = constraint_residuals(proj, kind)
    feasible = g1 <= FEASIBILITY_TOL and g2 <= FEASIBILITY_TOL and terms.reliable
    return BoundResult(
        value=terms.value,
        distance=terms.distance,
        penalized_value=raw,
        argmin=proj,
        residual_g1=g1,
        residual_g2=g2,
        evals=evals,
        ft_diag=terms.ft,
        feasible=feasible,
        restart=restart,
        variant=kind.variant,
        Np=final_Np,
    )


def _pick(results: Sequence[BoundResult]) -> BoundResult:
    pool = [r for r in results if r.feasible] or list(results)
    best = pool[0]
    for r in pool[1:]:
        if r.value < best.value - 1e-9:
            best = r
    return best


def solve_lower_bound(triad, kind: ObjectiveKind = ObjectiveKind(), cfg: SolverConfig = SolverConfig()) -> BoundResult:
    """Penalty-method lower bound for the sharp ``triad``.

    Start 0 is the default iterate (``a/2, b/2, c/2``; for the one-orthogonal
    objective ``(2a+b)/3, (a+2b)/2, c/2``); further starts are uniform in the
    unit ball, drawn from a stream keyed by ``(cfg.seed, restart)``. Each start
    runs the penalty continuation, warm-starting every stage, and is then
    projected onto the feasible set. The lowest feasible value wins, ties
    within 1e-9 going to the earlier start.
    """
    tri = _triad_array(triad)
    starts = _initial_points(tri, kind.variant, cfg)
    return _pick([_solve_from(tri, kind, cfg, x0, i) for i, x0 in enumerate(starts)])


def analytic_orthogonal_bound() -> AnalyticBound:
    """Closed-form bound ``2 sqrt(3)(sqrt(3) - 1) = 6 - 2 sqrt(3)`` for mutually orthogonal targets.

    Attained in the family ``d = k sin(varphi) sin(phi) a``,
    ``e = k cos(varphi) sin(phi) b``, ``f = k cos(phi) c`` at ``k = 1``,
    ``varphi = pi/4``, ``phi = arccos(sqrt(1/3))``.
    """
    return AnalyticBound(ORTHOGONAL_BOUND, 1.0, math.pi / 4, math.acos(math.sqrt(1 / 3)))


def _plane_basis(tri: np.ndarray):
    _, s, vt = np.linalg.svd(tri)
    u, w = vt[0], vt[1]
    return u, w


def _polar_grid(tri, basis, n):
    # each in-plane vector as r * direction(target angle + offset)
    u, w = basis
    radii = np.linspace(0.0, 1.0, n)
    offsets = np.linspace(-np.pi / 2, np.pi / 2, n)
    out = []
    for x in tri:
        ang = math.atan2(x @ w, x @ u)
        th = ang + offsets
        dirs = np.cos(th)[:, None] * u + np.sin(th)[:, None] * w
        out.append((radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3))
    return out


def _grid_min(tri, cands_d, cands_e, cands_f, feasible_fn) -> float:
    a, b, c = tri
    dist_d = 2 * np.linalg.norm(cands_d - a, axis=1)
    dist_e = 2 * np.linalg.norm(cands_e - b, axis=1)
    dist_f = 2 * np.linalg.norm(cands_f - c, axis=1)
    best = math.inf
    for i in np.argsort(dist_d):
        if dist_d[i] >= best:
            break
        d = cands_d[i]
        e = cands_e[:, None, :]
        f = cands_f[None, :, :]
        total = dist_d[i] + dist_e[:, None] + dist_f[None, :]
        if total.min() >= best:
            continue
        ok = feasible_fn(np.broadcast_to(d, np.broadcast_shapes(e.shape, f.shape)), e, f)
        vals = np.where(ok, total, np.inf)
        best = min(best, float(vals.min()))
    return best


def brute_force_bound(triad, kind: ObjectiveKind, grid_density: int = 13) -> float:
    """Grid minimum of the constrained distance; an upper bound on the true bound.

    ``orthogonal`` searches the family ``(k, varphi, phi)`` over
    ``[0,1] x [0,pi/2] x [0,pi/2]``. ``coplanar`` places each of ``d, e, f`` on
    a polar grid in the plane of the triad (radius in ``[0,1]``, angle within
    ``pi/2`` of its target). ``one_orthogonal`` does the same for ``d, e`` in
    the plane of ``a, b`` with ``f`` a multiple of ``c``. Grid points with a
    constraint residual above 1e-3 are discarded.
    """
    tri = _triad_array(triad)
    n = int(grid_density)
    if not 2 <= n <= 21:
        raise ValueError("grid_density must be in [2, 21]")
    slack = 1e-3
    if kind.variant == "orthogonal":
        k, vp, ph = np.meshgrid(
            np.linspace(0, 1, n), np.linspace(0, np.pi / 2, n), np.linspace(0, np.pi / 2, n), indexing="ij"
        )
        return float(orthogonal_family_objective(k, vp, ph).min())
    if kind.variant == "coplanar":
        basis = _plane_basis(tri)
        cd, ce, cf = _polar_grid(tri, basis, n)

        def ok(d, e, f):
            return coplanar_jm_sum(d, e, f) <= 4 + 2 * slack

        return _grid_min(tri, cd, ce, cf, ok)
    if kind.variant == "one_orthogonal":
        a, b, c = tri
        sub = np.array([a, b])
        _, _, vt = np.linalg.svd(sub)
        basis = (vt[0], vt[1])
        cd, ce = _polar_grid(sub, basis, n)
        normal = vt[2]
        cf = np.outer(np.linspace(-1, 1, 2 * n - 1), normal)

        def ok(d, e, f):
            pair = np.linalg.norm(d + e, axis=-1) + np.linalg.norm(d - e, axis=-1)
            ff = (f * f).sum(axis=-1)
            return pair <= 2 * np.sqrt(np.clip(1 - ff, 0, None)) + slack

        return _grid_min(tri, cd, ce, cf, ok)
    raise ValueError("brute force is only available for the orthogonal, coplanar and one_orthogonal objectives")


@dataclass(frozen=True, eq=False)
class PenaltyStudy:
    """Gap ``|penalised minimum - reference|`` per penalty factor, with fits.

    ``slope`` and ``intercept`` come from a free straight-line fit of
    ``log(gap)`` against ``log(Np)``; ``constant`` is ``c`` in ``gap = c/Np``
    (slope fixed at -1, geometric mean of ``gap * Np``).
    """

    Np: np.ndarray
    gap: np.ndarray
    slope: float
    intercept: float
    constant: float
    results: list = field(default_factory=list)
    excluded: list = field(default_factory=list)


def penalty_scaling_study(
    triad=None,
    Np_list=(1e1, 1e2, 1e3, 1e4),
    cfg: Optional[SolverConfig] = None,
    kind: ObjectiveKind = ObjectiveKind("general"),
    reference: float = ORTHOGONAL_BOUND,
) -> PenaltyStudy:
    """Distance of the penalised minimum from the exact bound as ``Np`` grows.

    Each ``Np`` is a single penalty stage started from ``a/2, b/2, c/2`` with
    no random restarts. Runs whose projected argmin is infeasible are excluded
    and listed in ``excluded``.
    """
    tri = _triad_array(triad if triad is not None else np.eye(3)[::-1])
    base = cfg or SolverConfig()
    nps, gaps, kept, excluded = [], [], [], []
    for Np in Np_list:
        run_cfg = replace(base, penalty_Np=float(Np), penalty_schedule=(), restarts=1)
        res = solve_lower_bound(tri, kind, run_cfg)
        if not res.feasible:
            excluded.append((float(Np), res))
            continue
        nps.append(float(Np))
        gaps.append(abs(res.penalized_value - reference))
        kept.append(res)
    nps_a, gaps_a = np.array(nps), np.array(gaps)
    if len(nps) >= 2 and np.all(gaps_a > 0):
        slope, intercept = np.polyfit(np.log(nps_a), np.log(gaps_a), 1)
        constant = float(np.exp(np.mean(np.log(gaps_a * nps_a))))
    else:
        slope = intercept = constant = math.nan
    return PenaltyStudy(nps_a, gaps_a, float(slope), float(intercept), constant, kept, excluded)
