"""Canonical target triads and parameter sweeps over them.

Angle conventions follow the parametrisations used throughout the package:

``orthogonal``      ``a, b, c = z, y, x``; sweeps vary the approximation family
                    ``d = k sin(varphi) sin(phi) a``, ``e = k cos(varphi) sin(phi) b``,
                    ``f = k cos(phi) c`` (``varphi`` azimuth, ``phi`` polar angle).
``coplanar``        ``a = (0,0,1)``, ``b = (0, sin varphi, cos varphi)``,
                    ``c = (0, -sin phi, cos phi)``.
``one_orthogonal``  ``a = (0, -sin phi, cos phi)``, ``b = (0, sin varphi, cos varphi)``,
                    ``c = (1, 0, 0)``.
``general``         ``a = (cos phi, sin varphi2 sin phi, cos varphi2 sin phi)``,
                    ``b = (0, sin varphi, cos varphi)``, ``c = (1, 0, 0)``;
                    ``varphi2`` is passed as ``extra``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .bounds import (
    BoundResult,
    ObjectiveKind,
    SolverConfig,
    constraint_residuals,
    orthogonal_family_objective,
    solve_lower_bound,
)
from .joint import Triple
from .uncertainty import UncertaintyBreakdown, delta_total

__all__ = [
    "FAMILIES",
    "FAMILY_VARIANT",
    "triad",
    "approx_family_orthogonal",
    "SweepSpec",
    "SweepRow",
    "default_spec",
    "run_sweep",
    "diagonal_values",
]

FAMILIES = ("orthogonal", "coplanar", "one_orthogonal", "general")
FAMILY_VARIANT = {f: f for f in FAMILIES}
_SLACK = 1e-12


def _check_family(family: str):
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; valid: {', '.join(FAMILIES)}")


def _check_angle(x, hi, name):
    x = float(x)
    if not (-_SLACK <= x <= hi + _SLACK):
        raise ValueError(f"{name} = {x!r} outside [0, {hi:.6g}]")
    return x


def triad(family: str, phi: float = 0.0, varphi: float = 0.0, extra: Optional[float] = None) -> tuple:
    """Unit target vectors ``(a, b, c)`` of a family; ``phi`` in [0, pi], ``varphi`` in [0, 2 pi]."""
    _check_family(family)
    phi = _check_angle(phi, math.pi, "phi")
    varphi = _check_angle(varphi, 2 * math.pi, "varphi")
    x, y, z = np.eye(3)
    if family == "orthogonal":
        return z, y, x
    sp, cp, sv, cv = math.sin(phi), math.cos(phi), math.sin(varphi), math.cos(varphi)
    if family == "coplanar":
        return z, np.array([0.0, sv, cv]), np.array([0.0, -sp, cp])
    if family == "one_orthogonal":
        return np.array([0.0, -sp, cp]), np.array([0.0, sv, cv]), x
    v2 = _check_angle(0.0 if extra is None else extra, 2 * math.pi, "varphi2")
    a = np.array([cp, math.sin(v2) * sp, math.cos(v2) * sp])
    return a, np.array([0.0, sv, cv]), x


def approx_family_orthogonal(k: float, varphi: float, phi: float) -> Triple:
    """``d = k sin(varphi) sin(phi) a``, ``e = k cos(varphi) sin(phi) b``, ``f = k cos(phi) c``
    for the orthogonal triad; ``sum |l_i|^2 = k^2``."""
    if not 0 <= k <= 1:
        raise ValueError(f"k = {k!r} outside [0, 1]")
    a, b, c = triad("orthogonal")
    sp = math.sin(phi)
    return Triple(k * math.sin(varphi) * sp * a, k * math.cos(varphi) * sp * b, k * math.cos(phi) * c)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of ``(phi, varphi)`` points for one family.

    With ``diagonal_only`` the points are ``(p, p)`` for ``p`` in ``phi_grid``
    and ``varphi_grid`` is ignored; otherwise the full product in row-major
    order (``phi`` outer).
    """

    family: str
    phi_grid: tuple
    varphi_grid: tuple = ()
    diagonal_only: bool = False
    extra: Optional[float] = None

    def __post_init__(self):
        _check_family(self.family)
        object.__setattr__(self, "phi_grid", tuple(float(x) for x in self.phi_grid))
        object.__setattr__(self, "varphi_grid", tuple(float(x) for x in self.varphi_grid))
        if not self.phi_grid:
            raise ValueError("phi_grid is empty")
        if not self.diagonal_only and not self.varphi_grid:
            raise ValueError("varphi_grid is empty")
        for p in self.phi_grid:
            _check_angle(p, math.pi, "phi")
        for v in self.varphi_grid:
            _check_angle(v, 2 * math.pi, "varphi")

    def points(self) -> list[tuple[float, float]]:
        if self.diagonal_only:
            return [(p, p) for p in self.phi_grid]
        return [(p, v) for p in self.phi_grid for v in self.varphi_grid]


def default_spec(family: str, n: int = 41) -> SweepSpec:
    """The standard sweeps: the ``varphi = pi/4`` line of the orthogonal family
    over ``phi`` in [0, pi/2], the coplanar diagonal over [0, pi/2] and the
    one-orthogonal diagonal over [0, pi]."""
    _check_family(family)
    if family == "orthogonal":
        return SweepSpec(family, np.linspace(0, math.pi / 2, n), (math.pi / 4,))
    if family == "coplanar":
        return SweepSpec(family, np.linspace(0, math.pi / 2, n), diagonal_only=True)
    if family == "one_orthogonal":
        return SweepSpec(family, np.linspace(0, math.pi, n), diagonal_only=True)
    return SweepSpec(family, np.linspace(0, math.pi, n), diagonal_only=True, extra=0.0)


@dataclass(frozen=True, eq=False)
class SweepRow:
    index: int
    phi: float
    varphi: float
    value: float
    terms: UncertaintyBreakdown
    argmin: Triple
    residual_g1: float
    residual_g2: float
    feasible: bool
    evals: int
    triad: tuple
    bound: Optional[BoundResult] = None


def _point_cfg(cfg: SolverConfig, index: int) -> SolverConfig:
    seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(index,)).generate_state(1)[0])
    return replace(cfg, seed=seed)


def _row(args) -> SweepRow:
    spec, cfg, index, phi, varphi = args
    tri = triad(spec.family, phi, varphi, spec.extra)
    if spec.family == "orthogonal":
        lam = approx_family_orthogonal(1.0, varphi, phi)
        g1, g2 = constraint_residuals(lam, ObjectiveKind("orthogonal"))
        terms = delta_total(*tri, *lam)
        value = float(orthogonal_family_objective(1.0, varphi, phi))
        return SweepRow(index, phi, varphi, value, terms, lam, g1, g2, g1 <= 1e-6 and g2 <= 1e-6, 0, tri)
    res = solve_lower_bound(tri, ObjectiveKind(FAMILY_VARIANT[spec.family]), _point_cfg(cfg, index))
    terms = delta_total(*tri, *res.argmin)
    return SweepRow(
        index, phi, varphi, res.value, terms, res.argmin, res.residual_g1, res.residual_g2,
        res.feasible, res.evals, tri, res,
    )


def run_sweep(spec: SweepSpec, cfg: SolverConfig = SolverConfig(), threads: int = 1) -> list[SweepRow]:
    """Lower bound and per-term breakdown at every grid point, in grid order.

    The orthogonal family evaluates the closed-form approximation family at
    ``k = 1``; the other families run :func:`solve_lower_bound` with the
    matching reduced objective (general: the full objective). Each point gets
    its own seed derived from ``(cfg.seed, index)``, so the rows do not depend
    on ``threads``. Infeasible points stay in the table with ``feasible=False``.
    """
    jobs = [(spec, cfg, i, p, v) for i, (p, v) in enumerate(spec.points())]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_row, jobs))
    return [_row(j) for j in jobs]


def diagonal_values(rows: Sequence[SweepRow]) -> tuple[np.ndarray, np.ndarray]:
    """``(phi, value)`` arrays of a sweep, convenient for locating extrema."""
    return np.array([r.phi for r in rows]), np.array([r.value for r in rows])
