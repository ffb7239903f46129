"""Fermat-Toricelli point (geometric median) of a small set of 3-vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["FtResult", "ft_point", "ft_point_oracle", "total_distance"]


@dataclass(frozen=True, eq=False)
class FtResult:
    point: np.ndarray
    total_distance: float
    iterations: int
    converged: bool
    at_vertex: Optional[int] = None


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def total_distance(points, v) -> float:
    """Sum of Euclidean distances from ``v`` to every point."""
    pts = np.asarray(points, dtype=float)
    return float(np.sqrt(((pts - np.asarray(v, dtype=float)) ** 2).sum(axis=1)).sum())


def _vertex_pull(pts: np.ndarray, j: int, radius: float):
    """Resultant unit pull on anchor ``j`` and the multiplicity of the anchor."""
    diff = pts - pts[j]
    dist = np.sqrt((diff * diff).sum(axis=1))
    here = dist <= radius
    away = ~here
    pull = (diff[away] / dist[away, None]).sum(axis=0)
    return pull, int(here.sum()), dist, away


def _optimal_vertex(pts: np.ndarray, radius: float):
    """Index of an anchor satisfying the vertex optimality test, or None."""
    diff = pts[None, :, :] - pts[:, None, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    here = dist <= radius
    unit = np.where(here[:, :, None], 0.0, diff / np.where(here, 1.0, dist)[:, :, None])
    pull = np.sqrt((unit.sum(axis=1) ** 2).sum(axis=1))
    ok = np.flatnonzero(pull <= here.sum(axis=1))
    if len(ok) == 0:
        return None
    totals = dist.sum(axis=1)
    j = int(ok[np.argmin(totals[ok])])
    return j, float(totals[j])


def _gradient(pts: np.ndarray, v: np.ndarray):
    diff = pts - v
    dist = np.sqrt((diff * diff).sum(axis=1))
    return -(diff / dist[:, None]).sum(axis=0), diff, dist


def ft_point(points, tol: float = 1e-12, max_iter: int = 10_000, accelerate: bool = True) -> FtResult:
    """Geometric median by Weiszfeld iteration with a vertex-optimality escape.

    Every anchor is first tested for optimality: anchor ``j`` (with ``m``
    coincident copies) is the minimiser iff the summed unit vectors towards the
    other points have length ``<= m``. Otherwise the minimiser is off the
    anchors and Weiszfeld steps are taken from the centroid; an iterate that
    lands within ``10*tol`` of an anchor is pushed off it along the pull
    direction. With ``accelerate`` a Newton step replaces the Weiszfeld step
    when it reduces the gradient without raising the total distance beyond
    rounding.

    Iteration stops when successive iterates differ by less than ``tol``; if
    that never happens within ``max_iter`` steps the best iterate is returned
    with ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    pts = _as_points(points)
    radius = 10 * tol

    vertex = _optimal_vertex(pts, radius)
    if vertex is not None:
        j, total = vertex
        return FtResult(pts[j].copy(), total, 0, True, at_vertex=j)

    scale = max(1.0, float(np.abs(pts).max()))
    slack = 8 * np.finfo(float).eps * len(pts) * scale
    v = pts.mean(axis=0)
    f_v = total_distance(pts, v)
    eye = np.eye(3)
    for it in range(1, max_iter + 1):
        diff = pts - v
        dist = np.sqrt((diff * diff).sum(axis=1))
        j = int(dist.argmin())
        if dist[j] <= radius:
            # not optimal here (tested above): step off the anchor
            pull, mult, adist, away = _vertex_pull(pts, j, radius)
            pull_norm = np.sqrt(pull @ pull)
            step = (pull_norm - mult) / (1.0 / adist[away]).sum()
            new = pts[j] + step * pull / pull_norm
        else:
            w = 1.0 / dist
            new = (w @ pts) / w.sum()
            if accelerate:
                u = diff * w[:, None]
                grad = -u.sum(axis=0)
                hess = (w[:, None, None] * (eye - u[:, :, None] * u[:, None, :])).sum(axis=0)
                try:
                    newton = v - np.linalg.solve(hess, grad)
                except np.linalg.LinAlgError:
                    newton = None
                if newton is not None and np.all(np.isfinite(newton)):
                    f_newton = total_distance(pts, newton)
                    if f_newton < total_distance(pts, new) or (
                        f_newton <= f_v + slack
                        and np.linalg.norm(_gradient(pts, newton)[0]) < np.linalg.norm(grad)
                    ):
                        new = newton
        f_new = total_distance(pts, new)
        if f_new > f_v + slack:
            # no further progress is representable
            return FtResult(v, f_v, it, True)
        step_len = float(np.sqrt(((new - v) ** 2).sum()))
        v, f_v = new, f_new
        if step_len < tol:
            return FtResult(v, total_distance(pts, v), it, True)
    return FtResult(v, f_v, max_iter, False)


def ft_point_oracle(points, span: Optional[float] = None, levels: int = 14, density: int = 21) -> np.ndarray:
    """Coarse-to-fine grid search for the geometric median.

    Starts from a cube of half-width ``span`` around the centroid (by default
    large enough to hold every point) and, at each level, recentres on the best
    grid node and shrinks the cube four-fold. The default 21 nodes per axis keep
    the best node within 2.5 cells of the minimiser even in the narrow cones
    around a vertex optimum. Independent of :func:`ft_point`.
    """
    pts = _as_points(points)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    center = pts.mean(axis=0)
    half = span if span is not None else float(np.max(np.linalg.norm(pts - center, axis=1)))
    half = max(half, 1e-12)
    offsets = np.linspace(-1.0, 1.0, density)
    grid = np.stack(np.meshgrid(offsets, offsets, offsets, indexing="ij"), axis=-1).reshape(-1, 3)
    for _ in range(levels):
        cand = center + half * grid
        totals = np.sqrt(((cand[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)).sum(axis=1)
        center = cand[int(totals.argmin())]
        half /= 4.0
    return center
