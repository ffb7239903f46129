"""Bloch-vector and effect algebra for a single qubit.

Everything here is affine in ``(I, sigma)``: an operator ``s*I + v.sigma`` is
stored as the real pair ``(s, v)`` and never as a complex matrix, except for
the :meth:`Effect.matrix` debug export.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TOL",
    "Tolerances",
    "RABI_FREQUENCY",
    "vec3",
    "Observable",
    "QubitState",
    "Effect",
    "PulseParams",
    "effect_of_observable",
    "prob",
    "rotate_bloch",
    "PAULI",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by all modules."""

    sharp: float = 1e-9
    positivity: float = 1e-12
    norm_slack: float = 1e-12
    norm_reject: float = 1e-9
    rank_one: float = 1e-9
    jm: float = 1e-9
    coplanar: float = 1e-5
    ortho: float = 1e-4
    identity: float = 1e-12


TOL = Tolerances()

# Carrier Rabi frequency (rad/s); only used to turn pulse areas into durations.
RABI_FREQUENCY = 2 * np.pi * 47.0e3

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def vec3(x, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite float array of shape (3,)."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr}")
    return arr


def _bounded_bloch(x, name: str) -> np.ndarray:
    # upstream arithmetic may overshoot the unit ball by a hair; clamp that
    arr = vec3(x, name)
    norm = np.linalg.norm(arr)
    if norm > 1 + TOL.norm_reject:
        raise ValueError(f"{name} has length {norm:.12g} > 1")
    if norm > 1:
        arr = arr / norm
    return arr


@dataclass(frozen=True, eq=False)
class Observable:
    """Binary qubit observable ``o.sigma`` with ``|o| <= 1``."""

    bloch: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bloch", _bounded_bloch(self.bloch, "observable"))

    @property
    def sharp(self) -> bool:
        return abs(np.linalg.norm(self.bloch) - 1) <= TOL.sharp


@dataclass(frozen=True, eq=False)
class QubitState:
    """Qubit state ``(I + r.sigma)/2``."""

    bloch: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bloch", _bounded_bloch(self.bloch, "state"))

    @property
    def pure(self) -> bool:
        return abs(np.linalg.norm(self.bloch) - 1) <= TOL.sharp


@dataclass(frozen=True, eq=False)
class Effect:
    """The operator ``s*I + v.sigma``."""

    s: float
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "v", vec3(self.v, "effect vector"))
        if not np.isfinite(self.s):
            raise ValueError("effect scalar is not finite")

    @property
    def trace(self) -> float:
        return 2 * self.s

    @property
    def eigenvalues(self) -> tuple[float, float]:
        r = float(np.linalg.norm(self.v))
        return self.s - r, self.s + r

    @property
    def positive(self) -> bool:
        return self.s >= np.linalg.norm(self.v) - TOL.positivity

    @property
    def rank_one(self) -> bool:
        return self.s > 0 and abs(self.s - np.linalg.norm(self.v)) <= TOL.rank_one

    def __add__(self, other: Effect) -> Effect:
        return Effect(self.s + other.s, self.v + other.v)

    def scaled(self, c: float) -> Effect:
        return Effect(c * self.s, c * self.v)

    def close_to(self, other: Effect, atol: float = TOL.identity) -> bool:
        return abs(self.s - other.s) <= atol and bool(np.all(np.abs(self.v - other.v) <= atol))

    def matrix(self) -> np.ndarray:
        """2x2 complex matrix form, for debugging and cross-checks only."""
        return self.s * np.eye(2) + np.einsum("i,ijk->jk", self.v, PAULI)

    @classmethod
    def identity(cls) -> Effect:
        return cls(1.0, np.zeros(3))

    @classmethod
    def zero(cls) -> Effect:
        return cls(0.0, np.zeros(3))


@dataclass(frozen=True)
class PulseParams:
    """Carrier pulse with area ``theta`` (= Rabi frequency x duration) and laser phase ``phi``."""

    theta: float
    phi: float

    @property
    def duration(self) -> float:
        """Pulse length in seconds at the nominal Rabi frequency."""
        return self.theta / RABI_FREQUENCY

    def axis(self) -> np.ndarray:
        return np.array([np.cos(self.phi), -np.sin(self.phi), 0.0])


def effect_of_observable(o: Observable, sign: int) -> Effect:
    """The positive operator ``(I + sign*o.sigma)/2``."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return Effect(0.5, sign * o.bloch / 2)


def prob(e: Effect, rho: QubitState) -> float:
    """Born probability ``Tr[E rho] = s + v.r``."""
    return float(e.s + e.v @ rho.bloch)


def rotate_bloch(r, p: PulseParams) -> np.ndarray:
    """Apply the carrier unitary to a Bloch vector.

    ``cos(theta/2) I - i sin(theta/2) (sx cos(phi) - sy sin(phi))`` rotates the
    Bloch sphere by ``theta`` about ``n = (cos phi, -sin phi, 0)``.
    """
    r = vec3(r, "bloch vector")
    n = p.axis()
    c, s = np.cos(p.theta), np.sin(p.theta)
    return r * c + np.cross(n, r) * s + n * (n @ r) * (1 - c)
