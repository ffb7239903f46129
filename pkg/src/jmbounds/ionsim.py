"""Single-ion measurement pipeline with binomial shot noise.

A qubit state is prepared from the ground state ``(0,0,-1)`` by one carrier
pulse; a rank-1 effect ``w (I + m.sigma)/2`` is measured by a second pulse that
maps ``m`` onto the detected ``up`` state, followed by projective detection and
rescaling of the ``up`` frequency by the weight ``w = Tr[E]``.

Pulse angles, for a unit direction ``m``::

    theta = arccos(m_z),   phi = pi/2 (1 - sign m_y) + arctan(m_x / m_y)

with ``phi = +-pi/2`` when ``m_y = 0`` (sign of ``m_x``) and ``phi = 0`` when
both vanish. Preparation of ``r`` uses ``theta = arccos(-r_z)`` and the same
phase rule on ``(r_x, r_y)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import SolverConfig
from .joint import (
    SIGNS3,
    JointPovm,
    Triple,
    build_povm_general,
    build_povm_orthogonal,
    is_rank_one,
    one_orthogonal_ft,
    sign_label,
)
from .qubit import Effect, Observable, PulseParams, QubitState, effect_of_observable, prob, rotate_bloch, vec3
from .scenarios import SweepRow, SweepSpec, run_sweep
from .uncertainty import worst_case_delta

__all__ = [
    "PlanEntry",
    "MeasurementPlan",
    "ShotConfig",
    "ShotEstimate",
    "DataRow",
    "DATASET_COLUMNS",
    "pulse_phase",
    "measure_angles",
    "prep_angles",
    "measurement_direction",
    "prepared_state",
    "plan_for_povm",
    "simulate_effect",
    "simulate_plan",
    "estimate_marginal",
    "run_experiment",
    "curve",
    "locate_minimum",
]

UNIT_TOL = 1e-9
TARGETS = ("A", "B", "C")
APPROX = ("D", "E", "F")


def pulse_phase(x: float, y: float) -> float:
    """Laser phase from the transverse components, by the branch rule above."""
    if y != 0:
        return math.pi / 2 * (1 - math.copysign(1.0, y)) + math.atan(x / y)
    if x > 0:
        return math.pi / 2
    if x < 0:
        return -math.pi / 2
    return 0.0


def _unit(v, name: str) -> np.ndarray:
    v = vec3(v, name)
    n = float(np.linalg.norm(v))
    if abs(n - 1) > UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector, got length {n:.12g}")
    return v


def measurement_direction(p: PulseParams) -> np.ndarray:
    """Direction measured by pulse ``p`` followed by detection of ``up``."""
    st, ct = math.sin(p.theta), math.cos(p.theta)
    return np.array([st * math.sin(p.phi), st * math.cos(p.phi), ct])


def prepared_state(p: PulseParams) -> np.ndarray:
    """Bloch vector reached from the ground state by pulse ``p``."""
    return rotate_bloch(np.array([0.0, 0.0, -1.0]), p)


def measure_angles(m) -> PulseParams:
    """Pulse that measures the rank-1 direction ``m``."""
    m = _unit(m, "m")
    # atan2 equals arccos(m_z) on the sphere but keeps tiny transverse parts near the poles
    p = PulseParams(math.atan2(math.hypot(m[0], m[1]), m[2]), pulse_phase(m[0], m[1]))
    back = measurement_direction(p)
    if np.max(np.abs(back - m / np.linalg.norm(m))) > UNIT_TOL:
        raise ArithmeticError(f"pulse {p} does not reproduce m = {m}")
    return p


def prep_angles(r) -> PulseParams:
    """Pulse that prepares the pure state ``r`` from the ground state."""
    r = _unit(r, "r")
    p = PulseParams(math.atan2(math.hypot(r[0], r[1]), -r[2]), pulse_phase(r[0], r[1]))
    back = prepared_state(p)
    if np.max(np.abs(back - r / np.linalg.norm(r))) > UNIT_TOL:
        raise ArithmeticError(f"pulse {p} does not prepare r = {r}")
    return p


@dataclass(frozen=True)
class PlanEntry:
    label: str
    pulse: PulseParams
    weight: float


@dataclass(frozen=True)
class MeasurementPlan:
    """Ordered measurement pulses; ``weight`` is the trace of the measured effect."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        labels = [e.label for e in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("plan labels must be unique")
        for e in self.entries:
            if not (0 < e.weight <= 2):
                raise ValueError(f"entry {e.label!r}: weight {e.weight!r} outside (0, 2]")

    def to_json(self) -> str:
        data = {
            "entries": [
                {"label": e.label, "theta_L": e.pulse.theta, "phi_L": e.pulse.phi, "weight": e.weight}
                for e in self.entries
            ]
        }
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str) -> MeasurementPlan:
        data = json.loads(text)
        if not isinstance(data, dict) or "entries" not in data:
            raise ValueError("plan JSON must be an object with an 'entries' list")
        entries = []
        for i, item in enumerate(data["entries"]):
            try:
                entries.append(
                    PlanEntry(
                        str(item["label"]),
                        PulseParams(float(item["theta_L"]), float(item["phi_L"])),
                        float(item["weight"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"entries[{i}]: {exc}") from exc
        return cls(tuple(entries))


def plan_for_povm(povm: JointPovm, targets: Sequence = ()) -> MeasurementPlan:
    """Pulses for the ``(+)`` outcome of each sharp target and every rank-1 POVM outcome.

    Outcomes that are not rank-1 have no single-pulse measurement and are left
    out.
    """
    entries = []
    for name, t in zip(TARGETS, targets):
        entries.append(PlanEntry(f"{name}+", measure_angles(np.asarray(t, dtype=float)), 1.0))
    for mu, eff in povm.outcomes.items():
        if is_rank_one(eff):
            entries.append(PlanEntry(f"M{sign_label(mu)}", measure_angles(eff.v / np.linalg.norm(eff.v)), eff.trace))
    return MeasurementPlan(tuple(entries))


@dataclass(frozen=True)
class ShotConfig:
    """Shot budget and optional imperfections (all default to ideal).

    ``prep_depolarization`` shrinks the prepared Bloch vector by ``1 - p``;
    ``detection_flip`` swaps the detected outcome with that probability;
    ``amplitude_jitter`` is the relative Gaussian spread of each measurement
    pulse area, drawn per shot. ``exact`` skips sampling altogether.
    """

    shots: int = 20_000
    seed: int = 0
    exact: bool = False
    prep_depolarization: float = 0.0
    detection_flip: float = 0.0
    amplitude_jitter: float = 0.0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        for name in ("prep_depolarization", "detection_flip"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.amplitude_jitter < 0:
            raise ValueError("amplitude_jitter must be >= 0")

    @property
    def ideal(self) -> bool:
        return self.prep_depolarization == 0 and self.detection_flip == 0 and self.amplitude_jitter == 0


@dataclass(frozen=True)
class ShotEstimate:
    """Estimated probability ``p_hat`` (already scaled by the weight) and its standard error."""

    p_hat: float
    stderr: float
    shots: int
    p_exact: float = math.nan
    successes: int = -1
    weight: float = 1.0

    def complement(self) -> ShotEstimate:
        """Estimate of the complementary sharp outcome from the same counts (``weight == 1`` only)."""
        if self.weight != 1.0:
            raise ValueError("complement is only defined for sharp (weight 1) effects")
        fails = self.shots - self.successes if self.successes >= 0 else -1
        return ShotEstimate(1 - self.p_hat, self.stderr, self.shots, 1 - self.p_exact, fails, 1.0)


def _rng(seed: int, key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def _p_up(r: np.ndarray, pulse: PulseParams, theta=None) -> np.ndarray:
    # z component of the rotated Bloch vector, vectorised over pulse areas
    n = pulse.axis()
    th = pulse.theta if theta is None else theta
    c, s = np.cos(th), np.sin(th)
    rz = r[2] * c + np.cross(n, r)[2] * s + n[2] * (n @ r) * (1 - c)
    return np.clip((1 + rz) / 2, 0.0, 1.0)


def simulate_effect(e: Effect, rho: QubitState, sc: ShotConfig = ShotConfig(), key=()) -> ShotEstimate:
    """Measure the rank-1 effect ``e`` on ``rho`` by pulse plus detection.

    ``e = w (I + m.sigma)/2`` with ``w = 2s``. The ``up`` count after the
    measurement pulse is binomial with ``p_up = (1 + m.r)/2``, so
    ``w * p_up = Tr[e rho]``. The returned estimate is ``w * successes/shots``
    with standard error ``w sqrt(p(1-p)/N)``. The random stream is keyed by
    ``(sc.seed, *key)``; the zero effect gives exactly 0.
    """
    if not isinstance(rho, QubitState):
        rho = QubitState(rho)
    p_exact = prob(e, rho)
    if e.s == 0 and not np.any(e.v):
        return ShotEstimate(0.0, 0.0, sc.shots, 0.0, 0, 0.0)
    if not is_rank_one(e):
        raise ValueError("effect is not rank-1; it cannot be measured with a single pulse")
    w = e.trace
    pulse = measure_angles(e.v / np.linalg.norm(e.v))
    r = rho.bloch * (1 - sc.prep_depolarization)
    q = sc.detection_flip
    if sc.exact or sc.amplitude_jitter == 0:
        p = float(_p_up(r, pulse))
        p = p * (1 - q) + (1 - p) * q
        if sc.exact:
            return ShotEstimate(w * p, 0.0, sc.shots, p_exact, -1, w)
        k = int(_rng(sc.seed, key).binomial(sc.shots, p))
    else:
        rng = _rng(sc.seed, key)
        theta = pulse.theta * (1 + sc.amplitude_jitter * rng.standard_normal(sc.shots))
        p = _p_up(r, pulse, theta)
        p = p * (1 - q) + (1 - p) * q
        k = int((rng.random(sc.shots) < p).sum())
    freq = k / sc.shots
    p_hat = min(max(w * freq, 0.0), w)
    stderr = w * math.sqrt(freq * (1 - freq) / sc.shots)
    return ShotEstimate(p_hat, stderr, sc.shots, p_exact, k, w)


def simulate_plan(plan: MeasurementPlan, rho: QubitState, sc: ShotConfig = ShotConfig(), key=()) -> dict:
    """Run every plan entry on ``rho``; entry ``j`` uses stream ``(*key, j)``."""
    out = {}
    for j, entry in enumerate(plan.entries):
        m = measurement_direction(entry.pulse)
        eff = Effect(entry.weight / 2, entry.weight / 2 * m)
        out[entry.label] = simulate_effect(eff, rho, sc, (*key, j))
    return out


def estimate_marginal(estimates: dict, index: int, sign: int) -> ShotEstimate:
    """Sum of the four joint-outcome estimates whose ``index``-th sign (0-based) is ``sign``.

    Standard errors are combined in quadrature.
    """
    needed = [mu for mu in SIGNS3 if mu[index] == sign]
    missing = [sign_label(mu) for mu in needed if mu not in estimates]
    if missing:
        raise KeyError(f"missing joint outcome estimates: {', '.join('M' + m for m in missing)}")
    ests = [estimates[mu] for mu in needed]
    p_exact = sum(e.p_exact for e in ests)
    return ShotEstimate(
        sum(e.p_hat for e in ests),
        math.sqrt(sum(e.stderr**2 for e in ests)),
        min(e.shots for e in ests),
        p_exact,
    )


DATASET_COLUMNS = ("family", "phi", "varphi", "quantity", "value", "stderr", "shots", "seed", "exact", "flag")


@dataclass(frozen=True)
class DataRow:
    family: str
    phi: float
    varphi: float
    quantity: str
    value: float
    stderr: float
    shots: int
    seed: int
    exact: float
    flag: str = ""

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in DATASET_COLUMNS)


def _joint_povm(family: str, lam: Triple) -> JointPovm:
    if family == "orthogonal":
        return build_povm_orthogonal(lam)
    if family == "one_orthogonal":
        return build_povm_general(lam, ft_vector=one_orthogonal_ft(lam))
    return build_povm_general(lam)


def run_experiment(
    family: str,
    sweep,
    argmin_source: str = "analytic",
    sc: ShotConfig = ShotConfig(),
    cfg: SolverConfig = SolverConfig(),
    threads: int = 1,
) -> list[DataRow]:
    """Simulated measurement of the total deviation along a sweep.

    ``sweep`` is a :class:`SweepSpec` or precomputed sweep rows. The
    approximations come from the closed-form family (``argmin_source =
    "analytic"``, orthogonal family only) or from the bound solver
    (``"solver"``). For each point and each pair (target, approximation) the
    optimal state ``r = (x - y)/|x - y|`` is measured with the target's ``(+)``
    outcome and with the four joint outcomes whose sign for that pair is ``+``.
    The approximation's ``(+)`` probability is their marginal sum; the term is
    ``4|p(X+) - p(Y+)|`` and the total is the sum of the three terms, errors in
    quadrature. Joint outcomes that are not rank-1 are evaluated noise-free and
    flagged ``not_single_qubit_measurable``; degenerate optimal states are
    flagged ``degenerate_state``.

    Point ``i`` and measurement ``j`` draw from the stream ``(sc.seed, i, j)``.
    """
    if argmin_source not in ("analytic", "solver"):
        raise ValueError("argmin_source must be 'analytic' or 'solver'")
    if isinstance(sweep, SweepSpec):
        if sweep.family != family:
            raise ValueError(f"sweep family {sweep.family!r} does not match {family!r}")
        if argmin_source == "analytic" and family != "orthogonal":
            raise ValueError("analytic approximations exist only for the orthogonal family")
        rows = run_sweep(sweep, cfg, threads)
    else:
        rows = list(sweep)
    out: list[DataRow] = []
    for i, row in enumerate(rows):
        out.extend(_experiment_point(family, row, i, sc))
    return out


def _experiment_point(family: str, row: SweepRow, i: int, sc: ShotConfig) -> list[DataRow]:
    tri = row.triad
    lam = row.argmin
    povm = _joint_povm(family, lam)
    base = dict(family=family, phi=row.phi, varphi=row.varphi, shots=sc.shots, seed=sc.seed)
    out = []
    counter = 0
    terms = []
    for k in range(3):
        worst = worst_case_delta(Observable(tri[k]), Observable(lam[k]))
        rho = worst.state
        state_flag = "degenerate_state" if worst.degenerate else ""
        target = simulate_effect(effect_of_observable(Observable(tri[k]), 1), rho, sc, (i, counter))
        counter += 1
        out.append(DataRow(quantity=f"p({TARGETS[k]}+)", value=target.p_hat, stderr=target.stderr,
                           exact=target.p_exact, flag=state_flag, **base))
        estimates = {}
        for mu in SIGNS3:
            if mu[k] != 1:
                continue
            eff = povm.outcomes[mu]
            flag = state_flag
            if is_rank_one(eff) or (eff.s == 0 and not np.any(eff.v)):
                est = simulate_effect(eff, rho, sc, (i, counter))
            else:
                p = prob(eff, rho)
                est = ShotEstimate(p, 0.0, sc.shots, p, -1, eff.trace)
                flag = ";".join(x for x in (flag, "not_single_qubit_measurable") if x)
            counter += 1
            estimates[mu] = est
            out.append(DataRow(quantity=f"p(M{sign_label(mu)}|rho{k + 1})", value=est.p_hat,
                               stderr=est.stderr, exact=est.p_exact, flag=flag, **base))
        marg = estimate_marginal(estimates, k, 1)
        out.append(DataRow(quantity=f"p({APPROX[k]}+)", value=marg.p_hat, stderr=marg.stderr,
                           exact=marg.p_exact, flag=state_flag, **base))
        value = 4 * abs(target.p_hat - marg.p_hat)
        exact = 4 * abs(target.p_exact - marg.p_exact)
        err = 4 * math.sqrt(target.stderr**2 + marg.stderr**2)
        terms.append((value, err, exact))
        out.append(DataRow(quantity=f"Delta({TARGETS[k]},{APPROX[k]})", value=value, stderr=err,
                           exact=exact, flag=state_flag, **base))
    total = sum(t[0] for t in terms)
    err = math.sqrt(sum(t[1] ** 2 for t in terms))
    exact = sum(t[2] for t in terms)
    out.append(DataRow(quantity="Delta_total", value=total, stderr=err, exact=exact, flag="", **base))
    return out


def curve(rows: Sequence[DataRow], quantity: str = "Delta_total"):
    """``(phi, varphi, value, stderr, exact)`` arrays for one quantity of a dataset."""
    sel = [r for r in rows if r.quantity == quantity]
    return tuple(np.array([getattr(r, c) for r in sel]) for c in ("phi", "varphi", "value", "stderr", "exact"))


def locate_minimum(phi, value, half_width: float = 0.4) -> tuple[float, float]:
    """Minimum of a sampled curve by a least-squares parabola around the lowest sample.

    Falls back to the lowest sample if the fitted parabola is not convex or
    its vertex leaves the fitting window.
    """
    phi, value = np.asarray(phi, dtype=float), np.asarray(value, dtype=float)
    j = int(np.argmin(value))
    sel = np.abs(phi - phi[j]) <= half_width
    if sel.sum() >= 3:
        c2, c1, c0 = np.polyfit(phi[sel], value[sel], 2)
        if c2 > 0:
            x = -c1 / (2 * c2)
            if abs(x - phi[j]) <= half_width:
                return float(x), float(c0 - c1 * c1 / (4 * c2))
    return float(phi[j]), float(value[j])
