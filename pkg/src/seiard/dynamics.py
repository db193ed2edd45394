"""SEIARD compartmental model: parameters, state space, ODE right-hand side,
fixed-step RK4 integration, and the observation map.

Compartments: Susceptible, Exposed, Infectious, Active-recovering,
Active-fatal, Recovered, Deceased.  Only three case series are reportable:
active = a_recov + a_fatal, recovered = r, deceased = d.  E and I are never
observed directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

COMPARTMENTS = ("s", "e", "i", "a_recov", "a_fatal", "r", "d")
PARAM_NAMES = ("beta", "t_inc", "t_inf", "t_recov", "t_fatal", "p_fatal", "e0", "i0")
OBSERVED_SERIES = ("active", "recovered", "deceased", "total")

# Dips below zero smaller than this (persons) are floating-point noise and get
# clamped; anything larger means the solve actually went bad.
NEGATIVE_CLAMP = 1e-9


class ParameterDomainError(ValueError):
    """A model parameter lies outside its admissible domain."""


class DivergenceError(ArithmeticError):
    """Integration produced NaN/overflow or a real negative excursion."""


@dataclass(frozen=True)
class ModelParams:
    """The eight fitted quantities: transmission rate, four mean durations,
    the fatality probability, and the unobserved initial counts e0 and i0.

    Durations are in days, beta in 1/day, e0 and i0 in persons.
    """

    beta: float
    t_inc: float
    t_inf: float
    t_recov: float
    t_fatal: float
    p_fatal: float
    e0: float
    i0: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise ParameterDomainError(f"beta must be finite and >= 0, got {self.beta}")
        for name in ("t_inc", "t_inf", "t_recov", "t_fatal"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ParameterDomainError(f"{name} must be finite and > 0, got {value}")
        if not (math.isfinite(self.p_fatal) and 0.0 <= self.p_fatal <= 1.0):
            raise ParameterDomainError(f"p_fatal must be in [0, 1], got {self.p_fatal}")
        for name in ("e0", "i0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ParameterDomainError(f"{name} must be finite and >= 0, got {value}")

    @property
    def sigma(self) -> float:
        """Incubation (E -> I) rate, 1/t_inc."""
        return 1.0 / self.t_inc

    @property
    def gamma(self) -> float:
        """End-of-infectiousness (I -> A) rate, 1/t_inf."""
        return 1.0 / self.t_inf

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, values) -> "ModelParams":
        return cls(**{name: float(values[name]) for name in PARAM_NAMES})

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class State:
    """Compartment occupancies (persons) at one instant."""

    s: float
    e: float
    i: float
    a_recov: float
    a_fatal: float
    r: float
    d: float

    @property
    def total(self) -> float:
        return self.s + self.e + self.i + self.a_recov + self.a_fatal + self.r + self.d

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.e, self.i, self.a_recov, self.a_fatal, self.r, self.d])

    @classmethod
    def from_array(cls, values) -> "State":
        s, e, i, a_recov, a_fatal, r, d = (float(v) for v in values)
        return cls(s, e, i, a_recov, a_fatal, r, d)


@dataclass(frozen=True)
class Trajectory:
    """Integrator output sampled at integer days.

    states has shape (len(times), 7) with columns in COMPARTMENTS order.
    """

    times: np.ndarray
    states: np.ndarray
    population_n: float

    def state_at(self, index: int) -> State:
        return State.from_array(self.states[index])

    def compartment(self, name: str) -> np.ndarray:
        return self.states[:, COMPARTMENTS.index(name)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "S", "E", "I", "A_recov", "A_fatal", "R", "D"])
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


@dataclass(frozen=True)
class ObservedSeries:
    """The reportable daily case series derived from a trajectory."""

    times: np.ndarray
    active: np.ndarray
    recovered: np.ndarray
    deceased: np.ndarray
    total: np.ndarray

    def series(self, name: str) -> np.ndarray:
        if name not in OBSERVED_SERIES:
            raise ValueError(f"unknown series {name!r}, expected one of {OBSERVED_SERIES}")
        return getattr(self, name)

    def window(self, t_begin: int, t_end: int) -> "ObservedSeries":
        """Restrict to integer days t_begin..t_end inclusive."""
        if t_begin < self.times[0] or t_end > self.times[-1]:
            raise ValueError(
                f"window [{t_begin}, {t_end}] outside observed range "
                f"[{self.times[0]}, {self.times[-1]}]"
            )
        lo = int(t_begin - self.times[0])
        hi = int(t_end - self.times[0]) + 1
        return ObservedSeries(
            times=self.times[lo:hi],
            active=self.active[lo:hi],
            recovered=self.recovered[lo:hi],
            deceased=self.deceased[lo:hi],
            total=self.total[lo:hi],
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "active", "recovered", "deceased", "total"])
            for k in range(len(self.times)):
                writer.writerow(
                    [repr(float(self.times[k]))]
                    + [
                        repr(float(getattr(self, name)[k]))
                        for name in ("active", "recovered", "deceased", "total")
                    ]
                )

    @classmethod
    def read_csv(cls, path) -> "ObservedSeries":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["t", "active", "recovered", "deceased", "total"]:
                raise ValueError(f"unexpected header {header}")
            rows = [[float(v) for v in row] for row in reader]
        cols = np.array(rows).T
        return cls(times=cols[0], active=cols[1], recovered=cols[2],
                   deceased=cols[3], total=cols[4])


def derivative(state: State, params: ModelParams, population_n: float) -> State:
    """Instantaneous flow rates (persons/day) for each compartment."""
    if population_n <= 0:
        raise ParameterDomainError(f"population_n must be > 0, got {population_n}")
    infection = params.beta * state.i * state.s / population_n
    incubation = params.sigma * state.e
    case_onset = params.gamma * state.i
    recovery = state.a_recov / params.t_recov
    death = state.a_fatal / params.t_fatal
    return State(
        s=-infection,
        e=infection - incubation,
        i=incubation - case_onset,
        a_recov=(1.0 - params.p_fatal) * case_onset - recovery,
        a_fatal=params.p_fatal * case_onset - death,
        r=recovery,
        d=death,
    )


def _check_day(day: int, values: tuple) -> tuple:
    """Clamp tiny negative excursions, reject NaN/overflow and real dips."""
    out = []
    for name, v in zip(COMPARTMENTS, values):
        if not math.isfinite(v):
            raise DivergenceError(f"non-finite {name}={v} at day {day}")
        if v < 0.0:
            if v > -NEGATIVE_CLAMP:
                v = 0.0
            else:
                raise DivergenceError(f"{name}={v} fell below zero at day {day}")
        out.append(v)
    return tuple(out)


def integrate(params: ModelParams, init: State, horizon: int, dt: float = 0.1) -> Trajectory:
    """Integrate the model with classic fixed-step RK4, sampling integer days.

    Args:
        params: model parameters.
        init: day-0 state; the conserved population size is its total.
        horizon: last day to report (trajectory covers days 0..horizon).
        dt: nominal step in days, 0 < dt <= 1; snapped to an integer number
            of substeps per day so day boundaries are hit exactly.

    Returns:
        Trajectory with shape (horizon + 1, 7) states.

    Raises:
        DivergenceError: NaN/overflow, or a compartment dropping below zero
            by more than the clamping tolerance.
    """
    if not isinstance(horizon, (int, np.integer)) or horizon <= 0:
        raise ValueError(f"horizon must be a positive integer, got {horizon!r}")
    if not (0.0 < dt <= 1.0):
        raise ValueError(f"dt must satisfy 0 < dt <= 1, got {dt}")
    for name in COMPARTMENTS:
        if getattr(init, name) < 0:
            raise ParameterDomainError(f"init.{name} must be >= 0, got {getattr(init, name)}")

    population_n = init.total
    if population_n <= 0:
        raise ParameterDomainError("initial state has no population")

    steps_per_day = max(1, round(1.0 / dt))
    h = 1.0 / steps_per_day

    beta_n = params.beta / population_n
    sigma = params.sigma
    gamma = params.gamma
    pf = params.p_fatal
    inv_tr = 1.0 / params.t_recov
    inv_tf = 1.0 / params.t_fatal

    def deriv(s, e, i, ar, af, r, d):
        infection = beta_n * i * s
        incubation = sigma * e
        onset = gamma * i
        recovery = ar * inv_tr
        death = af * inv_tf
        return (
            -infection,
            infection - incubation,
            incubation - onset,
            (1.0 - pf) * onset - recovery,
            pf * onset - death,
            recovery,
            death,
        )

    half = 0.5 * h
    sixth = h / 6.0

    y = (init.s, init.e, init.i, init.a_recov, init.a_fatal, init.r, init.d)
    out = np.empty((horizon + 1, 7))
    out[0] = y

    for day in range(1, horizon + 1):
        s, e, i, ar, af, r, d = y
        for _ in range(steps_per_day):
            k1 = deriv(s, e, i, ar, af, r, d)
            k2 = deriv(
                s + half * k1[0], e + half * k1[1], i + half * k1[2],
                ar + half * k1[3], af + half * k1[4], r + half * k1[5],
                d + half * k1[6],
            )
            k3 = deriv(
                s + half * k2[0], e + half * k2[1], i + half * k2[2],
                ar + half * k2[3], af + half * k2[4], r + half * k2[5],
                d + half * k2[6],
            )
            k4 = deriv(
                s + h * k3[0], e + h * k3[1], i + h * k3[2],
                ar + h * k3[3], af + h * k3[4], r + h * k3[5],
                d + h * k3[6],
            )
            s = s + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
            e = e + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
            i = i + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
            ar = ar + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
            af = af + sixth * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4])
            r = r + sixth * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5])
            d = d + sixth * (k1[6] + 2.0 * (k2[6] + k3[6]) + k4[6])
        y = _check_day(day, (s, e, i, ar, af, r, d))
        out[day] = y

    return Trajectory(times=np.arange(horizon + 1, dtype=float), states=out,
                      population_n=population_n)


def observe(trajectory: Trajectory) -> ObservedSeries:
    """Map a trajectory onto the reportable series.

    active = a_recov + a_fatal, recovered = r, deceased = d,
    total = active + recovered + deceased.  E and I stay hidden.
    """
    active = trajectory.compartment("a_recov") + trajectory.compartment("a_fatal")
    recovered = trajectory.compartment("r").copy()
    deceased = trajectory.compartment("d").copy()
    return ObservedSeries(
        times=trajectory.times.copy(),
        active=active,
        recovered=recovered,
        deceased=deceased,
        total=active + recovered + deceased,
    )


def build_initial_state(params: ModelParams, population_n: float,
                        init_observed: tuple[float, float, float],
                        a0_fatal_fraction: float | None = None) -> State:
    """Assemble the day-0 state from observed initial counts plus e0/i0.

    init_observed is (active0, recovered0, deceased0).  The initial active
    count is split between the recovering and fatal branches by p_fatal
    (matching the steady inflow ratio) unless a0_fatal_fraction overrides it.
    Susceptibles take up the remainder of the population.
    """
    a0, r0, d0 = init_observed
    if min(a0, r0, d0) < 0:
        raise ParameterDomainError(f"initial observed counts must be >= 0, got {init_observed}")
    fraction = params.p_fatal if a0_fatal_fraction is None else a0_fatal_fraction
    if not 0.0 <= fraction <= 1.0:
        raise ParameterDomainError(f"a0_fatal_fraction must be in [0, 1], got {fraction}")
    s0 = population_n - params.e0 - params.i0 - a0 - r0 - d0
    if s0 < 0:
        raise ParameterDomainError(
            f"initial compartments exceed population_n={population_n}")
    return State(
        s=s0,
        e=params.e0,
        i=params.i0,
        a_recov=(1.0 - fraction) * a0,
        a_fatal=fraction * a0,
        r=r0,
        d=d0,
    )


@dataclass(frozen=True)
class LtiSystem:
    """Linear time-invariant approximation x' = B x, y = C x, valid early in
    an outbreak while s/population_n stays close to 1."""

    b_matrix: np.ndarray
    c_matrix: np.ndarray


def lti_matrices(params: ModelParams) -> LtiSystem:
    """Build the LTI pair (B, C) in COMPARTMENTS order.

    B collects the linear flow rates with s/N frozen at 1; C selects the
    reportable series.  Every column of B sums to zero: each term leaving one
    compartment enters another, including the I-compartment outflow -1/t_inf
    on the diagonal (a positive diagonal there would create mass from nothing).
    """
    sigma = params.sigma
    gamma = params.gamma
    b = np.zeros((7, 7))
    b[0, 2] = -params.beta
    b[1, 1] = -sigma
    b[1, 2] = params.beta
    b[2, 1] = sigma
    b[2, 2] = -gamma
    b[3, 2] = (1.0 - params.p_fatal) * gamma
    b[3, 3] = -1.0 / params.t_recov
    b[4, 2] = params.p_fatal * gamma
    b[4, 4] = -1.0 / params.t_fatal
    b[5, 3] = 1.0 / params.t_recov
    b[6, 4] = 1.0 / params.t_fatal

    c = np.zeros((3, 7))
    c[0, 3] = 1.0
    c[0, 4] = 1.0
    c[1, 5] = 1.0
    c[2, 6] = 1.0
    return LtiSystem(b_matrix=b, c_matrix=c)
