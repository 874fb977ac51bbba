"""Minimizing-movement iterations for the full and the linearized energies."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import InvalidInput, MonotonicityViolation, Pinned
from .potentials import LinearDrive, OscillatingEnergy, PeriodicPotential, make_pwq_potential
from .proximal import ProxProblem, full_problem, linearized_problem, prox_step

MONOTONE_TOL = 1e-10
PIN_RTOL = 1e-12
PIN_STREAK = 10
MAX_RECORDED = 10**7


@dataclass(frozen=True)
class MMConfig:
    energy: OscillatingEnergy
    tau: float
    gamma: float
    x0: float
    steps: int

    def __post_init__(self):
        if not (self.tau > 0 and self.gamma > 0):
            raise InvalidInput("tau and gamma must be positive")
        if self.steps < 1:
            raise InvalidInput("steps must be positive")
        eps = self.energy.epsilon
        if abs(self.gamma * self.tau - eps) > 1e-12 * eps:
            raise InvalidInput(f"gamma * tau = {self.gamma * self.tau} must equal epsilon = {eps}")

    @classmethod
    def from_ratio(cls, energy: OscillatingEnergy, gamma: float, x0: float, steps: int) -> "MMConfig":
        return cls(energy=energy, tau=energy.epsilon / gamma, gamma=gamma, x0=x0, steps=steps)


@dataclass
class Trajectory:
    times: List[float]
    states: List[float]
    monotone_direction: str
    tau: float = 0.0
    pinned_at_step: Optional[int] = None

    def at(self, t: float) -> float:
        """Piecewise-constant value x_{floor(t / tau)} (last recorded state if thinned)."""
        if self.tau > 0 and len(self.states) == len(self.times) and self.times[-1] == (len(self.times) - 1) * self.tau:
            i = int(math.floor(t / self.tau + 1e-9))
            return self.states[min(max(i, 0), len(self.states) - 1)]
        j = bisect.bisect_right(self.times, t) - 1
        return self.states[max(j, 0)]


def _direction(delta: float, scale: float) -> str:
    if delta < -MONOTONE_TOL * scale:
        return "nonincreasing"
    if delta > MONOTONE_TOL * scale:
        return "nondecreasing"
    return "constant"


def run_mm(config: MMConfig, max_recorded: int = MAX_RECORDED) -> Trajectory:
    """Iterate x_{i+1} = argmin h(x) + eps W(x/eps) + (x - x_i)^2 / (2 tau).

    The direction of motion is fixed by the first step; a later reversal
    beyond tolerance raises MonotonicityViolation.
    """
    energy, tau = config.energy, config.tau
    stride = max(1, math.ceil((config.steps + 1) / max_recorded))
    x = float(config.x0)
    times, states = [0.0], [x]
    direction = None
    streak = 0
    pinned_at = None
    for i in range(1, config.steps + 1):
        x_new = prox_step(full_problem(energy, tau, x)).minimizer
        delta = x_new - x
        scale = max(1.0, abs(x))
        if direction is None:
            direction = _direction(delta, scale)
        elif direction == "nonincreasing" and delta > MONOTONE_TOL * scale:
            raise MonotonicityViolation(f"step {i} moved right by {delta} after moving left")
        elif direction == "nondecreasing" and delta < -MONOTONE_TOL * scale:
            raise MonotonicityViolation(f"step {i} moved left by {-delta} after moving right")
        elif direction == "constant" and abs(delta) > MONOTONE_TOL * scale:
            raise MonotonicityViolation(f"step {i} left a fixed point")
        if abs(delta) <= PIN_RTOL * scale:
            streak += 1
            if streak == PIN_STREAK and pinned_at is None:
                pinned_at = i
        else:
            streak = 0
        x = x_new
        if i % stride == 0 or i == config.steps:
            times.append(i * tau)
            states.append(x)
    return Trajectory(
        times=times,
        states=states,
        monotone_direction=direction or "constant",
        tau=tau,
        pinned_at_step=pinned_at,
    )


@dataclass
class LinearizedOrbit:
    T: float
    gamma: float
    y: List[float] = field(default_factory=list)


def run_linearized(
    T: float,
    gamma: float,
    y0: float,
    n: int,
    potential: Optional[PeriodicPotential] = None,
) -> LinearizedOrbit:
    """Orbit y_0..y_n of the rescaled linearized step with slope T and weight gamma/2."""
    if n < 1:
        raise InvalidInput("n must be at least 1")
    W = potential if potential is not None else make_pwq_potential()
    y = [float(y0)]
    for _ in range(n):
        y.append(prox_step(linearized_problem(T, gamma, W, y[-1])).minimizer)
    return LinearizedOrbit(T=T, gamma=gamma, y=y)


@dataclass
class SandwichResult:
    holds: bool
    checked_upper: int
    checked_lower: int
    worst_violation: float


SANDWICH_TOL = 1e-9


def sandwich_details(config: MMConfig, delta: float, n: int) -> SandwichResult:
    """Compare the full orbit with the linearized orbits of slopes h'(x0 +- delta).

    The upper comparison x^{T+}_i <= x_i uses convexity of h to the left of
    x0 + delta; the lower comparison x_i <= x^{T-}_i uses it to the right of
    x0 - delta. Each is checked for every step whose states still lie on the
    side where that argument applies: the upper bound while both orbits stay
    below x0 + delta, the lower one while both stay above x0 - delta.
    """
    if delta < 0:
        raise InvalidInput("delta must be nonnegative")
    energy, tau = config.energy, config.tau
    h = energy.drive
    x0 = config.x0
    t_plus = h.derivative(x0 + delta)
    t_minus = h.derivative(x0 - delta)
    W, eps = energy.oscillation, energy.epsilon
    beta = 0.5 / tau

    x = x_plus = x_minus = float(x0)
    worst = 0.0
    upper_ok = lower_ok = True
    n_upper = n_lower = 0
    for _ in range(n):
        x = prox_step(full_problem(energy, tau, x)).minimizer
        x_plus = prox_step(ProxProblem(LinearDrive(t_plus), W, beta, x_plus, eps)).minimizer
        x_minus = prox_step(ProxProblem(LinearDrive(t_minus), W, beta, x_minus, eps)).minimizer
        upper_ok = upper_ok and x <= x0 + delta and x_plus <= x0 + delta
        lower_ok = lower_ok and x >= x0 - delta and x_minus >= x0 - delta
        if upper_ok:
            n_upper += 1
            worst = max(worst, x_plus - x)
        if lower_ok:
            n_lower += 1
            worst = max(worst, x - x_minus)
        if not (upper_ok or lower_ok):
            break
    return SandwichResult(
        holds=worst <= SANDWICH_TOL,
        checked_upper=n_upper,
        checked_lower=n_lower,
        worst_violation=worst,
    )


def sandwich_check(config: MMConfig, delta: float, n: int) -> bool:
    return sandwich_details(config, delta, n).holds


def well_index(y: float) -> int:
    """Index k of the cell [k - 1/2, k + 1/2) containing y, robust to rounding in y + 1/2."""
    k = math.floor(y + 0.5)
    return k - 1 if y - k < -0.5 else k


ESCAPE_START = 0.5 - 1e-15


def escape_index(
    T: float,
    gamma: float,
    y0: float = ESCAPE_START,
    potential: Optional[PeriodicPotential] = None,
    max_steps: int = 10**6,
) -> int:
    """Index of the last iterate of the linearized orbit lying in the starting well.

    A step that leaves the well only through a tie (one of the tied
    minimizers stays in the well) is taken as staying; this is the
    convention under which the in-well closed form is derived.
    """
    W = potential if potential is not None else make_pwq_potential()
    y = float(y0)
    for h in range(max_steps):
        well = well_index(y)
        res = prox_step(linearized_problem(T, gamma, W, y))
        x = res.minimizer
        if well_index(x) != well:
            stay = [c for c, _ in res.candidates if well_index(c) == well]
            if not (res.tie_detected and stay):
                return h
            x = stay[0]
        y = x
    raise Pinned(f"orbit did not leave its well within {max_steps} steps")
