"""Closed forms for the piecewise-quadratic potential W(y) = min_k (y - k)^2.

Each function transcribes its formula term by term, without algebraic
simplification, so that a disagreement with the generic solver points at
one side or the other. Every quantity here is in the rescaled variable
y = x / eps with drive slope T and weight gamma / 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

from .errors import InvalidInput, Pinned, WellEscape


@dataclass(frozen=True)
class PwqState:
    gamma: float
    T: float
    T_gamma: float
    delta_T: float

    @classmethod
    def make(cls, T: float, gamma: float) -> "PwqState":
        T_gamma = pwq_threshold(gamma)
        delta_T = ((2 + gamma) / (2 * gamma)) * (T - T_gamma)
        return cls(gamma=gamma, T=T, T_gamma=T_gamma, delta_T=delta_T)

    @property
    def well_boundary(self) -> float:
        """Below -T/2 + delta_T the next step leaves well 0."""
        return -self.T / 2 + self.delta_T


def pwq_threshold(gamma: float) -> float:
    if not gamma > 0:
        raise InvalidInput("gamma must be positive")
    return gamma / (2 + gamma)


def pwq_t_infinity() -> float:
    return 1.0


def pwq_candidate(k: int, T: float, gamma: float, y0: float) -> float:
    """Minimizer of T y + (y - k)^2 + (gamma/2)(y - y0)^2 over the whole line."""
    return (-T + 2 * k) / (2 + gamma) + (gamma / (2 + gamma)) * y0


def _well_energy(y: float, k: int, T: float, gamma: float, y0: float) -> float:
    return T * y + (y - k) ** 2 + (gamma / 2) * (y - y0) ** 2


def pwq_psi(y0: float, T: float, gamma: float) -> float:
    """Energy of the best point in well -1 minus that of well 0.

    Negative means the next iterate jumps to the neighbouring well.
    """
    y_m1 = pwq_candidate(-1, T, gamma, y0)
    y_0 = pwq_candidate(0, T, gamma, y0)
    return _well_energy(y_m1, -1, T, gamma, y0) - _well_energy(y_0, 0, T, gamma, y0)


def pwq_in_well_orbit(y0: float, T: float, gamma: float, h_steps: int) -> List[float]:
    """y_h = (gamma/(2+gamma))^h (y0 + T/2) - T/2 for h = 0..h_steps.

    Raises WellEscape if some iterate before the last would already jump.
    """
    if h_steps < 1:
        raise InvalidInput("h_steps must be positive")
    orbit = []
    for h in range(h_steps + 1):
        y_h = (gamma / (2 + gamma)) ** h * (y0 + T / 2) - T / 2
        orbit.append(y_h)
    for h, y_h in enumerate(orbit[:-1]):
        if pwq_psi(y_h, T, gamma) < 0:
            raise WellEscape(f"iterate {h} = {y_h} leaves well 0 on the next step")
    return orbit


def pwq_escape_steps(T: float, gamma: float) -> int:
    """Number of in-well steps before the orbit started near 1/2 jumps wells."""
    T_gamma = pwq_threshold(gamma)
    if T <= T_gamma:
        raise Pinned(f"T = {T} <= T_gamma = {T_gamma}: the motion is pinned")
    ratio = math.log(((2 + gamma) / gamma) * (T - T_gamma) / (T + 1)) / math.log(gamma / (2 + gamma))
    return math.floor(ratio) + 1


def pwq_velocity_estimate(T: float, gamma: float) -> float:
    """Asymptotic velocity near the threshold; not an exact value."""
    T_gamma = pwq_threshold(gamma)
    if T <= T_gamma:
        raise Pinned(f"T = {T} <= T_gamma = {T_gamma}: the motion is pinned")
    return math.log(gamma / (2 + gamma)) / math.log(((2 + gamma) / gamma) * (T - T_gamma) / (T + 1))


def pwq_g_infinity_printed(z: float) -> float:
    """1 / log((z - 1) / z), as printed for z > 1 (negative there)."""
    if not z > 1:
        raise InvalidInput("defined for z > 1")
    return 1 / math.log((z - 1) / z)


def pwq_g_infinity_flow(z: float) -> float:
    """Period-averaged speed of y' = -z - W'(y): 2 / log((z + 1)/(z - 1)) for z > 1, else 0."""
    if z <= 1:
        return 0.0
    return 2 / math.log((z + 1) / (z - 1))


def pwq_period_two_orbit(T: float, gamma: float) -> List[float]:
    """Orbit [y0, y1, y0 - 1] with one in-well step followed by one jump.

    Solves y0 - 1 = c_{-1}(c_0(y0)) with c_k the well-k candidate map, which
    is affine with slope r = gamma/(2+gamma), so the fixed point is explicit.
    Whether this orbit is the selected one depends on (T, gamma); callers
    must check it against the proximal step.
    """
    r = gamma / (2 + gamma)
    shift0 = pwq_candidate(0, T, gamma, 0.0)
    shift_m1 = pwq_candidate(-1, T, gamma, 0.0)
    # y0 - 1 = r (r y0 + shift0) + shift_m1
    y0 = (1 + r * shift0 + shift_m1) / (1 - r * r)
    y1 = pwq_candidate(0, T, gamma, y0)
    y2 = pwq_candidate(-1, T, gamma, y1)
    return [y0, y1, y2]
