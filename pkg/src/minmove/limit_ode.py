"""The homogenized limit equation x' = -gamma f_gamma(h'(x)) and its comparison
with discrete minimizing movements."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .dynamics import MMConfig, run_mm
from .errors import InvalidInput
from .homogenization import VelocityCache, default_cache, pinning_threshold_criterion
from .potentials import (
    OscillatingEnergy,
    PeriodicPotential,
    make_pwq_potential,
    make_quadratic_drive,
)

ETA_STOP = 1e-6
VELOCITY_TOL = 1e-3
TABLE_NODES = 48
SAMPLE_TIMES = 1000
MAX_STEPS = 200_000


@dataclass
class OdeRun:
    gamma: float
    x0: float
    t_end: float
    times: List[float]
    states: List[float]
    pinned_at: Optional[float] = None
    slopes: List[float] = field(default_factory=list, repr=False)

    def at(self, t):
        """Dense output: cubic Hermite on the accepted steps, constant after pinning."""
        t_arr = np.asarray(t, dtype=float)
        times = np.asarray(self.times)
        if len(times) < 2:
            out = np.full_like(t_arr, self.states[0])
        else:
            spline = CubicHermiteSpline(times, self.states, self.slopes)
            out = spline(np.clip(t_arr, times[0], times[-1]))
            if self.pinned_at is not None:
                out = np.where(t_arr >= self.pinned_at, self.states[-1], out)
        return float(out) if out.ndim == 0 else out

    def rows(self):
        return list(zip(self.times, self.states))


def threshold_for(gamma: float, W: PeriodicPotential) -> float:
    if W.lipschitz_bound == 0.0:
        return 0.0
    return pinning_threshold_criterion(gamma, potential=W).threshold


class VelocityTable:
    """Monotone interpolant of z -> f_gamma(z) on [T_gamma + eta, z_max].

    Nodes are graded geometrically toward the threshold, where f has its
    logarithmic singularity; every node goes through the velocity cache.
    """

    def __init__(self, gamma, W, z_min, z_max, nodes=TABLE_NODES, tol=VELOCITY_TOL,
                 cache: Optional[VelocityCache] = None):
        cache = cache if cache is not None else default_cache
        width = max(z_max - z_min, 1e-12)
        # half the nodes log-spaced in the distance to z_min, half uniform
        n_log = nodes // 2
        log_part = z_min + np.geomspace(min(ETA_STOP, width) * 1e-3, width, n_log) - min(ETA_STOP, width) * 1e-3
        lin_part = np.linspace(z_min, z_max, nodes - n_log)
        z = np.unique(np.concatenate([log_part, lin_part, [z_min, z_max]]))
        f = np.array([cache.get(float(zi), gamma, tol=tol, potential=W).value for zi in z])
        # estimates carry noise of size tol; f itself is nondecreasing
        f = np.maximum.accumulate(f)
        self.z, self.f = z, f
        self._interp = PchipInterpolator(z, f) if len(z) > 1 else None

    def __call__(self, z: float) -> float:
        if self._interp is None:
            return float(self.f[0])
        return float(self._interp(min(max(z, self.z[0]), self.z[-1])))


def integrate_limit(
    gamma: float,
    x0: float,
    t_end: float,
    drive=None,
    W: Optional[PeriodicPotential] = None,
    tol: float = 1e-6,
    velocity_tol: float = VELOCITY_TOL,
    cache: Optional[VelocityCache] = None,
) -> OdeRun:
    """Classical RK4 with step doubling on x' = -gamma sign(h'(x)) f_gamma(|h'(x)|).

    Steps are accepted when the doubling error estimate is at most tol times
    the step length. When |h'(x)| falls to T_gamma + ETA_STOP the state is
    frozen and the time recorded in pinned_at.
    """
    if not t_end > 0:
        raise InvalidInput("t_end must be positive")
    if not gamma > 0:
        raise InvalidInput("gamma must be positive")
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    drive = drive if drive is not None else make_quadratic_drive()
    W = W if W is not None else make_pwq_potential()
    stop = threshold_for(gamma, W) + ETA_STOP

    x = float(x0)
    z0 = abs(drive.derivative(x))
    if z0 <= stop:
        return OdeRun(gamma, x, t_end, [0.0, t_end], [x, x], pinned_at=0.0, slopes=[0.0, 0.0])
    table = VelocityTable(gamma, W, stop, z0 * (1 + 1e-9), tol=velocity_tol, cache=cache)

    def rhs(x):
        z = drive.derivative(x)
        if abs(z) <= stop:
            return 0.0
        return -math.copysign(gamma * table(abs(z)), z)

    def rk4(x, dt):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        return x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

    def crossed(x):
        return abs(drive.derivative(x)) <= stop

    t = 0.0
    times, states, slopes = [0.0], [x], [rhs(x)]
    dt = min(t_end, 1e-2)
    pinned_at = None
    for _ in range(MAX_STEPS):
        if t >= t_end:
            break
        dt = min(dt, t_end - t)
        full = rk4(x, dt)
        half = rk4(rk4(x, 0.5 * dt), 0.5 * dt)
        err = abs(half - full) / 15.0
        if err > tol * dt and dt > 1e-12:
            dt *= max(0.2, 0.9 * (tol * dt / err) ** 0.25)
            continue
        if crossed(half):
            # locate the threshold crossing inside the step by bisection on its length
            lo, hi = 0.0, dt
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if crossed(rk4(x, mid)):
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-12 * max(1.0, t):
                    break
            x = rk4(x, hi)
            t += hi
            pinned_at = t
            times.append(t)
            states.append(x)
            slopes.append(0.0)
            break
        t += dt
        x = half
        times.append(t)
        states.append(x)
        slopes.append(rhs(x))
        grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol * dt / err) ** 0.25)
        dt *= max(grow, 0.2)
    if pinned_at is not None and times[-1] < t_end:
        times.append(t_end)
        states.append(x)
        slopes.append(0.0)
    return OdeRun(gamma, float(x0), t_end, times, states, pinned_at=pinned_at, slopes=slopes)


def _mm_sup_distance(args) -> float:
    gamma, x0, t_end, eps, drive, W, sample_t, ode_x = args
    energy = OscillatingEnergy(drive, W, eps)
    tau = eps / gamma
    steps = max(1, math.ceil(t_end / tau - 1e-9))
    traj = run_mm(MMConfig(energy=energy, tau=tau, gamma=gamma, x0=x0, steps=steps))
    mm = np.array([traj.at(t) for t in sample_t])
    return float(np.max(np.abs(mm - ode_x)))


def convergence_study(
    gamma: float,
    x0: float,
    t_end: float,
    epsilons: Sequence[float],
    drive=None,
    W: Optional[PeriodicPotential] = None,
    tol: float = 1e-6,
    workers: int = 1,
    ode: Optional[OdeRun] = None,
) -> List[Tuple[float, float]]:
    """Sup over 1000 uniform times of |x_mm(t) - x_ode(t)| for each epsilon."""
    eps = [float(e) for e in epsilons]
    if len(eps) < 3:
        raise InvalidInput("need at least three epsilons")
    if any(not e > 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise InvalidInput("epsilons must be positive and strictly decreasing")
    drive = drive if drive is not None else make_quadratic_drive()
    W = W if W is not None else make_pwq_potential()
    ode = ode if ode is not None else integrate_limit(gamma, x0, t_end, drive, W, tol=tol)
    sample_t = np.linspace(0.0, t_end, SAMPLE_TIMES)
    ode_x = ode.at(sample_t)
    jobs = [(gamma, x0, t_end, e, drive, W, sample_t, ode_x) for e in eps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            dists = list(pool.map(_mm_sup_distance, jobs))
    else:
        dists = [_mm_sup_distance(j) for j in jobs]
    return list(zip(eps, dists))
