"""Acceptance checks shared by ``minmove selftest`` and the test suite.

Each check returns a CriterionResult; none of them raises on a failed
comparison, so a report always covers every criterion.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .dynamics import MMConfig, escape_index, run_mm, sandwich_details, well_index
from .errors import MonotonicityViolation, NotFound, WellEscape
from .homogenization import (
    PIN_STREAK,
    detect_periodic_orbit,
    extreme_limits,
    homogenized_velocity,
    pinning_threshold_criterion,
    pinning_threshold_velocity,
)
from .limit_ode import convergence_study
from .potentials import (
    OscillatingEnergy,
    PeriodicPotential,
    make_cosine_potential,
    make_pwq_potential,
    make_quadratic_drive,
)
from .proximal import linearized_problem, prox_step
from .pwq_oracle import (
    pwq_candidate,
    pwq_escape_steps,
    pwq_in_well_orbit,
    pwq_period_two_orbit,
    pwq_threshold,
)

DEFAULT_SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{status}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


class _GenericPwq(PeriodicPotential):
    """The piecewise-quadratic W hidden behind a generic kind, forcing the sampled solver."""

    def __init__(self):
        inner = make_pwq_potential()
        self._inner = inner
        self.name = "pwq-generic"
        self.kind = "generic"
        self.lipschitz_bound = inner.lipschitz_bound
        self.mean = inner.mean

    def evaluate(self, y):
        return self._inner.evaluate(y)

    def derivative(self, y):
        return self._inner.derivative(y)

    def second_derivative(self, y):
        return self._inner.second_derivative(y)


def _pwq_global_step(T, gamma, y0):
    """Closed-form global step: best admissible well candidate, leftmost on ties."""
    k0 = well_index(y0)
    reach = math.ceil((abs(T) + 1.0) / gamma) + 2
    best = None
    for k in range(k0 - reach, k0 + reach + 1):
        y = pwq_candidate(k, T, gamma, y0)
        if abs(y - k) > 0.5:
            continue
        e = T * y + (y - k) ** 2 + (gamma / 2) * (y - y0) ** 2
        if best is None or e < best[1] - 1e-12 * max(1.0, abs(best[1])):
            best = (y, e)
    return best[0]


# ---------------------------------------------------------------------------


def criterion_1(rng) -> CriterionResult:
    worst = 0.0
    parts = []
    for g in (0.5, 1.0, 2.0, 10.0):
        exact = pwq_threshold(g)
        a = pinning_threshold_criterion(g).threshold
        b = pinning_threshold_velocity(g).threshold
        worst = max(worst, abs(a - exact), abs(b - exact))
        parts.append(f"g={g:g}:{a:.6f}/{b:.6f}")
    return CriterionResult(1, "pinning threshold", worst <= 1e-4, f"max err {worst:.2e}; " + " ".join(parts))


def criterion_2(rng) -> CriterionResult:
    main = escape_index(0.6, 2.0)
    formula = pwq_escape_steps(0.6, 2.0)
    mismatches = []
    for g, d in itertools.product((0.5, 1.0, 2.0, 5.0, 10.0), (0.005, 0.02, 0.1, 0.2, 0.4)):
        T = pwq_threshold(g) + d
        got, want = escape_index(T, g), pwq_escape_steps(T, g)
        if got != want:
            mismatches.append((g, T, got, want))
    ok = main == 4 and formula == 4 and not mismatches
    return CriterionResult(
        2, "escape-step formula", ok,
        f"gamma=2 T=0.6: orbit {main}, formula {formula}; grid mismatches {mismatches or 0}",
    )


def criterion_3(rng) -> CriterionResult:
    generic = _GenericPwq()
    pwq = make_pwq_potential()
    worst = 0.0
    for _ in range(500):
        g = float(rng.uniform(0.1, 20.0))
        T = float(rng.uniform(-1.5, 1.5))
        y0 = float(rng.uniform(-3.0, 3.0))
        want = _pwq_global_step(T, g, y0)
        for W in (generic, pwq):
            got = prox_step(linearized_problem(T, g, W, y0)).minimizer
            worst = max(worst, abs(got - want))
    # in-well recursion against repeated steps of the generic solver
    for _ in range(100):
        g = float(rng.uniform(0.2, 10.0))
        T = pwq_threshold(g) + float(rng.uniform(0.01, 0.5))
        y0 = float(rng.uniform(0.0, 0.5))
        try:
            orbit = pwq_in_well_orbit(y0, T, g, 3)
        except WellEscape:
            continue
        y = y0
        for h in range(1, 4):
            y = prox_step(linearized_problem(T, g, generic, y)).minimizer
            worst = max(worst, abs(y - orbit[h]))
    return CriterionResult(3, "closed-form orbit equivalence", worst <= 1e-10, f"max deviation {worst:.2e}")


def criterion_4(rng) -> CriterionResult:
    bad = []
    for _ in range(20):
        g = float(rng.uniform(0.5, 10.0))
        T = pwq_threshold(g) + float(rng.uniform(0.05, 0.8))
        ests = [homogenized_velocity(T, g, tol=1e-3, y0=float(y0)) for y0 in rng.uniform(-0.5, 0.5, 5)]
        for a, b in itertools.combinations(ests, 2):
            if abs(a.value - b.value) > a.error_bound + b.error_bound:
                bad.append((g, T, a.value, b.value))
    return CriterionResult(4, "velocity independent of y0", not bad, f"{len(bad)} disagreeing pairs")


def _random_energy(rng):
    W = make_pwq_potential() if rng.random() < 0.5 else make_cosine_potential()
    drive = make_quadratic_drive(float(rng.uniform(0.5, 2.0)))
    eps = float(rng.uniform(0.005, 0.1))
    return OscillatingEnergy(drive, W, eps)


def criterion_5(rng) -> CriterionResult:
    tol = 1e-9
    sel = traj = sand = 0
    pwq, cos = make_pwq_potential(), make_cosine_potential()
    for _ in range(1000):
        W = pwq if rng.random() < 0.5 else cos
        T = float(rng.uniform(-2.0, 2.0))
        g = float(rng.uniform(0.2, 10.0))
        ca, cb = sorted(rng.uniform(-3.0, 3.0, 2))
        ya = prox_step(linearized_problem(T, g, W, float(ca))).minimizer
        yb = prox_step(linearized_problem(T, g, W, float(cb))).minimizer
        sel += ya > yb + tol
    for _ in range(1000):
        energy = _random_energy(rng)
        cfg = MMConfig.from_ratio(energy, float(rng.uniform(0.5, 10.0)), float(rng.uniform(-2.0, 2.0)), 30)
        try:
            xs = np.asarray(run_mm(cfg).states)
        except MonotonicityViolation:
            traj += 1
            continue
        d = np.diff(xs)
        traj += bool(np.any(d > tol) and np.any(d < -tol))
    for _ in range(1000):
        energy = _random_energy(rng)
        cfg = MMConfig.from_ratio(energy, float(rng.uniform(0.5, 10.0)), float(rng.uniform(-2.0, 2.0)), 30)
        res = sandwich_details(cfg, float(rng.uniform(0.02, 0.2)), 30)
        sand += not res.holds
    ok = sel == traj == sand == 0
    return CriterionResult(5, "monotonicity suite", ok, f"violations: selection {sel}, trajectory {traj}, sandwich {sand}")


def criterion_6(rng) -> CriterionResult:
    g = 2.0
    Tg = pwq_threshold(g)
    prods = []
    for d in (1e-2, 1e-3, 1e-4):
        est = homogenized_velocity(Tg + d, g, tol=1e-3)
        prods.append(est.value * abs(math.log(d)))
    spread = max(prods) / min(prods) - 1.0
    return CriterionResult(
        6, "logarithmic law at threshold", spread <= 0.25,
        "f*|log d| = " + ", ".join(f"{p:.4f}" for p in prods) + f"; spread {spread:.1%}",
    )


def criterion_7(rng) -> CriterionResult:
    ok = True
    parts = []
    for z in (1.5, 2.0, 3.0):
        lim = extreme_limits(z)
        small_ok = abs(lim.small_gamma_velocity - z) <= 0.05 * z
        large_ok = abs(lim.large_gamma_velocity - lim.g_infinity_oracle) <= 0.05 * lim.g_infinity_oracle
        ok = ok and small_ok and large_ok
        parts.append(
            f"z={z:g}: small {lim.small_gamma_velocity:.4f}, large {lim.large_gamma_velocity:.4f} "
            f"vs oracle {lim.g_infinity_oracle:.4f} (printed form {lim.g_infinity_printed:.4f})"
        )
    return CriterionResult(7, "extreme limits", ok, "; ".join(parts))


def criterion_8(rng) -> CriterionResult:
    g = 2.0
    bad = []
    found = 0
    for T in (0.55, 0.6, 0.7, 0.8, 0.9, 1.1, 1.5):
        est = homogenized_velocity(T, g, tol=1e-3)
        try:
            rep = detect_periodic_orbit(T, g, q_max=50)
        except NotFound:
            continue
        found += 1
        if abs(rep.rotation - est.value) > est.error_bound:
            bad.append((T, rep.p, rep.q, est.value))
    # constructed orbit: one in-well step then one jump gives f = 1/2
    T = 0.9
    y0, y1, y2 = pwq_period_two_orbit(T, g)
    s1 = prox_step(linearized_problem(T, g, make_pwq_potential(), y0)).minimizer
    s2 = prox_step(linearized_problem(T, g, make_pwq_potential(), s1)).minimizer
    orbit_ok = abs(s1 - y1) <= 1e-12 and abs(s2 - y2) <= 1e-12 and abs(y2 - (y0 - 1)) <= 1e-12
    rep = detect_periodic_orbit(T, g, q_max=10, y0=y0)
    est = homogenized_velocity(T, g, tol=1e-3, y0=y0)
    half_ok = orbit_ok and rep.q == 2 and abs(rep.p) == 1 and abs(0.5 - est.value) <= est.error_bound
    ok = not bad and half_ok and found > 0
    return CriterionResult(
        8, "periodic orbits match velocity", ok,
        f"{found} orbits found, {len(bad)} mismatches; constructed 1/2 orbit {'ok' if half_ok else 'FAILED'} "
        f"(f={est.value:.5f})",
    )


def criterion_9(rng) -> CriterionResult:
    eps = [0.1, 0.05, 0.025, 0.0125]
    table = convergence_study(2.0, 1.0, 1.0, eps)
    d = [t[1] for t in table]
    decreasing = all(b <= a + 1e-6 for a, b in zip(d, d[1:]))
    pinned = convergence_study(2.0, 0.3, 1.0, eps)
    pinned_ok = all(dist <= e for e, dist in pinned)
    return CriterionResult(
        9, "discrete-to-ODE convergence", decreasing and pinned_ok,
        "sup distances " + ", ".join(f"{x:.4g}" for x in d) + f"; pinned case {'ok' if pinned_ok else 'FAILED'}",
    )


def criterion_10(rng) -> CriterionResult:
    g = 2.0
    drive, W = make_quadratic_drive(), make_pwq_potential()
    r = g / (2 + g)
    budget = 2 * math.ceil(math.log(1e-12) / math.log(r)) + PIN_STREAK
    problems = []
    for x0 in (0.1, 0.3, 0.45, 0.489):
        cfg = MMConfig.from_ratio(OscillatingEnergy(drive, W, 0.01), g, x0, budget)
        traj = run_mm(cfg)
        if traj.pinned_at_step is None:
            problems.append(f"x0={x0} not pinned in {budget} steps")
    for x0 in (0.52, 0.6, 1.0, 2.0):
        cfg = MMConfig.from_ratio(OscillatingEnergy(drive, W, 1e-6), g, x0, 10_000)
        xs = np.asarray(run_mm(cfg).states)
        if not np.all(np.diff(xs) < 0):
            problems.append(f"x0={x0} not strictly decreasing")
    return CriterionResult(
        10, "pinning end to end", not problems,
        "; ".join(problems) or f"pinned runs settle within {budget} steps, drifting runs strictly decrease",
    )


CRITERIA: Dict[int, Callable] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = np.random.default_rng([seed, number])
    start = time.perf_counter()
    res = CRITERIA[number](rng)
    res.seconds = time.perf_counter() - start
    return res


def run_all(seed: int = DEFAULT_SEED, only: Optional[List[int]] = None, echo=print) -> List[CriterionResult]:
    out = []
    for n in only or sorted(CRITERIA):
        res = run_criterion(n, seed)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
