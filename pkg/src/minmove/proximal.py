"""Global scalar proximal step: argmin over x of phi(x) + beta (x - center)^2.

The objective is always of the form ``phi(x) = drive(x) + scale * W(x / scale)``
where ``drive`` is either the linear slope of a linearized problem (scale 1)
or a convex drive h (scale = epsilon). The window is cut at the W-wells and
every cell is searched, so the result is a global minimizer, not a local one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidInput, NonCoercive
from .potentials import LinearDrive, PeriodicPotential

TIE_RTOL = 1e-12
LOCATION_TOL = 1e-12
SAMPLES_PER_CELL = 64
MAX_EXPANSIONS = 6
_VECTOR_THRESHOLD = 24


@dataclass(frozen=True)
class ProxProblem:
    drive: object
    potential: PeriodicPotential
    beta: float
    center: float
    scale: float = 1.0
    slope_bound: Optional[float] = None

    def objective(self, x):
        s = self.scale
        return self.drive.evaluate(x) + s * self.potential.evaluate(x / s)

    def objective_derivative(self, x):
        return self.drive.derivative(x) + self.potential.derivative(x / self.scale)

    def total(self, x):
        return self.objective(x) + self.beta * (x - self.center) ** 2

    @property
    def objective_slope_bound(self) -> float:
        # for a convex drive |x* - c| <= (|h'(c)| + Lip W) / (2 beta), which is
        # all the window needs, even though sup|phi'| over the window is larger
        if self.slope_bound is not None:
            return self.slope_bound
        return abs(self.drive.derivative(self.center)) + self.potential.lipschitz_bound

    def same_objective(self, other: "ProxProblem") -> bool:
        return (
            _drive_key(self.drive) == _drive_key(other.drive)
            and self.potential.name == other.potential.name
            and (self.potential is other.potential or self.potential.kind != "tabulated")
            and self.scale == other.scale
            and self.beta == other.beta
        )


def _drive_key(drive):
    if isinstance(drive, LinearDrive):
        return ("linear", drive.slope)
    return (drive.kind, getattr(drive, "coefficients", id(drive)))


@dataclass
class ProxResult:
    minimizer: float
    value: float
    candidates: List[Tuple[float, float]] = field(default_factory=list)
    tie_detected: bool = False


def linearized_problem(T: float, gamma: float, potential: PeriodicPotential, center: float) -> ProxProblem:
    """The rescaled linearized step: T y + W(y) + (gamma/2) (y - center)^2."""
    return ProxProblem(LinearDrive(T), potential, beta=0.5 * gamma, center=center, scale=1.0)


def full_problem(energy, tau: float, center: float) -> ProxProblem:
    """One minimizing-movement step for h(x) + eps W(x/eps) with weight 1/(2 tau)."""
    return ProxProblem(
        energy.drive, energy.oscillation, beta=0.5 / tau, center=center, scale=energy.epsilon
    )


def prox_step(problem: ProxProblem) -> ProxResult:
    """Global minimizer of phi(x) + beta (x - center)^2, leftmost among ties."""
    beta = problem.beta
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidInput(f"beta must be positive, got {beta}")
    c = problem.center
    if not math.isfinite(c):
        raise InvalidInput("center must be finite")
    s = problem.scale
    radius = problem.objective_slope_bound / (2.0 * beta) + s

    for _ in range(MAX_EXPANSIONS + 1):
        lo, hi = c - radius, c + radius
        cands = _candidates(problem, lo, hi)
        if cands:
            best = min(v for _, v in cands)
            edge = min(problem.total(lo), problem.total(hi))
            if edge > best + _tie_tol(best):
                return _select(cands, best)
        radius *= 2.0
    raise NonCoercive(
        f"no interior minimum after {MAX_EXPANSIONS} window expansions; slope bound too small?"
    )


def _tie_tol(value: float) -> float:
    return TIE_RTOL * max(1.0, abs(value))


def _select(cands, best) -> ProxResult:
    tol = _tie_tol(best)
    near = sorted((x, v) for x, v in cands if v <= best + tol)
    x, v = near[0]
    return ProxResult(minimizer=x, value=v, candidates=near, tie_detected=len(near) > 1)


def _candidates(problem: ProxProblem, lo: float, hi: float):
    form = problem.drive.quadratic_form() if hasattr(problem.drive, "quadratic_form") else None
    kind = problem.potential.kind
    if form is not None and kind == "piecewise_quadratic":
        return _pwq_candidates(problem, form, lo, hi)
    if form is not None and kind == "zero":
        a, b = form
        x = (2.0 * problem.beta * problem.center - b) / (a + 2.0 * problem.beta)
        return [(x, problem.total(x))]
    return _sampled_candidates(problem, lo, hi)


def _pwq_candidates(problem, form, lo, hi):
    """Exact per-well minimizers for a quadratic drive plus the piecewise-quadratic W.

    In well k the objective is a x^2/2 + b x + (x - k s)^2 / s + beta (x - c)^2,
    a convex quadratic; each such quadratic dominates the true objective, so
    the global minimum is the smallest of their minima.
    """
    a, b = form
    s, beta, c = problem.scale, problem.beta, problem.center
    k_lo = math.floor(lo / s + 0.5)
    k_hi = math.floor(hi / s + 0.5)
    denom = a + 2.0 / s + 2.0 * beta
    half = 0.5 * s * (1.0 + 1e-12)
    if k_hi - k_lo + 1 > _VECTOR_THRESHOLD:
        k = np.arange(k_lo, k_hi + 1, dtype=float)
        x = (2.0 * k + 2.0 * beta * c - b) / denom
        d = x - k * s
        vals = 0.5 * a * x * x + b * x + d * d / s + beta * (x - c) ** 2
        vals[np.abs(d) > half] = np.inf
        order = np.argsort(vals, kind="stable")[:8]
        return [(float(x[i]), float(vals[i])) for i in order if vals[i] < np.inf]
    out = []
    for k in range(k_lo, k_hi + 1):
        x = (2.0 * k + 2.0 * beta * c - b) / denom
        d = x - k * s
        # a well minimizer outside its own cell is dominated by a neighbour
        if abs(d) <= half:
            out.append((x, 0.5 * a * x * x + b * x + d * d / s + beta * (x - c) ** 2))
    return out


def _sampled_candidates(problem: ProxProblem, lo: float, hi: float):
    """Bracket sign changes of the total derivative on a per-cell grid and polish them."""
    s = problem.scale
    beta, c = problem.beta, problem.center
    first = math.floor(lo / s + 0.5)
    last = math.floor(hi / s + 0.5)
    edges = (np.arange(first, last + 2, dtype=float) - 0.5) * s
    edges[0], edges[-1] = lo, hi

    # per-cell grids whose end points sit just inside the cell, so the
    # derivative's one-sided limits are seen at kinks of W
    t = np.linspace(0.0, 1.0, SAMPLES_PER_CELL)
    left = edges[:-1, None]
    width = np.diff(edges)[:, None]
    inset = 1e-13 * max(s, 1.0)
    pts = left + inset + t[None, :] * (width - 2.0 * inset)
    pts = pts.reshape(-1)
    dF = np.asarray(problem.objective_derivative(pts), dtype=float) + 2.0 * beta * (pts - c)

    idx = np.nonzero((dF[:-1] < 0.0) & (dF[1:] >= 0.0))[0]
    out = []
    for i in idx:
        xl, xr = float(pts[i]), float(pts[i + 1])
        if dF[i + 1] == 0.0:
            x = xr
        else:
            x = _polish(problem, xl, xr)
        out.append((x, float(problem.total(x))))
    return out


def _polish(problem: ProxProblem, lo: float, hi: float) -> float:
    """Safeguarded Newton on the total derivative inside a sign-change bracket.

    Falls back to bisection whenever the Newton step leaves the bracket or no
    second derivative is available; golden-section search is used only if the
    derivative turns out not to bracket (kinks where one-sided values lie).
    """
    beta, c, s = problem.beta, problem.center, problem.scale
    pot, drive = problem.potential, problem.drive

    def d1(x):
        return drive.derivative(x) + pot.derivative(x / s) + 2.0 * beta * (x - c)

    def d2(x):
        w2 = pot.second_derivative(x / s)
        if w2 is None:
            return None
        return drive.second_derivative(x) + w2 / s + 2.0 * beta

    f_lo = d1(lo)
    f_hi = d1(hi)
    if not (f_lo < 0.0 <= f_hi):
        return _golden(problem.total, lo, hi)
    x = 0.5 * (lo + hi)
    for _ in range(100):
        if hi - lo <= LOCATION_TOL * max(1.0, abs(x)):
            break
        g = d1(x)
        if g == 0.0:
            return x
        if g < 0.0:
            lo = x
        else:
            hi = x
        h2 = d2(x)
        if h2 is not None and h2 > 0.0:
            x_new = x - g / h2
            if lo < x_new < hi:
                if abs(x_new - x) <= 0.25 * LOCATION_TOL * max(1.0, abs(x)):
                    return x_new
                x = x_new
                continue
        x = 0.5 * (lo + hi)
    return x


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f, a: float, b: float, tol: float = 1e-12) -> float:
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def prox_selection_monotone_check(problem_a: ProxProblem, problem_b: ProxProblem) -> bool:
    """Comparison property: equal objectives and center_a <= center_b give y_a <= y_b."""
    if not problem_a.same_objective(problem_b):
        raise InvalidInput("problems must share objective, scale and beta")
    if problem_a.center > problem_b.center:
        problem_a, problem_b = problem_b, problem_a
    ya = prox_step(problem_a).minimizer
    yb = prox_step(problem_b).minimizer
    return ya <= yb + 1e-10
