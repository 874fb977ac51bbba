"""Energy ingredients: the periodic oscillation W, the convex drive h, and
the oscillating energy h(x) + eps * W(x / eps).

All objects are immutable after construction. ``evaluate``/``derivative``
accept either a Python float or a numpy array; scalar inputs take a
``math`` fast path because the proximal solver calls them in tight loops.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from .errors import InvalidInput

TWO_PI = 2.0 * math.pi

ArrayLike = Union[float, np.ndarray]


def _scalar(y) -> bool:
    return isinstance(y, (float, int))


class PeriodicPotential:
    """A 1-periodic oscillation W with derivative access.

    Attributes:
        name: short identifier used by the CLI (``pwq``, ``cosine``, ...).
        kind: one of ``piecewise_quadratic``, ``normalized_cosine``,
            ``tabulated`` or ``zero``.
        lipschitz_bound: an upper bound on sup |W'|.
        mean: declared value of the integral of W over one period, or None
            when the potential makes no claim.
    """

    name = "abstract"
    kind = "abstract"
    lipschitz_bound = 1.0
    mean: Optional[float] = None

    def evaluate(self, y: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def derivative(self, y: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def second_derivative(self, y: ArrayLike) -> Optional[ArrayLike]:
        return None

    def __call__(self, y: ArrayLike) -> ArrayLike:
        return self.evaluate(y)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"

    def to_config(self) -> Union[str, dict]:
        return self.name


class PiecewiseQuadraticPotential(PeriodicPotential):
    """W(y) = min_k (y - k)^2, wells centred at the integers."""

    name = "pwq"
    kind = "piecewise_quadratic"
    lipschitz_bound = 1.0
    mean = 1.0 / 12.0

    @staticmethod
    def _offset(y):
        # floor(y + 1/2) puts half-integers in the right-hand well, so W' is
        # right-continuous at the kinks
        if _scalar(y):
            return y - math.floor(y + 0.5)
        y = np.asarray(y, dtype=float)
        return y - np.floor(y + 0.5)

    def evaluate(self, y):
        d = self._offset(y)
        return d * d

    def derivative(self, y):
        return 2.0 * self._offset(y)

    def second_derivative(self, y):
        if _scalar(y):
            return 2.0
        return np.full(np.shape(y), 2.0)


class NormalizedCosinePotential(PeriodicPotential):
    """W(y) = -cos(2 pi y) / (2 pi): unit period, zero mean, sup |W'| = 1."""

    name = "cosine"
    kind = "normalized_cosine"
    lipschitz_bound = 1.0
    mean = 0.0

    def evaluate(self, y):
        if _scalar(y):
            return -math.cos(TWO_PI * y) / TWO_PI
        return -np.cos(TWO_PI * np.asarray(y, dtype=float)) / TWO_PI

    def derivative(self, y):
        if _scalar(y):
            return math.sin(TWO_PI * y)
        return np.sin(TWO_PI * np.asarray(y, dtype=float))

    def second_derivative(self, y):
        if _scalar(y):
            return TWO_PI * math.cos(TWO_PI * y)
        return TWO_PI * np.cos(TWO_PI * np.asarray(y, dtype=float))


class ZeroPotential(PeriodicPotential):
    """W = 0. Violates the unit-Lipschitz normalization; used as a test oracle."""

    name = "zero"
    kind = "zero"
    lipschitz_bound = 0.0
    mean = 0.0

    def evaluate(self, y):
        if _scalar(y):
            return 0.0
        return np.zeros(np.shape(y))

    derivative = evaluate
    second_derivative = evaluate


class TabulatedPotential(PeriodicPotential):
    """Monotone cubic interpolation of samples taken over one closed period.

    ``values[j]`` is W at ``j / (len(values) - 1)``, so the first and last
    samples should coincide for a genuinely periodic table. The interpolant
    on [0, 1] is extended by ``W(y) = W(y - floor(y))``; any mismatch between
    the end samples shows up as a periodicity residual in validation.
    """

    name = "tabulated"
    kind = "tabulated"

    def __init__(self, values: Sequence[float]):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 4:
            raise InvalidInput("tabulated potential needs at least 4 samples")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("tabulated potential has non-finite samples")
        self.values = values
        knots = np.linspace(0.0, 1.0, values.size)
        self._interp = PchipInterpolator(knots, values, extrapolate=False)
        self._d1 = self._interp.derivative(1)
        self._d2 = self._interp.derivative(2)
        dense = np.linspace(0.0, 1.0, 20 * values.size + 1)
        self.lipschitz_bound = float(np.max(np.abs(self._d1(dense))))
        self.mean = None

    @staticmethod
    def _fold(y):
        if _scalar(y):
            return y - math.floor(y)
        y = np.asarray(y, dtype=float)
        return y - np.floor(y)

    def evaluate(self, y):
        out = self._interp(self._fold(y))
        return float(out) if _scalar(y) else out

    def derivative(self, y):
        out = self._d1(self._fold(y))
        return float(out) if _scalar(y) else out

    def second_derivative(self, y):
        out = self._d2(self._fold(y))
        return float(out) if _scalar(y) else out

    def to_config(self) -> dict:
        return {"kind": "tabulated", "values": self.values.tolist()}


def make_pwq_potential() -> PiecewiseQuadraticPotential:
    return PiecewiseQuadraticPotential()


def make_cosine_potential() -> NormalizedCosinePotential:
    return NormalizedCosinePotential()


def make_zero_potential() -> ZeroPotential:
    return ZeroPotential()


def make_tabulated_potential(values: Sequence[float]) -> TabulatedPotential:
    return TabulatedPotential(values)


_BUILTIN_POTENTIALS = {
    "pwq": make_pwq_potential,
    "cosine": make_cosine_potential,
    "zero": make_zero_potential,
}


def load_potential(desc: Union[str, dict, PeriodicPotential]) -> PeriodicPotential:
    """Resolve a potential from a built-in name, a JSON file path, or a dict.

    The JSON form is ``{"kind": "tabulated", "values": [...]}``.
    """
    if isinstance(desc, PeriodicPotential):
        return desc
    if isinstance(desc, dict):
        if desc.get("kind") != "tabulated" or "values" not in desc:
            raise InvalidInput(f"unsupported potential description: {desc!r}")
        return make_tabulated_potential(desc["values"])
    if desc in _BUILTIN_POTENTIALS:
        return _BUILTIN_POTENTIALS[desc]()
    path = Path(desc)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read potential file {desc}: {exc}") from exc
        return load_potential(data)
    raise InvalidInput(
        f"unknown potential {desc!r}; expected one of {sorted(_BUILTIN_POTENTIALS)} or a JSON file"
    )


# ---------------------------------------------------------------------------
# Drives


class ConvexDrive:
    """Strictly convex bulk energy h with h(0) = 0 = min h.

    ``coefficients`` are polynomial coefficients in increasing degree. The
    ``quadratic`` kind is h(x) = stiffness * x^2 / 2.
    """

    def __init__(self, coefficients: Sequence[float], kind: str = "user_polynomial"):
        coeffs = [float(c) for c in coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        if len(coeffs) < 3:
            raise InvalidInput("drive must be at least quadratic to be strictly convex")
        if coeffs[0] != 0.0 or coeffs[1] != 0.0:
            raise InvalidInput("drive must satisfy h(0) = 0 and h'(0) = 0")
        self.coefficients = tuple(coeffs)
        self.kind = kind
        self._poly = np.polynomial.Polynomial(coeffs)
        self._dpoly = self._poly.deriv()
        self._d2poly = self._dpoly.deriv()

    @property
    def name(self) -> str:
        return "quadratic" if self.kind == "quadratic" else "polynomial"

    def evaluate(self, x):
        if _scalar(x):
            return float(self._poly(x))
        return self._poly(np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.is_quadratic:
            a = 2.0 * self.coefficients[2]
            return a * x if _scalar(x) else a * np.asarray(x, dtype=float)
        if _scalar(x):
            return float(self._dpoly(x))
        return self._dpoly(np.asarray(x, dtype=float))

    def second_derivative(self, x):
        if _scalar(x):
            return float(self._d2poly(x))
        return self._d2poly(np.asarray(x, dtype=float))

    __call__ = evaluate

    @property
    def is_quadratic(self) -> bool:
        return len(self.coefficients) == 3

    def quadratic_form(self):
        """Return (a, b) with h(x) = a x^2 / 2 + b x when h is quadratic, else None."""
        if self.is_quadratic:
            return 2.0 * self.coefficients[2], self.coefficients[1]
        return None

    def inverse_derivative(self, slope: float, lo: float = -1e6, hi: float = 1e6) -> float:
        """Solve h'(x) = slope (h' is strictly increasing)."""
        if self.is_quadratic:
            return slope / (2.0 * self.coefficients[2])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.derivative(mid) < slope:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def to_config(self):
        if self.kind == "quadratic":
            return {"kind": "quadratic", "stiffness": 2.0 * self.coefficients[2]}
        return {"kind": "user_polynomial", "coefficients": list(self.coefficients)}

    def __repr__(self) -> str:
        return f"ConvexDrive(kind={self.kind!r}, coefficients={self.coefficients})"


class LinearDrive:
    """The frozen-slope drive x -> T x used by the linearized problems."""

    kind = "linear"

    def __init__(self, slope: float):
        self.slope = float(slope)

    def evaluate(self, x):
        return self.slope * x

    def derivative(self, x):
        if _scalar(x):
            return self.slope
        return np.full(np.shape(x), self.slope)

    def second_derivative(self, x):
        if _scalar(x):
            return 0.0
        return np.zeros(np.shape(x))

    __call__ = evaluate

    def quadratic_form(self):
        return 0.0, self.slope


def make_quadratic_drive(stiffness: float = 1.0) -> ConvexDrive:
    if not stiffness > 0:
        raise InvalidInput("stiffness must be positive")
    return ConvexDrive([0.0, 0.0, 0.5 * stiffness], kind="quadratic")


def make_polynomial_drive(coefficients: Sequence[float]) -> ConvexDrive:
    return ConvexDrive(coefficients, kind="user_polynomial")


def load_drive(desc) -> ConvexDrive:
    if isinstance(desc, ConvexDrive):
        return desc
    if desc == "quadratic":
        return make_quadratic_drive()
    if isinstance(desc, dict):
        if desc.get("kind") == "quadratic":
            return make_quadratic_drive(desc.get("stiffness", 1.0))
        if desc.get("kind") == "user_polynomial":
            return make_polynomial_drive(desc["coefficients"])
    if isinstance(desc, str) and desc.startswith("poly:"):
        return make_polynomial_drive([float(c) for c in desc[5:].split(",")])
    raise InvalidInput(f"unknown drive {desc!r}; use 'quadratic' or 'poly:c0,c1,c2,...'")


@dataclass(frozen=True)
class OscillatingEnergy:
    """E(x) = drive(x) + epsilon * oscillation(x / epsilon)."""

    drive: ConvexDrive
    oscillation: PeriodicPotential
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidInput("epsilon must be positive")

    def evaluate(self, x):
        return self.drive.evaluate(x) + self.epsilon * self.oscillation.evaluate(x / self.epsilon)

    def derivative(self, x):
        return self.drive.derivative(x) + self.oscillation.derivative(x / self.epsilon)

    __call__ = evaluate


# ---------------------------------------------------------------------------
# Validation


@dataclass
class CheckResult:
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


@dataclass
class ValidationReport:
    potential: str
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self):
        return [name for name, c in self.checks.items() if not c.passed]

    def as_dict(self) -> dict:
        return {
            "potential": self.potential,
            "passed": self.passed,
            "checks": {
                name: {
                    "passed": c.passed,
                    "residual": c.residual,
                    "tolerance": c.tolerance,
                    "detail": c.detail,
                }
                for name, c in self.checks.items()
            },
        }


PERIODICITY_TOL = 1e-12
EVENNESS_TOL = 1e-12
MEAN_TOL = 1e-8
NORMALIZATION_TOL = 1e-3


def validate_potential(W: PeriodicPotential, samples: int = 10_000) -> ValidationReport:
    """Check periodicity, evenness, mean and Lipschitz normalization of W.

    Violations are reported, never raised.
    """
    if samples < 16:
        raise InvalidInput("validate_potential needs at least 16 samples")
    report = ValidationReport(potential=getattr(W, "name", repr(W)))
    y = np.linspace(-3.0, 3.0, samples)
    w = np.asarray(W.evaluate(y), dtype=float)

    # one-sided limits across the integers catch a seam jump that a
    # floor-based periodic extension would otherwise hide
    eta = 1e-9
    ints = np.arange(-3.0, 4.0)
    seam = np.abs(np.asarray(W.evaluate(ints - eta)) - np.asarray(W.evaluate(ints + eta)))
    seam = np.maximum(seam - 2.0 * eta * max(W.lipschitz_bound, 1.0), 0.0)
    shift = np.abs(np.asarray(W.evaluate(y + 1.0)) - w)
    periodic_res = float(max(shift.max(), seam.max()))
    report.checks["periodicity"] = CheckResult(
        periodic_res <= PERIODICITY_TOL, periodic_res, PERIODICITY_TOL
    )

    even_res = float(np.max(np.abs(np.asarray(W.evaluate(-y)) - w)))
    report.checks["evenness"] = CheckResult(even_res <= EVENNESS_TOL, even_res, EVENNESS_TOL)

    grid = np.linspace(0.0, 1.0, 2**10 + 1)
    integral = float(simpson(np.asarray(W.evaluate(grid), dtype=float), x=grid))
    if W.mean is None:
        report.checks["mean"] = CheckResult(
            True, abs(integral), MEAN_TOL, f"no declared mean; measured {integral:.6g}"
        )
    else:
        res = abs(integral - W.mean)
        report.checks["mean"] = CheckResult(
            res <= MEAN_TOL, res, MEAN_TOL, f"declared {W.mean:.6g}, measured {integral:.6g}"
        )

    dense = np.linspace(0.0, 1.0, max(samples, 10_000) + 1)
    sup_slope = float(np.max(np.abs(np.asarray(W.derivative(dense), dtype=float))))
    excess = max(sup_slope - W.lipschitz_bound, 0.0)
    report.checks["lipschitz_bound"] = CheckResult(
        excess <= 1e-9 * max(1.0, W.lipschitz_bound),
        excess,
        1e-9,
        f"sampled sup|W'| = {sup_slope:.6g}, declared bound {W.lipschitz_bound:.6g}",
    )
    norm_res = abs(sup_slope - 1.0)
    report.checks["normalization"] = CheckResult(
        norm_res <= NORMALIZATION_TOL, norm_res, NORMALIZATION_TOL, "sup|W'| should be 1"
    )
    return report


def validate_drive(drive, lo: float = -5.0, hi: float = 5.0, samples: int = 2001) -> ValidationReport:
    """Sampled strict convexity and minimum-at-origin checks for a drive."""
    report = ValidationReport(potential=getattr(drive, "name", repr(drive)))
    x = np.linspace(lo, hi, samples)
    dh = np.asarray(drive.derivative(x), dtype=float)
    worst = float(np.min(np.diff(dh)))
    report.checks["strict_convexity"] = CheckResult(worst > 0, max(-worst, 0.0), 0.0)
    h = np.asarray(drive.evaluate(x), dtype=float)
    h0 = abs(float(drive.evaluate(0.0)))
    neg = max(-float(h.min()), 0.0)
    report.checks["minimum_at_origin"] = CheckResult(h0 == 0.0 and neg == 0.0, max(h0, neg), 0.0)
    return report
