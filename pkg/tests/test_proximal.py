import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minmove.errors import InvalidInput, NonCoercive
from minmove.potentials import LinearDrive, make_cosine_potential, make_pwq_potential, make_quadratic_drive, make_zero_potential
from minmove.proximal import ProxProblem, linearized_problem, prox_selection_monotone_check, prox_step


def grid_oracle(problem, half_width, n=1_000_001):
    """Brute-force minimizer over 10^6 points around the center."""
    x = np.linspace(problem.center - half_width, problem.center + half_width, n)
    vals = problem.drive.evaluate(x) + problem.scale * problem.potential.evaluate(x / problem.scale) \
        + problem.beta * (x - problem.center) ** 2
    i = int(np.argmin(vals))
    return x[i], vals[i], x[1] - x[0]


def test_quadratic_closed_form():
    p = ProxProblem(make_quadratic_drive(), make_zero_potential(), beta=0.5, center=1.0)
    assert prox_step(p).minimizer == pytest.approx(0.5, abs=1e-14)


def test_pwq_step_matches_grid():
    p = linearized_problem(0.6, 2.0, make_pwq_potential(), 0.0)
    res = prox_step(p)
    assert res.minimizer == pytest.approx(-0.15, abs=1e-12)
    x, _, dx = grid_oracle(p, 2.0)
    assert abs(x - res.minimizer) <= dx


def test_tie_at_threshold_returns_leftmost():
    res = prox_step(linearized_problem(0.5, 2.0, make_pwq_potential(), -0.25))
    assert res.tie_detected
    assert len(res.candidates) == 2
    (xa, va), (xb, vb) = res.candidates
    assert va == pytest.approx(vb, abs=1e-12)
    assert res.minimizer == pytest.approx(-0.75) == xa < xb


@pytest.mark.parametrize("seed", range(6))
def test_random_cosine_steps_match_grid(seed):
    rng = np.random.default_rng(seed)
    T, g, c = rng.uniform(-1.5, 1.5), rng.uniform(0.3, 8.0), rng.uniform(-2, 2)
    p = linearized_problem(T, g, make_cosine_potential(), c)
    res = prox_step(p)
    x, v, dx = grid_oracle(p, (abs(T) + 1) / g + 1)
    assert res.value <= v + 1e-12
    if not res.tie_detected:
        assert abs(x - res.minimizer) <= 2 * dx


def test_full_problem_with_scale():
    W = make_pwq_potential()
    p = ProxProblem(make_quadratic_drive(), W, beta=100.0, center=1.0, scale=0.01)
    res = prox_step(p)
    x, _, dx = grid_oracle(p, 0.05)
    assert abs(x - res.minimizer) <= dx


def test_invalid_beta():
    with pytest.raises(InvalidInput):
        prox_step(linearized_problem(0.1, 0.0, make_pwq_potential(), 0.0))


def test_understated_slope_bound_still_found_by_expansion():
    p = ProxProblem(LinearDrive(5.0), make_cosine_potential(), beta=0.5, center=0.0, slope_bound=0.5)
    res = prox_step(p)
    assert res.minimizer == pytest.approx(prox_step(linearized_problem(5.0, 1.0, make_cosine_potential(), 0.0)).minimizer)


def test_noncoercive_when_window_never_brackets():
    p = ProxProblem(LinearDrive(1e6), make_cosine_potential(), beta=0.5, center=0.0, slope_bound=1e-6)
    with pytest.raises(NonCoercive):
        prox_step(p)


def test_monotone_check_examples():
    W = make_pwq_potential()
    a = linearized_problem(0.6, 2.0, W, 0.0)
    assert prox_selection_monotone_check(a, a)
    assert prox_selection_monotone_check(a, linearized_problem(0.6, 2.0, W, 0.3))
    C = make_cosine_potential()
    assert prox_selection_monotone_check(linearized_problem(0.4, 1.0, C, -0.2), linearized_problem(0.4, 1.0, C, 0.1))
    with pytest.raises(InvalidInput):
        prox_selection_monotone_check(a, linearized_problem(0.7, 2.0, W, 0.3))


@settings(max_examples=150, deadline=None)
@given(
    st.floats(-2, 2), st.floats(0.2, 10), st.floats(-3, 3), st.floats(0, 2),
    st.sampled_from(["pwq", "cosine"]),
)
def test_selection_is_monotone_in_center(T, g, c, d, name):
    W = make_pwq_potential() if name == "pwq" else make_cosine_potential()
    ya = prox_step(linearized_problem(T, g, W, c)).minimizer
    yb = prox_step(linearized_problem(T, g, W, c + d)).minimizer
    assert ya <= yb + 1e-9


@settings(max_examples=150, deadline=None)
@given(st.floats(-2, 2), st.floats(0.2, 10), st.floats(-3, 3))
def test_pwq_step_commutes_with_integer_shift(T, g, c):
    W = make_pwq_potential()
    a = prox_step(linearized_problem(T, g, W, c)).minimizer
    b = prox_step(linearized_problem(T, g, W, c + 1.0)).minimizer
    assert b - a == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(0.2, 10), st.floats(-3, 3))
def test_minimizer_satisfies_stationarity_bound(T, g, c):
    # 2 beta (x* - c) = -phi'(x*) bounds the displacement by (|T| + 1)/g
    y = prox_step(linearized_problem(T, g, make_cosine_potential(), c)).minimizer
    assert abs(y - c) <= (abs(T) + 1.0) / g + 1e-12
