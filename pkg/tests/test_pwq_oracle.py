import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minmove.dynamics import escape_index, run_linearized
from minmove.errors import Pinned, WellEscape
from minmove.homogenization import homogenized_velocity
from minmove.pwq_oracle import (
    PwqState,
    pwq_candidate,
    pwq_escape_steps,
    pwq_g_infinity_flow,
    pwq_g_infinity_printed,
    pwq_in_well_orbit,
    pwq_period_two_orbit,
    pwq_psi,
    pwq_t_infinity,
    pwq_threshold,
    pwq_velocity_estimate,
)


def test_threshold_and_state():
    assert pwq_threshold(2.0) == 0.5
    assert pwq_threshold(0.5) == pytest.approx(0.2)
    assert pwq_t_infinity() == 1.0
    st_ = PwqState.make(0.6, 2.0)
    assert st_.T_gamma == 0.5
    assert st_.delta_T == pytest.approx(0.1)
    assert st_.well_boundary == pytest.approx(-0.2)


def test_candidates():
    assert pwq_candidate(0, 0.6, 2.0, 0.0) == pytest.approx(-0.15)
    assert pwq_candidate(-1, 0.6, 2.0, 0.0) == pytest.approx(-0.65)
    assert pwq_candidate(0, 0.0, 1.0, 0.0) == 0.0


def test_psi():
    assert pwq_psi(-0.25, 0.5, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert pwq_psi(-0.3, 0.6, 2.0) == pytest.approx(-0.1)
    assert pwq_psi(0.4, 0.6, 2.0) > 0


def test_in_well_orbit():
    orbit = pwq_in_well_orbit(0.4, 0.6, 2.0, 3)
    assert orbit[3] == pytest.approx(0.5**3 * 0.7 - 0.3)
    assert orbit[3] == pytest.approx(-0.2125)
    lin = run_linearized(0.6, 2.0, 0.4, 3).y
    assert all(abs(a - b) <= 1e-12 for a, b in zip(orbit, lin))
    relax = pwq_in_well_orbit(0.3, 0.0, 1.5, 6)
    assert relax == pytest.approx([0.3 * (1.5 / 3.5) ** h for h in range(7)])
    with pytest.raises(WellEscape):
        pwq_in_well_orbit(0.4, 0.6, 2.0, 5)


def test_escape_steps():
    assert pwq_escape_steps(0.6, 2.0) == 4
    assert escape_index(0.6, 2.0) == 4
    fast = pwq_escape_steps(0.999, 2.0)
    assert fast == escape_index(0.999, 2.0) <= 2
    with pytest.raises(Pinned):
        pwq_escape_steps(0.5, 2.0)


def test_linearized_orbit_from_0_4_leaves_well_at_step_4():
    y = run_linearized(0.6, 2.0, 0.4, 4).y
    assert y[3] > -0.5 > y[4]


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 20.0), st.floats(1e-3, 0.5))
def test_escape_formula_matches_iteration(g, d):
    T = pwq_threshold(g) + d
    assert escape_index(T, g) == pwq_escape_steps(T, g)


def test_velocity_estimate_near_threshold():
    with pytest.raises(Pinned):
        pwq_velocity_estimate(0.5, 2.0)
    ratios = []
    for d in (1e-4, 1e-6):
        measured = homogenized_velocity(0.5 + d, 2.0, tol=1e-3).value
        ratios.append(pwq_velocity_estimate(0.5 + d, 2.0) / measured)
    assert abs(ratios[0] - 1) <= 0.25
    assert abs(ratios[1] - 1) < abs(ratios[0] - 1)


def test_g_infinity_forms():
    assert pwq_g_infinity_printed(2.0) < 0
    assert pwq_g_infinity_flow(2.0) == pytest.approx(2 / math.log(3))
    assert pwq_g_infinity_flow(0.9) == 0.0


def test_period_two_orbit_is_selected():
    y0, y1, y2 = pwq_period_two_orbit(0.9, 2.0)
    assert y2 == pytest.approx(y0 - 1, abs=1e-14)
    assert run_linearized(0.9, 2.0, y0, 2).y == pytest.approx([y0, y1, y2], abs=1e-12)
