import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minmove.dynamics import MMConfig, run_linearized, run_mm, sandwich_check, sandwich_details, well_index
from minmove.errors import InvalidInput
from minmove.potentials import (
    OscillatingEnergy,
    make_cosine_potential,
    make_pwq_potential,
    make_quadratic_drive,
    make_zero_potential,
)


def energy(W=None, eps=0.01):
    return OscillatingEnergy(make_quadratic_drive(), W or make_pwq_potential(), eps)


def test_config_requires_fixed_ratio():
    with pytest.raises(InvalidInput):
        MMConfig(energy(), tau=0.01, gamma=2.0, x0=1.0, steps=10)
    cfg = MMConfig.from_ratio(energy(), 2.0, 1.0, 10)
    assert cfg.tau == pytest.approx(0.005)


def test_implicit_euler_without_oscillation():
    cfg = MMConfig(energy(make_zero_potential(), 0.2), tau=0.1, gamma=2.0, x0=1.0, steps=1)
    assert run_mm(cfg).states[1] == pytest.approx(1 / 1.1, abs=1e-14)


def test_pinned_start_settles_within_one_well():
    traj = run_mm(MMConfig.from_ratio(energy(), 2.0, 0.3, 300))
    assert traj.pinned_at_step is not None
    xs = np.asarray(traj.states)
    assert np.allclose(xs[traj.pinned_at_step:], xs[-1], rtol=0, atol=1e-12)
    assert abs(xs[-1] - 0.3) <= 0.01


def test_drifting_start_strictly_decreases():
    traj = run_mm(MMConfig.from_ratio(energy(), 2.0, 1.0, 50))
    assert traj.monotone_direction == "nonincreasing"
    assert np.all(np.diff(traj.states) < 0)


def test_trajectory_is_piecewise_constant():
    traj = run_mm(MMConfig.from_ratio(energy(), 2.0, 1.0, 20))
    tau = traj.tau
    assert traj.at(0.0) == 1.0
    assert traj.at(2.5 * tau) == traj.states[2]
    assert traj.at(3 * tau) == traj.states[3]


def test_thinned_trajectory_keeps_endpoint():
    traj = run_mm(MMConfig.from_ratio(energy(), 2.0, 1.0, 100), max_recorded=10)
    full = run_mm(MMConfig.from_ratio(energy(), 2.0, 1.0, 100))
    assert len(traj.states) <= 12
    assert traj.states[-1] == full.states[-1]


def test_linearized_examples():
    assert run_linearized(0.6, 2.0, 0.0, 1).y[1] == pytest.approx(-0.15)
    assert run_linearized(0.0, 1.0, 0.0, 5).y == [0.0] * 6
    assert run_linearized(0.6, 2.0, 0.4, 4).y == pytest.approx([0.4, 0.05, -0.125, -0.2125, -0.75625])


def test_well_index_near_half():
    assert well_index(0.5 - 1e-15) == 0
    assert well_index(0.5) == 1
    assert well_index(-0.5) == 0


def test_sandwich_examples():
    cfg = MMConfig.from_ratio(energy(), 2.0, 1.0, 200)
    res = sandwich_details(cfg, 0.05, 200)
    assert res.holds and res.checked_upper > 0
    assert sandwich_check(cfg, 0.0, 50)
    zero = MMConfig.from_ratio(energy(make_zero_potential()), 2.0, 1.0, 100)
    assert sandwich_check(zero, 0.05, 100)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(0.5, 10), st.floats(0.005, 0.1), st.floats(-2, 2), st.sampled_from(["pwq", "cosine"]),
)
def test_trajectories_are_monotone(g, eps, x0, name):
    W = make_pwq_potential() if name == "pwq" else make_cosine_potential()
    xs = np.asarray(run_mm(MMConfig.from_ratio(energy(W, eps), g, x0, 25)).states)
    d = np.diff(xs)
    assert not (np.any(d > 1e-10) and np.any(d < -1e-10))


@settings(max_examples=80, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0, 1), st.floats(0.3, 8), st.floats(-1, 1), st.floats(0, 1))
def test_linearized_orbits_ordered_by_slope_and_start(T, dT, g, z0, dy):
    # larger slope and smaller start give a lower orbit
    low = run_linearized(T + dT, g, z0, 15).y
    high = run_linearized(T, g, z0 + dy, 15).y
    assert all(a <= b + 1e-10 for a, b in zip(low, high))


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.3, 8), st.floats(-1, 1))
def test_orbit_shift_equivariance(T, g, y0):
    a = run_linearized(T, g, y0, 10).y
    b = run_linearized(T, g, y0 + 1.0, 10).y
    assert all(abs(bb - aa - 1.0) <= 1e-12 for aa, bb in zip(a, b))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 10), st.floats(0.005, 0.1), st.floats(-2, 2), st.floats(1e-3, 0.1))
def test_sandwich_random(g, eps, x0, delta):
    cfg = MMConfig.from_ratio(energy(make_pwq_potential(), eps), g, x0, 30)
    assert sandwich_details(cfg, delta, 30).holds
