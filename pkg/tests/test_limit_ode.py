import numpy as np
import pytest

from minmove.errors import InvalidInput
from minmove.homogenization import homogenized_velocity
from minmove.limit_ode import convergence_study, integrate_limit
from minmove.potentials import make_cosine_potential, make_pwq_potential, make_quadratic_drive, make_zero_potential


@pytest.fixture(scope="module")
def pwq_run():
    return integrate_limit(2.0, 1.0, 2.0)


def test_pinned_start_is_constant():
    run = integrate_limit(2.0, 0.3, 1.0)
    assert run.pinned_at == 0.0
    assert set(run.states) == {0.3}


def test_no_oscillation_gives_exponential_decay():
    tol = 1e-6
    run = integrate_limit(3.0, 1.0, 1.0, W=make_zero_potential(), tol=tol)
    t = np.linspace(0.0, 1.0, 201)
    assert np.max(np.abs(run.at(t) - np.exp(-t))) <= 10 * tol


def test_pwq_run_stalls_at_threshold(pwq_run):
    xs = np.asarray(pwq_run.states)
    assert np.all(np.diff(xs) <= 0)
    assert pwq_run.pinned_at is not None
    assert xs[-1] == pytest.approx(0.5, abs=1e-3)
    after = [x for t, x in zip(pwq_run.times, xs) if t >= pwq_run.pinned_at]
    assert len(set(after)) == 1


def test_slope_matches_velocity(pwq_run):
    # x'(t) = -gamma f(h'(x)) away from the threshold
    t = 0.1
    x = pwq_run.at(t)
    dt = 1e-4
    slope = (pwq_run.at(t + dt) - pwq_run.at(t - dt)) / (2 * dt)
    est = homogenized_velocity(x, 2.0, tol=1e-3)
    assert slope == pytest.approx(-2.0 * est.value, abs=2 * 2.0 * est.error_bound + 1e-3)


def test_negative_start_moves_right():
    run = integrate_limit(2.0, -1.0, 0.3, W=make_cosine_potential(), velocity_tol=1e-2)
    assert np.all(np.diff(run.states) >= 0) and run.states[-1] > -1.0


def test_convergence_table():
    table = convergence_study(2.0, 1.0, 1.0, [0.1, 0.05, 0.025])
    d = [row[1] for row in table]
    assert all(b <= a + 1e-6 for a, b in zip(d, d[1:]))
    pinned = convergence_study(2.0, 0.3, 1.0, [0.1, 0.05, 0.025])
    assert all(dist <= e for e, dist in pinned)


def test_convergence_without_oscillation_is_first_order():
    table = convergence_study(2.0, 1.0, 1.0, [0.1, 0.05, 0.025], W=make_zero_potential())
    d = [row[1] for row in table]
    assert d[0] > d[1] > d[2]
    assert d[1] / d[0] == pytest.approx(0.5, abs=0.05)


def test_sandwich_consistency_of_difference_quotients():
    gamma, eps, delta = 2.0, 0.0125, 0.05
    from minmove.dynamics import MMConfig, run_mm
    from minmove.potentials import OscillatingEnergy

    W = make_pwq_potential()
    traj = run_mm(MMConfig.from_ratio(OscillatingEnergy(make_quadratic_drive(), W, eps), gamma, 1.0, 160))
    tau = traj.tau
    rng = np.random.default_rng(7)
    lag = 40
    for i in rng.integers(0, 40, 20):
        x_a, x_b = traj.states[i], traj.states[i + lag]
        quotient = (x_b - x_a) / (lag * tau)
        hi = homogenized_velocity(x_a + delta, gamma, tol=1e-3)
        lo = homogenized_velocity(x_b - delta, gamma, tol=1e-3)
        slack = gamma * (hi.error_bound + lo.error_bound)
        assert -gamma * hi.value - slack <= quotient <= -gamma * lo.value + slack


def test_invalid_inputs():
    with pytest.raises(InvalidInput):
        integrate_limit(2.0, 1.0, 0.0)
    with pytest.raises(InvalidInput):
        convergence_study(2.0, 1.0, 1.0, [0.1, 0.05])
    with pytest.raises(InvalidInput):
        convergence_study(2.0, 1.0, 1.0, [0.1, 0.2, 0.05])
