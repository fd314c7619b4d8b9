import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionsqueeze.classical import (
    CatchLaw,
    final_equilibrium,
    find_free_flight_duration,
    integrate_single,
    integrate_two_ion,
)
from ionsqueeze.core import (
    COULOMB_CONSTANT,
    GammaSchedule,
    beryllium9,
    constant_schedule,
    separation_schedule,
)
from ionsqueeze.errors import DomainError, SearchError, SingularityError

US = 1e-6
P = beryllium9()
W = P.omega0


@pytest.fixture(scope="module")
def standard_traj():
    t_s2 = find_free_flight_duration(P, 3 * US, 0.5 * US, 1 * US, 0.5 * US, 100e-6)
    sched = separation_schedule(3 * US, 0.5 * US, t_s2, 1 * US)
    catch = CatchLaw(eta=0.5 * US, activation=3.5 * US + t_s2)
    grid = np.linspace(0, sched.total_duration, 301)
    return t_s2, integrate_two_ion(P, sched, catch, grid)


@pytest.mark.parametrize("gamma", [0.0, 0.5, -0.3])
def test_single_ion_constant_well_closed_form(gamma):
    # [DERIVED] c(t) = A cos((1 + gamma) w t) for a fixed centre at 0
    A = 1e-6
    sched = constant_schedule(4 * US, gamma)
    t = np.linspace(0, 4 * US, 50)
    tr = integrate_single(P, sched, 0.0, (A, 0.0), t)
    expected = A * np.cos((1 + gamma) * W * t)
    assert np.max(np.abs(tr.positions[0] - expected)) < 1e-8 * A


def test_single_ion_free_flight_is_ballistic():
    sched = GammaSchedule.from_segments([(2 * US, "free_flight")])
    t = np.linspace(0, 2 * US, 11)
    tr = integrate_single(P, sched, 5e-6, (1e-6, 0.3), t)
    assert np.allclose(tr.positions[0], 1e-6 + 0.3 * t, rtol=0, atol=1e-15)
    assert np.allclose(tr.velocities[0], 0.3, rtol=1e-12)


def test_single_ion_moving_centre_tracks():
    # [DERIVED] well moving at constant speed v: steady solution c = v t lags by nothing
    # when started on the comoving trajectory
    v = 0.5
    sched = constant_schedule(3 * US)
    t = np.linspace(0, 3 * US, 13)
    tr = integrate_single(P, sched, lambda s: v * s, (0.0, v), t)
    assert np.allclose(tr.positions[0], v * t, rtol=0, atol=1e-15)


def test_two_ion_static_equilibrium_stays_put():
    sched = constant_schedule(5 * US)
    tr = integrate_two_ion(P, sched, None, np.linspace(0, 5 * US, 21))
    d = P.equilibrium_half_separation()
    assert np.max(np.abs(tr.positions[0] - d)) < 1e-10 * d  # integrator tolerance
    assert np.max(np.abs(tr.positions[1] + d)) < 1e-10 * d  # integrator tolerance


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 0.3), st.floats(0.5, 3.0))
def test_free_flight_energy_conservation(v0, spread):
    # [criterion 7] E = m(v1^2 + v2^2)/2 + k e^2/(c1 - c2) conserved in free flight
    d = spread * P.equilibrium_half_separation()
    sched = GammaSchedule.from_segments([(5 * US, "free_flight")])
    t = np.linspace(0, 5 * US, 41)
    tr = integrate_two_ion(P, sched, None, t, initial=((d, -d), (v0, -v0)))
    kc = COULOMB_CONSTANT * P.charge**2
    E = 0.5 * P.mass * np.sum(tr.velocities**2, axis=0) + kc / tr.separation
    assert np.max(np.abs(E / E[0] - 1)) < 1e-9


def test_free_flight_momentum_conservation():
    d = P.equilibrium_half_separation()
    sched = GammaSchedule.from_segments([(3 * US, "free_flight")])
    tr = integrate_two_ion(P, sched, None, np.linspace(0, 3 * US, 7),
                           initial=((d + 1e-6, -d), (0.2, 0.05)))
    p = tr.velocities.sum(axis=0)
    assert np.allclose(p, 0.25, rtol=1e-11)


def test_mirror_symmetry(standard_traj):
    _, tr = standard_traj
    scale = np.max(np.abs(tr.positions))
    assert np.max(np.abs(tr.positions[0] + tr.positions[1])) < 1e-12 * scale
    assert np.max(np.abs(tr.well_centers[0] + tr.well_centers[1])) < 1e-12 * scale


def test_ions_rest_during_hold(standard_traj):
    _, tr = standard_traj
    hold = tr.times <= 3 * US
    d = P.equilibrium_half_separation()
    assert np.max(np.abs(tr.positions[0, hold] - d)) < 1e-10 * d  # integrator tolerance
    assert np.all(tr.well_centers[:, hold] == 0.0)


def test_standard_free_flight_and_separation(standard_traj):
    # [TARGET] t_s2 about 0.67 us, separation 100 um
    t_s2, tr = standard_traj
    assert t_s2 == pytest.approx(0.67 * US, rel=0.05)
    assert tr.separation[-1] == pytest.approx(100e-6, rel=1e-9)
    assert tr.well_strength[-1] == pytest.approx(1.0)


def test_final_equilibrium_cubic_root_oracle(standard_traj):
    # [DERIVED] k (s - s_f) s^2 = 2 k e^2 solved as a cubic with numpy.roots
    _, tr = standard_traj
    eq, amp = final_equilibrium(tr)
    k2 = P.mass * W**2
    kc = COULOMB_CONSTANT * P.charge**2
    sf = tr.well_centers[0, -1] - tr.well_centers[1, -1]
    roots = np.roots([k2, -k2 * sf, 0.0, -2 * kc])
    s = max(r.real for r in roots if abs(r.imag) < 1e-9 * abs(r))
    assert eq[0] - eq[1] == pytest.approx(s, rel=1e-12)
    assert 0 < amp < 1e-3


def test_state_at_matches_samples(standard_traj):
    _, tr = standard_traj
    i = 150
    x, v = tr.state_at(tr.times[i])
    assert np.allclose(x, tr.positions[:, i], rtol=1e-9)
    assert np.allclose(v, tr.velocities[:, i], rtol=1e-8, atol=1e-12)
    assert tr.half_separation_at(tr.times[-1]) == pytest.approx(50e-6, rel=1e-9)
    with pytest.raises(DomainError):
        tr.state_at(1.0)


def test_collision_raises():
    d = P.equilibrium_half_separation()
    sched = GammaSchedule.from_segments([(5 * US, "free_flight")])
    with pytest.raises(SingularityError):
        integrate_two_ion(P, sched, None, [5 * US], initial=((d, -d), (-50.0, 50.0)),
                          separation_floor=2 * d)


def test_misordered_start_raises():
    with pytest.raises(DomainError):
        integrate_two_ion(P, constant_schedule(US), None, [US], initial=((-1e-6, 1e-6), (0, 0)))


def test_catch_law_validation():
    with pytest.raises(DomainError):
        CatchLaw(eta=-1.0, activation=0.0)


def test_search_errors():
    d_eq = 2 * P.equilibrium_half_separation()
    with pytest.raises(SearchError):
        find_free_flight_duration(P, 0.0, 0.5 * US, 1 * US, 0.5 * US, 0.5 * d_eq)
    with pytest.raises(SearchError):
        find_free_flight_duration(P, 0.0, 0.5 * US, 1 * US, 0.5 * US, 1.0, max_duration=2 * US)


def test_equilibrium_target_needs_no_flight():
    d_eq = 2 * P.equilibrium_half_separation()
    t = find_free_flight_duration(P, 0.0, 0.0, 0.0, 0.5 * US, d_eq)
    assert t == 0.0


def test_longer_flight_separates_further():
    seps = []
    for t_s2 in (0.3, 0.6, 0.9):
        sched = separation_schedule(0.0, 0.5 * US, t_s2 * US, 1 * US)
        catch = CatchLaw(eta=0.5 * US, activation=(0.5 + t_s2) * US)
        seps.append(integrate_two_ion(P, sched, catch, [sched.total_duration]).separation[-1])
    assert seps[0] < seps[1] < seps[2]


def test_half_period_turning_point():
    d = 2e-7
    sched = constant_schedule(math.pi / W)
    tr = integrate_single(P, sched, 1e-6, (1e-6 + d, 0.0), [0.0, math.pi / W])
    assert tr.positions[0, -1] == pytest.approx(1e-6 - d, rel=1e-10)


def test_doubling_schedule_keeps_ion_at_rest():
    # [TARGET] centred ion stays put while the frequency changes
    from ionsqueeze.core import frequency_ramp

    tr = integrate_single(P, frequency_ramp(1.0, 0.5 * US), 0.0, (0.0, 0.0),
                          np.linspace(0, 0.5 * US, 11))
    assert np.all(tr.positions == 0.0) and np.all(tr.velocities == 0.0)


def test_single_ion_energy_conservation():
    sched = constant_schedule(10 * US)
    t = np.linspace(0, 10 * US, 101)
    tr = integrate_single(P, sched, 0.0, (1e-6, 0.2), t)
    E = 0.5 * P.mass * (tr.velocities[0] ** 2 + (W * tr.positions[0]) ** 2)
    assert np.max(np.abs(E / E[0] - 1)) < 1e-9


def test_shorter_target_needs_shorter_flight():
    # [DERIVED] the returned duration reproduces the target when integrated forward
    t_s2 = find_free_flight_duration(P, 3 * US, 0.5 * US, 1 * US, 0.5 * US, 75e-6)
    assert 0 < t_s2 < 0.67 * US
    sched = separation_schedule(3 * US, 0.5 * US, t_s2, 1 * US)
    catch = CatchLaw(eta=0.5 * US, activation=3.5 * US + t_s2)
    tr = integrate_two_ion(P, sched, catch, [sched.total_duration])
    assert tr.separation[-1] == pytest.approx(75e-6, rel=1e-9)


def test_target_below_ramp_only_separation_is_unreachable():
    # release and catch alone already separate the ions by about 54 um
    with pytest.raises(SearchError):
        find_free_flight_duration(P, 3 * US, 0.5 * US, 1 * US, 0.5 * US, 50e-6)


def test_tolerance_convergence(standard_traj):
    t_s2, tr = standard_traj
    sched = separation_schedule(3 * US, 0.5 * US, t_s2, 1 * US)
    catch = CatchLaw(eta=0.5 * US, activation=3.5 * US + t_s2)
    fine = integrate_two_ion(P, sched, catch, [sched.total_duration], rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(fine.positions[:, -1] - tr.positions[:, -1])) < 1e-9 * 50e-6
