import numpy as np
import pytest

from kbgk.errors import VacuumError
from kbgk.moments import MacroState
from kbgk.riemann import (
    EulerState,
    euler_states_from_macro,
    sample_solution,
    star_pressure_bisection,
    star_region,
    wave_speeds,
)

GAMMA = 5.0 / 3.0


def _random_pairs(rng, n):
    for _ in range(n):
        yield (EulerState(rho=rng.uniform(0.1, 2.0), u=rng.uniform(-0.5, 0.5), p=rng.uniform(0.1, 2.0)),
               EulerState(rho=rng.uniform(0.1, 2.0), u=rng.uniform(-0.5, 0.5), p=rng.uniform(0.1, 2.0)))


def test_classic_sod_star_state():
    left, right = EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1)
    p_star, u_star = star_region(left, right, gamma=1.4)
    assert p_star == pytest.approx(0.30313, rel=1e-4)
    assert u_star == pytest.approx(0.92745, rel=1e-4)


def test_sod_wave_pattern():
    waves = wave_speeds(EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1), gamma=1.4)
    assert waves["left_wave"] == "rarefaction"
    assert waves["right_wave"] == "shock"
    assert waves["left_head"] == pytest.approx(-np.sqrt(1.4), rel=1e-12)
    assert waves["right_head"] == pytest.approx(1.75216, rel=1e-4)
    assert waves["left_head"] < waves["left_tail"] < waves["contact"] < waves["right_head"]


def test_newton_matches_bisection_oracle(rng):
    for left, right in _random_pairs(rng, 100):
        p_newton, _ = star_region(left, right, GAMMA)
        assert p_newton == pytest.approx(star_pressure_bisection(left, right, GAMMA), rel=1e-10)


def test_vacuum_generating_data_is_rejected():
    left, right = EulerState(1.0, -10.0, 0.1), EulerState(1.0, 10.0, 0.1)
    with pytest.raises(VacuumError):
        star_region(left, right, GAMMA)
    with pytest.raises(VacuumError):
        star_pressure_bisection(left, right, GAMMA)


def test_euler_state_validation():
    with pytest.raises(ValueError):
        EulerState(rho=0.0, u=0.0, p=1.0)


def test_states_from_kinetic_macro():
    R = 208.0
    left = MacroState.from_internal_energy(1e-4, (0.0, 0.0, 0.0), 2.5, R)
    right = MacroState.from_internal_energy(1.25e-5, (0.0, 0.0, 0.0), 2.0, R)
    euler_left, euler_right = euler_states_from_macro(left, right, GAMMA)
    assert euler_left.p == pytest.approx(left.p, rel=1e-12)
    assert euler_right.p == pytest.approx(right.rho * R * right.T, rel=1e-12)


def test_sampled_profile_regions():
    left, right = EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1)
    xs = np.linspace(0.0, 1.0, 1001)
    profile = sample_solution(left, right, GAMMA, 0.5, 0.17, xs)
    p_star, u_star = star_region(left, right, GAMMA)

    assert profile.rho[0] == 1.0 and profile.p[0] == 1.0
    assert profile.rho[-1] == 0.125 and profile.p[-1] == 0.1
    contact_x = 0.5 + u_star * 0.17
    near_contact = np.abs(xs - contact_x) < 0.02
    np.testing.assert_allclose(profile.p[near_contact], p_star, rtol=1e-12)
    np.testing.assert_allclose(profile.u[near_contact], u_star, rtol=1e-12)


def test_rarefaction_fan_is_continuous():
    left, right = EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1)
    waves = wave_speeds(left, right, GAMMA)
    t = 0.2
    eps = 1e-9
    xs = 0.5 + t * np.array([waves["left_head"] - eps, waves["left_head"] + eps,
                             waves["left_tail"] - eps, waves["left_tail"] + eps])
    profile = sample_solution(left, right, GAMMA, 0.5, t, xs)
    assert profile.rho[0] == pytest.approx(profile.rho[1], rel=1e-6)
    assert profile.rho[2] == pytest.approx(profile.rho[3], rel=1e-6)
    assert profile.p[3] == pytest.approx(waves["p_star"], rel=1e-12)


def test_rankine_hugoniot_on_sampled_shocks(rng):
    checked = 0
    for left, right in _random_pairs(rng, 50):
        waves = wave_speeds(left, right, GAMMA)
        if waves["right_wave"] != "shock":
            continue
        S = waves["right_head"]
        behind = sample_solution(left, right, GAMMA, 0.0, 1.0, np.array([0.5 * (waves["contact"] + S)]))
        rho, u, p = behind.rho[0], behind.u[0], behind.p[0]

        mass = (right.rho * (right.u - S), rho * (u - S))
        momentum = (right.rho * right.u * (right.u - S) + right.p, rho * u * (u - S) + p)

        def energy_flux(d, v, pr):
            total = pr / (GAMMA - 1.0) + 0.5 * d * v * v
            return (total + pr) * v - S * total

        energy = (energy_flux(right.rho, right.u, right.p), energy_flux(rho, u, p))
        for a, b in (mass, momentum, energy):
            assert a == pytest.approx(b, rel=1e-8, abs=1e-10)
        checked += 1
    assert checked > 0


def test_profile_frame_columns():
    left, right = EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1)
    frame = sample_solution(left, right, GAMMA, 0.5, 0.1, np.linspace(0, 1, 11)).to_frame(R=0.5)
    assert list(frame.columns) == ["x", "rho", "ux", "T", "p"]
    assert frame["T"].iloc[0] == pytest.approx(1.0 / (1.0 * 0.5))


def test_sampling_needs_positive_time():
    left, right = EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1)
    with pytest.raises(ValueError):
        sample_solution(left, right, GAMMA, 0.5, 0.0, np.array([0.5]))


def test_rarefaction_fan_is_isentropic():
    left, right = EulerState(1.0, 0.0, 1.0), EulerState(0.125, 0.0, 0.1)
    waves = wave_speeds(left, right, GAMMA)
    t = 0.2
    inside = 0.5 + t * np.linspace(waves["left_head"], waves["left_tail"], 50)[1:-1]
    fan = sample_solution(left, right, GAMMA, 0.5, t, inside)
    np.testing.assert_allclose(fan.p / fan.rho ** GAMMA, left.p / left.rho ** GAMMA, rtol=1e-10)


def test_solution_is_self_similar(rng):
    xs = np.linspace(-1.0, 1.0, 201)
    for left, right in _random_pairs(rng, 20):
        early = sample_solution(left, right, GAMMA, 0.3, 0.1, 0.3 + xs)
        late = sample_solution(left, right, GAMMA, 0.3, 0.2, 0.3 + 2.0 * xs)
        for field in ("rho", "u", "p"):
            np.testing.assert_allclose(getattr(late, field), getattr(early, field), rtol=1e-12, atol=1e-14)


def test_sampled_pressure_and_density_stay_positive(rng):
    xs = np.linspace(-2.0, 2.0, 401)
    for left, right in _random_pairs(rng, 100):
        profile = sample_solution(left, right, GAMMA, 0.0, 1.0, xs)
        assert profile.p.min() > 0
        assert profile.rho.min() > 0
