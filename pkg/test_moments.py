import numpy as np
import pytest

from kbgk.core import build_velocity_grid
from kbgk.errors import NegativeInternalEnergyError
from kbgk.moments import (
    MacroField,
    MacroState,
    compute_moments,
    eval_maxwellian,
    init_maxwellian_field,
    macro_field_from_moments,
    macro_from_moments,
    maxwellian_cubes,
    moment_scale,
    moment_vector,
)

R = 208.0


def test_macro_state_closure():
    state = MacroState.from_internal_energy(1e-4, (0.5, 0.0, 0.0), 2.5, R)
    assert state.T == pytest.approx(2.5 / (1.5 * R))
    assert state.e == pytest.approx(2.5)
    assert state.E == pytest.approx(1e-4 * 2.5 + 0.5 * 1e-4 * 0.25)
    assert state.p == pytest.approx(1e-4 * R * state.T)
    np.testing.assert_allclose(state.conserved(), [1e-4, 5e-5, 0.0, 0.0, state.E])


def test_macro_state_rejects_nonpositive_temperature():
    with pytest.raises(NegativeInternalEnergyError):
        MacroState.from_temperature(1.0, (0, 0, 0), 0.0, R)


def test_maxwellian_moments_on_wide_grid(vgrid):
    """On a grid wide enough for the Sod temperatures the continuous Maxwellian is nearly conservative."""
    state = MacroState.from_internal_energy(1e-4, (0.0, 0.0, 0.0), 2.5, R)
    cube = maxwellian_cubes(state.rho, state.U, state.T, vgrid, R).reshape(vgrid.cube_shape)
    rho, rhoU, E = compute_moments(cube, vgrid)
    assert rho == pytest.approx(state.rho, rel=1e-6)
    np.testing.assert_allclose(rhoU, 0.0, atol=1e-18)
    assert E == pytest.approx(state.E, rel=1e-5)


def test_maxwellian_moments_degrade_on_coarse_grid():
    """Thirteen intervals under-resolve the Maxwellian; the moment error is visible."""
    coarse = build_velocity_grid(10.0, 13)
    state = MacroState.from_internal_energy(1e-4, (0.0, 0.0, 0.0), 2.0, R)
    cube = maxwellian_cubes(state.rho, state.U, state.T, coarse, R).reshape(coarse.cube_shape)
    rho, _, _ = compute_moments(cube, coarse)
    assert abs(rho - state.rho) / state.rho > 1e-6


def test_eval_maxwellian_matches_cubes(vgrid):
    state = MacroState.from_temperature(2.0, (0.3, -0.2, 0.1), 0.01, R)
    pointwise = eval_maxwellian(state, vgrid.velocities, R)
    cubes = maxwellian_cubes(state.rho, state.U, state.T, vgrid, R)[0]
    np.testing.assert_allclose(cubes, pointwise, rtol=1e-12, atol=1e-300)
    assert isinstance(eval_maxwellian(state, np.zeros(3), R), float)


def test_moment_vector_keeps_leading_dimensions(vgrid):
    states = [MacroState.from_internal_energy(rho, (0, 0, 0), 2.5, R) for rho in (1e-4, 2e-4, 3e-4)]
    field = init_maxwellian_field(states, vgrid, R)
    assert field.shape == (3,) + vgrid.cube_shape
    moments = moment_vector(field, vgrid)
    assert moments.shape == (3, 5)
    np.testing.assert_allclose(moments[:, 0] / moments[0, 0], [1.0, 2.0, 3.0], rtol=1e-12)


def test_moment_vector_rejects_wrong_shape(vgrid):
    with pytest.raises(ValueError):
        moment_vector(np.zeros((4, 4, 4)), vgrid)


def test_macro_from_moments_roundtrip(vgrid):
    state = MacroState.from_temperature(1.0, (0.4, 0.0, 0.0), 0.009, R)
    back = macro_from_moments(state.rho, state.rho * state.U, state.E, R)
    assert back.T == pytest.approx(state.T, rel=1e-12)
    np.testing.assert_allclose(back.U, state.U, rtol=1e-12)


def test_negative_internal_energy_names_point():
    moments = np.array([
        [1.0, 0.0, 0.0, 0.0, 1.0],
        [1.0, 2.0, 0.0, 0.0, 1.0],   # kinetic energy 2 > E
    ])
    with pytest.raises(NegativeInternalEnergyError) as info:
        macro_field_from_moments(moments, R)
    assert info.value.point_index == 1


def test_nonpositive_density_is_rejected():
    with pytest.raises(NegativeInternalEnergyError) as info:
        macro_field_from_moments(np.array([[0.0, 0.0, 0.0, 0.0, 1.0]]), R)
    assert info.value.point_index == 0


def test_moment_scale_uses_thermal_speed_for_momentum():
    scale = moment_scale(np.array([2.0, 0.0, 0.0, 0.0, 4.0]))
    assert scale.shape == (1, 5)
    # rho * sqrt(2 E / rho) = 2 * sqrt(4)
    np.testing.assert_allclose(scale[0, 1:4], 4.0)
    assert scale[0, 0] == 2.0 and scale[0, 4] == 4.0


def test_macro_field_at_and_len(vgrid):
    states = [MacroState.from_internal_energy(1e-4, (0, 0, 0), e, R) for e in (2.5, 2.0)]
    field = MacroField.from_states(states)
    assert len(field) == 2
    assert field.at(1).e == pytest.approx(2.0)


def test_compute_moments_is_linear(vgrid, rng):
    f = rng.uniform(0.0, 1.0, vgrid.cube_shape)
    g = rng.uniform(0.0, 1.0, vgrid.cube_shape)
    combined = compute_moments(2.5 * f - 0.75 * g, vgrid)
    for total, a, b in zip(combined, compute_moments(f, vgrid), compute_moments(g, vgrid)):
        np.testing.assert_allclose(total, 2.5 * np.asarray(a) - 0.75 * np.asarray(b), rtol=1e-12)


def test_roundtrip_error_shrinks_with_velocity_resolution():
    state = MacroState.from_internal_energy(1e-4, (0.4, -0.2, 0.1), 2.5, R)
    thermal = np.sqrt(R * state.T)
    error = {}
    for n_v in (10, 20, 40):
        vg = build_velocity_grid(10.0, n_v)
        cube = maxwellian_cubes(state.rho, state.U, state.T, vg, R).reshape(vg.cube_shape)
        macro = macro_from_moments(*compute_moments(cube, vg), R)
        error[n_v] = max(abs(macro.rho - state.rho) / state.rho,
                         abs(macro.T - state.T) / state.T,
                         np.abs(macro.U - state.U).max() / thermal)
    assert error[20] < error[10]
    assert error[40] <= error[20] + 1e-13
    assert error[40] <= 1e-10


def test_blend_conserves_mass_momentum_and_energy():
    first = MacroState.from_temperature(1e-4, [0.3, 0.0, 0.0], 0.008, R)
    second = MacroState.from_temperature(2e-5, [-0.1, 0.2, 0.0], 0.006, R)
    mixed = MacroState.blend(first, second, 0.25, R)
    np.testing.assert_allclose(mixed.conserved(), 0.25 * first.conserved() + 0.75 * second.conserved(),
                               rtol=1e-12)
    assert MacroState.blend(first, second, 1.0, R).T == pytest.approx(first.T, rel=1e-12)
    with pytest.raises(ValueError):
        MacroState.blend(first, second, 1.5, R)
