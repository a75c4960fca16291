import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diraclab.model import (
    Box,
    ConcavityConstants,
    ConsumptionWeight,
    EnvironmentSchedule,
    Gaussian,
    GroundStateGaussian,
    GrowthModel,
    Mixture,
    ModelError,
    TraitGrid,
    sample_initial,
    trapezoid,
)

GRID = TraitGrid.from_spacing(-3.0, 3.0, 1e-3)
FIG1 = GrowthModel.quadratic(r=0.25, g=1.0)
QUARTIC = GrowthModel.polynomial([0.0, 0.0, -1.5, 2.75, -1.0])


def test_grid_spacing_and_nodes():
    assert GRID.n_points == 6001
    assert GRID.dx == pytest.approx(1e-3, rel=1e-12)
    assert GRID.x[0] == -3.0 and GRID.x[-1] == 3.0
    assert GRID.contains(0.0) and not GRID.contains(3.5)


def test_grid_rejects_bad_input():
    with pytest.raises(ModelError):
        TraitGrid(1.0, -1.0, 10)
    with pytest.raises(ModelError):
        TraitGrid.from_spacing(-1.0, 1.0, 0.0)
    assert TraitGrid.from_spacing(-1.0, 1.0, 0.3).n_points == 8


def test_quadratic_values():
    assert FIG1.a(0.0) == pytest.approx(0.25)
    assert FIG1.R(0.5, 0.0) == pytest.approx(0.0)
    assert FIG1.grad_R(-0.65) == pytest.approx(1.3)
    assert FIG1.D2_R(0.3) == pytest.approx(-2.0)
    assert FIG1.dR_dI() == -1.0


def test_quartic_interior_maximum():
    value, loc = QUARTIC.max_a(-3.0, 3.0)
    assert loc == pytest.approx(1.59114, abs=1e-5)
    assert value == pytest.approx(0.87068, abs=1e-5)


def test_quartic_zeros_are_double_and_simple():
    roots = QUARTIC.zeros_of_R(0.0, -3.0, 3.0)
    assert np.allclose(roots, [0.0, 0.75, 2.0], atol=1e-9)


def test_bounds_on_fig1_grid():
    b = FIG1.bounds(GRID)
    assert b.K0 == pytest.approx(0.25)
    assert b.I_M == pytest.approx(0.25)


def test_concavity_constants_ordering():
    ConcavityConstants.for_quadratic(1.0, 1.0)
    with pytest.raises(ModelError):
        ConcavityConstants(1.0, 2.0, 1.0, 1.0)
    with pytest.raises(ModelError):
        ConcavityConstants(1.0, 1.0, 0.0, 0.0)


def test_consumption_weight_positive():
    assert ConsumptionWeight().limits(GRID) == (1.0, 1.0)
    with pytest.raises(ModelError):
        ConsumptionWeight(0.0)
    with pytest.raises(ModelError):
        ConsumptionWeight(coeffs=(0.0, 1.0)).on_grid(GRID)


def test_box_mass_is_exact():
    n = sample_initial(Box(-0.6, -0.4, 0.2), GRID, 1e-3)
    assert trapezoid(n, GRID.dx) == pytest.approx(0.2, rel=1e-12)
    assert n[np.argmin(np.abs(GRID.x + 0.5))] == pytest.approx(1.0)


def test_gaussian_mass_and_peak():
    n = sample_initial(Gaussian(0.0, 0.2), GRID, 1e-3)
    assert trapezoid(n, GRID.dx) == pytest.approx(0.2, rel=1e-12)
    assert GRID.x[np.argmax(n)] == pytest.approx(0.0)


def test_eps_scaled_component_has_eps_mass():
    n = sample_initial(Gaussian(0.0, 1.0, eps_scaled=True), GRID, 1e-3)
    assert trapezoid(n, GRID.dx) == pytest.approx(1e-3, rel=1e-12)


def test_ground_state_width():
    eps = 1e-3
    n = sample_initial(GroundStateGaussian(4.0, 0.0, 1.0), GRID, eps, renormalize=False)
    var = trapezoid(GRID.x**2 * n, GRID.dx) / trapezoid(n, GRID.dx)
    assert var == pytest.approx(eps / 2.0, rel=1e-6)


def test_mixture_sums_components():
    mix = Mixture((Gaussian(-0.75, 0.2), Gaussian(0.0, 1.0, eps_scaled=True)))
    n = sample_initial(mix, GRID, 1e-3)
    assert trapezoid(n, GRID.dx) == pytest.approx(0.201, rel=1e-12)


def test_initial_outside_grid():
    with pytest.raises(ModelError):
        sample_initial(Box(4.0, 5.0, 1.0), GRID, 1e-3)
    with pytest.raises(ModelError):
        sample_initial(Gaussian(9.0, 1.0), GRID, 1e-3)


def test_two_state_schedule():
    left = GrowthModel.quadratic(0.5, 1.0, -0.5)
    right = GrowthModel.quadratic(0.5, 1.0, 0.5)
    sched = EnvironmentSchedule.two_state(left, right, 1.0)
    assert sched.model_at(0.0) is left
    assert sched.model_at(0.5) is right  # right-continuous
    assert sched.model_at(1.0) is left
    assert sched.model_at(0.49999) is left
    assert sched.switch_times(2.0) == pytest.approx([0.5, 1.0, 1.5])


@given(st.floats(0.05, 10.0), st.integers(0, 200))
def test_periodic_switch_instants_are_right_continuous(period, k):
    left = GrowthModel.quadratic(0.5, 1.0, -0.5)
    right = GrowthModel.quadratic(0.5, 1.0, 0.5)
    sched = EnvironmentSchedule.two_state(left, right, period)
    assert sched.index_at(k * period) == 0
    assert sched.index_at(k * period + period / 2) == 1


@given(st.floats(-2.5, 2.5), st.floats(0.0, 1.0))
def test_R_is_affine_in_I(x, I):
    assert QUARTIC.R(x, I) == pytest.approx(QUARTIC.a(x) - I, abs=1e-12)
    assert math.isfinite(QUARTIC.grad_R(x))
