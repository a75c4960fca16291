import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diraclab.diagnostics import (
    HopfColeField,
    bv_norm,
    compute_J,
    concentration_point,
    constraint_residuals,
    hopf_cole,
    layer_depth,
    sub_lipschitz_min_slope,
)
from diraclab.model import ConsumptionWeight, GrowthModel, TraitGrid

GRID = TraitGrid.from_spacing(-1.0, 1.0, 1e-3)


def test_hopf_cole_floor_for_zero_density():
    field = hopf_cole(np.array([0.0, 1.0, math.e]), 0.5)
    assert field.u.tolist() == [-2.0, 0.0, 0.5]


@given(st.floats(1e-4, 1.0), st.lists(st.floats(1e-200, 1e3), min_size=1, max_size=50))
def test_hopf_cole_round_trip(eps, values):
    n = np.array(values)
    field = hopf_cole(n, eps, u_floor=-1e9)
    assert np.allclose(field.density(), n, rtol=1e-10, atol=0)


def test_concentration_point_refines_off_grid_vertex():
    eps = 1e-3
    u = -(GRID.x - 0.12345) ** 2 / 2
    report = concentration_point(hopf_cole(np.exp(u / eps), eps), GRID)
    assert report.xbar == pytest.approx(0.12345, abs=1e-9)
    assert report.u_max == pytest.approx(0.0, abs=1e-9)
    assert report.curvature == pytest.approx(-1.0, rel=1e-6)
    assert not report.at_boundary


def test_gamma_set_lists_near_maximal_intervals():
    eps = 1e-3
    u = np.maximum(-(GRID.x + 0.5) ** 2, -(GRID.x - 0.5) ** 2)
    report = concentration_point(hopf_cole(np.exp(u / eps), eps), GRID)
    assert len(report.gamma_set) == 2


@given(st.floats(-0.5, 0.5), st.floats(-1.0, 1.0))
def test_argmax_invariant_under_shift(center, shift):
    eps = 1e-3
    u = -((GRID.x - center) ** 2)
    base = concentration_point(HopfColeField(u, eps), GRID)
    moved = concentration_point(HopfColeField(u + shift, eps), GRID)
    assert moved.index == base.index
    assert moved.xbar == pytest.approx(base.xbar, abs=1e-9)


def test_J_vanishes_at_equilibrium_competition():
    model = GrowthModel.polynomial([0.3])
    n = np.ones(GRID.n_points)
    assert compute_J(n, model, 0.3, 1e-3, ConsumptionWeight(), GRID) == pytest.approx(0.0, abs=1e-9)


def test_bv_and_slope():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    series = np.array([1.0, 0.0, 2.0, 1.5])
    assert bv_norm(series) == 3.5
    assert sub_lipschitz_min_slope(series, t) == -1.0
    with pytest.raises(ValueError):
        bv_norm([1.0])


def test_constraint_residuals_on_concentrated_state():
    eps = 1e-3
    model = GrowthModel.quadratic(0.25, 1.0)
    u = -(GRID.x**2) / 2
    umax, residual = constraint_residuals(hopf_cole(np.exp(u / eps), eps), model, 0.25, GRID)
    assert abs(umax) < 1e-9 and abs(residual) < 1e-9


def test_layer_depth():
    assert layer_depth(1e-3) == pytest.approx(-0.6907755, rel=1e-6)
