import pytest

from diraclab.criteria import (
    CRITICAL,
    EXTINCTION_INTERVAL,
    EXTINCTION_POINT,
    PERSISTENCE,
    UNCLASSIFIED,
    ClassifierTolerances,
    classify_initial,
    limit_sets,
    omega_set,
)
from diraclab.model import Box, Gaussian, GrowthModel, Mixture, TraitGrid
from hypothesis import given, strategies as st

GRID = TraitGrid.from_spacing(-3.0, 3.0, 1e-3)
FIG1 = GrowthModel.quadratic(0.25, 1.0)
QUARTIC = GrowthModel.polynomial([0.0, 0.0, -1.5, 2.75, -1.0])


def _tag(ic, model):
    return classify_initial(ic, model, 1e-3, GRID).tag


@pytest.mark.parametrize("ic, model, tag", [
    (Box(-0.6, -0.4, 0.2), FIG1, PERSISTENCE),
    (Box(-0.7, -0.6, 0.2), FIG1, EXTINCTION_INTERVAL),
    (Gaussian(0.0, 0.2), QUARTIC, CRITICAL),
    (Gaussian(0.75, 0.2), QUARTIC, CRITICAL),
    (Mixture((Gaussian(-0.75, 0.2), Gaussian(0.0, 1.0, eps_scaled=True))), FIG1, UNCLASSIFIED),
    (Box(-0.7, -0.5, 0.2), FIG1, EXTINCTION_POINT),
])
def test_verdicts(ic, model, tag):
    assert _tag(ic, model) == tag


def test_extinction_margin_is_distance_to_viability():
    verdict = classify_initial(Box(-0.7, -0.6, 0.2), FIG1, 1e-3, GRID)
    assert verdict.margin == pytest.approx(0.11)
    assert verdict.witness == pytest.approx(-0.6)


def test_persistence_witness_overlaps_viable_set():
    verdict = classify_initial(Box(-0.6, -0.4, 0.2), FIG1, 1e-3, GRID)
    lo, hi = verdict.witness
    assert (lo, hi) == pytest.approx((-0.5, -0.4))


def test_margin_controls_touching_zero():
    loose = ClassifierTolerances(margin=0.3)
    assert classify_initial(Box(-0.7, -0.6, 0.2), FIG1, 1e-3, GRID, loose).tag == CRITICAL


def test_verdict_ignores_eps():
    ic = Box(-0.7, -0.6, 0.2)
    assert classify_initial(ic, FIG1, 1e-2, GRID) == classify_initial(ic, FIG1, 1e-4, GRID)


def test_limit_sets_drop_vanishing_mass_from_support():
    support, gamma = limit_sets(Mixture((Gaussian(-0.75, 0.2), Gaussian(0.0, 1.0, eps_scaled=True))))
    assert support == [(-0.75, -0.75)]
    assert gamma == [(-0.75, -0.75), (0.0, 0.0)]


def test_omega_of_quartic_at_zero():
    omega = omega_set(QUARTIC, 0.0, GRID)
    assert len(omega) == 1
    assert omega[0] == pytest.approx((0.75, 2.0), abs=1e-9)


@given(st.floats(0.0, 0.8), st.floats(0.0, 0.8))
def test_omega_sets_are_nested(I1, I2):
    lo, hi = sorted((I1, I2))
    inner = omega_set(QUARTIC, hi, GRID)
    outer = omega_set(QUARTIC, lo, GRID)
    for a, b in inner:
        assert any(c <= a + 1e-12 and b <= d + 1e-12 for c, d in outer)


def test_to_dict_is_json_ready():
    d = classify_initial(Box(-0.6, -0.4, 0.2), FIG1, 1e-3, GRID).to_dict()
    assert d["tag"] == PERSISTENCE and isinstance(d["witness"], list)
