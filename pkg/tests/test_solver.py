import numpy as np
import pytest
from hypothesis import given, strategies as st

from diraclab import solver
from diraclab.model import (
    Box,
    EnvironmentSchedule,
    Gaussian,
    GrowthModel,
    TraitGrid,
    sample_initial,
    trapezoid,
)
from diraclab.solver import SolverConfig, SolverError, initial_state, run, step

GRID = TraitGrid.from_spacing(-3.0, 3.0, 1e-2)
FIG1 = GrowthModel.quadratic(r=0.25, g=1.0)


def _cfg(**kw):
    base = dict(grid=GRID, eps=1e-2, dt=1e-3, t_end=0.1)
    base.update(kw)
    return SolverConfig(**base)


def test_zero_horizon_gives_one_row():
    traj = run(_cfg(t_end=0.0), FIG1, Box(-0.6, -0.4, 0.2))
    assert len(traj) == 1
    assert traj.rho[0] == pytest.approx(0.2)


def test_record_count_and_final_time():
    traj = run(_cfg(t_end=0.1), FIG1, Gaussian(0.0, 0.2))
    assert len(traj) == 101
    assert traj.times[-1] == pytest.approx(0.1, abs=1e-14)


def test_unstable_step_is_rejected():
    with pytest.raises(ValueError):
        run(_cfg(dt=1.0), FIG1, Gaussian(0.0, 0.2))


def test_rho_equals_I_for_unit_weight():
    traj = run(_cfg(), FIG1, Gaussian(0.0, 0.2))
    assert np.allclose(traj.rho, traj.I)


def test_step_matches_run():
    cfg = _cfg(t_end=2e-3)
    n0 = sample_initial(Gaussian(0.2, 0.3), GRID, cfg.eps)
    state = initial_state(n0, cfg)
    state = step(step(state, cfg, FIG1), cfg, FIG1)
    traj = run(cfg, FIG1, None, n0=n0)
    assert np.allclose(state.n, traj.final.n, rtol=1e-14, atol=0)


def test_switch_lands_on_schedule_time():
    left = GrowthModel.quadratic(0.5, 1.0, -0.5)
    right = GrowthModel.quadratic(0.5, 1.0, 0.5)
    sched = EnvironmentSchedule.two_state(left, right, 0.00125)
    traj = run(_cfg(t_end=0.005), sched, Gaussian(0.0, 0.2))
    for t in (0.000625, 0.00125, 0.001875):
        assert np.min(np.abs(traj.times - t)) < 1e-15
    assert np.all(np.diff(traj.times) > 0)


def test_snapshots_follow_stride():
    traj = run(_cfg(t_end=0.01, snapshot_stride=5), FIG1, Gaussian(0.0, 0.2))
    assert [round(t, 12) for t, _ in traj.snapshots] == [0.0, 0.005, 0.01]


def test_non_finite_state_reports_last_good_time():
    cfg = _cfg(t_end=0.01)
    n0 = sample_initial(Gaussian(0.0, 0.2), GRID, cfg.eps)
    n0[10] = np.inf
    with pytest.raises(ValueError):
        run(cfg, FIG1, None, n0=n0)
    err = SolverError("non-finite density", 0.25)
    assert err.t == 0.25 and "0.25" in str(err)


def _diffuse(n, eps, dt, steps, dx):
    # reaction switched off: a = 0 and zero consumption weight
    m = n.size
    out = np.zeros((steps + 1, 5))
    work = np.empty((2, m))
    code = solver._advance(n, np.zeros(m), np.zeros(m), 0.0, dx, eps, dt, steps,
                           0.0, -2.0, out, 0, work)
    assert code == 0
    return n


@given(st.integers(0, 2**32 - 1))
def test_mass_is_conserved_without_reaction(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(5, 400))
    dx = 6.0 / (m - 1)
    n = rng.random(m) * rng.random(m)
    before = trapezoid(n, dx)
    eps = float(rng.uniform(1e-3, 1.0))
    dt = float(rng.uniform(1e-5, 1e-1))
    _diffuse(n, eps, dt, 1, dx)
    assert abs(trapezoid(n, dx) - before) <= 1e-12 * before


def test_heat_kernel_match():
    grid = TraitGrid.from_spacing(-3.0, 3.0, 1e-2)
    eps, dt, t = 0.01, 1e-3, 1.0
    x = grid.x
    s0 = 0.04
    n = np.exp(-x**2 / (2 * s0)) / np.sqrt(2 * np.pi * s0)
    _diffuse(n, eps, dt, int(round(t / dt)), grid.dx)
    s1 = s0 + 2 * eps * t
    exact = np.exp(-x**2 / (2 * s1)) / np.sqrt(2 * np.pi * s1)
    assert trapezoid(np.abs(n - exact), grid.dx) <= 1e-2


@given(st.integers(0, 2**32 - 1))
def test_positivity_under_random_valid_configs(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(11, 200))
    grid = TraitGrid(-2.0, 2.0, m)
    eps = float(rng.uniform(1e-3, 1e-1))
    coeffs = rng.uniform(-1.0, 1.0, size=int(rng.integers(1, 5)))
    model = GrowthModel.polynomial(coeffs)
    K0 = max(model.max_a(grid.x_min, grid.x_max)[0], 1e-12)
    dt = float(rng.uniform(0.05, 0.95)) * eps / K0
    dt = min(dt, 0.1)
    cfg = SolverConfig(grid=grid, eps=eps, dt=dt, t_end=5 * dt)
    n0 = rng.random(m) * (rng.random(m) < 0.5)
    n0[m // 2] += 1.0
    traj = run(cfg, model, None, n0=n0)
    assert np.all(traj.final.n >= 0)
    assert np.all(traj.rho > 0)


def test_persistent_population_keeps_positive_I():
    traj = run(_cfg(t_end=0.5), FIG1, Box(-0.6, -0.4, 0.2))
    assert traj.I.min() > 0
    assert traj.metadata["floor_applied"] is False or traj.metadata["floor_applied"] == 0
