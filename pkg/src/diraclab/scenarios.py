"""Named run configurations for the published numerical experiments.

All presets share ``dx = eps = 1e-3`` and ``dt = 1e-4`` on ``[-3, 3]``.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .config import HJSettings, RunConfig, SweepSettings
from .model import (
    Box,
    EnvironmentSchedule,
    Gaussian,
    GroundStateGaussian,
    GrowthModel,
    Mixture,
    TraitGrid,
)
from .solver import SolverConfig

GRID = TraitGrid.from_spacing(-3.0, 3.0, 1e-3)

FIG1_A = GrowthModel.quadratic(r=0.25, g=1.0, theta=0.0)
# -x^2 (x - 0.75)(x - 2)
QUARTIC = GrowthModel.polynomial([0.0, 0.0, -1.5, 2.75, -1.0])
FIG7_UNIMODAL = GrowthModel.polynomial([0.7, 0.0, -0.2])
FIG7_BIMODAL = GrowthModel.polynomial([0.2, 0.0, 0.8, 0.0, -2.0 / 3.0])


def _switching(theta: float, g: float, r: float, period: float) -> EnvironmentSchedule:
    left = GrowthModel.quadratic(r=r, g=g, theta=-theta)
    right = GrowthModel.quadratic(r=r, g=g, theta=theta)
    return EnvironmentSchedule.two_state(left, right, period)


def fig6_periods(count: int = 16) -> list[float]:
    return [float(T) for T in np.geomspace(0.1, 5.0, count)]


def _solver(t_end: float) -> SolverConfig:
    return SolverConfig(grid=GRID, eps=1e-3, dt=1e-4, t_end=t_end)


def _build() -> dict[str, RunConfig]:
    fig1 = EnvironmentSchedule.constant(FIG1_A)
    quartic = EnvironmentSchedule.constant(QUARTIC)
    presets = {
        "fig1-persistence": RunConfig(
            name="fig1-persistence", schedule=fig1, ic=Box(-0.6, -0.4, 0.2),
            solver=_solver(10.0), hj=HJSettings(x0=-0.5, M0=1.0, t_end=10.0)),
        "fig1-extinction": RunConfig(
            name="fig1-extinction", schedule=fig1, ic=Box(-0.7, -0.6, 0.2),
            solver=_solver(10.0), hj=HJSettings(x0=-0.65, M0=1.0, t_end=10.0)),
        "fig2-far": RunConfig(
            name="fig2-far", schedule=quartic, ic=Gaussian(0.0, 0.2),
            solver=_solver(5.0), hj=HJSettings(x0=0.0, M0=1.0, t_end=5.0)),
        "fig2-near": RunConfig(
            name="fig2-near", schedule=quartic, ic=Gaussian(0.75, 0.2),
            solver=_solver(5.0), hj=HJSettings(x0=0.75, M0=1.0, t_end=5.0)),
        "fig4-remark": RunConfig(
            name="fig4-remark", schedule=fig1,
            ic=Mixture((Gaussian(-0.75, 0.2), Gaussian(0.0, 1.0, eps_scaled=True))),
            solver=_solver(5.0), hj=HJSettings(x0=-0.75, M0=1.0, t_end=5.0)),
        "fig5-slow": RunConfig(
            name="fig5-slow", schedule=_switching(0.5, 1.0, 0.5, 1.0),
            ic=GroundStateGaussian(1.0, 0.0, 0.25),
            solver=_solver(10.0), hj=HJSettings(x0=0.0, M0=1.0, t_end=10.0),
            sweep=SweepSettings(values=(0.2, 1.0))),
        "fig5-fast": RunConfig(
            name="fig5-fast", schedule=_switching(0.5, 1.0, 0.5, 0.2),
            ic=GroundStateGaussian(1.0, 0.0, 0.25),
            solver=_solver(4.0), hj=HJSettings(x0=0.0, M0=1.0, t_end=4.0),
            sweep=SweepSettings(values=(0.2, 1.0))),
        "fig6-sweep": RunConfig(
            name="fig6-sweep", schedule=_switching(1.0, 0.2, 1.0, 1.0),
            ic=GroundStateGaussian(0.2, 0.0, 0.25),
            solver=_solver(11.0), hj=HJSettings(x0=0.0, M0=0.2**0.5, t_end=11.0),
            sweep=SweepSettings(values=tuple(fig6_periods()))),
        "fig7-slow": RunConfig(
            name="fig7-slow",
            schedule=EnvironmentSchedule.two_state(FIG7_UNIMODAL, FIG7_BIMODAL, 10.0),
            ic=Gaussian(1.0, 0.25), solver=_solver(100.0),
            hj=HJSettings(x0=1.0, M0=1.0, t_end=100.0)),
        "fig7-fast": RunConfig(
            name="fig7-fast",
            schedule=EnvironmentSchedule.two_state(FIG7_UNIMODAL, FIG7_BIMODAL, 1.0),
            ic=Gaussian(1.0, 0.25), solver=_solver(10.0),
            hj=HJSettings(x0=1.0, M0=1.0, t_end=10.0)),
    }
    return presets


PRESETS = _build()
PRESET_IDS = tuple(PRESETS)


def preset(preset_id: str) -> RunConfig:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise KeyError(f"unknown preset {preset_id!r}; known: {', '.join(PRESET_IDS)}") from None


def with_period(cfg: RunConfig, period: float, burn_in_periods: int | None = None) -> RunConfig:
    """Copy of a two-state periodic config with a new period and matching horizon."""
    sched = cfg.schedule
    if sched.period is None:
        raise ValueError("config has no periodic schedule")
    scale = period / sched.period
    segments = tuple((start * scale, k) for start, k in sched.segments)
    schedule = replace(sched, segments=segments, period=period)
    if burn_in_periods is None:
        by_time = math.ceil(cfg.sweep.min_burn_in_time / period - 1e-9)
        burn_in_periods = max(cfg.sweep.burn_in_periods, by_time)
    periods = burn_in_periods
    t_end = (periods + 1) * period
    return replace(cfg, schedule=schedule, solver=replace(cfg.solver, t_end=t_end))
