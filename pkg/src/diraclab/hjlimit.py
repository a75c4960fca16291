"""Small-mutation limit dynamics of a concentrated population.

The dominant trait follows the canonical equation
``dx/dt = grad_x R(x, I) / M`` where ``M = -D2 u(t, xbar)``. The curvature is
closed with the quadratic ansatz ``u = w(t) - M (x - xbar)^2 / 2``, which
gives the Riccati law ``dM/dt = -2 M^2 - D2_x R(xbar, I)`` and
``dw/dt = R(xbar, I)``. The ansatz is exact for quadratic growth rates and
Gaussian initial data.

While persistent, ``I`` solves ``R(xbar, I) = 0``; while extinct ``I = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ConcavityConstants, EnvironmentSchedule, GrowthModel

PERSISTENT = "Persistent"
EXTINCT = "Extinct"

CROSSING_TOL = 1e-9


class HJError(RuntimeError):
    pass


@dataclass(frozen=True)
class HJState:
    xbar: float
    M: float
    I: float
    phase: str
    t: float = 0.0
    w: float = 0.0  # u(t, xbar); stays 0 while the constraint is active


@dataclass(frozen=True)
class DurationBounds:
    lower: float
    upper: float
    A1: float
    A2: float
    x_end: float


@dataclass
class HJTrajectory:
    t: np.ndarray
    xbar: np.ndarray
    M: np.ndarray
    I: np.ndarray
    phase: list
    w: np.ndarray
    events: list = field(default_factory=list)

    def first_event(self, kind: str):
        for event in self.events:
            if event["kind"] == kind:
                return event
        return None


def solve_I_constraint(model: GrowthModel, xbar: float) -> float:
    """Competition level with ``R(xbar, I) = 0``; exact for ``R = a(x) - I``."""
    level = float(model.a(xbar))
    if level < 0:
        raise HJError(f"R({xbar}, 0) = {level} < 0: no nonnegative constraint root")
    return level


def _rhs(model: GrowthModel, x: float, M: float) -> tuple[float, float]:
    # separable growth: gradient and curvature do not depend on I
    return float(model.grad_R(x)) / M, -2.0 * M * M - float(model.D2_R(x))


def _rk4(model: GrowthModel, x: float, M: float, dt: float) -> tuple[float, float]:
    k1x, k1m = _rhs(model, x, M)
    k2x, k2m = _rhs(model, x + 0.5 * dt * k1x, M + 0.5 * dt * k1m)
    k3x, k3m = _rhs(model, x + 0.5 * dt * k2x, M + 0.5 * dt * k2m)
    k4x, k4m = _rhs(model, x + dt * k3x, M + dt * k3m)
    return (x + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6,
            M + dt * (k1m + 2 * k2m + 2 * k3m + k4m) / 6)


def _advance(state: HJState, model: GrowthModel, dt: float) -> HJState:
    x, M = _rk4(model, state.xbar, state.M, dt)
    if not M > 0 or not math.isfinite(x):
        raise HJError(f"curvature closure broke down at t = {state.t + dt} (M = {M})")
    w = state.w
    if state.phase == EXTINCT:
        # Simpson on the growth deficit along the step
        xm, _ = _rk4(model, state.xbar, state.M, dt / 2)
        w += dt * (model.a(state.xbar) + 4 * model.a(xm) + model.a(x)) / 6
    I = solve_I_constraint(model, x) if state.phase == PERSISTENT else 0.0
    return HJState(x, M, I, state.phase, state.t + dt, float(w))


def phase_for(model: GrowthModel, xbar: float) -> str:
    return PERSISTENT if model.a(xbar) > 0 else EXTINCT


def initial_hj_state(model: GrowthModel, x0: float, M0: float) -> HJState:
    if not M0 > 0:
        raise HJError("M0 must be positive")
    phase = phase_for(model, x0)
    I = solve_I_constraint(model, x0) if phase == PERSISTENT else 0.0
    return HJState(float(x0), float(M0), I, phase)


def hj_step(state: HJState, model: GrowthModel, dt: float) -> HJState:
    """One RK4 step of the canonical/Riccati system, then the phase check.

    An extinct state turns persistent once ``R(xbar, 0) >= 0``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    new = _advance(state, model, dt)
    if new.phase == EXTINCT and model.a(new.xbar) >= 0:
        new = replace(new, phase=PERSISTENT, I=solve_I_constraint(model, new.xbar))
    return new


def _crossing(state: HJState, model: GrowthModel, dt: float) -> float:
    """Sub-step length at which ``R(xbar, 0)`` reaches 0, by bisection."""
    lo, hi = 0.0, dt
    while hi - lo > CROSSING_TOL:
        mid = 0.5 * (lo + hi)
        x, _ = _rk4(model, state.xbar, state.M, mid)
        if model.a(x) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def extinction_duration_bounds(model: GrowthModel, xbar0: float,
                               constants: ConcavityConstants) -> DurationBounds:
    """Two-sided bound on the time the dominant trait needs to become viable.

    ``A1 (-h0) / |grad0|^2 <= T <= A2 (-h0) / |grad_end|^2`` with
    ``h0 = R(xbar0, 0)`` and ``grad_end`` taken at the first zero of
    ``R(., 0)`` in the direction of motion.
    """
    A1 = min(2 * constants.L1_upper, math.sqrt(constants.K2_upper))
    A2 = max(2 * constants.L1_lower, math.sqrt(constants.K2_lower))
    h0 = float(model.a(xbar0))
    if h0 == 0:
        return DurationBounds(0.0, 0.0, A1, A2, float(xbar0))
    if h0 > 0:
        raise HJError(f"xbar0 = {xbar0} is viable (R = {h0} > 0): no extinction phase")
    grad0 = float(model.grad_R(xbar0))
    if grad0 == 0:
        raise HJError("vanishing gradient at xbar0: the extinction phase never ends")
    span = 1e3 * (1 + abs(xbar0))
    roots = model.zeros_of_R(0.0, xbar0 - span, xbar0 + span)
    ahead = roots[roots > xbar0] if grad0 > 0 else roots[roots < xbar0][::-1]
    if ahead.size == 0:
        raise HJError("no viable trait in the direction of motion")
    x_end = float(ahead[0])
    grad_end = float(model.grad_R(x_end))
    return DurationBounds(A1 * -h0 / grad0**2, A2 * -h0 / grad_end**2, A1, A2, x_end)


def hj_simulate(schedule, x0: float, M0: float, t_end: float, dt: float = 1e-3) -> HJTrajectory:
    """Integrate the limit dynamics across environment switches.

    At every switch the phase is re-decided from the new landscape:
    ``R_new(xbar, 0) > 0`` keeps the population, otherwise it is extinct.
    ``xbar`` and ``M`` are continuous across switches. Events record phase
    flips (``kind`` in ``{"switch", "recovery", "closure_recovery"}``);
    ``closure_recovery`` marks the first time after an extinction where
    ``u(t, xbar)`` would return to 0 with ``I = 0``.
    """
    if isinstance(schedule, GrowthModel):
        schedule = EnvironmentSchedule.constant(schedule)
    if not dt > 0 or t_end < 0:
        raise ValueError("need dt > 0 and t_end >= 0")
    model = schedule.model_at(0.0)
    state = initial_hj_state(model, x0, M0)
    rec = [state]
    events = []
    deficit = None  # running integral of a(xbar) since the last extinction onset
    if state.phase == EXTINCT:
        deficit = 0.0
    switches = schedule.switch_times(t_end) + [t_end]
    t0 = 0.0
    for t1 in switches:
        model = schedule.model_at(t0)
        if t0 > 0:
            phase = phase_for(model, state.xbar)
            if phase != state.phase:
                events.append({"kind": "switch", "t": t0, "phase": phase, "xbar": state.xbar})
            I = solve_I_constraint(model, state.xbar) if phase == PERSISTENT else 0.0
            state = replace(state, phase=phase, I=I)
            if phase == EXTINCT and deficit is None:
                deficit = 0.0
            rec[-1] = state
        while t1 - state.t > 1e-12 * max(1.0, t1):
            h = min(dt, t1 - state.t)
            if deficit is not None:
                x_next, _ = _rk4(model, state.xbar, state.M, h)
                xm, _ = _rk4(model, state.xbar, state.M, h / 2)
                gain = h * (model.a(state.xbar) + 4 * model.a(xm) + model.a(x_next)) / 6
                if deficit + gain >= 0 and state.phase == PERSISTENT:
                    events.append({"kind": "closure_recovery", "t": state.t + h})
                    deficit = None
                else:
                    deficit += gain
            new = _advance(state, model, h)
            if state.phase == EXTINCT and model.a(new.xbar) >= 0:
                s = _crossing(state, model, h)
                mid = _advance(state, model, s)
                mid = replace(mid, phase=PERSISTENT, I=solve_I_constraint(model, mid.xbar))
                events.append({"kind": "recovery", "t": mid.t, "xbar": mid.xbar,
                               "R": float(model.a(mid.xbar))})
                rec.append(mid)
                new = _advance(mid, model, h - s) if h - s > 1e-15 else mid
                if h - s > 1e-15:
                    new = replace(new, I=solve_I_constraint(model, new.xbar))
            state = new
            rec.append(state)
        state = replace(state, t=t1)
        rec[-1] = state
        t0 = t1
    return HJTrajectory(
        t=np.array([s.t for s in rec]),
        xbar=np.array([s.xbar for s in rec]),
        M=np.array([s.M for s in rec]),
        I=np.array([s.I for s in rec]),
        phase=[s.phase for s in rec],
        w=np.array([s.w for s in rec]),
        events=events,
    )
