"""Semi-implicit finite-difference solver for the rescaled selection-mutation equation.

Each step solves, with the competition level ``I`` frozen at the old state,

    (1 + 2 lam - (dt/eps) R(x_i, I^n)) n_i - lam (n_{i-1} + n_{i+1}) = n_i^old,
    lam = eps dt / dx^2,

with reflecting (zero-flux) boundary rows. Diffusion and the linear reaction
are implicit, so the system matrix is an M-matrix whenever
``dt * max R / eps < 1`` and densities stay nonnegative.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import (
    ConsumptionWeight,
    EnvironmentSchedule,
    GrowthModel,
    TraitGrid,
    sample_initial,
    trapezoid,
)

logger = logging.getLogger(__name__)

# relative slack when deciding whether a horizon is a whole number of steps
SNAP_TOL = 1e-12


class SolverError(RuntimeError):
    """Numerical failure; ``t`` is the last time with a valid state."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (last good t = {t!r})")
        self.t = t


@dataclass(frozen=True)
class SolverConfig:
    grid: TraitGrid
    eps: float = 1e-3
    dt: float = 1e-4
    t_end: float = 10.0
    psi: ConsumptionWeight = ConsumptionWeight()
    snapshot_stride: int = 0
    density_floor: float = 0.0
    u_floor: float = -2.0
    boundary: str = "neumann"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.snapshot_stride < 0:
            raise ValueError("snapshot_stride must be >= 0")
        if self.density_floor < 0:
            raise ValueError("density_floor must be >= 0")
        if self.boundary != "neumann":
            raise ValueError("only zero-flux (neumann) boundaries are supported")

    def check_stable(self, model: GrowthModel) -> None:
        """Require ``dt * K0 / eps < 1`` so every system row stays diagonally dominant."""
        K0, _ = model.max_a(self.grid.x_min, self.grid.x_max)
        ratio = self.dt * max(K0, 0.0) / self.eps
        if ratio >= 1:
            raise ValueError(
                f"dt*K0/eps = {ratio:.4g} >= 1: the implicit reaction may lose positivity"
            )


@dataclass
class SimState:
    t: float
    n: np.ndarray
    I: float
    rho: float


@dataclass
class Trajectory:
    """Scalar observables per step plus optional density snapshots."""

    times: np.ndarray
    rho: np.ndarray
    I: np.ndarray
    xbar: np.ndarray
    umax: np.ndarray
    J: np.ndarray
    snapshots: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    final: SimState | None = None

    def __len__(self):
        return len(self.times)

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean mask of records with ``t0 <= t <= t1``."""
        return (self.times >= t0) & (self.times <= t1)

    def value_at(self, name: str, t: float) -> float:
        """Series value at the record closest to ``t``."""
        k = int(np.argmin(np.abs(self.times - t)))
        return float(getattr(self, name)[k])


# kernels ------------------------------------------------------------------

@njit(cache=True)
def _trapz(v, dx):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i]
    return dx * (s - 0.5 * (v[0] + v[-1]))


@njit(cache=True)
def _weighted_trapz(w, v, dx):
    m = v.shape[0]
    s = 0.0
    for i in range(m):
        s += w[i] * v[i]
    return dx * (s - 0.5 * (w[0] * v[0] + w[m - 1] * v[m - 1]))


@njit(cache=True)
def _observe(n, a_vals, psi, x0, dx, eps, u_floor, out, k):
    """Write rho, I, xbar, umax, J of density ``n`` into row ``k`` of ``out``."""
    m = n.shape[0]
    rho = _trapz(n, dx)
    I = _weighted_trapz(psi, n, dx)
    s = 0.0
    for i in range(m):
        s += psi[i] * n[i] * (a_vals[i] - I)
    J = dx * (s - 0.5 * (psi[0] * n[0] * (a_vals[0] - I)
                         + psi[m - 1] * n[m - 1] * (a_vals[m - 1] - I))) / eps
    imax = 0
    for i in range(1, m):
        if n[i] > n[imax]:
            imax = i
    um = u_floor
    if n[imax] > 0:
        um = max(eps * math.log(n[imax]), u_floor)
    xb = x0 + imax * dx
    if 0 < imax < m - 1:
        ul = u_floor
        if n[imax - 1] > 0:
            ul = max(eps * math.log(n[imax - 1]), u_floor)
        ur = u_floor
        if n[imax + 1] > 0:
            ur = max(eps * math.log(n[imax + 1]), u_floor)
        curv = ul - 2.0 * um + ur
        if curv < 0:
            xb += 0.5 * dx * (ul - ur) / curv
            um -= (ur - ul) ** 2 / (8.0 * curv)
    out[k, 0] = rho
    out[k, 1] = I
    out[k, 2] = xb
    out[k, 3] = um
    out[k, 4] = J
    return I


@njit(cache=True)
def _advance(n, a_vals, psi, x0, dx, eps, dt, nsteps, floor, u_floor, out, k0, work):
    """Advance ``n`` in place by ``nsteps`` steps, recording rows ``k0+1..``.

    Returns 0 on success, ``-(j+1)`` if step ``j`` lost diagonal dominance
    and ``j+1`` (positive) if step ``j`` produced a non-finite state.
    """
    m = n.shape[0]
    lam = eps * dt / (dx * dx)
    cp = work[0]
    dp = work[1]
    I = out[k0, 1]
    for j in range(nsteps):
        # forward sweep of the Thomas algorithm; rows 0 and m-1 reflect
        react = 1.0 - dt / eps * (a_vals[0] - I)
        if react <= 0.0:
            return -(j + 1)
        inv = 1.0 / (2.0 * lam + react)
        cp[0] = -2.0 * lam * inv
        dp[0] = n[0] * inv
        for i in range(1, m):
            react = 1.0 - dt / eps * (a_vals[i] - I)
            if react <= 0.0:
                return -(j + 1)
            lower = -2.0 * lam if i == m - 1 else -lam
            inv = 1.0 / (2.0 * lam + react - lower * cp[i - 1])
            cp[i] = -lam * inv
            dp[i] = (n[i] - lower * dp[i - 1]) * inv
        n[m - 1] = dp[m - 1]
        for i in range(m - 2, -1, -1):
            n[i] = dp[i] - cp[i] * n[i + 1]
        if floor > 0.0:
            for i in range(m):
                if n[i] < floor:
                    n[i] = floor
        I = _observe(n, a_vals, psi, x0, dx, eps, u_floor, out, k0 + j + 1)
        if not (math.isfinite(out[k0 + j + 1, 0]) and math.isfinite(I)):
            return j + 1
    return 0


# public operations --------------------------------------------------------

def compute_I(n: np.ndarray, psi: ConsumptionWeight | np.ndarray, grid: TraitGrid) -> float:
    """Total resource consumption, trapezoid quadrature of ``psi * n``."""
    weights = psi if isinstance(psi, np.ndarray) else psi.on_grid(grid)
    return trapezoid(weights * n, grid.dx)


def compute_rho(n: np.ndarray, grid: TraitGrid) -> float:
    """Population size, trapezoid quadrature of ``n``."""
    return trapezoid(np.asarray(n, dtype=float), grid.dx)


def initial_state(n0: np.ndarray, cfg: SolverConfig, t: float = 0.0) -> SimState:
    n0 = np.array(n0, dtype=float)
    if n0.shape != (cfg.grid.n_points,):
        raise ValueError("density does not match the grid")
    if np.any(n0 < 0) or not np.all(np.isfinite(n0)):
        raise ValueError("initial density must be finite and nonnegative")
    return SimState(t, n0, compute_I(n0, cfg.psi, cfg.grid), compute_rho(n0, cfg.grid))


def _check(code: int, t_start: float, dt: float):
    if code == 0:
        return
    j = abs(code) - 1
    t_good = t_start + j * dt
    if code < 0:
        raise SolverError("system matrix lost strict diagonal dominance", t_good)
    raise SolverError("non-finite density", t_good)


def step(state: SimState, cfg: SolverConfig, model: GrowthModel, dt: float | None = None) -> SimState:
    """One semi-implicit step; returns a new state at ``t + dt``."""
    dt = cfg.dt if dt is None else dt
    grid = cfg.grid
    n = state.n.copy()
    psi = cfg.psi.on_grid(grid)
    out = np.empty((2, 5))
    _observe(state.n, model.a(grid.x), psi, grid.x_min, grid.dx, cfg.eps, cfg.u_floor, out, 0)
    out[0, 1] = state.I
    work = np.empty((2, grid.n_points))
    code = _advance(n, model.a(grid.x), psi, grid.x_min, grid.dx, cfg.eps, dt, 1,
                    cfg.density_floor, cfg.u_floor, out, 0, work)
    _check(code, state.t, dt)
    return SimState(state.t + dt, n, float(out[1, 1]), float(out[1, 0]))


def _segments(schedule: EnvironmentSchedule, t_end: float):
    """``(t0, t1, model_id)`` pieces covering ``[0, t_end]``."""
    bounds = [0.0] + schedule.switch_times(t_end) + [t_end]
    pieces = []
    for t0, t1 in zip(bounds, bounds[1:]):
        if t1 - t0 <= SNAP_TOL * max(1.0, t1):
            raise ValueError(f"degenerate schedule segment [{t0}, {t1}]")
        pieces.append((t0, t1, schedule.index_at(t0)))
    return pieces


def _step_plan(length: float, dt: float) -> tuple[int, float]:
    """Number of full steps and the length of a final shortened step (0 if none)."""
    ratio = length / dt
    full = int(math.floor(ratio + SNAP_TOL * max(1.0, ratio)))
    rest = length - full * dt
    if rest <= SNAP_TOL * max(1.0, length):
        return full, 0.0
    return full, rest


def run(cfg: SolverConfig, environment, ic, *, n0: np.ndarray | None = None,
        renormalize: bool = True) -> Trajectory:
    """Integrate from ``t = 0`` to ``cfg.t_end``.

    ``environment`` is a :class:`GrowthModel` or an
    :class:`EnvironmentSchedule`. Models switch exactly at schedule times:
    the step preceding a switch is shortened to land on it.
    """
    schedule = (environment if isinstance(environment, EnvironmentSchedule)
                else EnvironmentSchedule.constant(environment))
    for model in schedule.models:
        cfg.check_stable(model)
    grid = cfg.grid
    if n0 is None:
        n0 = sample_initial(ic, grid, cfg.eps, renormalize=renormalize)
    state = initial_state(n0, cfg)
    n = state.n
    psi = cfg.psi.on_grid(grid)
    a_tables = [model.a(grid.x) for model in schedule.models]

    pieces = _segments(schedule, cfg.t_end) if cfg.t_end > 0 else []
    plans = [_step_plan(t1 - t0, cfg.dt) for t0, t1, _ in pieces]
    total = sum(full + (1 if rest else 0) for full, rest in plans)
    times = np.empty(total + 1)
    out = np.empty((total + 1, 5))
    times[0] = 0.0
    _observe(n, a_tables[schedule.index_at(0.0)], psi, grid.x_min, grid.dx, cfg.eps,
             cfg.u_floor, out, 0)
    snapshots = []
    stride = cfg.snapshot_stride
    if stride:
        snapshots.append((0.0, n.copy()))
    work = np.empty((2, grid.n_points))
    k = 0
    for (t0, t1, model_id), (full, rest) in zip(pieces, plans):
        a_vals = a_tables[model_id]
        done = 0
        while done < full:
            chunk = full - done
            if stride:
                chunk = min(chunk, stride - (k % stride))
            code = _advance(n, a_vals, psi, grid.x_min, grid.dx, cfg.eps, cfg.dt, chunk,
                            cfg.density_floor, cfg.u_floor, out, k, work)
            _check(code, times[k], cfg.dt)
            times[k + 1:k + chunk + 1] = t0 + cfg.dt * np.arange(done + 1, done + chunk + 1)
            done += chunk
            k += chunk
            if stride and k % stride == 0:
                snapshots.append((float(times[k]), n.copy()))
        if rest:
            code = _advance(n, a_vals, psi, grid.x_min, grid.dx, cfg.eps, rest, 1,
                            cfg.density_floor, cfg.u_floor, out, k, work)
            _check(code, times[k], rest)
            k += 1
            if stride and k % stride == 0:
                snapshots.append((t1, n.copy()))
        times[k] = t1

    # a row recorded at a switch instant carries J of the environment that ends there
    traj = Trajectory(times=times, rho=out[:, 0].copy(), I=out[:, 1].copy(),
                      xbar=out[:, 2].copy(), umax=out[:, 3].copy(), J=out[:, 4].copy(),
                      snapshots=snapshots)
    traj.metadata.update(eps=cfg.eps, dt=cfg.dt, dx=grid.dx,
                         density_floor=cfg.density_floor,
                         floor_applied=bool(cfg.density_floor > 0),
                         switch_times=[t0 for t0, _, _ in pieces[1:]])
    _bound_check(traj, schedule, grid)
    traj.final = SimState(float(times[-1]), n, float(traj.I[-1]), float(traj.rho[-1]))
    return traj


def _bound_check(traj: Trajectory, schedule: EnvironmentSchedule, grid: TraitGrid) -> None:
    """Flag runs where ``I`` exceeds ``2 I_M`` despite starting below ``I_M``."""
    try:
        I_M = max(m.bounds(grid).I_M for m in schedule.models)
    except ValueError:
        return
    if traj.I[0] > I_M:
        traj.metadata["bound_checked"] = False
        return
    over = int(np.count_nonzero(traj.I > 2 * I_M))
    traj.metadata["bound_checked"] = True
    traj.metadata["bound_violations"] = over
    if over:
        logger.warning("I exceeded 2*I_M = %g at %d records", 2 * I_M, over)
