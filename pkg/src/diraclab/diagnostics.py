"""Hopf-Cole transform and concentration observables of a density profile."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConsumptionWeight, GrowthModel, TraitGrid, trapezoid

DEFAULT_U_FLOOR = -2.0


@dataclass(frozen=True)
class HopfColeField:
    """``u = eps * log(n)`` clamped below at ``u_floor``."""

    u: np.ndarray
    eps: float
    u_floor: float = DEFAULT_U_FLOOR

    def density(self) -> np.ndarray:
        return np.exp(self.u / self.eps)


@dataclass(frozen=True)
class ConcentrationReport:
    xbar: float
    u_max: float
    curvature: float
    gamma_set: tuple[tuple[float, float], ...]
    index: int
    at_boundary: bool = False


def hopf_cole(n: np.ndarray, eps: float, u_floor: float = DEFAULT_U_FLOOR) -> HopfColeField:
    """Log-transform a nonnegative density; zeros map to ``u_floor``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not u_floor < 0:
        raise ValueError("u_floor must be negative")
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        u = eps * np.log(n)
    u = np.where(n > 0, np.maximum(u, u_floor), u_floor)
    return HopfColeField(u, eps, u_floor)


def _intervals(mask: np.ndarray, x: np.ndarray) -> tuple[tuple[float, float], ...]:
    if not mask.any():
        return ()
    edges = np.diff(mask.astype(np.int8))
    starts = list(np.flatnonzero(edges == 1) + 1)
    stops = list(np.flatnonzero(edges == -1))
    if mask[0]:
        starts.insert(0, 0)
    if mask[-1]:
        stops.append(len(mask) - 1)
    return tuple((float(x[a]), float(x[b])) for a, b in zip(starts, stops))


def concentration_point(field: HopfColeField, grid: TraitGrid,
                        tol_gamma: float | None = None) -> ConcentrationReport:
    """Locate the maximum of ``u`` and the near-maximal set.

    The argmax node is refined by the vertex of the parabola through it and
    its two neighbours; ties go to the smallest ``x``. ``gamma_set`` lists
    maximal intervals where ``u >= -tol_gamma`` (default ``10 * eps``).
    """
    u = field.u
    if not np.all(np.isfinite(u)):
        raise ValueError("Hopf-Cole field must be finite")
    tol = 10 * field.eps if tol_gamma is None else tol_gamma
    x, dx = grid.x, grid.dx
    i = int(np.argmax(u))
    gamma = _intervals(u >= -tol, x)
    if i == 0 or i == len(u) - 1:
        return ConcentrationReport(float(x[i]), float(u[i]), float("nan"), gamma, i, True)
    ul, um, ur = u[i - 1], u[i], u[i + 1]
    second = ul - 2 * um + ur
    xbar, umax = float(x[i]), float(um)
    if second < 0:
        xbar += 0.5 * dx * (ul - ur) / second
        umax -= (ur - ul) ** 2 / (8 * second)
    return ConcentrationReport(xbar, umax, float(second / dx**2), gamma, i)


def compute_J(n: np.ndarray, model: GrowthModel, I: float, eps: float,
              psi: ConsumptionWeight, grid: TraitGrid) -> float:
    """``(1/eps) * integral(psi n R(., I))`` by the trapezoid rule."""
    x = grid.x
    return trapezoid(psi.on_grid(grid) * n * model.R(x, I), grid.dx) / eps


def bv_norm(series, times=None) -> float:
    """Total variation ``sum |Delta I|`` of a sampled series."""
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise ValueError("need at least two samples")
    return float(np.abs(np.diff(series)).sum())


def sub_lipschitz_min_slope(series, times) -> float:
    """Smallest one-sided slope ``min Delta I / Delta t``."""
    series = np.asarray(series, dtype=float)
    times = np.asarray(times, dtype=float)
    if series.size < 2 or series.shape != times.shape:
        raise ValueError("need two equally long series of length >= 2")
    return float((np.diff(series) / np.diff(times)).min())


def constraint_residuals(field: HopfColeField, model: GrowthModel, I: float,
                         grid: TraitGrid) -> tuple[float, float]:
    """``(max u, R(xbar, I))``; both vanish in the limit while ``I`` stays positive."""
    report = concentration_point(field, grid)
    return report.u_max, float(model.R(report.xbar, I))


def layer_depth(eps: float, n_floor: float = 1e-300) -> float:
    """Most negative ``u`` representable above a density floor."""
    return eps * math.log(n_floor)
