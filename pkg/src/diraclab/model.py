"""Trait grids, growth-rate landscapes, initial data and environment schedules.

Every growth rate handled here has the separable form ``R(x, I) = a(x) - I``
with ``a`` a polynomial, so all x-derivatives are exact and the
competition sensitivity ``dR/dI`` is identically ``-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial


class ModelError(ValueError):
    """Raised for invalid model, grid, initial-data or schedule definitions."""


@dataclass(frozen=True)
class TraitGrid:
    """Uniform 1-D grid ``x_i = x_min + i*dx`` on a truncated trait domain."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ModelError("grid bounds must be finite")
        if self.x_min >= self.x_max:
            raise ModelError(f"x_min={self.x_min} must be smaller than x_max={self.x_max}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ModelError(f"n_points must be an integer >= 3, got {self.n_points}")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> "TraitGrid":
        """Grid with spacing as close as possible to ``dx`` (endpoints kept exact)."""
        if dx <= 0:
            raise ModelError("dx must be positive")
        n_cells = int(round((x_max - x_min) / dx))
        return cls(x_min, x_max, max(n_cells, 2) + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    def contains(self, x: float) -> bool:
        return self.x_min <= x <= self.x_max


@dataclass(frozen=True)
class GrowthBounds:
    """Structural constants of a growth rate on a truncated domain.

    ``K2`` and ``K3`` give the lower envelope ``R >= -K2 - K3 x**2`` for
    ``0 <= I <= 2 I_M``; ``K0`` bounds ``R`` from above on the same range.
    """

    K0: float
    K1: float
    K2: float
    K3: float
    I_M: float

    def __post_init__(self):
        if self.K1 < 1:
            raise ModelError("K1 must be >= 1")
        if self.I_M <= 0:
            raise ModelError("I_M must be positive")


@dataclass(frozen=True)
class ConcavityConstants:
    """Two-sided curvature constants of the growth rate and of ``u^0``.

    ``-2*K2_lower <= D2 R <= -2*K2_upper`` and
    ``-2*L1_lower <= D2 u0 <= -2*L1_upper``.
    """

    K2_lower: float
    K2_upper: float
    L1_lower: float
    L1_upper: float

    def __post_init__(self):
        for name in ("K2_lower", "K2_upper", "L1_lower", "L1_upper"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive")
        if self.K2_upper > self.K2_lower:
            raise ModelError("K2_upper must not exceed K2_lower")
        if self.L1_upper > self.L1_lower:
            raise ModelError("L1_upper must not exceed L1_lower")

    @classmethod
    def for_quadratic(cls, g: float, M0: float) -> "ConcavityConstants":
        """Constants for ``R = r - g(x-theta)^2 - I`` and ``u0 = -M0 (x-x0)^2 / 2``."""
        return cls(K2_lower=g, K2_upper=g, L1_lower=M0 / 2, L1_upper=M0 / 2)


@dataclass(frozen=True)
class GrowthModel:
    """Growth rate ``R(x, I) = a(x) - I`` with polynomial ``a``.

    Use :meth:`quadratic` for ``a(x) = r - g (x - theta)^2`` and
    :meth:`polynomial` for arbitrary coefficients (ascending powers).
    """

    coeffs: tuple[float, ...]
    form: str = "polynomial"
    r: float | None = None
    g: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if not self.coeffs:
            raise ModelError("growth polynomial needs at least one coefficient")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ModelError("growth coefficients must be finite")
        if self.form not in ("polynomial", "quadratic"):
            raise ModelError(f"unknown growth form {self.form!r}")
        if self.form == "quadratic" and not (self.g is not None and self.g > 0):
            raise ModelError("quadratic growth needs g > 0")

    @classmethod
    def quadratic(cls, r: float, g: float, theta: float = 0.0) -> "GrowthModel":
        if not g > 0:
            raise ModelError("quadratic growth needs g > 0")
        coeffs = (r - g * theta**2, 2 * g * theta, -g)
        return cls(tuple(float(c) for c in coeffs), "quadratic", float(r), float(g), float(theta))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "GrowthModel":
        coeffs = [float(c) for c in coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        return cls(tuple(coeffs))

    @property
    def a_poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    def a(self, x):
        """Growth rate without competition, ``R(x, 0)``."""
        return self.a_poly(x)

    def R(self, x, I):
        return self.a_poly(x) - I

    def grad_R(self, x, I=0.0):
        # separable: independent of I
        return self.a_poly.deriv(1)(x) if len(self.coeffs) > 1 else 0.0 * np.asarray(x, float)

    def D2_R(self, x, I=0.0):
        return self.a_poly.deriv(2)(x) if len(self.coeffs) > 2 else 0.0 * np.asarray(x, float)

    def dR_dI(self, x=None, I=None) -> float:
        return -1.0

    def critical_points(self, lo: float, hi: float) -> np.ndarray:
        """Real zeros of ``a'`` in ``[lo, hi]``."""
        if len(self.coeffs) < 3:
            return np.empty(0)
        roots = self.a_poly.deriv(1).roots()
        real = roots[np.abs(roots.imag) < 1e-10].real
        return np.sort(real[(real >= lo) & (real <= hi)])

    def max_a(self, lo: float, hi: float) -> tuple[float, float]:
        """Maximum of ``a`` on ``[lo, hi]`` as ``(value, location)``."""
        candidates = np.concatenate([[lo, hi], self.critical_points(lo, hi)])
        values = self.a(candidates)
        k = int(np.argmax(values))
        return float(values[k]), float(candidates[k])

    def zeros_of_R(self, I: float, lo: float, hi: float) -> np.ndarray:
        """Sorted real roots of ``a(x) - I`` inside ``[lo, hi]``."""
        p = self.a_poly - I
        if p.degree() < 1:
            return np.empty(0)
        roots = p.roots()
        real = roots[np.abs(roots.imag) < 1e-9 * max(1.0, np.abs(roots).max())].real
        # polish: repeated roots come back with O(sqrt(eps)) scatter
        real = np.array([_newton_polish(p, r) for r in real])
        return np.unique(np.sort(real[(real >= lo) & (real <= hi)]))

    def bounds(self, grid: TraitGrid, I_M: float | None = None) -> GrowthBounds:
        """Structural constants on the truncated domain of ``grid``.

        ``I_M`` is the level at which the best trait stops growing,
        ``max_x R(x, I_M) = 0``; when ``a`` has no positive part an explicit
        cap must be supplied.
        """
        top, _ = self.max_a(grid.x_min, grid.x_max)
        if I_M is None:
            if top <= 0:
                raise ModelError("a(x) <= 0 on the whole domain: supply I_M explicitly")
            I_M = top
        x = grid.x
        low = self.a(x) - 2 * I_M
        deficit = np.maximum(0.0, -low)
        near = np.abs(x) < 1.0
        K2 = float(deficit[near].max()) if near.any() else 0.0
        K3 = float((deficit[~near] / x[~near] ** 2).max()) if (~near).any() else 0.0
        return GrowthBounds(K0=max(top, 0.0), K1=1.0, K2=K2, K3=K3, I_M=float(I_M))

    def to_dict(self) -> dict:
        if self.form == "quadratic":
            return {"form": "quadratic", "r": self.r, "g": self.g, "theta": self.theta}
        return {"form": "polynomial", "coeffs": list(self.coeffs)}


def _newton_polish(p: Polynomial, x: float, iters: int = 8) -> float:
    dp = p.deriv(1)
    for _ in range(iters):
        d = dp(x)
        if d == 0:
            break
        step = p(x) / d
        if not math.isfinite(step) or abs(step) > 1e-3:
            break
        x -= step
        if abs(step) < 1e-16:
            break
    return float(x)


def eval_R(model: GrowthModel, x, I):
    return model.R(x, I)


def eval_grad_R(model: GrowthModel, x, I=0.0):
    return model.grad_R(x, I)


def eval_D2_R(model: GrowthModel, x, I=0.0):
    return model.D2_R(x, I)


@dataclass(frozen=True)
class ConsumptionWeight:
    """Resource consumption weight ``psi``; constant unless ``coeffs`` is given."""

    value: float = 1.0
    coeffs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.coeffs is None and not self.value > 0:
            raise ModelError("constant consumption weight must be positive")

    def __call__(self, x):
        if self.coeffs is None:
            return np.full_like(np.asarray(x, dtype=float), self.value)
        return Polynomial(self.coeffs)(np.asarray(x, dtype=float))

    def on_grid(self, grid: TraitGrid) -> np.ndarray:
        values = self(grid.x)
        if not np.all(values > 0):
            raise ModelError("consumption weight must be strictly positive on the grid")
        return values

    def limits(self, grid: TraitGrid) -> tuple[float, float]:
        """``(psi_m, psi_M)`` over the grid nodes."""
        values = self.on_grid(grid)
        return float(values.min()), float(values.max())


# Initial data -------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Uniform density ``mass/(c-b)`` on ``[b, c]``."""

    b: float
    c: float
    mass: float

    def __post_init__(self):
        if not self.b < self.c:
            raise ModelError("Box needs b < c")
        if not self.mass > 0:
            raise ModelError("mass must be positive")


@dataclass(frozen=True)
class Gaussian:
    """``mass/sqrt(2 pi eps) exp(-(x-center)^2 / (2 eps))``.

    With ``eps_scaled`` the mass is multiplied by ``eps``; such a component
    vanishes in the small-mutation limit yet still marks a maximum of ``u^0``.
    """

    center: float
    mass: float
    eps_scaled: bool = False

    def __post_init__(self):
        if not self.mass > 0:
            raise ModelError("mass must be positive")


@dataclass(frozen=True)
class GroundStateGaussian:
    """``mass g^(1/4)/sqrt(2 pi eps) exp(-sqrt(g) (x-center)^2 / (2 eps))``."""

    g: float
    center: float
    mass: float
    eps_scaled: bool = False

    def __post_init__(self):
        if not self.g > 0:
            raise ModelError("GroundStateGaussian needs g > 0")
        if not self.mass > 0:
            raise ModelError("mass must be positive")


@dataclass(frozen=True)
class Mixture:
    """Sum of ``weight * component``."""

    components: tuple = field(default_factory=tuple)
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.components:
            raise ModelError("Mixture needs at least one component")
        if any(isinstance(c, Mixture) for c in self.components):
            raise ModelError("nested mixtures are not supported")
        if self.weights is not None:
            if len(self.weights) != len(self.components):
                raise ModelError("one weight per mixture component")
            if not all(w > 0 for w in self.weights):
                raise ModelError("mixture weights must be positive")

    def weighted(self):
        weights = self.weights or (1.0,) * len(self.components)
        return list(zip(weights, self.components))


InitialCondition = Box | Gaussian | GroundStateGaussian | Mixture


def _box_density(ic: Box, grid: TraitGrid) -> np.ndarray:
    # cell-average of the indicator: trapezoid mass is exact for interior boxes
    x, dx = grid.x, grid.dx
    lo = np.maximum(x - dx / 2, ic.b)
    hi = np.minimum(x + dx / 2, ic.c)
    frac = np.clip(hi - lo, 0.0, None) / dx
    return ic.mass / (ic.c - ic.b) * frac


def _gaussian_density(center, mass, stiffness, eps, grid, renormalize):
    x = grid.x
    n = mass * stiffness**0.25 / math.sqrt(2 * math.pi * eps) * np.exp(
        -math.sqrt(stiffness) * (x - center) ** 2 / (2 * eps)
    )
    if renormalize:
        total = trapezoid(n, grid.dx)
        if total > 0:
            n *= mass / total
    return n


def trapezoid(values: np.ndarray, dx: float) -> float:
    """Trapezoid rule on a uniform grid."""
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def sample_initial(ic, grid: TraitGrid, eps: float, renormalize: bool = True) -> np.ndarray:
    """Evaluate an initial density on the grid.

    Gaussian kinds are renormalized so that the discrete mass equals the
    requested one unless ``renormalize`` is false.

    Raises
    ------
    ModelError
        If ``eps`` is not positive or the support misses the domain.
    """
    if not eps > 0:
        raise ModelError("eps must be positive")
    if isinstance(ic, Mixture):
        parts = [w * sample_initial(c, grid, eps, renormalize) for w, c in ic.weighted()]
        return np.sum(parts, axis=0)
    if isinstance(ic, Box):
        if ic.c <= grid.x_min or ic.b >= grid.x_max:
            raise ModelError(f"box [{ic.b}, {ic.c}] lies outside the grid")
        return _box_density(ic, grid)
    if isinstance(ic, (Gaussian, GroundStateGaussian)):
        if not grid.contains(ic.center):
            raise ModelError(f"Gaussian center {ic.center} lies outside the grid")
        mass = ic.mass * eps if ic.eps_scaled else ic.mass
        stiffness = ic.g if isinstance(ic, GroundStateGaussian) else 1.0
        return _gaussian_density(ic.center, mass, stiffness, eps, grid, renormalize)
    raise ModelError(f"unsupported initial condition {ic!r}")


# Environment --------------------------------------------------------------

@dataclass(frozen=True)
class EnvironmentSchedule:
    """Piecewise-constant environment ``t -> models[segment model id]``.

    ``segments`` holds ``(t_start, model_id)`` pairs with ``t_start``
    strictly increasing from 0. With ``period`` set the pattern repeats,
    and the segments must fit inside one period.
    """

    models: tuple[GrowthModel, ...]
    segments: tuple[tuple[float, int], ...] = ((0.0, 0),)
    period: float | None = None

    def __post_init__(self):
        if not self.models:
            raise ModelError("schedule needs at least one growth model")
        if not self.segments:
            raise ModelError("schedule needs at least one segment")
        starts = [s for s, _ in self.segments]
        if starts[0] != 0.0:
            raise ModelError("first segment must start at t = 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ModelError("segment start times must be strictly increasing")
        for _, k in self.segments:
            if not 0 <= k < len(self.models):
                raise ModelError(f"segment refers to unknown model {k}")
        if self.period is not None:
            if not self.period > 0:
                raise ModelError("period must be positive")
            if starts[-1] >= self.period:
                raise ModelError("segments must start inside one period")

    @classmethod
    def constant(cls, model: GrowthModel) -> "EnvironmentSchedule":
        return cls(models=(model,))

    @classmethod
    def two_state(cls, first: GrowthModel, second: GrowthModel, period: float):
        """``first`` on ``[0, T/2)`` and ``second`` on ``[T/2, T)``, repeated."""
        return cls(models=(first, second), segments=((0.0, 0), (period / 2, 1)), period=period)

    def index_at(self, t: float) -> int:
        """Model id active at ``t``; switch instants belong to the new segment."""
        if t < 0:
            raise ModelError("t must be nonnegative")
        tol = 0.0
        if self.period is not None:
            # fmod(1.0, 0.2) = 0.19999...; snap near-multiples to the new period
            tol = 1e-12 * self.period
            t = max(t - math.floor(t / self.period + 1e-12) * self.period, 0.0)
        k = 0
        for i, (start, _) in enumerate(self.segments):
            if start <= t + tol:
                k = i
            else:
                break
        return self.segments[k][1]

    def model_at(self, t: float) -> GrowthModel:
        return self.models[self.index_at(t)]

    def switch_times(self, t_end: float) -> list[float]:
        """Instants in ``(0, t_end)`` where the active model may change."""
        starts = [s for s, _ in self.segments]
        if self.period is None:
            return [s for s in starts[1:] if s < t_end]
        times = []
        k = 0
        while True:
            base = k * self.period
            for i, s in enumerate(starts):
                t = base + s
                if t >= t_end:
                    return times
                if t > 0:
                    times.append(t)
            k += 1


def model_at(schedule: EnvironmentSchedule, t: float) -> GrowthModel:
    return schedule.model_at(t)
