"""Asymptotic-fate classification from initial data.

The verdict depends only on two sets attached to the initial density in the
small-mutation limit: its support, which ignores components whose mass
vanishes with ``eps``, and the zero set of ``u^0 = lim eps log n^0``, which
keeps them. Both are compared against the viability set ``{R(., 0) > 0}``.
"""
from __future__ import annotations

from dataclasses import dataclass


from .model import (
    Box,
    Gaussian,
    GroundStateGaussian,
    GrowthModel,
    Mixture,
    ModelError,
    TraitGrid,
)

PERSISTENCE = "Persistence"
EXTINCTION_INTERVAL = "ExtinctionInterval"
EXTINCTION_POINT = "ExtinctionPoint"
CRITICAL = "Critical"
UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class ClassifierTolerances:
    # separates strictly non-viable (R <= -margin) from touching zero
    margin: float = 1e-6


@dataclass(frozen=True)
class FateClass:
    tag: str
    witness: object
    margin: float | None = None

    def to_dict(self) -> dict:
        witness = self.witness
        if isinstance(witness, tuple):
            witness = list(witness)
        return {"tag": self.tag, "witness": witness, "margin": self.margin}


def omega_set(model: GrowthModel, I: float, grid: TraitGrid) -> list[tuple[float, float]]:
    """Maximal open intervals of the grid domain where ``R(., I) > 0``."""
    lo, hi = grid.x_min, grid.x_max
    cuts = [lo, *model.zeros_of_R(I, lo, hi), hi]
    intervals: list[tuple[float, float]] = []
    for left, right in zip(cuts, cuts[1:]):
        if right <= left:
            continue
        if model.R(0.5 * (left + right), I) > 0:
            if intervals and intervals[-1][1] == left:
                # a double root inside a positive region does not split it
                intervals[-1] = (intervals[-1][0], right)
            else:
                intervals.append((float(left), float(right)))
    return intervals


def _components(ic):
    if isinstance(ic, Mixture):
        return [c for _, c in ic.weighted()]
    return [ic]


def limit_sets(ic) -> tuple[list, list]:
    """``(support, gamma0)`` as lists of closed intervals ``(lo, hi)``; points have ``lo == hi``."""
    support, gamma = [], []
    for comp in _components(ic):
        if isinstance(comp, Box):
            support.append((comp.b, comp.c))
            gamma.append((comp.b, comp.c))
        elif isinstance(comp, (Gaussian, GroundStateGaussian)):
            point = (comp.center, comp.center)
            gamma.append(point)
            if not comp.eps_scaled:
                support.append(point)
        else:
            raise ModelError(f"no small-mutation limit known for {comp!r}")
    return support, gamma


def _max_on(model: GrowthModel, piece) -> tuple[float, float]:
    lo, hi = piece
    if lo == hi:
        return float(model.a(lo)), float(lo)
    return model.max_a(lo, hi)


def _min_on(model: GrowthModel, piece) -> float:
    lo, hi = piece
    if lo == hi:
        return float(model.a(lo))
    neg = GrowthModel.polynomial([-c for c in model.coeffs])
    value, _ = neg.max_a(lo, hi)
    return -value


def _persistence_witness(model, support, grid):
    omega = omega_set(model, 0.0, grid)
    for lo, hi in support:
        for left, right in omega:
            if lo == hi:
                if left < lo < right:
                    return lo
            elif max(lo, left) < min(hi, right):
                return (max(lo, left), min(hi, right))
    return None


def classify_initial(ic, model: GrowthModel, eps: float, grid: TraitGrid,
                     tol: ClassifierTolerances = ClassifierTolerances()) -> FateClass:
    """Predict persistence or extinction from the viability of initial traits.

    ``eps`` is accepted for interface symmetry; the verdict only uses limit
    sets, so it is independent of ``eps``.
    """
    support, gamma = limit_sets(ic)
    witness = _persistence_witness(model, support, grid)
    if witness is not None:
        return FateClass(PERSISTENCE, witness)

    peaks = [_max_on(model, piece) for piece in gamma]
    top, where = max(peaks)
    if top > tol.margin:
        # support non-viable, yet a vanishing-mass maximum of u^0 sits on viable traits
        return FateClass(UNCLASSIFIED, where)
    if top <= -tol.margin:
        return FateClass(EXTINCTION_INTERVAL, where, margin=-top)
    lows = [_min_on(model, piece) for piece in gamma]
    if min(lows) >= -tol.margin:
        return FateClass(CRITICAL, [float(lo) if lo == hi else [lo, hi] for lo, hi in gamma])
    return FateClass(EXTINCTION_POINT, where, margin=0.0)


def numeric_persistence_floor(traj, T: float) -> float:
    """Smallest competition level ``I`` recorded on ``[0, T]``."""
    if traj.times[-1] < T - 1e-12:
        raise ValueError(f"trajectory ends at {traj.times[-1]} < T = {T}")
    return float(traj.I[traj.times <= T + 1e-12].min())
