"""Adaptive selection of the elements receiving the pressure correction.

Six predictor-based indicators are supported; an element is flagged when the
maximum nodal value of the indicator exceeds the threshold k_nh.  Flagged
elements are decomposed into maximal contiguous ranges, each solved as an
independent elliptic problem.  An optional enlargement grows the flagged set
by one element on each side, which removes isolated single-element ranges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bathymetry import GRAVITY, RHO_WATER, BathymetryModel
from .corrector import FluxCoefficients, apply_correction
from .grid import FlowState, NodalField, derivative_values
from .hydrostatic import BoundaryPair, heun_step

CRITERION_KINDS = ("eta_over_d", "eta_x", "u", "u_x", "w", "w_x")

DEFAULT_THRESHOLD = 0.001


@dataclass(frozen=True)
class Criterion:
    """Indicator kind, threshold and the one-element enlargement switch.

    All six indicators are compared against the same numeric threshold even
    though their physical units differ (ratios and slopes are dimensionless,
    velocities are m/s).
    """

    kind: str
    k_nh: float = DEFAULT_THRESHOLD
    enlarge: bool = False

    def __post_init__(self):
        if self.kind not in CRITERION_KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.k_nh <= 0:
            raise ValueError("threshold k_nh must be positive")


@dataclass(frozen=True)
class NonHydroMask:
    """Per-element flags plus their decomposition into contiguous ranges."""

    flags: np.ndarray
    ranges: tuple[tuple[int, int], ...]

    @classmethod
    def from_flags(cls, flags: np.ndarray) -> "NonHydroMask":
        flags = np.asarray(flags, dtype=bool)
        return cls(flags, contiguous_ranges(flags))

    @property
    def empty(self) -> bool:
        return not bool(self.flags.any())

    @property
    def fraction(self) -> float:
        return float(np.mean(self.flags))


def contiguous_ranges(flags: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Maximal runs of True as (first, last) inclusive index pairs."""
    padded = np.concatenate(([False], flags, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    starts, stops = edges[::2], edges[1::2]
    return tuple((int(a), int(b - 1)) for a, b in zip(starts, stops))


def criterion_values(predictor: FlowState, bathy: BathymetryModel,
                     kind: str) -> np.ndarray:
    """Nodal values of one indicator, from the predictor state."""
    grid = predictor.grid
    h = predictor.h.values
    if kind == "eta_over_d":
        d = bathy.sample(grid.sample_nodes, predictor.time).d
        return np.abs((h - d) / d)
    if kind == "eta_x":
        d = bathy.sample(grid.sample_nodes, predictor.time).d
        return np.abs(derivative_values(grid, h - d))
    u = predictor.hu.values / h
    if kind == "u":
        return np.abs(u)
    if kind == "u_x":
        return np.abs(derivative_values(grid, u))
    w = predictor.hw.values / h
    if kind == "w":
        return np.abs(w)
    if kind == "w_x":
        return np.abs(derivative_values(grid, w))
    raise ValueError(f"unknown criterion kind {kind!r}")


def enlarge_flags(flags: np.ndarray) -> np.ndarray:
    """Dilate the flagged set by one element on each side, clipped to the domain."""
    grown = flags.copy()
    grown[:-1] |= flags[1:]
    grown[1:] |= flags[:-1]
    return grown


def evaluate_criterion(predictor: FlowState, bathy: BathymetryModel,
                       crit: Criterion) -> NonHydroMask:
    values = criterion_values(predictor, bathy, crit.kind)
    flags = values.max(axis=1) > crit.k_nh
    if crit.enlarge:
        flags = enlarge_flags(flags)
    return NonHydroMask.from_flags(flags)


def full_mask(n_elements: int) -> NonHydroMask:
    return NonHydroMask.from_flags(np.ones(n_elements, dtype=bool))


@dataclass(frozen=True)
class StepResult:
    state: FlowState
    mask: NonHydroMask
    p_nh: NodalField | None


def adaptive_step(state: FlowState, dt: float, bathy: BathymetryModel,
                  bcs: BoundaryPair, mode: str = "adaptive",
                  crit: Criterion | None = None,
                  flux: FluxCoefficients = FluxCoefficients(),
                  g: float = GRAVITY, rho: float = RHO_WATER,
                  cfl_warn: bool = True) -> StepResult:
    """One full time step: hydrostatic predictor, then optional correction.

    Modes: "hydrostatic" (predictor only), "global" (correct everywhere) and
    "adaptive" (correct on the criterion-flagged ranges).  A vertical-velocity
    criterion applied to a state with identically zero vertical momentum falls
    back to a global correction for that step, so the indicator can activate.
    """
    if mode not in ("hydrostatic", "global", "adaptive"):
        raise ValueError(f"unknown mode {mode!r}")
    n = state.grid.n_elements
    predictor = heun_step(state, dt, bathy, bcs, g, cfl_warn=cfl_warn)

    if mode == "hydrostatic":
        return StepResult(predictor, NonHydroMask.from_flags(np.zeros(n, dtype=bool)), None)

    if mode == "global":
        mask = full_mask(n)
    else:
        if crit is None:
            raise ValueError("adaptive mode requires a criterion")
        if crit.kind in ("w", "w_x") and not np.any(state.hw.values):
            mask = full_mask(n)
        else:
            mask = evaluate_criterion(predictor, bathy, crit)

    if mask.empty:
        return StepResult(predictor, mask, None)

    corrected, sol = apply_correction(predictor, bathy, dt, mask.ranges, bcs,
                                      flux, g, rho)
    return StepResult(corrected, mask, sol.p_nh)
