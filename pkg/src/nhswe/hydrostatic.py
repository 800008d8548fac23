"""Second-order RKDG predictor for the hydrostatic shallow water system.

The conserved triple (h, hu, hw) is advanced with Heun's two-stage scheme;
element coupling goes through Rusanov interface fluxes and the bottom slope
enters as the nodal source g*h*d_x.  The vertical momentum hw is advected
passively (no vertical source in the hydrostatic step).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bathymetry import GRAVITY, BathymetryModel
from .grid import FlowState, GridSpec, NodalField


class PositivityError(RuntimeError):
    """Water column became non-positive somewhere."""

    def __init__(self, element: int, time: float):
        super().__init__(f"non-positive water depth in element {element} at t={time:.6g}")
        self.element = element
        self.time = time


@dataclass(frozen=True)
class BoundaryCondition:
    """Ghost-state rule at a domain end: reflecting wall or zero-gradient outflow."""

    kind: str  # "wall" | "absorbing"

    def __post_init__(self):
        if self.kind not in ("wall", "absorbing"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    def ghost(self, h: float, hu: float, hw: float) -> tuple[float, float, float]:
        if self.kind == "wall":
            return h, -hu, hw
        return h, hu, hw


@dataclass(frozen=True)
class BoundaryPair:
    left: BoundaryCondition
    right: BoundaryCondition


WALL = BoundaryCondition("wall")
ABSORBING = BoundaryCondition("absorbing")


def physical_flux(h: np.ndarray, hu: np.ndarray, hw: np.ndarray,
                  g: float = GRAVITY) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(hu, hu^2/h + g h^2/2, hu*hw/h) for h > 0."""
    return hu, hu * hu / h + 0.5 * g * h * h, hu * hw / h


def rusanov_flux(qL: np.ndarray, qR: np.ndarray,
                 g: float = GRAVITY) -> np.ndarray:
    """Central flux plus maximal-wavespeed dissipation.

    qL, qR have shape (..., 3); returns the flux triple with matching shape.
    """
    hL, huL, hwL = qL[..., 0], qL[..., 1], qL[..., 2]
    hR, huR, hwR = qR[..., 0], qR[..., 1], qR[..., 2]
    fL = np.stack(physical_flux(hL, huL, hwL, g), axis=-1)
    fR = np.stack(physical_flux(hR, huR, hwR, g), axis=-1)
    lam = np.maximum(np.abs(huL / hL) + np.sqrt(g * hL),
                     np.abs(huR / hR) + np.sqrt(g * hR))
    return 0.5 * (fL + fR) - 0.5 * lam[..., None] * (qR - qL)


def _interface_states(h, hu, hw, bcs: BoundaryPair):
    """Left/right states at the n_elements+1 interfaces, ghosts from the BCs."""
    n = h.shape[0]
    qL = np.empty((n + 1, 3))
    qR = np.empty((n + 1, 3))
    qL[1:, 0], qL[1:, 1], qL[1:, 2] = h[:, -1], hu[:, -1], hw[:, -1]
    qR[:-1, 0], qR[:-1, 1], qR[:-1, 2] = h[:, 0], hu[:, 0], hw[:, 0]
    qL[0] = bcs.left.ghost(*qR[0])
    qR[-1] = bcs.right.ghost(*qL[-1])
    return qL, qR


def rhs_operator(state: FlowState, bathy: BathymetryModel, bcs: BoundaryPair,
                 g: float = GRAVITY) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Semi-discrete tendency of (h, hu, hw) at the state's own time.

    Interface fluxes use hydrostatic reconstruction: where the bottom jumps
    between elements, both trace depths are remeasured from the higher bottom
    edge before the Riemann solve, and the momentum flux each side receives is
    shifted by the pressure acting on the exposed bottom step.  On a continuous
    bottom this reduces to a plain Rusanov flux; with a jump it keeps still
    water exactly still while letting a surface offset across the step radiate.
    """
    grid = state.grid
    h, hu, hw = state.h.values, state.hu.values, state.hw.values
    if h.min() <= 0.0:
        el = int(np.argwhere(np.any(h <= 0.0, axis=1))[0][0])
        raise PositivityError(el, state.time)

    u = hu / h
    f2 = hu * u
    f2 += (0.5 * g) * h * h
    f3 = u * hw

    bottom = bathy.sample(grid.sample_nodes, state.time)
    d = bottom.d

    n = h.shape[0]
    hL = np.empty(n + 1)
    hR = np.empty(n + 1)
    huL = np.empty(n + 1)
    huR = np.empty(n + 1)
    hwL = np.empty(n + 1)
    hwR = np.empty(n + 1)
    hL[1:] = h[:, -1]
    hR[:-1] = h[:, 0]
    huL[1:] = hu[:, -1]
    huR[:-1] = hu[:, 0]
    hwL[1:] = hw[:, -1]
    hwR[:-1] = hw[:, 0]
    hL[0], huL[0], hwL[0] = bcs.left.ghost(hR[0], huR[0], hwR[0])
    hR[-1], huR[-1], hwR[-1] = bcs.right.ghost(hL[-1], huL[-1], hwL[-1])

    uL = huL / hL
    uR = huR / hR
    dL = np.empty(n + 1)
    dR = np.empty(n + 1)
    dL[1:] = d[:, -1]
    dR[:-1] = d[:, 0]
    dL[0] = dR[0]
    dR[-1] = dL[-1]

    if np.array_equal(dL, dR):
        # continuous bottom: plain Rusanov flux from the nodal traces
        hLs, hRs = hL, hR
        corr_left = corr_right = None
    else:
        # remeasure both trace columns from the higher bottom edge
        d_star = np.minimum(dL, dR)
        hLs = np.maximum(hL - (dL - d_star), 0.0)
        hRs = np.maximum(hR - (dR - d_star), 0.0)
        # pressure on the exposed bottom step, one value per side
        corr_left = (0.5 * g) * (hL * hL - hLs * hLs)
        corr_right = (0.5 * g) * (hR * hR - hRs * hRs)

    lam = 0.5 * np.maximum(np.abs(uL) + np.sqrt(g * hLs),
                           np.abs(uR) + np.sqrt(g * hRs))
    huLs = hLs * uL
    huRs = hRs * uR
    fs1 = 0.5 * (huLs + huRs) - lam * (hRs - hLs)
    fs2 = 0.5 * (huLs * uL + huRs * uR + (0.5 * g) * (hLs * hLs + hRs * hRs))
    fs2 -= lam * (huRs - huLs)
    hwLs = (hLs / hL) * hwL
    hwRs = (hRs / hR) * hwR
    fs3 = 0.5 * (hwLs * uL + hwRs * uR) - lam * (hwRs - hwLs)

    W = grid.weak_div.T
    lift_r = grid.lift_right[None, :]
    lift_l = grid.lift_left[None, :]

    t1 = hu @ W
    t1 -= fs1[1:, None] * lift_r
    t1 += fs1[:-1, None] * lift_l

    t2 = f2 @ W
    if corr_left is None:
        t2 -= fs2[1:, None] * lift_r
        t2 += fs2[:-1, None] * lift_l
    else:
        t2 -= (fs2[1:] + corr_left[1:])[:, None] * lift_r
        t2 += (fs2[:-1] + corr_right[:-1])[:, None] * lift_l
    d_x = bottom.d_x
    if d_x.any():
        t2 += (g * h) * d_x

    t3 = f3 @ W
    t3 -= fs3[1:, None] * lift_r
    t3 += fs3[:-1, None] * lift_l
    return t1, t2, t3


def max_wavespeed(state: FlowState, g: float = GRAVITY) -> float:
    h = state.h.values
    return float(np.max(np.abs(state.hu.values / h) + np.sqrt(g * h)))


def heun_step(state: FlowState, dt: float, bathy: BathymetryModel,
              bcs: BoundaryPair, g: float = GRAVITY,
              cfl_warn: bool = True) -> FlowState:
    """One predictor step: forward Euler stage then trapezoidal average."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = state.grid
    if cfl_warn:
        cfl = max_wavespeed(state, g) * dt / grid.dx
        if cfl > 1.0:
            warnings.warn(f"advisory CFL number {cfl:.3f} exceeds 1 at t={state.time:.6g}",
                          RuntimeWarning, stacklevel=2)

    k1 = rhs_operator(state, bathy, bcs, g)
    star = _advance(state, k1, dt, state.time + dt)
    k2 = rhs_operator(star, bathy, bcs, g)
    mean = tuple(0.5 * (a + b) for a, b in zip(k1, k2))
    return _advance(state, mean, dt, state.time + dt)


def _advance(state: FlowState, tend, dt: float, new_time: float) -> FlowState:
    grid = state.grid
    h = state.h.values + dt * tend[0]
    # `not >` also trips on NaN, so a non-finite update is caught here too
    if not h.min() > 0.0:
        raise PositivityError(-1, new_time)
    return FlowState._wrap(
        NodalField._wrap(grid, h),
        NodalField._wrap(grid, state.hu.values + dt * tend[1]),
        NodalField._wrap(grid, state.hw.values + dt * tend[2]),
        new_time,
    )
