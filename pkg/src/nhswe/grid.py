"""Uniform 1D discontinuous Galerkin grid and nodal fields.

Elements carry a nodal Lagrange basis on Gauss-Lobatto points, so element
endpoints are nodes and interface traces are direct nodal reads.  All element
integrals (mass and stiffness matrices) are evaluated with Gauss-Legendre
quadrature that is exact for the chosen polynomial degree; products of fields
are interpolated nodally before integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import legendre


def gauss_lobatto_nodes(degree: int) -> np.ndarray:
    """Gauss-Lobatto-Legendre nodes on [-1, 1] for a given polynomial degree."""
    if degree < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {degree}")
    if degree == 1:
        return np.array([-1.0, 1.0])
    coeffs = np.zeros(degree + 1)
    coeffs[degree] = 1.0
    interior = legendre.legroots(legendre.legder(coeffs))
    return np.concatenate(([-1.0], np.sort(np.real(interior)), [1.0]))


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_eval_matrix(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Matrix L with L[i, j] = phi_j(points[i]) for the Lagrange basis on nodes."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    w = barycentric_weights(nodes)
    diff = points[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-14)
    diff_safe = np.where(exact, 1.0, diff)
    terms = w[None, :] / diff_safe
    mat = terms / np.sum(terms, axis=1)[:, None]
    hit = exact.any(axis=1)
    mat[hit] = exact[hit].astype(float)
    return mat


def differentiation_matrix(nodes: np.ndarray) -> np.ndarray:
    """D[i, j] = phi_j'(nodes[i]) from the barycentric weights."""
    w = barycentric_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    mat = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(mat, 0.0)
    np.fill_diagonal(mat, -np.sum(mat, axis=1))
    return mat


@dataclass(frozen=True)
class GridSpec:
    """Uniform DG grid on [x_left, x_right] with n_elements of degree poly_order."""

    x_left: float
    x_right: float
    n_elements: int
    poly_order: int = 1

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ValueError("x_right must exceed x_left")
        if self.n_elements < 2:
            raise ValueError("n_elements must be >= 2")
        if self.poly_order < 1:
            raise ValueError("poly_order must be >= 1")

        p = self.poly_order
        dx = (self.x_right - self.x_left) / self.n_elements
        ref = gauss_lobatto_nodes(p)
        edges = self.x_left + dx * np.arange(self.n_elements)
        nodes = edges[:, None] + 0.5 * dx * (ref[None, :] + 1.0)
        # Sampling coordinates nudged strictly into each element, so that a
        # bottom profile with a jump at an element interface is read one-sided
        # per element and the discontinuity stays at the interface.
        inset = nodes.copy()
        eps = 1e-9 * dx
        inset[:, 0] += eps
        inset[:, -1] -= eps

        gl_x, gl_w = np.polynomial.legendre.leggauss(p + 1)
        basis = lagrange_eval_matrix(ref, gl_x)          # (q, p+1)
        dref = differentiation_matrix(ref)
        dbasis = basis @ dref                            # phi_j' at quad points
        mass_ref = basis.T @ (gl_w[:, None] * basis)
        stiff_ref = dbasis.T @ (gl_w[:, None] * basis)   # K[i,j] = ∫ phi_i' phi_j
        mass = 0.5 * dx * mass_ref
        mass_inv = np.linalg.inv(mass)

        set_ = object.__setattr__
        set_(self, "dx", dx)
        set_(self, "ref_nodes", ref)
        set_(self, "nodes", nodes)
        set_(self, "sample_nodes", inset)
        set_(self, "mass", mass)
        set_(self, "mass_inv", mass_inv)
        set_(self, "stiffness", stiff_ref)
        set_(self, "deriv_ref", dref)
        # M^{-1} K, the volume part of the weak divergence operator
        set_(self, "weak_div", mass_inv @ stiff_ref)
        # M^{-1} e_first / e_last, flux lifting vectors
        set_(self, "lift_left", mass_inv[:, 0].copy())
        set_(self, "lift_right", mass_inv[:, -1].copy())

    @property
    def n_nodes(self) -> int:
        return self.n_elements * (self.poly_order + 1)

    def element_of(self, x: float) -> int:
        i = int((x - self.x_left) / self.dx)
        return min(max(i, 0), self.n_elements - 1)

    def nearest_node(self, x: float) -> tuple[int, int]:
        """Element and local node index of the grid node closest to x."""
        flat = np.argmin(np.abs(self.nodes - x))
        return np.unravel_index(flat, self.nodes.shape)


@dataclass(frozen=True)
class NodalField:
    """Per-element nodal coefficients of a scalar quantity on a DG grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_elements, self.grid.poly_order + 1)
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape}, expected {expected}")
        # a finite sum certifies all entries finite (NaN/inf propagate)
        if not np.isfinite(values.sum()):
            bad = np.argwhere(~np.isfinite(values))[0]
            x = self.grid.nodes[bad[0], bad[1]]
            raise ValueError(f"non-finite nodal value at x={x} (element {bad[0]})")
        object.__setattr__(self, "values", values)

    def at_nodes(self) -> np.ndarray:
        return self.values

    @classmethod
    def _wrap(cls, grid: GridSpec, values: np.ndarray) -> "NodalField":
        """Trusted constructor for hot paths; skips shape/finiteness checks.

        Callers must pass a float array of the correct shape whose values
        they have already vouched for (e.g. checked once per time step).
        """
        field = object.__new__(cls)
        object.__setattr__(field, "grid", grid)
        object.__setattr__(field, "values", values)
        return field


@dataclass(frozen=True)
class FlowState:
    """Conserved variables (h, hu, hw) on a common grid at a given time."""

    h: NodalField
    hu: NodalField
    hw: NodalField
    time: float

    def __post_init__(self):
        if not (self.h.grid is self.hu.grid is self.hw.grid):
            raise ValueError("flow components must share one grid")
        if self.h.values.min() <= 0.0:
            el = int(np.argwhere(np.any(self.h.values <= 0.0, axis=1))[0][0])
            raise ValueError(f"non-positive water column in element {el} at t={self.time}")

    @property
    def grid(self) -> GridSpec:
        return self.h.grid

    @classmethod
    def _wrap(cls, h: NodalField, hu: NodalField, hw: NodalField,
              time: float) -> "FlowState":
        """Trusted constructor for hot paths; skips the consistency checks."""
        state = object.__new__(cls)
        set_ = object.__setattr__
        set_(state, "h", h)
        set_(state, "hu", hu)
        set_(state, "hw", hw)
        set_(state, "time", time)
        return state


def project(f: Callable[[np.ndarray], np.ndarray], grid: GridSpec) -> NodalField:
    """Interpolate f at the grid nodes (exact for degree <= poly_order)."""
    vals = np.asarray(f(grid.nodes), dtype=float)
    if vals.shape != grid.nodes.shape:
        vals = np.broadcast_to(vals, grid.nodes.shape).copy()
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise ValueError(f"f is non-finite at node x={grid.nodes[bad[0], bad[1]]}")
    return NodalField(grid, vals)


def derivative(field: NodalField) -> NodalField:
    """Element-local polynomial derivative; no inter-element coupling."""
    return NodalField(field.grid, derivative_values(field.grid, field.values))


def derivative_values(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    return (values @ grid.deriv_ref.T) * (2.0 / grid.dx)


def evaluate(field: NodalField, x: np.ndarray) -> np.ndarray:
    """Evaluate the piecewise polynomial at arbitrary points (one-sided at interfaces)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grid = field.grid
    out = np.empty_like(x)
    for k, xi in enumerate(x):
        e = grid.element_of(xi)
        xi_ref = 2.0 * (xi - grid.x_left - e * grid.dx) / grid.dx - 1.0
        out[k] = lagrange_eval_matrix(grid.ref_nodes, np.array([xi_ref]))[0] @ field.values[e]
    return out


def interface_trace(field: NodalField, element: int, side: str,
                    boundary: str = "copy") -> tuple[float, float]:
    """Inner/outer traces at an element interface.

    `boundary` selects the ghost rule at the domain ends: "copy" mirrors the
    inner trace (absorbing/zero-gradient), "negate" reflects it (wall for the
    momentum component).
    """
    grid = field.grid
    if not 0 <= element < grid.n_elements:
        raise IndexError(f"element {element} out of range")
    if side == "left":
        inner = field.values[element, 0]
        outer = field.values[element - 1, -1] if element > 0 else _ghost(inner, boundary)
    elif side == "right":
        inner = field.values[element, -1]
        outer = (field.values[element + 1, 0] if element < grid.n_elements - 1
                 else _ghost(inner, boundary))
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return inner, outer


def _ghost(inner: float, boundary: str) -> float:
    if boundary == "copy":
        return inner
    if boundary == "negate":
        return -inner
    raise ValueError(f"unknown boundary ghost rule {boundary!r}")
