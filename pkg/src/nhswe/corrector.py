"""Non-hydrostatic pressure correction via a local DG elliptic solve.

Starting from the hydrostatic predictor, the depth-averaged pressure and the
corrected horizontal momentum satisfy a first-order elliptic system

    p_x  + s11 p  + s12 hu = f1
    hu_x + s21 hu + s22 p  = f2

with s11 + s21 = 0 and s12 > 0 by construction.  The system is discretized
with alternating one-sided interface fluxes plus a pressure-jump penalty
(c11 = 1/2) and solved directly as a banded linear system on any contiguous
element range, with zero Dirichlet pressure at the range endpoints.  The
vertical momentum is then updated from the solved pressure.

Coefficients are assembled only on the hull of the flagged ranges, so the
per-step cost of the correction scales with the corrected area.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import get_lapack_funcs

from .bathymetry import GRAVITY, RHO_WATER, BathymetryModel, BottomSample
from .grid import FlowState, GridSpec, NodalField, derivative_values
from .hydrostatic import BoundaryPair


class EllipticSolveError(RuntimeError):
    """The assembled elliptic system could not be solved reliably."""


# double-precision general-banded direct solver (LAPACK dgbsv), bound once
(_GBSV,) = get_lapack_funcs(("gbsv",), (np.array([0.0]),))


@dataclass(frozen=True)
class FluxCoefficients:
    """Interface flux constants; the default pair gives the flip-flop pattern
    p* = p(left trace), hu* = hu(right trace) + [p]/2."""

    c11: float = 0.5
    c12: float = -0.5
    c22: float = 0.0


@dataclass(frozen=True)
class EllipticCoefficients:
    """Nodal coefficient and forcing fields of the elliptic system.

    Arrays cover the element window [offset, offset + len) of the grid.
    """

    grid: GridSpec
    s11: np.ndarray
    s12: np.ndarray
    s21: np.ndarray
    s22: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    phi: np.ndarray
    bottom: BottomSample
    dt: float
    rho: float
    offset: int = 0

    def __post_init__(self):
        if np.any(self.s11 + self.s21 != 0.0):
            raise AssertionError("structural condition s11 + s21 = 0 violated")
        if np.any(self.s12 <= 0.0):
            raise AssertionError("structural condition s12 > 0 violated")


@dataclass(frozen=True)
class PressureSolution:
    """Solved pressure and corrected momentum; pressure is zero off the ranges."""

    p_nh: NodalField
    hu_corrected: NodalField
    ranges: tuple[tuple[int, int], ...]


def _window_sample(bathy: BathymetryModel, grid: GridSpec, t: float,
                   window: slice) -> BottomSample:
    """Bottom channels on an element window, sliced from a full-grid sample.

    Sampling the whole grid and slicing lets the bathymetry memo reuse the
    evaluation already made by the predictor at the same instant.
    """
    full = bathy.sample(grid.sample_nodes, t)
    if window == slice(None):
        return full
    return BottomSample(full.d[window], full.d_x[window], full.d_t[window],
                        full.d_tt[window], full.d_xt[window], full.d_xx[window])


def phi_term(predictor: FlowState, bathy: BathymetryModel,
             g: float = GRAVITY, rho: float = RHO_WATER,
             bottom: BottomSample | None = None,
             window: slice = slice(None)) -> NodalField | np.ndarray:
    """Moving-bottom forcing of the pressure closure, at predictor values.

    Returns a NodalField for the full domain, or a raw array when a window
    of elements is requested.
    """
    grid = predictor.grid
    if bottom is None:
        bottom = _window_sample(bathy, grid, predictor.time, window)
    h = predictor.h.values[window]
    d_x = bottom.d_x
    # accumulate only the channels that are actually active; a flat static
    # bottom short-circuits to an exact zero forcing
    inner = -bottom.d_tt if bottom.d_tt.any() else None
    if bottom.d_xt.any() or bottom.d_xx.any():
        u = predictor.hu.values[window] / h
        drag = -2.0 * u * bottom.d_xt - u * u * bottom.d_xx
        inner = drag if inner is None else inner + drag
    if d_x.any():
        eta_x = derivative_values(grid, h - bottom.d)
        slope = (g * d_x) * eta_x
        inner = slope if inner is None else inner + slope
        vals = (rho * h / (4.0 + d_x * d_x)) * inner
    elif inner is None:
        vals = np.zeros_like(h)
    else:
        vals = (0.25 * rho) * h * inner
    if window == slice(None):
        return NodalField(grid, vals)
    return vals


def assemble_coefficients(predictor: FlowState, bathy: BathymetryModel, dt: float,
                          g: float = GRAVITY, rho: float = RHO_WATER,
                          window: slice = slice(None)) -> EllipticCoefficients:
    """Nodal s- and f-fields of the elliptic system from the predictor state."""
    grid = predictor.grid
    bottom = _window_sample(bathy, grid, predictor.time, window)
    h = predictor.h.values[window]
    hu = predictor.hu.values[window]
    hw = predictor.hw.values[window]
    h_x = derivative_values(grid, h)
    d_x = bottom.d_x
    phi = phi_term(predictor, bathy, g, rho, bottom, window=window)
    if isinstance(phi, NodalField):
        phi = phi.values
    inv_h = 1.0 / h
    s22 = (3.0 * dt / rho) * inv_h
    if d_x.any():
        quad = 4.0 + d_x * d_x
        s11 = (h_x - 1.5 * d_x) * inv_h
        s12 = (0.25 * rho / dt) * quad * inv_h
        f1 = (0.25 * quad * inv_h) * (phi * d_x + (rho / dt) * hu)
        f2 = (-2.0 * hw - (0.5 * d_x) * hu) * inv_h
        f2 -= (0.5 * dt / rho) * quad * phi * inv_h
    else:
        s11 = h_x * inv_h
        s12 = (rho / dt) * inv_h
        f1 = (rho / dt) * hu * inv_h
        f2 = -2.0 * hw * inv_h
        if phi.any():
            f2 -= (2.0 * dt / rho) * phi * inv_h
    if bottom.d_t.any():
        f2 -= 2.0 * bottom.d_t
    s21 = -s11
    offset = window.start if window.start is not None else 0
    return EllipticCoefficients(grid, s11, s12, s21, s22, f1, f2, phi,
                                bottom, dt, rho, offset)


@lru_cache(maxsize=256)
def _block_template(n: int, m: int, c11: float, c12: float, c22: float):
    """Shift-invariant sparsity pattern of one contiguous range of n elements.

    Entries are stored as (banded-storage row, column) pairs: the banded row
    index band + r - c does not change when a block is placed at an offset
    inside a batched system, so batches reuse these arrays with shifted
    columns.  Volume entries come first (fixed order pp, pq, qq, qp), then
    the constant interface/boundary flux entries with their values.
    """
    band = 2 * m - 1
    node = 2 * (np.arange(n)[:, None] * m + np.arange(m)[None, :])
    ip = node
    iq = node + 1

    rows = []
    cols = []

    def add(r, c):
        r = np.asarray(r, dtype=np.int64).ravel()
        c = np.asarray(c, dtype=np.int64).ravel()
        rows.append(band + r - c)
        cols.append(c)

    blk = (n, m, m)
    add(np.broadcast_to(ip[:, :, None], blk), np.broadcast_to(ip[:, None, :], blk))
    add(np.broadcast_to(ip[:, :, None], blk), np.broadcast_to(iq[:, None, :], blk))
    add(np.broadcast_to(iq[:, :, None], blk), np.broadcast_to(iq[:, None, :], blk))
    add(np.broadcast_to(iq[:, :, None], blk), np.broadcast_to(ip[:, None, :], blk))

    const_vals = []

    def add_const(r, c, v):
        add(r, c)
        const_vals.append(np.broadcast_to(np.asarray(v, float), np.shape(r)).ravel())

    if n > 1:
        pL, pR = ip[:-1, -1], ip[1:, 0]
        qL, qR = iq[:-1, -1], iq[1:, 0]
        star_p = ((pL, 0.5 - c12), (pR, 0.5 + c12), (qL, c22), (qR, -c22))
        star_q = ((qL, 0.5 + c12), (qR, 0.5 - c12), (pL, c11), (pR, -c11))
        for row_hi, row_lo, star in ((pL, pR, star_p), (qL, qR, star_q)):
            for col, coef in star:
                if coef != 0.0:
                    add_const(row_hi, col, coef)    # + flux at an element's right face
                    add_const(row_lo, col, -coef)   # - flux at the neighbor's left face

    # range endpoints: p* = 0 (Dirichlet); hu* keeps its interior-trace terms
    add_const(iq[0, 0], iq[0, 0], -(0.5 - c12))
    add_const(iq[0, 0], ip[0, 0], c11)
    add_const(iq[-1, -1], iq[-1, -1], 0.5 + c12)
    add_const(iq[-1, -1], ip[-1, -1], c11)

    return {
        "band": band,
        "ab_rows": np.concatenate(rows),
        "ab_cols": np.concatenate(cols),
        "const_vals": (np.concatenate(const_vals) if const_vals
                       else np.zeros(0)),
        "row_left": int(iq[0, 0]),
        "row_right": int(iq[-1, -1]),
    }


@lru_cache(maxsize=512)
def _ldg_template(lengths: tuple[int, ...], m: int,
                  c11: float, c12: float, c22: float):
    """Flattened assembly positions for a batch of independent ranges.

    The ranges are stacked into one block-diagonal system whose bandwidth
    equals that of a single range, so the whole batch is factorized in one
    banded solve.  Positions address the LAPACK general-banded layout
    (2*band fill-in rows above the band) so the factorization can run in
    place without a relayout copy.
    """
    n = sum(lengths)
    size = 2 * n * m
    band = 2 * m - 1
    blocks = [_block_template(nb, m, c11, c12, c22) for nb in lengths]
    starts = np.cumsum((0,) + lengths[:-1])
    offsets = 2 * m * starts

    # column-major flat position in the (3*band + 1, size) gbsv work array,
    # matrix rows occupying banded rows band .. 3*band; entries reordered
    # kind-major (pp, pq, qq, qp across all blocks, then the constants) to
    # match the value layout built in _solve_batched
    height = 3 * band + 1
    parts: list[list[np.ndarray]] = [[] for _ in range(5)]
    for blk, off, nb in zip(blocks, offsets, lengths):
        p = (blk["ab_cols"] + off) * height + (blk["ab_rows"] + band)
        per = nb * m * m
        for k in range(4):
            parts[k].append(p[k * per:(k + 1) * per])
        parts[4].append(p[4 * per:])
    pos = np.concatenate([np.concatenate(chunk) for chunk in parts])
    node = 2 * (np.arange(n)[:, None] * m + np.arange(m)[None, :])
    return {
        "size": size,
        "band": band,
        "height": height,
        "pos": pos,
        "const_vals": np.concatenate([blk["const_vals"] for blk in blocks]),
        "ip_flat": node.ravel(),
        "iq_flat": (node + 1).ravel(),
        "row_left": np.array([blk["row_left"] + off
                              for blk, off in zip(blocks, offsets)]),
        "row_right": np.array([blk["row_right"] + off
                               for blk, off in zip(blocks, offsets)]),
    }


def _banded_matvec(ab: np.ndarray, band: int, x: np.ndarray) -> np.ndarray:
    y = ab[band] * x
    for k in range(1, band + 1):
        y[:-k] += ab[band - k, k:] * x[k:]
        y[k:] += ab[band + k, :-k] * x[:-k]
    return y


def _solve_batched(coeffs: EllipticCoefficients, ranges,
                   outer_hu: np.ndarray,
                   flux: FluxCoefficients = FluxCoefficients(),
                   residual_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Solve the elliptic system on several disjoint ranges in one banded solve.

    `ranges` is a sorted sequence of (first, last) inclusive element pairs and
    `outer_hu` an array of matching (left, right) outer momentum traces.
    Returns nodal (p, hu) arrays of shape (total flagged elements, nodes).

    Internally the system is solved for the density-scaled pressure p/rho,
    which makes every coefficient, the forcing, and the interface penalty
    independent of rho: the corrected momenta are then exactly invariant
    under a change of density and the two unknowns are comparably scaled.
    The physical pressure is recovered by one multiplication at the end.
    """
    grid = coeffs.grid
    off = coeffs.offset
    for e0, e1 in ranges:
        if e0 > e1 or e0 < 0 or e1 >= grid.n_elements:
            raise ValueError(f"invalid element range {(e0, e1)}")
        if e0 - off < 0 or e1 - off >= len(coeffs.s11):
            raise ValueError(f"range {(e0, e1)} outside the coefficient window")

    m = grid.poly_order + 1
    lengths = tuple(e1 - e0 + 1 for e0, e1 in ranges)
    M = grid.mass
    K = grid.stiffness
    tpl = _ldg_template(lengths, m, flux.c11, flux.c12, flux.c22)
    size, band = tpl["size"], tpl["band"]
    n = sum(lengths)
    if len(ranges) == 1:
        idx = slice(ranges[0][0] - off, ranges[0][1] + 1 - off)
    else:
        idx = np.concatenate([np.arange(e0 - off, e1 + 1 - off) for e0, e1 in ranges])

    rho = coeffs.rho
    base = np.broadcast_to(-K, (n, m, m))
    Mb = M[None, :, :]
    vals = np.concatenate([
        (base + Mb * coeffs.s11[idx][:, None, :]).ravel(),
        (Mb * (coeffs.s12[idx] / rho)[:, None, :]).ravel(),
        (base + Mb * coeffs.s21[idx][:, None, :]).ravel(),
        (Mb * (rho * coeffs.s22[idx])[:, None, :]).ravel(),
        tpl["const_vals"],
    ])
    # column-major gbsv work array: rows band..3*band hold the matrix, the
    # leading band rows are pivoting fill-in, factorized in place below
    height = tpl["height"]
    ab = np.bincount(tpl["pos"], weights=vals,
                     minlength=height * size).reshape(size, height).T
    ab_mat = ab[band:].copy()

    b = np.zeros(size)
    b[tpl["ip_flat"]] = ((coeffs.f1[idx] / rho) @ M.T).ravel()
    b[tpl["iq_flat"]] = (coeffs.f2[idx] @ M.T).ravel()
    b[tpl["row_left"]] += (0.5 + flux.c12) * outer_hu[:, 0]
    b[tpl["row_right"]] -= (0.5 - flux.c12) * outer_hu[:, 1]
    rhs_norm = float(np.linalg.norm(b))

    _, _, x, info = _GBSV(band, band, ab, b, overwrite_ab=True, overwrite_b=False)
    if info != 0:
        raise EllipticSolveError(f"singular elliptic system on {ranges} "
                                 f"(lapack info {info})")
    if not np.isfinite(x.sum()):
        raise EllipticSolveError(f"non-finite elliptic solution on {ranges}")

    resid = _banded_matvec(ab_mat, band, x) - b
    scale = max(rhs_norm,
                float(np.abs(ab_mat).max() * np.linalg.norm(x)), 1e-300)
    rel = float(np.linalg.norm(resid)) / scale
    if rel > residual_tol:
        raise EllipticSolveError(
            f"elliptic solve residual {rel:.3e} exceeds {residual_tol:.1e} "
            f"on {ranges} (likely ill-conditioned)")

    p = rho * x[tpl["ip_flat"]].reshape(n, m)
    hu = x[tpl["iq_flat"]].reshape(n, m)
    return p, hu


def ldg_solve(coeffs: EllipticCoefficients, elements: tuple[int, int],
              outer_hu: tuple[float, float] = (0.0, 0.0),
              flux: FluxCoefficients = FluxCoefficients(),
              residual_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Solve the elliptic system on one contiguous element range.

    Returns nodal (p, hu) arrays of shape (range length, poly_order + 1).
    Zero Dirichlet pressure is imposed at both range endpoints; the outer
    momentum traces there are supplied by the caller.
    """
    return _solve_batched(coeffs, (tuple(elements),),
                          np.asarray(outer_hu, dtype=float).reshape(1, 2),
                          flux, residual_tol)


def _boundary_hu_traces(predictor: FlowState, bcs: BoundaryPair,
                        e0: int, e1: int) -> tuple[float, float]:
    """Outer (uncorrected) momentum traces just outside a solved range."""
    hu = predictor.hu.values
    n = predictor.grid.n_elements
    if e0 > 0:
        left = hu[e0 - 1, -1]
    else:
        left = bcs.left.ghost(predictor.h.values[0, 0], hu[0, 0],
                              predictor.hw.values[0, 0])[1]
    if e1 < n - 1:
        right = hu[e1 + 1, 0]
    else:
        right = bcs.right.ghost(predictor.h.values[-1, -1], hu[-1, -1],
                                predictor.hw.values[-1, -1])[1]
    return left, right


def solve_on_ranges(predictor: FlowState, coeffs: EllipticCoefficients,
                    ranges, bcs: BoundaryPair,
                    flux: FluxCoefficients = FluxCoefficients()) -> PressureSolution:
    """Independent per-range elliptic solves, batched into one banded system."""
    grid = predictor.grid
    ranges = tuple(sorted(tuple(r) for r in ranges))
    outer = np.array([_boundary_hu_traces(predictor, bcs, e0, e1)
                      for e0, e1 in ranges])
    p, hu = _solve_batched(coeffs, ranges, outer, flux)
    p_full = np.zeros_like(predictor.h.values)
    hu_full = predictor.hu.values.copy()
    k = 0
    for (e0, e1) in ranges:
        n_r = e1 - e0 + 1
        p_full[e0:e1 + 1] = p[k:k + n_r]
        hu_full[e0:e1 + 1] = hu[k:k + n_r]
        k += n_r
    return PressureSolution(NodalField._wrap(grid, p_full),
                            NodalField._wrap(grid, hu_full), ranges)


def central_derivative_values(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Element-local derivative plus central-average interface lifting.

    One-sided at the ends of the supplied element window.
    """
    d = derivative_values(grid, values)
    left_tr = values[:, 0]
    right_tr = values[:, -1]
    avg = 0.5 * (right_tr[:-1] + left_tr[1:])
    d[:-1] += np.outer(avg - right_tr[:-1], grid.lift_right)
    d[1:] -= np.outer(avg - left_tr[1:], grid.lift_left)
    return d


def correct_momentum(predictor: FlowState, sol: PressureSolution,
                     coeffs: EllipticCoefficients) -> FlowState:
    """Apply the pressure correction to the momenta; mass is untouched.

    Only elements inside the solved ranges receive new momenta; everywhere
    else the predictor values pass through unchanged.
    """
    grid = predictor.grid
    n = grid.n_elements
    # window covering all ranges plus one guard element on each side, so the
    # centered interface average of (h p) sees the zero product outside
    lo = max(sol.ranges[0][0] - 1, 0)
    hi = min(sol.ranges[-1][1] + 1, n - 1)
    win = slice(lo, hi + 1)
    csl = slice(lo - coeffs.offset, hi + 1 - coeffs.offset)
    if csl.start < 0 or csl.stop > len(coeffs.phi):
        raise ValueError("coefficient window does not cover the solved ranges")

    p_win = sol.p_nh.values[win]
    d_x = coeffs.bottom.d_x[csl]
    if d_x.any():
        quad = 4.0 + d_x * d_x
        hp_x = central_derivative_values(grid, predictor.h.values[win] * p_win)
        bottom_pressure = 6.0 / quad * p_win + d_x / quad * hp_x
    else:
        # flat window: the slope-weighted (h p)_x term drops out exactly
        bottom_pressure = 1.5 * p_win
    phi = coeffs.phi[csl]
    if phi.any():
        bottom_pressure += phi

    hw = predictor.hw.values.copy()
    for (e0, e1) in sol.ranges:
        rsl = slice(e0, e1 + 1)
        hw[rsl] += (coeffs.dt / coeffs.rho) * bottom_pressure[e0 - lo:e1 + 1 - lo]

    return FlowState._wrap(
        predictor.h,
        sol.hu_corrected,
        NodalField._wrap(grid, hw),
        predictor.time,
    )


def apply_correction(predictor: FlowState, bathy: BathymetryModel, dt: float,
                     ranges, bcs: BoundaryPair,
                     flux: FluxCoefficients = FluxCoefficients(),
                     g: float = GRAVITY, rho: float = RHO_WATER,
                     ) -> tuple[FlowState, PressureSolution]:
    """Full correction pipeline on the hull of the flagged ranges."""
    ranges = sorted(tuple(r) for r in ranges)
    n = predictor.grid.n_elements
    lo = max(ranges[0][0] - 1, 0)
    hi = min(ranges[-1][1] + 1, n - 1)
    coeffs = assemble_coefficients(predictor, bathy, dt, g, rho,
                                   window=slice(lo, hi + 1))
    sol = solve_on_ranges(predictor, coeffs, ranges, bcs, flux)
    return correct_momentum(predictor, sol, coeffs), sol
