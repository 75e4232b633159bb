"""Compact steady-state thermal solver for the 2.5D package stack.

The package is discretized as one finite-volume cell layer per stack layer
on an nx x ny grid. Neighbouring cells exchange heat through thermal
resistances R = d/(k*A); the top layer couples to ambient through a
convective coefficient h; all other outer faces are adiabatic. Power is
injected in the chiplet layer, rasterized from a floorplan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import Floorplan, ThermalStack, ValidationError

MM = 1e-3

CHIPLET_LAYER = "chiplet"


class ThermalError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerMap:
    """Per-cell dissipated power (W) in the chiplet layer."""

    nx: int
    ny: int
    cell_mm: float
    cells: np.ndarray  # (ny, nx), W

    @property
    def total_power(self) -> float:
        return float(self.cells.sum())


@dataclass(frozen=True)
class TemperatureField:
    """Per-cell temperature (degrees C) for every stack layer."""

    stack: ThermalStack
    cell_mm: float
    data: np.ndarray  # (n_layers, ny, nx)

    def layer(self, name: str) -> np.ndarray:
        return self.data[self.stack.layer_index(name)]

    @property
    def min_temperature(self) -> float:
        return float(self.data.min())


def grid_shape(width_mm: float, height_mm: float, cell_mm: float) -> tuple[int, int]:
    nx = max(1, math.ceil(width_mm / cell_mm - 1e-9))
    ny = max(1, math.ceil(height_mm / cell_mm - 1e-9))
    return nx, ny


def rasterize(floorplan: Floorplan, cell_mm: float) -> PowerMap:
    """Spread each chiplet's power uniformly over the cells it covers.

    Partial cells get area-weighted shares, so total power is conserved
    exactly (up to float rounding).
    """
    floorplan.validate()
    for p in floorplan.placements:
        if cell_mm > min(p.eff_width, p.eff_height):
            raise ThermalError(
                f"cell size {cell_mm} mm exceeds smallest dimension of "
                f"chiplet {p.name!r}")
    nx, ny = grid_shape(floorplan.width, floorplan.height, cell_mm)
    cells = np.zeros((ny, nx))
    for p in floorplan.placements:
        density = p.power / (p.eff_width * p.eff_height)  # W/mm^2
        if density == 0:
            continue
        x0, x1 = p.x, p.x + p.eff_width
        y0, y1 = p.y, p.y + p.eff_height
        ix0 = max(0, int(x0 / cell_mm))
        ix1 = min(nx - 1, int((x1 - 1e-12) / cell_mm))
        iy0 = max(0, int(y0 / cell_mm))
        iy1 = min(ny - 1, int((y1 - 1e-12) / cell_mm))
        for iy in range(iy0, iy1 + 1):
            oy = min(y1, (iy + 1) * cell_mm) - max(y0, iy * cell_mm)
            for ix in range(ix0, ix1 + 1):
                ox = min(x1, (ix + 1) * cell_mm) - max(x0, ix * cell_mm)
                cells[iy, ix] += density * ox * oy
    return PowerMap(nx, ny, cell_mm, cells)


def _sink_mask(stack: ThermalStack, nx: int, ny: int, cell_mm: float) -> np.ndarray:
    """Top cells coupled to ambient: all, or a centered fixed sink footprint."""
    if stack.sink_side_mm is None:
        return np.ones((ny, nx), dtype=bool)
    side = stack.sink_side_mm
    wx, wy = nx * cell_mm, ny * cell_mm
    cx = (np.arange(nx) + 0.5) * cell_mm
    cy = (np.arange(ny) + 0.5) * cell_mm
    in_x = np.abs(cx - wx / 2.0) <= side / 2.0
    in_y = np.abs(cy - wy / 2.0) <= side / 2.0
    mask = np.outer(in_y, in_x)
    if not mask.any():
        raise ThermalError("sink footprint covers no grid cells")
    return mask


@lru_cache(maxsize=16)
def _grid_model(stack: ThermalStack, nx: int, ny: int, cell_mm: float):
    """Conductance matrix + LU factorization for a grid geometry.

    The matrix depends only on (stack, grid), not on the power map, so it
    is cached and re-used across solves (the annealer solves thousands of
    power maps on one geometry).
    """
    nl = len(stack.layers)
    n = nl * nx * ny
    cell = cell_mm * MM
    a_face = cell * cell  # horizontal cell face, m^2

    def idx(l: int, iy: int, ix: int) -> int:
        return (l * ny + iy) * nx + ix

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    diag = np.zeros(n)

    def couple(i: int, j: int, g: float) -> None:
        rows.append(i)
        cols.append(j)
        vals.append(-g)
        rows.append(j)
        cols.append(i)
        vals.append(-g)
        diag[i] += g
        diag[j] += g

    for l, layer in enumerate(stack.layers):
        t = layer.thickness_mm * MM
        k = layer.conductivity
        # lateral conduction within the layer
        g_lat = k * (cell * t) / cell
        for iy in range(ny):
            for ix in range(nx):
                i = idx(l, iy, ix)
                if ix + 1 < nx:
                    couple(i, idx(l, iy, ix + 1), g_lat)
                if iy + 1 < ny:
                    couple(i, idx(l, iy + 1, ix), g_lat)
        # vertical conduction to the layer above (half-thickness series)
        if l + 1 < nl:
            up = stack.layers[l + 1]
            r_vert = (t / (2.0 * k) + up.thickness_mm * MM / (2.0 * up.conductivity)) / a_face
            g_vert = 1.0 / r_vert
            for iy in range(ny):
                for ix in range(nx):
                    couple(idx(l, iy, ix), idx(l + 1, iy, ix), g_vert)

    # convective top boundary: half top-layer conduction in series with h,
    # applied to the cells under the (possibly fixed-size) sink footprint
    top = stack.layers[-1]
    r_amb = top.thickness_mm * MM / (2.0 * top.conductivity * a_face) + 1.0 / (stack.h_top * a_face)
    g_amb = 1.0 / r_amb
    mask = _sink_mask(stack, nx, ny, cell_mm)
    amb = np.zeros(n)
    for iy in range(ny):
        for ix in range(nx):
            if not mask[iy, ix]:
                continue
            i = idx(nl - 1, iy, ix)
            diag[i] += g_amb
            amb[i] = g_amb

    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag)
    matrix = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    lu = spla.splu(matrix)
    return matrix, lu, amb


RESIDUAL_TOL = 1e-8
CG_MAX_ITER = 20000


def solve_steady_state(
    pm: PowerMap, stack: ThermalStack, method: str = "direct"
) -> TemperatureField:
    """Solve the discretized steady-state heat equation.

    ``method`` is "direct" (cached sparse LU, default) or "cg" (conjugate
    gradient). Either way the relative residual must come out <= 1e-8 or a
    ThermalError is raised.
    """
    nl = len(stack.layers)
    n = nl * pm.nx * pm.ny
    matrix, lu, amb = _grid_model(stack, pm.nx, pm.ny, pm.cell_mm)
    source = np.zeros(n)
    cl = stack.layer_index(CHIPLET_LAYER) if CHIPLET_LAYER in stack.layer_names else nl - 1
    source[(cl * pm.ny) * pm.nx:(cl * pm.ny + pm.ny) * pm.nx] = pm.cells.ravel()
    rhs = source + amb * stack.ambient

    if method == "direct":
        t = lu.solve(rhs)
    elif method == "cg":
        t, info = spla.cg(matrix, rhs, x0=np.full(n, stack.ambient),
                          rtol=1e-12, atol=0.0, maxiter=CG_MAX_ITER)
        if info > 0:
            res = np.linalg.norm(matrix @ t - rhs) / np.linalg.norm(rhs)
            raise ThermalError(
                f"CG did not converge after {CG_MAX_ITER} iterations "
                f"(relative residual {res:.3e})")
    else:
        raise ValueError(f"unknown method {method!r}")

    res = np.linalg.norm(matrix @ t - rhs) / np.linalg.norm(rhs)
    if res > RESIDUAL_TOL:
        raise ThermalError(f"solver residual {res:.3e} exceeds {RESIDUAL_TOL}")
    data = t.reshape(nl, pm.ny, pm.nx)
    if data.min() < stack.ambient - 1e-6:
        raise ThermalError("temperature field dips below ambient; model is inconsistent")
    return TemperatureField(stack, pm.cell_mm, data)


def boundary_heat_flow(tf: TemperatureField) -> float:
    """Heat leaving through the convective top boundary, W.

    In steady state this must equal the injected power (energy balance).
    """
    stack = tf.stack
    top = stack.layers[-1]
    a_face = (tf.cell_mm * MM) ** 2
    r_amb = (top.thickness_mm * MM / (2.0 * top.conductivity * a_face)
             + 1.0 / (stack.h_top * a_face))
    ny, nx = tf.data.shape[1:]
    mask = _sink_mask(stack, nx, ny, tf.cell_mm)
    return float((((tf.data[-1] - stack.ambient) / r_amb)[mask]).sum())


def peak_temperature(tf: TemperatureField, layer: str = CHIPLET_LAYER) -> float:
    return float(tf.layer(layer).max())


def compare_soc_vs_chiplet(
    soc_plan: Floorplan,
    split_plan: Floorplan,
    stack: ThermalStack,
    cell_mm: float = 1.0,
) -> tuple[float, float, float]:
    """Peak chiplet-layer temperatures of two power-controlled floorplans.

    Returns (peak_soc, peak_split, delta). The plans must carry equal total
    power, otherwise the comparison is meaningless and an error is raised.
    """
    p_soc, p_split = soc_plan.total_power, split_plan.total_power
    if not math.isclose(p_soc, p_split, rel_tol=1e-9):
        raise ValidationError(
            f"total power differs: {p_soc} W vs {p_split} W; the comparison "
            "must be power-controlled")
    peak_soc = peak_temperature(solve_steady_state(rasterize(soc_plan, cell_mm), stack))
    peak_split = peak_temperature(solve_steady_state(rasterize(split_plan, cell_mm), stack))
    return peak_soc, peak_split, peak_soc - peak_split
