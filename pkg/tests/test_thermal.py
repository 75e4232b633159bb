import math

import numpy as np
import pytest

from chipletdse.model import (
    Floorplan,
    LayerSpec,
    PlacedChiplet,
    ThermalStack,
    ValidationError,
    default_stack,
)
from chipletdse.thermal import (
    PowerMap,
    ThermalError,
    boundary_heat_flow,
    compare_soc_vs_chiplet,
    grid_shape,
    peak_temperature,
    rasterize,
    solve_steady_state,
)

MM = 1e-3

# small 3-layer stack for oracle comparisons; whole top face cooled
SMALL = ThermalStack(
    layers=(
        LayerSpec("board", 0.5, 5.0),
        LayerSpec("chiplet", 0.3, 130.0),
        LayerSpec("lid", 0.4, 50.0),
    ),
    h_top=2000.0,
    ambient=45.0,
)


def dense_solve(stack, pm):
    """Independent reference: assemble the conductance system densely with
    plain loops and solve with np.linalg.solve. Only usable for tiny grids.
    """
    nl, nx, ny = len(stack.layers), pm.nx, pm.ny
    n = nl * ny * nx
    cell = pm.cell_mm * MM
    A = np.zeros((n, n))
    b = np.zeros(n)

    def idx(l, iy, ix):
        return (l * ny + iy) * nx + ix

    def couple(i, j, g):
        A[i, i] += g
        A[j, j] += g
        A[i, j] -= g
        A[j, i] -= g

    for l, layer in enumerate(stack.layers):
        t = layer.thickness_mm * MM
        g_lat = layer.conductivity * t  # k * (cell*t) / cell
        for iy in range(ny):
            for ix in range(nx):
                if ix + 1 < nx:
                    couple(idx(l, iy, ix), idx(l, iy, ix + 1), g_lat)
                if iy + 1 < ny:
                    couple(idx(l, iy, ix), idx(l, iy + 1, ix), g_lat)
        if l + 1 < nl:
            up = stack.layers[l + 1]
            r = (t / (2 * layer.conductivity)
                 + up.thickness_mm * MM / (2 * up.conductivity)) / (cell * cell)
            for iy in range(ny):
                for ix in range(nx):
                    couple(idx(l, iy, ix), idx(l + 1, iy, ix), 1.0 / r)

    top = stack.layers[-1]
    r_amb = (top.thickness_mm * MM / (2 * top.conductivity * cell * cell)
             + 1.0 / (stack.h_top * cell * cell))
    for iy in range(ny):
        for ix in range(nx):
            i = idx(nl - 1, iy, ix)
            A[i, i] += 1.0 / r_amb
            b[i] += stack.ambient / r_amb

    cl = stack.layer_names.index("chiplet") if "chiplet" in stack.layer_names else nl - 1
    for iy in range(ny):
        for ix in range(nx):
            b[idx(cl, iy, ix)] += pm.cells[iy, ix]
    return np.linalg.solve(A, b).reshape(nl, ny, nx)


def power_map(cells, cell_mm=1.0):
    cells = np.asarray(cells, dtype=float)
    return PowerMap(cells.shape[1], cells.shape[0], cell_mm, cells)


class TestGridShape:
    def test_exact_division(self):
        assert grid_shape(40.0, 40.0, 2.0) == (20, 20)

    def test_rounds_up(self):
        assert grid_shape(41.0, 39.5, 2.0) == (21, 20)

    def test_float_noise_does_not_add_a_cell(self):
        assert grid_shape(0.1 * 3, 30.0, 0.3) == (1, 100)


class TestRasterize:
    def test_conserves_power(self):
        fp = Floorplan(10, 10, (
            PlacedChiplet("a", 0.7, 0.3, 0, 3.1, 2.4, 5.0),
            PlacedChiplet("b", 5.2, 5.9, 0, 2.0, 3.0, 2.5),
        ))
        pm = rasterize(fp, 1.0)
        assert pm.total_power == pytest.approx(7.5, rel=1e-12)

    def test_partial_cells_area_weighted(self):
        # 2.5 x 2.5 mm chiplet at the origin, 1 W/mm^2
        fp = Floorplan(5, 5, (PlacedChiplet("a", 0, 0, 0, 2.5, 2.5, 6.25),))
        pm = rasterize(fp, 1.0)
        assert pm.cells[0, 0] == pytest.approx(1.0, rel=1e-12)
        assert pm.cells[0, 2] == pytest.approx(0.5, rel=1e-12)
        assert pm.cells[2, 2] == pytest.approx(0.25, rel=1e-12)
        assert pm.total_power == pytest.approx(6.25, rel=1e-12)

    def test_cell_larger_than_chiplet_rejected(self):
        fp = Floorplan(10, 10, (PlacedChiplet("a", 1, 1, 0, 1.5, 4.0, 1.0),))
        with pytest.raises(ThermalError, match="cell size"):
            rasterize(fp, 2.0)

    def test_invalid_floorplan_rejected(self):
        fp = Floorplan(5, 5, (PlacedChiplet("a", 3, 3, 0, 4, 4, 1.0),))
        with pytest.raises(ValidationError):
            rasterize(fp, 1.0)


class TestSolver:
    def test_zero_power_is_ambient_everywhere(self):
        tf = solve_steady_state(power_map(np.zeros((4, 4))), SMALL)
        assert np.allclose(tf.data, SMALL.ambient, atol=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            pm = power_map(rng.uniform(0.0, 2.0, size=(5, 6)))
            got = solve_steady_state(pm, SMALL).data
            want = dense_solve(SMALL, pm)
            assert np.allclose(got, want, rtol=1e-6, atol=1e-9)

    def test_energy_conservation_random_maps(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            pm = power_map(rng.uniform(0.0, 5.0, size=(6, 6)))
            tf = solve_steady_state(pm, SMALL)
            out = boundary_heat_flow(tf)
            assert out == pytest.approx(pm.total_power, rel=1e-3)

    def test_superposition(self):
        rng = np.random.default_rng(3)
        p1 = power_map(rng.uniform(0.0, 3.0, size=(4, 4)))
        p2 = power_map(rng.uniform(0.0, 3.0, size=(4, 4)))
        both = power_map(p1.cells + p2.cells)
        t1 = solve_steady_state(p1, SMALL).data - SMALL.ambient
        t2 = solve_steady_state(p2, SMALL).data - SMALL.ambient
        t12 = solve_steady_state(both, SMALL).data - SMALL.ambient
        assert np.allclose(t12, t1 + t2, rtol=1e-9, atol=1e-9)

    def test_monotone_in_power(self):
        base = power_map(np.ones((4, 4)))
        bumped = base.cells.copy()
        bumped[2, 1] += 1.5
        t0 = solve_steady_state(base, SMALL).data
        t1 = solve_steady_state(power_map(bumped), SMALL).data
        assert (t1 >= t0 - 1e-12).all()

    def test_peak_over_hot_cell(self):
        cells = np.zeros((5, 5))
        cells[1, 3] = 2.0
        tf = solve_steady_state(power_map(cells), SMALL)
        chip = tf.layer("chiplet")
        assert np.unravel_index(chip.argmax(), chip.shape) == (1, 3)
        assert peak_temperature(tf) == chip.max()

    def test_cg_matches_direct(self):
        rng = np.random.default_rng(19)
        pm = power_map(rng.uniform(0.0, 2.0, size=(5, 5)))
        direct = solve_steady_state(pm, SMALL, method="direct").data
        cg = solve_steady_state(pm, SMALL, method="cg").data
        assert np.allclose(direct, cg, rtol=1e-7, atol=1e-7)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="method"):
            solve_steady_state(power_map(np.ones((3, 3))), SMALL, method="magic")

    def test_default_stack_runs_hotter_with_less_cooling(self):
        pm = power_map(np.full((10, 10), 0.5))
        cool = solve_steady_state(pm, default_stack(h_top=2000.0))
        warm = solve_steady_state(pm, default_stack(h_top=500.0))
        assert peak_temperature(warm) > peak_temperature(cool)


class TestSinkFootprint:
    def stack(self, side):
        return ThermalStack(SMALL.layers, h_top=SMALL.h_top,
                            ambient=SMALL.ambient, sink_side_mm=side)

    def test_conservation_holds_under_partial_sink(self):
        pm = power_map(np.full((6, 6), 1.0))
        tf = solve_steady_state(pm, self.stack(4.0))
        assert boundary_heat_flow(tf) == pytest.approx(pm.total_power, rel=1e-3)

    def test_smaller_sink_runs_hotter(self):
        pm = power_map(np.full((6, 6), 1.0))
        full = peak_temperature(solve_steady_state(pm, self.stack(None)))
        small = peak_temperature(solve_steady_state(pm, self.stack(3.0)))
        assert small > full

    def test_sink_missing_all_cells_rejected(self):
        pm = power_map(np.full((6, 6), 1.0))
        with pytest.raises(ThermalError, match="sink footprint"):
            solve_steady_state(pm, self.stack(0.5))


def soc_plan(board=50.0, power=100.0):
    side = math.sqrt(858.0)
    x = (board - side) / 2
    return Floorplan(board, board, (PlacedChiplet("soc", x, x, 0, side, side, power),))


def split_plan(gap, board=50.0, power=100.0):
    side = math.sqrt(170.0)
    pitch = side + gap
    x0 = (board - 2 * side - gap) / 2
    placements = tuple(
        PlacedChiplet(f"c{i}{j}", x0 + i * pitch, x0 + j * pitch, 0,
                      side, side, power / 4)
        for i in range(2) for j in range(2)
    )
    return Floorplan(board, board, placements)


class TestSocVsChiplet:
    def test_identical_plans_zero_delta(self):
        plan = split_plan(4.0)
        _, _, d = compare_soc_vs_chiplet(plan, plan, SMALL, cell_mm=2.0)
        assert d == 0.0

    def test_unequal_power_rejected(self):
        with pytest.raises(ValidationError, match="power"):
            compare_soc_vs_chiplet(soc_plan(power=100.0),
                                   split_plan(4.0, power=90.0), SMALL)

    def test_split_runs_cooler_and_gap_helps(self):
        stack = default_stack()
        peak_soc, peak_4, delta = compare_soc_vs_chiplet(
            soc_plan(), split_plan(4.0), stack, cell_mm=1.0)
        assert delta > 0
        peaks = [compare_soc_vs_chiplet(soc_plan(), split_plan(g), stack,
                                        cell_mm=1.0)[1]
                 for g in (2.0, 4.0, 8.0)]
        assert peaks[0] > peaks[1] > peaks[2]
        assert peaks[1] == peak_4
