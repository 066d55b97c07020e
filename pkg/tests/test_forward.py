"""Forward schemes: tables, weights, steps, trajectories, conservation."""

import warnings

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from fraginv import (
    DaughterDistribution,
    DegenerateGridError,
    DimensionMismatchError,
    FragmentTable,
    InvalidParameterError,
    NumericalBlowupError,
    SelectionFunction,
    StabilityWarning,
    StateVector,
    TimeGrid,
    build_geometric_grid,
    build_time_grid,
    compute_fragment_table,
    compute_wfvs_weights,
    forward_operator,
    fvs_step,
    moment,
    run_forward,
    wfvs_step,
)

LINEAR = SelectionFunction(1.0, 1.0)
QUADRATIC = SelectionFunction(1.0, 2.0)
OFF = SelectionFunction(0.0, 1.0)
BINARY = DaughterDistribution()


@pytest.fixture(scope="module")
def grid248():
    return build_geometric_grid(8.0, 3, 2.0)


@pytest.fixture(scope="module")
def bench_grid():
    return build_geometric_grid(5.0, 35, 1.4)


def brute_force_fvs_step(values, grid, selection, table, dt):
    """Independent double-loop evaluation of the plain scheme."""
    I = grid.num_cells
    out = np.empty(I)
    for i in range(I):
        birth = 0.0
        for j in range(i, I):
            birth += (selection.at(grid.centers[j]) * values[j]
                      * grid.widths[j] * table.counts[i, j])
        birth /= grid.widths[i]
        death = selection.at(grid.centers[i]) * values[i]
        out[i] = values[i] + dt * (birth - death)
    return out


class TestFragmentTable:
    def test_hand_values_three_cells(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        # parent at node 3: daughter cell [0,2] holds 2*2/3, own half-cell 2/3
        assert abs(table.counts[0, 1] - 4.0 / 3.0) < 1e-15
        assert abs(table.counts[1, 1] - 2.0 / 3.0) < 1e-15
        np.testing.assert_allclose(table.counts[:, 2], 2.0 / 3.0, rtol=1e-15)
        assert abs(table.counts[:, 1].sum() - 2.0) < 1e-14

    def test_zero_below_diagonal(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        assert table.counts[1, 0] == 0.0
        assert table.counts[2, 0] == 0.0
        assert table.counts[2, 1] == 0.0

    @pytest.mark.parametrize("cells,ratio", [(35, 1.4), (25, 1.4)])
    def test_column_sums_equal_fragment_count(self, cells, ratio):
        grid = build_geometric_grid(5.0, cells, ratio)
        table = compute_fragment_table(grid, BINARY)
        sums = table.counts.sum(axis=0)
        np.testing.assert_allclose(sums, 2.0, rtol=1e-13)

    def test_against_quadrature_oracle(self):
        grid = build_geometric_grid(3.0, 6, 1.7)
        table = compute_fragment_table(grid, BINARY)
        for j in range(grid.num_cells):
            parent = grid.centers[j]
            for i in range(j + 1):
                upper = grid.edges[i + 1] if i != j else parent
                ref, _ = quad(lambda x: 2.0 / parent, grid.edges[i], upper)
                assert abs(table.counts[i, j] - ref) < 1e-13

    def test_rejects_negative_entries(self):
        with pytest.raises(InvalidParameterError):
            FragmentTable(np.array([[-1.0]]))


class TestFvsStep:
    def test_no_fragmentation_is_identity(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        state = StateVector(np.array([1.0, 2.0, 3.0]))
        out = fvs_step(state, grid248, OFF, table, 0.1)
        np.testing.assert_array_equal(out.values, state.values)
        assert out.time == 0.1

    def test_single_cell_hand_value(self):
        grid = build_geometric_grid(2.0, 1, 1.5)
        table = compute_fragment_table(grid, BINARY)
        out = fvs_step(StateVector(np.array([1.0])), grid, LINEAR, table, 0.1)
        # update f * (1 + dt * S(x1) * (count - 1)) with count = 2, S(x1) = 1
        assert abs(out.values[0] - 1.1) < 1e-15

    def test_matches_brute_force_loop(self, bench_grid):
        table = compute_fragment_table(bench_grid, BINARY)
        rng = np.random.default_rng(11)
        values = rng.uniform(0.0, 2.0, bench_grid.num_cells)
        expected = brute_force_fvs_step(values, bench_grid, LINEAR, table, 0.1)
        out = fvs_step(StateVector(values), bench_grid, LINEAR, table, 0.1)
        np.testing.assert_allclose(out.values, expected, rtol=1e-13)

    def test_dimension_mismatch(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        with pytest.raises(DimensionMismatchError):
            fvs_step(StateVector(np.ones(4)), grid248, LINEAR, table, 0.1)

    def test_linearity(self, bench_grid):
        table = compute_fragment_table(bench_grid, BINARY)
        rng = np.random.default_rng(12)
        f = rng.standard_normal(bench_grid.num_cells)
        g = rng.standard_normal(bench_grid.num_cells)
        a, b = 2.5, -1.25
        combined = fvs_step(StateVector(a * f + b * g), bench_grid, LINEAR, table, 0.1)
        parts = (a * fvs_step(StateVector(f), bench_grid, LINEAR, table, 0.1).values
                 + b * fvs_step(StateVector(g), bench_grid, LINEAR, table, 0.1).values)
        np.testing.assert_allclose(combined.values, parts, rtol=1e-13, atol=1e-13)

    def test_particle_count_grows_under_breakage(self, bench_grid):
        # fragmentation only creates particles, so the zeroth moment ratchets up
        table = compute_fragment_table(bench_grid, BINARY)
        state = StateVector(np.exp(-bench_grid.centers))
        counts = [moment(state, bench_grid, 0)]
        for _ in range(20):
            state = fvs_step(state, bench_grid, LINEAR, table, 0.1)
            counts.append(moment(state, bench_grid, 0))
        assert all(b > a for a, b in zip(counts, counts[1:]))

    def test_count_increment_identity(self, bench_grid):
        # binary breakage at rate x: each step adds exactly dt * M1 particles
        # because the count columns sum to two and the death term removes one
        table = compute_fragment_table(bench_grid, BINARY)
        rng = np.random.default_rng(15)
        state = StateVector(rng.uniform(0.0, 2.0, bench_grid.num_cells))
        for dt in (0.05, 0.2):
            stepped = fvs_step(state, bench_grid, LINEAR, table, dt)
            gained = moment(stepped, bench_grid, 0) - moment(state, bench_grid, 0)
            expected = dt * moment(state, bench_grid, 1)
            assert abs(gained - expected) <= 1e-13 * abs(expected)


class TestWfvsWeights:
    def test_hand_values_three_cells(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        weights = compute_wfvs_weights(grid248, table, BINARY.nu)
        np.testing.assert_allclose(weights.birth, [0.0, 1.125, 1.125], rtol=1e-14)
        np.testing.assert_allclose(weights.death, [0.0, 1.25, 1.25], rtol=1e-14)

    def test_first_cell_weights_vanish(self, bench_grid):
        table = compute_fragment_table(bench_grid, BINARY)
        weights = compute_wfvs_weights(bench_grid, table, BINARY.nu)
        assert weights.birth[0] == 0.0 and weights.death[0] == 0.0
        assert np.all(weights.birth[1:] > 0.0) and np.all(weights.death[1:] > 0.0)

    @pytest.mark.parametrize("cells", [25, 35])
    def test_per_column_mass_balance(self, cells):
        grid = build_geometric_grid(5.0, cells, 1.4)
        table = compute_fragment_table(grid, BINARY)
        weights = compute_wfvs_weights(grid, table, BINARY.nu)
        x = grid.centers
        for j in range(1, cells):
            lhs = weights.death[j] * x[j]
            rhs = weights.birth[j] * np.dot(x[: j + 1], table.counts[: j + 1, j])
            assert abs(lhs - rhs) <= 1e-13 * abs(lhs)

    def test_scalar_fragment_count_accepted(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        weights = compute_wfvs_weights(grid248, table, 2.0)
        np.testing.assert_allclose(weights.birth[1:], 1.125, rtol=1e-14)

    def test_degenerate_column_reported(self, grid248):
        counts = np.zeros((3, 3))
        counts[np.triu_indices(3)] = compute_fragment_table(grid248, BINARY).counts[
            np.triu_indices(3)]
        counts[0, 1] = 0.0  # empty the only off-diagonal entry of column 1
        with pytest.raises(DegenerateGridError, match="cell 1"):
            compute_wfvs_weights(grid248, FragmentTable(counts), BINARY.nu)


class TestWfvsStep:
    def test_no_fragmentation_is_identity(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        weights = compute_wfvs_weights(grid248, table, BINARY.nu)
        state = StateVector(np.array([1.0, 2.0, 3.0]))
        out = wfvs_step(state, grid248, OFF, table, weights, 0.1)
        np.testing.assert_array_equal(out.values, state.values)

    def test_single_cell_is_identity(self):
        # both weights vanish on the only cell
        grid = build_geometric_grid(2.0, 1, 1.5)
        table = compute_fragment_table(grid, BINARY)
        weights = compute_wfvs_weights(grid, table, BINARY.nu)
        out = wfvs_step(StateVector(np.array([3.0])), grid, LINEAR, table, weights, 0.1)
        assert out.values[0] == 3.0

    def test_hand_computed_step_and_mass(self, grid248):
        table = compute_fragment_table(grid248, BINARY)
        weights = compute_wfvs_weights(grid248, table, BINARY.nu)
        state = StateVector(np.array([0.0, 0.0, 1.0]))
        out = wfvs_step(state, grid248, LINEAR, table, weights, 0.1)
        # births: (1/dx_i) * wb[2] * S(6) * dx_2 * counts[i, 2]; death on cell 2
        np.testing.assert_allclose(out.values, [0.9, 0.9, 0.7], rtol=1e-14)
        before = moment(state, grid248, 1)
        after = moment(out, grid248, 1)
        assert abs(after - before) <= 1e-15 * before

    def test_exact_mass_conservation_random_states(self, bench_grid):
        table = compute_fragment_table(bench_grid, BINARY)
        weights = compute_wfvs_weights(bench_grid, table, BINARY.nu)
        rng = np.random.default_rng(13)
        for _ in range(20):
            state = StateVector(rng.uniform(0.0, 3.0, bench_grid.num_cells))
            dt = float(rng.uniform(0.001, 0.5))
            out = wfvs_step(state, bench_grid, LINEAR, table, weights, dt)
            before = moment(state, bench_grid, 1)
            after = moment(out, bench_grid, 1)
            assert abs(after - before) <= 1e-12 * before

    def test_linearity(self, bench_grid):
        table = compute_fragment_table(bench_grid, BINARY)
        weights = compute_wfvs_weights(bench_grid, table, BINARY.nu)
        rng = np.random.default_rng(14)
        f = rng.standard_normal(bench_grid.num_cells)
        g = rng.standard_normal(bench_grid.num_cells)
        combined = wfvs_step(StateVector(0.5 * f - 2.0 * g), bench_grid, LINEAR,
                             table, weights, 0.1)
        parts = (0.5 * wfvs_step(StateVector(f), bench_grid, LINEAR, table, weights, 0.1).values
                 - 2.0 * wfvs_step(StateVector(g), bench_grid, LINEAR, table, weights, 0.1).values)
        np.testing.assert_allclose(combined.values, parts, rtol=1e-13, atol=1e-13)


class TestRunForward:
    def test_zero_steps_returns_initial(self, bench_grid):
        tg = TimeGrid(final_time=2.0, num_steps=0)
        f0 = np.exp(-bench_grid.centers)
        traj = run_forward(bench_grid, tg, LINEAR, BINARY, "fvs", StateVector(f0))
        assert traj.states.shape == (1, 35)
        np.testing.assert_array_equal(traj.states[0], f0)

    def test_initial_level_matches_input(self, bench_grid):
        tg = build_time_grid(2.0, 20)
        f0 = np.exp(-bench_grid.centers)
        with warnings.catch_warnings():
            warnings.simplefilter("error")  # Test I setup must not warn
            traj = run_forward(bench_grid, tg, LINEAR, BINARY, "wfvs", StateVector(f0))
        np.testing.assert_array_equal(traj.states[0], f0)
        assert traj.times[0] == 0.0 and traj.times[-1] == 2.0
        assert traj.states.shape == (21, 35)

    @pytest.mark.parametrize("scheme", ["fvs", "wfvs"])
    def test_final_state_tracks_analytic_target(self, bench_grid, scheme):
        # from the exact initial datum the march lands within ~1e-1 of the
        # closed-form profile; the gap concentrates at the smallest sizes
        # (Euler time error plus the truncated birth integral)
        tg = build_time_grid(2.0, 20)
        f0 = np.exp(-bench_grid.centers)
        target = 9.0 * np.exp(-3.0 * bench_grid.centers)
        traj = run_forward(bench_grid, tg, LINEAR, BINARY, scheme, StateVector(f0))
        gap = np.max(np.abs(traj.states[-1] - target))
        assert 0.05 < gap < 0.5

    def test_wfvs_trajectory_conserves_mass(self, bench_grid):
        tg = build_time_grid(2.0, 20)
        f0 = np.exp(-bench_grid.centers)
        traj = run_forward(bench_grid, tg, LINEAR, BINARY, "wfvs", StateVector(f0))
        masses = traj.states @ (bench_grid.centers * bench_grid.widths)
        drift = np.max(np.abs(masses - masses[0])) / masses[0]
        assert drift <= 1e-12

    def test_fvs_trajectory_leaks_mass(self, bench_grid):
        tg = build_time_grid(2.0, 20)
        f0 = np.exp(-bench_grid.centers)
        traj = run_forward(bench_grid, tg, LINEAR, BINARY, "fvs", StateVector(f0))
        masses = traj.states @ (bench_grid.centers * bench_grid.widths)
        step_drift = np.abs(np.diff(masses)) / masses[0]
        assert np.max(step_drift) > 1e-6

    def test_stability_warning_for_large_rate_step(self):
        grid = build_geometric_grid(5.0, 25, 1.4)
        tg = build_time_grid(2.0, 20)
        f0 = np.exp(-grid.centers)
        with pytest.warns(StabilityWarning):
            run_forward(grid, tg, QUADRATIC, BINARY, "fvs", StateVector(f0))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_reports_step(self, bench_grid):
        tg = build_time_grid(2.0, 20)
        huge = SelectionFunction(coefficient=1e300, exponent=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(NumericalBlowupError) as info:
                run_forward(bench_grid, tg, huge, BINARY, "fvs",
                            StateVector(np.ones(35)))
        assert info.value.step is not None

    def test_rejects_bad_scheme_and_state(self, bench_grid):
        tg = build_time_grid(2.0, 20)
        with pytest.raises(InvalidParameterError):
            run_forward(bench_grid, tg, LINEAR, BINARY, "upwind",
                        StateVector(np.ones(35)))
        with pytest.raises(InvalidParameterError):
            run_forward(bench_grid, tg, LINEAR, BINARY, "fvs",
                        StateVector(np.full(35, np.nan)))

    def test_substeps_refine_time_integration(self, bench_grid):
        tg = build_time_grid(2.0, 20)
        f0 = np.exp(-bench_grid.centers)
        coarse = run_forward(bench_grid, tg, LINEAR, BINARY, "fvs", StateVector(f0))
        fine = run_forward(bench_grid, tg, LINEAR, BINARY, "fvs", StateVector(f0),
                           substeps=4)
        fine_ref = run_forward(bench_grid, build_time_grid(2.0, 80), LINEAR, BINARY,
                               "fvs", StateVector(f0))
        assert fine.states.shape == (21, 35)
        np.testing.assert_allclose(fine.states[-1], fine_ref.states[-1], rtol=1e-12)
        assert not np.allclose(coarse.states[-1], fine.states[-1], rtol=1e-6)

    def test_time_loop_against_ode_oracle(self, bench_grid):
        # the Euler march must approach an independent stiff-free integration
        # of the same semi-discrete system as dt shrinks
        table = compute_fragment_table(bench_grid, BINARY)
        L = forward_operator(bench_grid, LINEAR, table)
        f0 = np.exp(-bench_grid.centers)
        sol = solve_ivp(lambda t, f: L @ f, (0.0, 2.0), f0, rtol=1e-11, atol=1e-13,
                        dense_output=True)
        reference = sol.sol(2.0)
        traj = run_forward(bench_grid, build_time_grid(2.0, 8000), LINEAR, BINARY,
                           "fvs", StateVector(f0))
        # forward Euler residual at dt = 2.5e-4 is about 5e-4 here
        assert np.max(np.abs(traj.states[-1] - reference)) < 1e-3


class TestMoment:
    def test_flat_state(self, grid248):
        state = StateVector(np.ones(3))
        assert moment(state, grid248, 0) == 8.0
        assert moment(state, grid248, 1) == 32.0

    def test_zero_state(self, grid248):
        assert moment(StateVector(np.zeros(3)), grid248, 2) == 0.0

    def test_negative_order_rejected(self, grid248):
        with pytest.raises(InvalidParameterError):
            moment(StateVector(np.ones(3)), grid248, -1)
