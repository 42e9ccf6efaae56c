import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intergame.engine import DynamicsSpec, backward_jet, identity_feedback, simulate
from intergame.epsilon import (
    CellComplex,
    EpsilonRepresentation,
    EpsilonTrace,
    apply_representation,
    detect_cell_transitions,
    epsilon_trace,
    estimate_epsilon,
    find_correlation_integrals,
    monomial,
    stack_traces,
)
from intergame.errors import DimensionMismatch, UnderDetermined


def affine_rep(columns):
    """columns: list of callables (u0, phi, xi, jet) -> (du,) vectors."""
    return EpsilonRepresentation(
        d_eps=len(columns),
        structure="affine",
        basis_fn=lambda u0, phi, xi, jet: np.column_stack(
            [c(u0, phi, xi, jet) for c in columns]
        ),
    )


def jet_of(phi):
    return backward_jet(np.atleast_2d(np.asarray(phi, dtype=float)), 0.01, 0)


PHI_REP = affine_rep([lambda u0, phi, xi, jet: phi])


class TestApplyAndEstimate:
    def test_zero_basis_returns_pure_control(self):
        rep = affine_rep([lambda u0, phi, xi, jet: np.zeros(2)])
        u = apply_representation(rep, [1.0, -2.0], jet_of([5.0, 5.0]), [3.0])
        assert np.array_equal(u, [1.0, -2.0])

    def test_affine_arithmetic(self):
        # u = u0 + eps*phi with u0=1, phi=2, eps=2 -> 5
        u = apply_representation(PHI_REP, [1.0], jet_of([2.0]), [2.0])
        assert np.array_equal(u, [5.0])

    def test_exact_inversion(self):
        est = estimate_epsilon(PHI_REP, [5.0], [1.0], jet_of([2.0]))
        assert est.value == pytest.approx([2.0], abs=1e-12)
        assert est.residual == pytest.approx(0.0, abs=1e-12)

    def test_rank_deficient_case_returns_minimal_norm(self):
        rep = affine_rep([lambda u0, phi, xi, jet: np.zeros(1)])
        est = estimate_epsilon(rep, [1.0], [1.0], jet_of([2.0]))
        assert np.array_equal(est.value, [0.0])
        assert est.residual == 0.0

    def test_minimal_norm_tie_break_beats_brute_force_grid(self):
        # two identical columns: any (a, b) with a+b = s solves; minimal norm
        # is (s/2, s/2).  Compare against a brute-force parameter grid.
        rep = affine_rep(
            [lambda u0, phi, xi, jet: phi, lambda u0, phi, xi, jet: phi]
        )
        jet = jet_of([1.0])
        est = estimate_epsilon(rep, [2.0], [1.0], jet)
        grid = np.linspace(-2, 2, 81)
        best = None
        for a in grid:
            for b in grid:
                r = abs(2.0 - (1.0 + a + b))
                key = (round(r, 9), a * a + b * b)
                if best is None or key < best[0]:
                    best = (key, (a, b))
        assert est.residual <= best[0][0] + 1e-9
        assert est.value @ est.value <= best[0][1] + 1e-9
        assert est.value == pytest.approx([0.5, 0.5], abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        eps=st.tuples(
            st.floats(-5, 5, allow_nan=False), st.floats(-5, 5, allow_nan=False)
        ),
        phi=st.tuples(
            st.floats(0.1, 4, allow_nan=False), st.floats(-4, -0.1, allow_nan=False)
        ),
    )
    def test_round_trip_property_full_rank(self, eps, phi):
        rep = affine_rep(
            [
                lambda u0, p, xi, jet: p,
                lambda u0, p, xi, jet: np.array([-p[1], p[0]]),
            ]
        )
        jet = jet_of(list(phi))
        u = apply_representation(rep, [0.3, -0.7], jet, list(eps))
        est = estimate_epsilon(rep, u, [0.3, -0.7], jet)
        assert np.max(np.abs(est.value - np.asarray(eps))) < 1e-9

    def test_general_structure_inverts_within_budget(self):
        rep = EpsilonRepresentation(
            d_eps=1,
            structure="general",
            apply_fn=lambda u0, phi, xi, jet, eps: u0 + np.tanh(eps) * phi,
        )
        jet = jet_of([2.0])
        target = apply_representation(rep, [1.0], jet, [0.4])
        est = estimate_epsilon(rep, target, [1.0], jet, budget=400)
        assert est.residual < 1e-6
        assert abs(est.value[0] - 0.4) < 1e-4

    def test_general_structure_flags_blown_budget(self):
        rep = EpsilonRepresentation(
            d_eps=2,
            structure="general",
            apply_fn=lambda u0, phi, xi, jet, eps: u0 + np.array([np.sin(3 * eps @ eps)]),
        )
        est = estimate_epsilon(rep, [1.7], [0.0], jet_of([1.0]), budget=8)
        assert est.budget_exhausted
        assert est.residual >= 0.0

    def test_non_finite_inputs_are_rejected(self):
        with pytest.raises(DimensionMismatch):
            estimate_epsilon(PHI_REP, [np.nan], [1.0], jet_of([2.0]))


def planted_pursuit_trajectory(eps=(0.3, -0.1), horizon=5.0, jet_order=0):
    spec = DynamicsSpec(
        n_players=1,
        d_phi=2,
        d_xi=0,
        control_dims=(2,),
        phi_rhs=lambda phi, u: u[0],
        jet_order=jet_order,
    )
    eps = np.asarray(eps)

    def coupling(t, u0, phi, xi, jet):
        basis = np.column_stack([phi, [-phi[1], phi[0]]])
        return u0 + basis @ eps

    policy = lambda t, j, phi, xi, jet, rng: -0.5 * phi
    return simulate(spec, [policy], [coupling], [1.0, 0.5], [], horizon, dt=0.01)


def two_d_rep():
    return affine_rep(
        [
            lambda u0, phi, xi, jet: phi,
            lambda u0, phi, xi, jet: np.array([-phi[1], phi[0]]),
        ]
    )


class TestEpsilonTrace:
    def test_identity_coupling_gives_zero_trace(self):
        spec = DynamicsSpec(
            n_players=1,
            d_phi=1,
            d_xi=0,
            control_dims=(1,),
            phi_rhs=lambda phi, u: u[0],
            jet_order=0,
        )
        traj = simulate(
            spec,
            [lambda t, j, phi, xi, jet, rng: -0.5 * phi],
            [identity_feedback],
            [1.0],
            [],
            horizon=2.0,
            dt=0.01,
        )
        trace = epsilon_trace(traj, PHI_REP)
        assert np.all(trace.valid)
        assert np.max(np.abs(trace.values)) < 1e-12

    def test_planted_parameters_recovered_at_every_tick(self):
        traj = planted_pursuit_trajectory()
        trace = epsilon_trace(traj, two_d_rep())
        assert np.max(np.abs(trace.values - np.array([0.3, -0.1]))) < 1e-6

    def test_constant_plant_has_constant_trace(self):
        traj = planted_pursuit_trajectory()
        trace = epsilon_trace(traj, two_d_rep())
        assert np.max(np.abs(np.diff(trace.values, axis=0))) <= 1e-9

    def test_warmup_ticks_are_marked_absent(self):
        traj = planted_pursuit_trajectory(jet_order=1)
        trace = epsilon_trace(traj, two_d_rep())
        assert not trace.valid[0]
        assert np.isnan(trace.values[0]).all()
        assert trace.valid[1:].all()

    def test_piecewise_step_is_reproduced_within_one_tick(self):
        spec = DynamicsSpec(
            n_players=1,
            d_phi=1,
            d_xi=0,
            control_dims=(1,),
            phi_rhs=lambda phi, u: np.zeros(1),
            jet_order=0,
        )

        def coupling(t, u0, phi, xi, jet):
            eps = 0.2 if t < 5.0 else 0.8
            return u0 + eps * phi

        traj = simulate(
            spec,
            [lambda t, j, phi, xi, jet, rng: np.zeros(1)],
            [coupling],
            [1.0],
            [],
            horizon=10.0,
            dt=0.01,
        )
        trace = epsilon_trace(traj, PHI_REP)
        switch = np.flatnonzero(np.abs(np.diff(trace.values[:, 0])) > 0.1)
        assert switch.size == 1
        assert abs(switch[0] + 1 - 500) <= 1


class TestCorrelationIntegrals:
    def _trace_from(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        n = values.shape[0]
        return EpsilonTrace(
            values=values,
            residual=np.zeros(n),
            valid=np.ones(n, dtype=bool),
            dt=0.01,
        )

    def test_planted_linear_relation_is_recovered(self):
        rng = np.random.default_rng(0)
        e2 = 0.2 + 0.1 * np.sin(np.linspace(0, 6, 400)) + 0.01 * rng.standard_normal(400) * 0
        tr2 = self._trace_from(e2)
        tr1 = self._trace_from(2.0 * e2)
        found = find_correlation_integrals(
            [tr1, tr2], [monomial("eps0[0]"), monomial("eps1[0]")], tolerance=1e-8
        )
        assert len(found) == 1
        expected = np.array([1.0, -2.0]) / np.sqrt(5.0)
        assert np.max(np.abs(found[0].coefficients - expected)) < 1e-6
        assert found[0].residual_rms <= 1e-8

    def test_independent_traces_yield_no_relation(self):
        rng = np.random.default_rng(5)
        tr1 = self._trace_from(rng.standard_normal(300))
        tr2 = self._trace_from(rng.standard_normal(300))
        found = find_correlation_integrals(
            [tr1, tr2], [monomial("eps0[0]"), monomial("eps1[0]")], tolerance=1e-6
        )
        assert found == []

    def test_constant_trace_gives_its_constancy_relation(self):
        c = 0.7
        tr = self._trace_from(np.full(50, c))
        found = find_correlation_integrals(
            [tr], [monomial(), monomial("eps0[0]")], tolerance=1e-8
        )
        assert len(found) == 1
        coeff = found[0].coefficients
        # relation c*1 - eps = 0, up to normalization and sign
        direction = np.array([c, -1.0]) / np.hypot(c, 1.0)
        assert np.max(np.abs(coeff - direction)) < 1e-9 or np.max(
            np.abs(coeff + direction)
        ) < 1e-9

    def test_under_determined_basis_is_rejected(self):
        tr = self._trace_from(np.ones(1))
        with pytest.raises(UnderDetermined):
            find_correlation_integrals(
                [tr], [monomial(), monomial("eps0[0]")], tolerance=1e-6
            )

    def test_relations_hold_on_the_full_trajectory(self):
        # the reported residual is measured on all valid ticks
        e2 = np.concatenate([np.full(100, 0.2), np.full(100, 0.5)])
        tr1, tr2 = self._trace_from(2 * e2), self._trace_from(e2)
        found = find_correlation_integrals(
            [tr1, tr2], [monomial("eps0[0]"), monomial("eps1[0]")], tolerance=1e-8
        )
        c = found[0].coefficients
        stacked = np.column_stack([tr1.values[:, 0], tr2.values[:, 0]])
        assert np.sqrt(np.mean((stacked @ c) ** 2)) <= 1e-8


def brute_force_hysteresis(samples, lo, hi, counts, margin):
    """Reference automaton over the sample list, written independently."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    counts = np.asarray(counts)
    widths = (hi - lo) / counts

    def cell(x):
        return tuple(
            int(np.clip(np.floor((xc - l) / w), 0, c - 1))
            for xc, l, w, c in zip(x, lo, widths, counts)
        )

    current = cell(samples[0])
    transitions = []
    for k, x in enumerate(samples[1:], start=1):
        clo = lo + np.array(current) * widths - margin * widths
        chi = lo + (np.array(current) + 1) * widths + margin * widths
        if np.any(x < clo) or np.any(x > chi):
            current = cell(x)
            transitions.append((k, current))
    return transitions


class TestCellTransitions:
    def _trace(self, values):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] == 1:
            values = values.T
        n = values.shape[0]
        return EpsilonTrace(values, np.zeros(n), np.ones(n, dtype=bool), dt=0.01)

    def test_constant_trace_is_one_interval(self):
        grid = CellComplex([0.0], [2.0], (2,), margin=0.0)
        part = detect_cell_transitions(self._trace(np.full(10, 0.5)), grid)
        assert part.n_intervals == 1
        assert np.array_equal(part.ticks, [0])

    def test_single_threshold_crossing(self):
        grid = CellComplex([0.0], [2.0], (2,), margin=0.0)
        part = detect_cell_transitions(self._trace([0.1, 0.4, 0.9, 1.2]), grid)
        assert part.n_intervals == 2
        assert part.ticks[1] == 3
        assert part.cells == [(0,), (1,)]

    def test_boundary_chatter_is_suppressed(self):
        grid = CellComplex([0.0], [2.0], (2,), margin=0.05)
        wiggle = [0.99, 1.01] * 10
        part = detect_cell_transitions(self._trace(wiggle), grid)
        assert part.n_intervals == 1
        ref = brute_force_hysteresis(
            np.asarray(wiggle).reshape(-1, 1), [0.0], [2.0], [2], 0.05
        )
        assert ref == []

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.01, 1.99, allow_nan=False), min_size=2, max_size=60))
    def test_matches_brute_force_automaton(self, xs):
        grid = CellComplex([0.0], [2.0], (4,), margin=0.05)
        part = detect_cell_transitions(self._trace(xs), grid)
        ref = brute_force_hysteresis(
            np.asarray(xs).reshape(-1, 1), [0.0], [2.0], [4], 0.05
        )
        assert [(int(t), c) for t, c in zip(part.ticks[1:], part.cells[1:])] == ref

    @settings(max_examples=40, deadline=None)
    @given(
        base=st.floats(0.3, 0.7, allow_nan=False),
        seed=st.integers(0, 1000),
    )
    def test_bounded_noise_never_transitions(self, base, seed):
        # noise amplitude strictly below margin * width / 2 around an
        # interior point can never leave the hysteresis box
        grid = CellComplex([0.0], [1.0], (1,), margin=0.1)
        amp = 0.1 * 1.0 / 2 * 0.999
        rng = np.random.default_rng(seed)
        xs = base + amp * (2 * rng.random(50) - 1)
        xs = np.clip(xs, 0.0, 0.999)
        part = detect_cell_transitions(self._trace(xs), grid)
        assert part.n_intervals == 1

    def test_partition_times_strictly_increase_and_cells_differ(self):
        grid = CellComplex([0.0], [2.0], (4,), margin=0.05)
        rng = np.random.default_rng(2)
        xs = np.abs(np.cumsum(rng.standard_normal(200) * 0.2)) % 1.9
        part = detect_cell_transitions(self._trace(xs), grid)
        assert np.all(np.diff(part.times) > 0)
        for a, b in zip(part.cells, part.cells[1:]):
            assert a != b

    def test_out_of_box_samples_clamp_and_flag(self):
        grid = CellComplex([0.0], [1.0], (2,), margin=0.0)
        part = detect_cell_transitions(self._trace([0.2, 1.7, 0.2]), grid)
        assert 1 in part.clamped_ticks
        assert part.cells[1] == (1,)

    def test_empty_trace_is_rejected(self):
        grid = CellComplex([0.0], [1.0], (2,))
        empty = EpsilonTrace(
            np.zeros((0, 1)), np.zeros(0), np.zeros(0, dtype=bool), dt=0.01
        )
        with pytest.raises(DimensionMismatch):
            detect_cell_transitions(empty, grid)


class TestStackTraces:
    def test_stacks_values_and_intersects_validity(self):
        a = EpsilonTrace(
            np.arange(4.0).reshape(-1, 1),
            np.zeros(4),
            np.array([False, True, True, True]),
            dt=0.01,
        )
        b = EpsilonTrace(
            np.arange(4.0, 8.0).reshape(-1, 1),
            np.zeros(4),
            np.array([True, True, True, False]),
            dt=0.01,
        )
        s = stack_traces([a, b])
        assert s.d_eps == 2
        assert list(s.valid) == [False, True, True, False]
        assert np.array_equal(s.values[1], [1.0, 5.0])
