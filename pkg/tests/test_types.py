import math

import numpy as np
import pytest

from intergame.engine import (
    DynamicsSpec,
    IntentionField,
    PureControl,
    RealizedControl,
    StateVector,
    identity_feedback,
    simulate,
)
from intergame.epsilon import CellComplex, EpsilonRepresentation
from intergame.errors import DimensionMismatch


class TestSampleTypes:
    def test_state_vector_requires_finite_entries(self):
        StateVector([1.0, 2.0], time=0.5)
        with pytest.raises(DimensionMismatch):
            StateVector([1.0, np.nan], time=0.0)
        with pytest.raises(DimensionMismatch):
            StateVector([[1.0]], time=0.0)

    def test_intention_field_allows_dimension_zero(self):
        field = IntentionField(np.zeros(0), time=0.0)
        assert field.values.size == 0

    def test_control_series_validation(self):
        PureControl(0, np.zeros((5, 2)), dt=0.01)
        with pytest.raises(DimensionMismatch):
            RealizedControl(0, np.zeros(5), dt=0.01)
        with pytest.raises(DimensionMismatch):
            PureControl(0, np.zeros((5, 2)), dt=0.0)

    def test_control_series_times_follow_the_grid(self):
        series = PureControl(1, np.zeros((3, 1)), dt=0.5, t0=1.0)
        assert np.array_equal(series.times, [1.0, 1.5, 2.0])


class TestTrajectoryViews:
    def test_accessors_return_typed_samples(self):
        spec = DynamicsSpec(
            n_players=1, d_phi=1, d_xi=0, control_dims=(1,),
            phi_rhs=lambda phi, u: u[0], jet_order=0,
        )
        traj = simulate(
            spec,
            [lambda t, j, phi, xi, jet, rng: np.array([math.sin(t)])],
            [identity_feedback],
            [0.0], [], horizon=0.5, dt=0.01,
        )
        s = traj.state_at(10)
        assert isinstance(s, StateVector)
        assert s.time == 10 * 0.01
        assert np.array_equal(s.values, traj.phi[10])
        pure = traj.pure_control(0)
        real = traj.realized_control(0)
        assert isinstance(pure, PureControl)
        assert isinstance(real, RealizedControl)
        assert pure.values.shape == real.values.shape == (traj.n_ticks, 1)


class TestDeclarationValidation:
    def test_representation_requires_a_parameter(self):
        with pytest.raises(DimensionMismatch):
            EpsilonRepresentation(d_eps=0, basis_fn=lambda *a: np.zeros((1, 1)))
        with pytest.raises(DimensionMismatch):
            EpsilonRepresentation(d_eps=1)  # affine needs a basis
        with pytest.raises(DimensionMismatch):
            EpsilonRepresentation(d_eps=1, structure="mystic")

    def test_cell_complex_validation(self):
        with pytest.raises(DimensionMismatch):
            CellComplex([0.0], [0.0], (2,))
        with pytest.raises(DimensionMismatch):
            CellComplex([0.0], [1.0], (0,))
        with pytest.raises(DimensionMismatch):
            CellComplex([0.0], [1.0], (2,), margin=0.5)
        grid = CellComplex([0.0, 0.0], [1.0, 2.0], (2, 4))
        assert np.array_equal(grid.widths, [0.5, 0.5])

    def test_every_in_box_point_maps_to_exactly_one_cell(self):
        grid = CellComplex([0.0], [1.0], (4,))
        rng = np.random.default_rng(0)
        for x in rng.uniform(0, 1, 200):
            cell, oob = grid.cell_of([x])
            assert not oob
            lo, hi = grid.box(cell)
            assert lo[0] <= x < hi[0]
