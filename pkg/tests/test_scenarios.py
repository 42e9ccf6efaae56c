import json

import numpy as np
import pytest

from intergame.analysis import analyze_session
from intergame.errors import DimensionMismatch, SchemaError, UnsupportedKernel
from intergame.perception import MatchRunner
from intergame.scenarios import (
    IAVR_SOLO_LIBRARY_VERSION,
    IAVR_TARGET_CELL,
    ScenarioSpec,
    build_dialogue_toy,
    build_iavr_figure,
    build_pursuit,
    builtin_scenario,
    iavr_solo_library,
    load_scenario,
)

BUILTINS = ["pursuit1d", "pursuit2d", "pursuit1d-noisy", "dialogue", "iavr", "iavr-room"]


def run_plain(spec: ScenarioSpec, seed=None):
    """Horizon run of a scenario; returns the finished runner."""
    runner = MatchRunner(spec.compile(), seed=seed, set_limit=1, criterion=None)
    runner.criterion = None
    runner.max_ticks = int(round(spec.horizon / spec.dt)) + 1
    runner.run()
    return runner


class TestScenarioCodec:
    @pytest.mark.parametrize("name", BUILTINS)
    def test_json_round_trip_is_lossless(self, name):
        spec = builtin_scenario(name)
        doc = spec.to_dict()
        again = ScenarioSpec.from_dict(json.loads(json.dumps(doc)))
        assert again == spec
        assert again.to_dict() == doc

    def test_load_scenario_from_path(self, tmp_path):
        spec = build_pursuit(1)
        p = tmp_path / "s.json"
        p.write_text(spec.to_json())
        assert load_scenario(p) == spec
        assert load_scenario(spec.to_json()) == spec

    def test_unknown_schema_version_is_refused(self):
        doc = build_pursuit(1).to_dict()
        doc["schema"] = 99
        with pytest.raises(SchemaError):
            ScenarioSpec.from_dict(doc)

    def test_unknown_builtin_is_refused(self):
        with pytest.raises(SchemaError):
            builtin_scenario("tennis")

    def test_ground_truth_is_scenario_metadata_only(self):
        spec = build_pursuit(1)
        spec.ground_truth["extra"] = {"anything": [1, 2, 3]}
        compiled = spec.compile()  # engine never reads the reserved key
        assert compiled.spec.ground_truth["extra"]["anything"] == [1, 2, 3]

    def test_kernel_field_compiles_through_the_reduction(self):
        spec = build_pursuit(1, planted_eps=[0.0])
        spec.kernel = [{"kind": "exp_lag", "lam": 0.2}]
        compiled = spec.compile()
        assert compiled.dynamics.d_xi == 1
        assert compiled.xi0.shape == (1,)
        bad = build_pursuit(1)
        bad.kernel = [{"kind": "fractional"}]
        with pytest.raises(UnsupportedKernel):
            bad.compile()

    def test_coalition_table_compiles(self):
        spec = build_pursuit(1)
        spec.coalitions = {"coalitions": [{"members": [0], "weights": [1.0]}]}
        compiled = spec.compile()
        assert compiled.coalition_spec is not None
        assert compiled.coalition_spec.coalitions[0].members == (0,)


class TestPursuit:
    def test_zero_plant_zero_noise_keeps_realized_equal_pure(self):
        runner = run_plain(build_pursuit(1, planted_eps=[0.0], horizon=2.0))
        traj = runner.trajectory()
        assert np.array_equal(traj.u0[0], traj.u[0])

    def test_planted_eps_is_recovered_at_every_tick(self):
        runner = run_plain(build_pursuit(1, planted_eps=[0.3], horizon=5.0))
        trace = runner.trace(0)
        assert trace.valid.all()
        assert np.max(np.abs(trace.values[:, 0] - 0.3)) < 1e-6

    def test_2d_planted_pair_is_recovered(self):
        runner = run_plain(build_pursuit(2, planted_eps=[0.3, -0.1], horizon=5.0))
        trace = runner.trace(0)
        assert np.max(np.abs(trace.values - np.array([0.3, -0.1]))) < 1e-6

    def test_noisy_recovery_lands_within_three_standard_errors(self):
        plant = np.array([0.3, -0.1])
        means = []
        for seed in range(8):
            runner = run_plain(
                build_pursuit(2, planted_eps=list(plant), noise=0.01), seed=seed
            )
            means.append(runner.trace(0).values.mean(axis=0))
        means = np.asarray(means)
        grand = means.mean(axis=0)
        se = means.std(axis=0, ddof=1) / np.sqrt(len(means))
        assert np.all(np.abs(grand - plant) <= 3 * se + 1e-12)

    def test_dim_validation(self):
        with pytest.raises(DimensionMismatch):
            build_pursuit(3)
        with pytest.raises(DimensionMismatch):
            build_pursuit(1, noise=-0.1)
        with pytest.raises(DimensionMismatch):
            build_pursuit(1, planted_eps=[0.1, 0.2])


@pytest.fixture(scope="module")
def session():
    spec = build_dialogue_toy()
    runner = run_plain(spec)
    traj = runner.trajectory()
    analysis = analyze_session(traj, runner.reps, runner.cells, runner.functionals)
    return spec, analysis


class TestDialogueToy:

    def test_detected_partition_matches_planted_boundaries(self, session):
        spec, analysis = session
        truth = spec.ground_truth["boundaries"]
        detected = analysis.cell_partition.boundaries()
        assert len(detected) == len(truth)
        for got, want in zip(detected, truth):
            assert abs(got - want) <= spec.dt + 1e-12

    def test_transcript_count_matches_planted_segments(self, session):
        spec, analysis = session
        assert len(analysis.transcript) == spec.ground_truth["segments"]

    def test_recursion_fit_labels_the_session_verbalizable(self, session):
        _, analysis = session
        assert analysis.score is not None
        assert analysis.score >= 0.99
        assert analysis.verbalizable

    def test_omega_follows_the_planted_accumulation(self, session):
        spec, analysis = session
        step = np.asarray(spec.ground_truth["eps_step"])
        omegas = np.stack([s.omega for s in analysis.states])
        increments = np.diff(omegas, axis=0)
        # all but the final window share one tick of the next segment, so
        # the planted drift appears as a uniform increment
        assert np.max(np.abs(increments[:-1] - step)) < 1e-9
        assert np.max(np.abs(increments[-1] - step)) < 2e-2


class TestIavrFigure:
    def _run(self, n, scripts, dwell=0.3, horizon=3.0):
        spec = build_iavr_figure(n, dwell=dwell, horizon=horizon, scripts=scripts)
        runner = MatchRunner(spec.compile(), set_limit=1, criterion=None)
        runner.criterion = None
        runner.max_ticks = int(round(spec.horizon / spec.dt)) + 1
        visible_at = None
        visible_flags = []
        while not runner.done:
            sample, events = runner.tick()
            visible_flags.append(sample.figure.visible)
            for e in events:
                if e["type"] == "figure-visible" and visible_at is None:
                    visible_at = e["j"]
        return visible_at, visible_flags

    def test_single_user_library_never_fires(self):
        assert IAVR_SOLO_LIBRARY_VERSION == "1"
        for script in iavr_solo_library():
            visible_at, flags = self._run(1, [script], horizon=2.0)
            assert visible_at is None
            assert not any(flags)

    def test_two_users_fire_after_exactly_the_dwell_tick_count(self):
        in_cell = {"kind": "offset", "columns": ["ones"], "schedule": [[0.0, [0.625]]]}
        visible_at, flags = self._run(2, [in_cell, in_cell], dwell=0.3)
        need = int(np.ceil(0.3 / 0.01))
        # co-location starts at tick 0, so the flag rises at tick need-1
        assert visible_at == need - 1
        assert all(flags[visible_at:])  # monotone while co-location lasts

    def test_half_dwell_never_fires(self):
        half = {
            "kind": "offset",
            "columns": ["ones"],
            "schedule": [[0.0, [0.625]], [0.15, [0.0]]],
        }
        visible_at, flags = self._run(2, [half, half], dwell=0.3)
        assert visible_at is None
        assert not any(flags)

    def test_two_users_in_different_cells_never_fire(self):
        a = {"kind": "offset", "columns": ["ones"], "schedule": [[0.0, [0.625]]]}
        b = {"kind": "offset", "columns": ["ones"], "schedule": [[0.0, [-0.8]]]}
        visible_at, _ = self._run(2, [a, b])
        assert visible_at is None

    def test_target_cell_matches_the_declared_plant(self):
        spec = build_iavr_figure(2)
        compiled = spec.compile()
        cell, oob = compiled.cells.cell_of(np.array([spec.ground_truth["target_eps"]]))
        assert not oob
        assert cell == IAVR_TARGET_CELL

    def test_validation(self):
        with pytest.raises(DimensionMismatch):
            build_iavr_figure(0)
        with pytest.raises(DimensionMismatch):
            build_iavr_figure(2, dwell=0.0)
