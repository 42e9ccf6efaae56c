import math

import numpy as np
import pytest

from intergame.errors import DimensionMismatch
from intergame.perception import (
    MatchRunner,
    RecalibrationMap,
    StopCriterion,
    recalibrate_stop,
    run_match,
    run_set,
)
from intergame.scenarios import build_pursuit


def pursuit_compiled(eps=0.0, gain=0.5, f0=-0.05, recal=None, weights=None, seed=7):
    spec = build_pursuit(1, planted_eps=[eps], seed=seed)
    spec.nominal[0]["gain"] = gain
    spec.stop["f0"] = f0
    if weights is not None:
        spec.stop["omega_weights"] = weights
    if recal is not None:
        spec.stop["recalibration"] = recal
    return spec.compile()


class TestStopCriterion:
    def test_neg_distance_and_threshold(self):
        crit = StopCriterion(f0=-0.05, base_kind="neg_distance", params={"target": [0.0]})
        assert crit.value(np.zeros(0), [0.2]) == pytest.approx(-0.2)
        assert crit.value(np.zeros(0), [0.04]) >= crit.f0

    def test_omega_coupling_and_dimension_check(self):
        crit = StopCriterion(f0=0.0, base_kind="norm", omega_weights=[0.5, 0.5])
        assert crit.value([1.0, 3.0], [0.0]) == pytest.approx(2.0)
        with pytest.raises(DimensionMismatch):
            crit.value([1.0], [0.0])

    def test_identity_recalibration_returns_equal_criterion(self):
        crit = StopCriterion(
            f0=-0.3,
            omega_weights=[0.1],
            recalibration=RecalibrationMap.identity(2, 1),
        )
        out = recalibrate_stop(crit, [42.0])
        assert out.f0 == crit.f0
        assert np.array_equal(out.omega_weights, crit.omega_weights)

    def test_affine_shift_by_omega_mean(self):
        # f0 <- f0 + 0.1 * mean(omega), omega mean 1 shifts f0 by 0.1
        recal = RecalibrationMap(
            a=np.eye(3), b=np.array([[0.05, 0.05], [0, 0], [0, 0]]), c=np.zeros(3)
        )
        crit = StopCriterion(f0=-1.0, omega_weights=[0.0, 0.0], recalibration=recal)
        out = recalibrate_stop(crit, [1.0, 1.0])
        assert out.f0 == pytest.approx(-0.9)

    def test_composition_matches_matrix_algebra(self):
        rng = np.random.default_rng(3)
        r1 = RecalibrationMap(rng.standard_normal((2, 2)), rng.standard_normal((2, 3)), rng.standard_normal(2))
        r2 = RecalibrationMap(rng.standard_normal((2, 2)), rng.standard_normal((2, 3)), rng.standard_normal(2))
        p = rng.standard_normal(2)
        omega = rng.standard_normal(3)
        sequential = r2.update(r1.update(p, omega), omega)
        composed = r2.compose(r1).update(p, omega)
        assert np.allclose(sequential, composed, atol=1e-12)

    def test_recalibration_rejects_wrong_omega_dimension(self):
        recal = RecalibrationMap.identity(1, 2)
        crit = StopCriterion(f0=0.0, recalibration=recal)
        with pytest.raises(DimensionMismatch):
            recalibrate_stop(crit, [1.0])


class TestRunSet:
    def test_analytic_crossing_is_hit_within_one_tick(self):
        # proportional closure with tick-held controls: the exact per-tick
        # map is phi <- phi * (1 - g dt), so the closed-form crossing is the
        # first j with (1 - g dt)^j <= 0.05
        g, dt = 0.5, 0.01
        compiled = pursuit_compiled(eps=0.0, gain=g)
        rec = run_set(compiled, [1.0], [], np.zeros(1), compiled.criterion)
        expected_tick = math.ceil(math.log(0.05) / math.log(1.0 - g * dt))
        assert rec.stop_reason == "threshold"
        assert abs(rec.end_tick - expected_tick) <= 1
        # the continuous-time closure puts the crossing in the same region
        assert abs(rec.end_tick * dt - math.log(20.0) / g) < 0.05

    def test_threshold_already_met_gives_zero_length_set(self):
        compiled = pursuit_compiled()
        rec = run_set(compiled, [0.01], [], np.zeros(1), compiled.criterion)
        assert rec.stop_reason == "threshold"
        assert rec.end_tick == rec.start_tick == 0

    def test_unreachable_threshold_caps_at_the_horizon(self):
        compiled = pursuit_compiled()
        crit = StopCriterion(f0=0.0, base_kind="constant", params={"value": -1.0})
        rec = run_set(compiled, [1.0], [], np.zeros(0), crit, set_cap_s=1.0)
        assert rec.stop_reason == "horizon-cap"
        assert rec.end_tick - rec.start_tick == 100


def first_crossing_ok(rec):
    interior = rec.f_trace[(1 if rec.index else 0) : -1]
    return rec.f_trace[-1] >= rec.f0 and bool(np.all(interior < rec.f0))


class TestRunMatch:
    def test_limit_one_gives_one_set(self):
        compiled = pursuit_compiled()
        match = run_match(compiled, set_limit=1)
        assert len(match.sets) == 1
        assert match.termination == "set-limit"

    def test_three_sets_chain_bit_exactly(self):
        recal = {
            "a": [[0.5, 0.0], [0.0, 1.0]],
            "b": [[-0.25], [0.0]],
            "c": [0.0, 0.0],
        }
        compiled = pursuit_compiled(eps=0.2, f0=-0.4, recal=recal, weights=[0.0])
        match = run_match(compiled, set_limit=3)
        assert len(match.sets) == 3
        assert match.junctions_exact()
        for a, b in zip(match.sets, match.sets[1:]):
            assert a.phi_final.tobytes() == b.phi_initial.tobytes()

    def test_tightening_recalibration_shrinks_set_durations(self):
        # f0 <- 0.5 f0 - 0.25 mean(eps-hat); with the plant at 0.2 the radii
        # converge to 0.1 and the log-ratio durations strictly decrease
        recal = {
            "a": [[0.5, 0.0], [0.0, 1.0]],
            "b": [[-0.25], [0.0]],
            "c": [0.0, 0.0],
        }
        compiled = pursuit_compiled(eps=0.2, f0=-0.4, recal=recal, weights=[0.0])
        match = run_match(compiled, set_limit=4)
        durations = [s.n_ticks for s in match.sets]
        assert all(a > b for a, b in zip(durations, durations[1:]))
        # closed-form closure oracle: each duration is ln(r_start/rho)/kappa
        kappa = 0.5 - 0.2
        for rec in match.sets:
            r_start = abs(rec.phi_initial[0])
            rho = -rec.f0
            expected = math.log(r_start / rho) / kappa / compiled.dt
            assert abs((rec.end_tick - rec.start_tick) - expected) <= 1.0 + 1e-6
        for rec in match.sets:
            assert rec.stop_reason == "threshold"
            assert first_crossing_ok(rec)

    def test_states_and_transcript_align_with_sets(self):
        compiled = pursuit_compiled(eps=0.2, f0=-0.4)
        match = run_match(compiled, set_limit=2)
        assert len(match.states) == len(match.sets) == len(match.transcript) == 2
        # omega is the window mean of a constant planted eps
        assert match.states[0].omega[0] == pytest.approx(0.2, abs=1e-9)

    def test_same_seed_replays_identically(self):
        compiled_a = pursuit_compiled(eps=0.2, f0=-0.4, seed=13)
        compiled_b = pursuit_compiled(eps=0.2, f0=-0.4, seed=13)
        ra, rb = MatchRunner(compiled_a, set_limit=2), MatchRunner(compiled_b, set_limit=2)
        ma, mb = ra.run(), rb.run()
        assert [s.end_tick for s in ma.sets] == [s.end_tick for s in mb.sets]
        assert ra.trajectory().phi.tobytes() == rb.trajectory().phi.tobytes()

    def test_abort_records_the_reason(self):
        compiled = pursuit_compiled()
        runner = MatchRunner(compiled, set_limit=5)
        for _ in range(10):
            runner.tick()
        events = runner.abort("controller-disconnect")
        assert runner.termination == "controller-disconnect"
        assert runner.sets[-1].stop_reason == "aborted"
        assert any(e["type"] == "set-boundary" for e in events)

    def test_open_ended_needs_wall_cap(self):
        compiled = pursuit_compiled()
        with pytest.raises(DimensionMismatch):
            MatchRunner(compiled, set_limit=None, open_ended=True)

    def test_plain_horizon_run_without_criterion(self):
        spec = build_pursuit(1, planted_eps=[0.2])
        spec.stop = None
        spec.horizon = 2.0
        compiled = spec.compile()
        match = run_match(compiled, set_limit=1)
        assert match.termination == "horizon"
        assert len(match.sets) == 1
        assert match.sets[0].stop_reason == "horizon-cap"
        runner = MatchRunner(compiled, set_limit=1)
        runner.run()
        assert runner.trajectory().n_ticks == 201
