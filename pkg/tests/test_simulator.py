"""Tests for the closed-loop simulator and batch runner."""

import numpy as np
import pytest

from daa_bench.cas.advisories import Advisory, advisory_command
from daa_bench.config.settings import PerceptionBackendKind, PerceptionConfig, SimConfig
from daa_bench.core.errors import ConfigError, PerceptionError, SimulationError
from daa_bench.core.models import AircraftState
from daa_bench.encounters.trajectories import generate_encounters
from daa_bench.metrics.safety import alert_frequency, nmac_frequency
from daa_bench.perception.backends import (
    BlindPerception,
    PerceptionBackend,
    PerfectPerception,
)
from daa_bench.sim import simulator
from daa_bench.sim.models import EncounterFailure
from daa_bench.sim.simulator import (
    _init_worker,
    _run_guarded,
    _worker_state,
    run_batch,
    run_encounter,
    step_ownship,
)

CAMERA = SimConfig().camera


def _run(encounters, perception, policy):
    return run_batch(encounters, perception, policy, workers=4, master_seed=1)


class FailingPerception(PerceptionBackend):
    """Backend that breaks at a given step."""

    def __init__(self, fail_at):
        super().__init__(CAMERA)
        self.fail_at = fail_at
        self.calls = 0

    def perceive(self, ownship, intruder, conditions, rng):
        self.calls += 1
        if self.calls > self.fail_at:
            msg = "detector crashed"
            raise PerceptionError(msg)
        return None


class TestStepOwnship:
    """Test the vertical dynamics."""

    def test_limited_climb(self):
        """Test the first second of a 1500 ft/min climb from level."""
        state = AircraftState(up=100.0)
        following = step_ownship(state, advisory_command(Advisory.CL1500), 1.0, 2.45)
        assert following.vertical_rate == pytest.approx(2.45)
        assert following.up - state.up == pytest.approx(1.225)

    def test_coc_returns_to_script(self):
        """Test an unconstrained command decays toward the scripted level rate."""
        state = AircraftState(vertical_rate=5.0)
        scripted = AircraftState(north=60.0, vertical_rate=0.0)
        command = advisory_command(Advisory.COC)
        following = step_ownship(state, command, 1.0, 2.45, scripted)
        assert following.vertical_rate == pytest.approx(2.55)
        assert following.north == 60.0

    def test_already_at_target(self):
        """Test a compliant rate is unchanged."""
        state = AircraftState(vertical_rate=7.62)
        following = step_ownship(state, advisory_command(Advisory.CL1500), 1.0, 2.45)
        assert following.vertical_rate == pytest.approx(7.62)

    def test_dead_reckoning_without_script(self):
        """Test horizontal motion continues along the heading."""
        state = AircraftState(heading=90.0, ground_speed=50.0)
        following = step_ownship(state, advisory_command(Advisory.COC), 2.0, 2.45)
        assert following.east == pytest.approx(100.0)
        assert following.north == pytest.approx(0.0, abs=1e-9)


class TestRunEncounter:
    """Test run_encounter."""

    def test_blind_always_collides(self, sampled_encounters, small_policy):
        """Test an unseen intruder always ends in an NMAC."""
        for encounter in sampled_encounters:
            result = run_encounter(encounter, BlindPerception(CAMERA), small_policy)
            assert result.nmac
            assert result.alert_steps == 0
            assert result.steps[0].advisory is Advisory.COC
            assert not result.steps[0].detected

    def test_unequipped_follows_script(self, sampled_encounters):
        """Test an inert controller flies the scripted altitudes exactly."""
        encounter = sampled_encounters[0]
        result = run_encounter(encounter, PerfectPerception(CAMERA), None)
        scripted = [s.up for s in encounter.ownship_script]
        assert [step.ownship.up for step in result.steps] == scripted
        assert result.alert_steps == 0
        assert result.total_steps == encounter.n_steps

    def test_min_separation_recorded(self, head_on_encounter):
        """Test the closest approach of an unequipped head-on encounter."""
        result = run_encounter(head_on_encounter, BlindPerception(CAMERA), None)
        assert result.min_horizontal_sep == pytest.approx(0.0, abs=1e-9)
        assert result.min_vertical_sep_at_min_horizontal == pytest.approx(0.0, abs=1e-9)

    def test_interpolated_nmac_between_steps(self, head_on_features):
        """Test a fast pass that skips over the cylinder between samples."""
        from daa_bench.encounters.trajectories import build_trajectories

        features = head_on_features.model_copy(
            update={"ownship_speed": 200.0, "intruder_speed": 200.0}
        )
        encounter = build_trajectories(features, duration=50.0, cpa_time=40.5, dt=1.0)
        discrete = run_encounter(encounter, BlindPerception(CAMERA), None)
        config = SimConfig(interpolate_nmac=True)
        interpolated = run_encounter(encounter, BlindPerception(CAMERA), None, config)
        assert not discrete.nmac
        assert interpolated.nmac

    def test_dt_mismatch_rejected(self, head_on_encounter):
        """Test a simulation step that differs from the script interval."""
        with pytest.raises(ConfigError):
            run_encounter(
                head_on_encounter, BlindPerception(CAMERA), None, SimConfig(dt=0.5)
            )

    def test_perception_failure_is_tagged(self, head_on_encounter):
        """Test a perception error reports the step it happened at."""
        with pytest.raises(SimulationError) as exc_info:
            run_encounter(head_on_encounter, FailingPerception(fail_at=3), None)
        assert exc_info.value.step_index == 3

    def test_failure_recorded_when_not_fail_fast(self, head_on_encounter):
        """Test a failing encounter becomes a failure record."""
        backend = FailingPerception(fail_at=0)
        outcome = _run_guarded(head_on_encounter, backend, None, SimConfig())
        assert isinstance(outcome, EncounterFailure)
        assert outcome.step_index == 0
        assert outcome.error_type == "SimulationError"

    def test_fail_fast_raises(self, head_on_encounter):
        """Test fail-fast propagates the error."""
        with pytest.raises(SimulationError):
            _run_guarded(
                head_on_encounter,
                FailingPerception(fail_at=0),
                None,
                SimConfig(fail_fast=True),
            )

    def test_same_seed_same_result(self, sampled_encounters, small_policy):
        """Test stochastic perception is reproducible per encounter."""
        from daa_bench.perception.backends import StochasticPerception

        encounter = sampled_encounters[1]
        first = run_encounter(encounter, StochasticPerception(CAMERA), small_policy)
        second = run_encounter(encounter, StochasticPerception(CAMERA), small_policy)
        assert first.model_dump() == second.model_dump()

    @pytest.mark.slow
    def test_default_policy_resolves_head_on(self, head_on_encounter, default_policy):
        """Test perfect perception with the default policy avoids a head-on NMAC."""
        backend = PerfectPerception(CAMERA)
        result = run_encounter(head_on_encounter, backend, default_policy)
        assert not result.nmac
        assert result.alert_steps > 0
        assert result.min_vertical_sep_at_min_horizontal > 30.48


class TestRunBatch:
    """Test run_batch."""

    def test_empty_batch(self, small_policy):
        """Test an empty encounter list."""
        batch = run_batch([], PerceptionConfig(), small_policy)
        assert batch.results == ()
        assert batch.failures == ()

    def test_results_ordered_by_id(self, sampled_encounters, small_policy):
        """Test results come back sorted by encounter id."""
        shuffled = list(reversed(sampled_encounters))
        batch = run_batch(shuffled, PerceptionConfig(), small_policy)
        expected = sorted(e.encounter_id for e in sampled_encounters)
        assert [r.encounter_id for r in batch.results] == expected

    def test_workers_do_not_change_results(self, sampled_encounters, small_policy):
        """Test parallel and serial batches are identical."""
        perception = PerceptionConfig(backend=PerceptionBackendKind.STOCHASTIC)
        serial = run_batch(
            sampled_encounters, perception, small_policy, workers=1, master_seed=7
        )
        parallel = run_batch(
            sampled_encounters, perception, small_policy, workers=8, master_seed=7
        )
        assert serial.model_dump_json() == parallel.model_dump_json()

    def test_blind_batch_all_nmac(self, sampled_encounters, small_policy):
        """Test every encounter collides without detections."""
        perception = PerceptionConfig(backend=PerceptionBackendKind.BLIND)
        batch = run_batch(sampled_encounters, perception, small_policy)
        assert all(r.nmac for r in batch.results)
        assert len(batch.results) == len(sampled_encounters)

    def test_zero_detection_probability_matches_blind(
        self, sampled_encounters, small_policy
    ):
        """Test scaling detection probability to zero collides like blind perception."""
        nmac = {}
        for scale in (1.0, 0.0):
            perception = PerceptionConfig(
                backend=PerceptionBackendKind.STOCHASTIC, probability_scale=scale
            )
            batch = run_batch(
                sampled_encounters, perception, small_policy, master_seed=7
            )
            nmac[scale] = sum(r.nmac for r in batch.results) / len(batch.results)
        assert nmac[0.0] == 1.0
        assert nmac[1.0] <= nmac[0.0]

    def test_invalid_worker_count(self, sampled_encounters):
        """Test zero workers is rejected."""
        with pytest.raises(ConfigError):
            run_batch(sampled_encounters, PerceptionConfig(), None, workers=0)

    def test_step_altitudes_are_finite(self, sampled_encounters, small_policy):
        """Test the closed loop produces finite states."""
        batch = run_batch(sampled_encounters, PerceptionConfig(), small_policy)
        for result in batch.results:
            assert np.isfinite([s.ownship.up for s in result.steps]).all()

    def test_worker_backend_closed_on_exit(self, monkeypatch):
        """Test a pool worker's backend is released by its exit finalizer."""

        class ClosingPerception(BlindPerception):
            closed = False

            def close(self):
                self.closed = True

        backend = ClosingPerception(CAMERA)
        monkeypatch.setattr(simulator, "create_backend", lambda config, camera: backend)
        _init_worker(PerceptionConfig(), None, SimConfig())
        try:
            assert _worker_state["perception"] is backend
            assert not backend.closed
            _worker_state["finalizer"]()
            assert backend.closed
        finally:
            _worker_state.clear()


@pytest.mark.slow
class TestClosedLoopSafety:
    """Batch-level safety of the default policy over 500 encounters."""

    @pytest.fixture(scope="class")
    def encounters(self):
        """Five hundred placed encounters with i.i.d. conditions."""
        return generate_encounters(2024, grid="iid", n=500)

    def test_blind_always_collides(self, encounters, default_policy):
        """Test every guaranteed conflict ends in an NMAC without detections."""
        perception = PerceptionConfig(backend=PerceptionBackendKind.BLIND)
        batch = _run(encounters, perception, default_policy)
        assert nmac_frequency(batch.results).value == 1.0

    def test_perfect_perception_is_safe(self, encounters, default_policy):
        """Test perfect perception keeps NMACs rare without alerting all the time."""
        perception = PerceptionConfig(backend=PerceptionBackendKind.PERFECT)
        batch = _run(encounters, perception, default_policy)
        assert len(batch.results) == 500
        assert nmac_frequency(batch.results).value <= 0.10
        assert 0.0 < alert_frequency(batch.results).value < 0.6

    def test_degradation_is_monotone(self, encounters, default_policy):
        """Test NMAC frequency never falls as detection probability is scaled down."""
        frequencies = []
        for scale in (1.0, 0.8, 0.5, 0.0):
            perception = PerceptionConfig(
                backend=PerceptionBackendKind.STOCHASTIC, probability_scale=scale
            )
            batch = _run(encounters, perception, default_policy)
            frequencies.append(nmac_frequency(batch.results).value)
        assert frequencies == sorted(frequencies)
        assert frequencies[-1] == 1.0
