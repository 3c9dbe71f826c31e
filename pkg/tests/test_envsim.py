"""
Synthetic environment tests: named streams, episode sampling, drift and the
candidate generator.
"""

from collections import Counter

import numpy as np
import pytest

from core.enums import RegressionCategory, TaskFamily, TraceContext
from envsim.drift import DriftKind, Severity, inject_drift, make_scenario
from envsim.environment import CapabilityEnvironment, UnknownVersionError
from envsim.generator import (
    BENIGN_PER_POOL,
    POOL_SIZE,
    CandidateKind,
    CandidateSpec,
    GeneratorCalibration,
    allocate_regressions,
    generate_pool,
    generate_rollback_trials,
    parent_latent,
)
from envsim.latent import LatentBehavior, declare_pretraces, run_episode
from envsim.seeding import derive_rng


@pytest.fixture
def latent() -> LatentBehavior:
    return parent_latent(GeneratorCalibration())


def test_named_streams_are_reproducible_and_independent():
    a = derive_rng(42, "sandbox", "grasp", "1.1.0").random(5)
    b = derive_rng(42, "sandbox", "grasp", "1.1.0").random(5)
    c = derive_rng(42, "shadow", "grasp", "1.1.0").random(5)
    d = derive_rng(43, "sandbox", "grasp", "1.1.0").random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_episode_consumes_eight_draws(latent: LatentBehavior):
    rng = derive_rng(1, "episodes")
    twin = derive_rng(1, "episodes")
    run_episode(latent, TraceContext.LIVE, TaskFamily.GRASP, rng, "1.0.0", 1)
    twin.random(8)
    assert rng.random() == twin.random()


def test_unsafe_episode_is_flagged_anomalous(latent: LatentBehavior):
    always_unsafe = latent.with_deltas({"unsafe_event_rate": 1.0})
    trace = run_episode(
        always_unsafe, TraceContext.LIVE, TaskFamily.PLACE, derive_rng(1, "x"), "1.0.0", 1
    )
    assert trace.unsafe_continuation
    assert trace.anomaly_flags >= 1


def test_pretraces_have_exact_counts(latent: LatentBehavior):
    traces = declare_pretraces(
        latent.with_deltas({"anomaly_rate": 0.22, "unsafe_event_rate": 0.05}),
        100,
        derive_rng(42, "pretraces", "grasp", "1.0.0"),
        version_id="1.0.0",
    )
    assert len(traces) == 100
    assert sum(t.success for t in traces) == 66
    assert sum(t.policy_hits > 0 for t in traces) == 10
    assert sum(t.anomaly_flags > 0 for t in traces) == 22
    assert sum(t.unsafe_continuation for t in traces) == 5
    assert sum(t.retry_count for t in traces) == 10
    assert all(t.duration == 10.0 for t in traces)


def test_pretraces_need_episodes(latent: LatentBehavior):
    with pytest.raises(ValueError):
        declare_pretraces(latent, 0, derive_rng(0, "p"), "1.0.0")


def test_latent_deltas_are_clamped(latent: LatentBehavior):
    shifted = latent.with_deltas({"success_prob": -2.0, "base_duration_scale": 0.5})
    assert shifted.success_prob == 0.0
    assert shifted.base_duration == pytest.approx(15.0)
    assert latent.success_prob == 0.66


def test_combined_drift_is_sum_of_single_kinds():
    combined = make_scenario(DriftKind.COMBINED)
    assert combined.latent_deltas["anomaly_rate"] == pytest.approx(0.15)
    assert combined.latent_deltas["success_prob"] == pytest.approx(-0.13)

    strong = make_scenario(DriftKind.SENSOR_NOISE, Severity.STRONG)
    assert strong.latent_deltas["anomaly_rate"] == pytest.approx(0.10)


@pytest.mark.parametrize(
    "kind,expected",
    [
        (
            DriftKind.SENSOR_NOISE,
            {"anomaly_rate": 0.05, "success_prob": -0.05, "recovery_success_prob": -0.01},
        ),
        (
            DriftKind.DISTRIBUTION_SHIFT,
            {"success_prob": -0.08, "violation_rate": 0.03, "anomaly_rate": 0.05},
        ),
        (
            DriftKind.ACTUATOR_DELAY,
            {
                "base_duration_scale": 0.4,
                "retry_rate": 0.05,
                "anomaly_rate": 0.05,
                "recovery_success_prob": 0.01,
            },
        ),
    ],
)
def test_default_drift_deltas(kind: DriftKind, expected: dict[str, float]):
    mild = make_scenario(kind)
    assert mild.latent_deltas == pytest.approx(expected)
    strong = make_scenario(kind, Severity.STRONG)
    assert strong.latent_deltas == pytest.approx({k: 2 * v for k, v in expected.items()})


def test_drift_is_applied_at_runtime_only(latent: LatentBehavior):
    env = CapabilityEnvironment()
    env.install("grasp", "1.0.0", latent)
    scenario = make_scenario(DriftKind.DISTRIBUTION_SHIFT, Severity.STRONG)
    env.apply_drift("grasp", "1.0.0", scenario)

    assert env.latent_of("grasp", "1.0.0") == inject_drift(latent, scenario)
    assert env.latents[("grasp", "1.0.0")] == latent
    env.clear_drift("grasp", "1.0.0")
    assert env.latent_of("grasp", "1.0.0") == latent


def test_unknown_version(latent: LatentBehavior):
    env = CapabilityEnvironment()
    with pytest.raises(UnknownVersionError):
        env.apply_drift("grasp", "9.9.9", make_scenario(DriftKind.SENSOR_NOISE))


def test_shared_input_gives_identical_outcomes(latent: LatentBehavior):
    env = CapabilityEnvironment()
    env.install("grasp", "1.0.0", latent)
    env.install("grasp", "1.1.0", latent)
    (episode,) = env.episode_inputs(derive_rng(42, "shadow"), 1)
    a = env.run_input("grasp", "1.0.0", TraceContext.LIVE, episode, 1)
    b = env.run_input("grasp", "1.1.0", TraceContext.LIVE, episode, 1)
    assert (a.success, a.duration, a.retry_count, a.policy_hits) == (
        b.success,
        b.duration,
        b.retry_count,
        b.policy_hits,
    )


def test_pool_composition():
    pool = generate_pool("grasp", 42)
    kinds = Counter(spec.kind for spec in pool)

    assert len(pool) == POOL_SIZE
    assert kinds[CandidateKind.BENIGN] == BENIGN_PER_POOL
    for kind in (
        CandidateKind.INTERFACE_DRIFT,
        CandidateKind.PERMISSION_EXPANSION,
        CandidateKind.BEHAVIORAL_REGRESSION,
        CandidateKind.MARGINAL_COMPOSITE,
    ):
        assert kinds[kind] == 2
    assert [s.version_id for s in pool] == [f"1.{i}.0" for i in range(1, 15)]
    assert [s.label for s in pool[:2]] == ["B1", "B2"]
    assert all(s.ground_truth_faulty == (s.kind != CandidateKind.BENIGN) for s in pool)


def test_pool_is_deterministic_per_seed():
    assert generate_pool("align", 7) == generate_pool("align", 7)


def test_fourth_fault_class_is_configurable():
    cal = GeneratorCalibration(fourth_fault_class=CandidateKind.RECOVERY_DEGRADATION)
    pool = generate_pool("place", 42, cal)
    assert [s.kind for s in pool[-2:]] == [CandidateKind.RECOVERY_DEGRADATION] * 2


def test_benign_candidate_cannot_be_unsafe(latent: LatentBehavior):
    with pytest.raises(ValueError):
        CandidateSpec(
            kind=CandidateKind.BENIGN,
            label="B9",
            family_id="grasp",
            version_id="1.9.0",
            ground_truth_faulty=False,
            latent=latent.with_deltas({"unsafe_event_rate": 0.1}),
        )


def test_regression_allocation_keeps_class_totals():
    for seed in (42, 43, 44):
        specs = allocate_regressions("grasp", seed)
        sandbox = [s for s in specs if s.regressions[0].sandbox_visible]
        shadow_only = [s for s in specs if not s.regressions[0].sandbox_visible]
        assert len(sandbox) == 48
        assert len(shadow_only) == 32
        assert all(s.regressions[0].shadow_visible for s in specs)

    shadow_retry = [
        s
        for s in allocate_regressions("grasp", 42)
        if s.regressions[0].category == RegressionCategory.RETRY_INSTABILITY
    ]
    assert all(not s.regressions[0].sandbox_visible for s in shadow_retry)


def test_rollback_trials():
    trials = generate_rollback_trials(
        ["grasp", "align", "place"], 42, trials_per_kind=4, recovery_trial_share=0.25
    )
    assert len(trials) == 4 * len(DriftKind)
    degraded = [t for t in trials if t.candidate.kind == CandidateKind.RECOVERY_DEGRADATION]
    assert len(degraded) == len(DriftKind)
    assert len({(t.family_id, t.candidate.version_id) for t in trials}) == len(trials)
