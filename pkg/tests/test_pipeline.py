"""
Governed pipeline tests: shadow isolation, the activation gate, monitoring,
rollback and counterfactual replay.
"""

from dataclasses import replace

import pytest

from compat.compat_manager import BehavioralEvidence, CompatManager, CompatReport
from core.enums import (
    LifecycleState,
    ProfileId,
    RecoveryCategory,
    RegressionCategory,
    RiskLevel,
    TaskFamily,
    TraceContext,
)
from core.manifest import CapabilityManifest
from core.policy import PolicySet
from core.profiles import DeploymentProfile, default_profiles
from core.telemetry import BehavioralSignature, TraceRecord
from envsim.drift import DriftKind, DriftScenario
from envsim.generator import generate_pool, generate_rollback_trials
from envsim.seeding import derive_rng
from pipeline.activation import gate_activation
from pipeline.evidence import DisabledStage, IncompleteAuditError, replay_counterfactual
from pipeline.monitor import EmptyWindowError, EscalationLadder, LadderVerdict, monitor
from pipeline.reports import (
    ActivationMode,
    MonitorDecision,
    MonitorValue,
    SandboxReport,
    ShadowReport,
    category_counts,
)
from pipeline.shadow import run_shadow, shadow_report
from pipeline.strategies import Strategy, run_rollback_trial, run_strategy
from pipeline.upgrade_manager import Stage, UpgradeManager
from registry.lifecycle import InvalidTransitionError, LifecycleRecord

BASELINE = BehavioralSignature(
    mu_succ=0.66, mu_time=10.0, mu_retry=0.1, mu_viol=0.1, mu_recover=0.8, episode_count=100
)

# every window is anomalous
ANOMALY_SURGE = DriftScenario(kind=DriftKind.COMBINED, latent_deltas={"anomaly_rate": 1.0})


def trace(
    anomalous: bool = False,
    retries: int = 0,
    violation: bool = False,
    unsafe: bool = False,
    signals: tuple[RegressionCategory, ...] = (),
) -> TraceRecord:
    return TraceRecord(
        capability_version="1.0.0",
        context=TraceContext.LIVE,
        task_family=TaskFamily.GRASP,
        success=True,
        duration=10.0,
        retry_count=retries,
        policy_hits=int(violation),
        anomaly_flags=int(anomalous) + int(unsafe),
        recovery_triggered=True,
        unsafe_continuation=unsafe,
        timestamp=0,
        regression_signals=signals,
    )


def window(n: int = 20, **marked: int) -> list[TraceRecord]:
    """n clean traces, the first k of them carrying each marked condition."""
    traces = []
    for i in range(n):
        traces.append(
            trace(
                anomalous=i < marked.get("anomalous", 0),
                retries=1 if i < marked.get("retries", 0) else 0,
                violation=i < marked.get("violation", 0),
                unsafe=i < marked.get("unsafe", 0),
            )
        )
    return traces


@pytest.fixture
def compat_ok(
    parent: CapabilityManifest,
    policy_sets: dict[str, PolicySet],
    sim_profile: DeploymentProfile,
) -> CompatReport:
    return CompatManager().evaluate(
        parent,
        parent.model_copy(update={"version_id": "1.1.0"}),
        policy_sets["grasp"],
        sim_profile,
        dynamic_evidence=BehavioralEvidence(old=BASELINE, new=BASELINE),
    )


@pytest.fixture
def sandbox_ok() -> SandboxReport:
    return SandboxReport(metrics={}, signatures={}, signal_counts=category_counts(), passed=True)


@pytest.fixture
def shadow_ok() -> ShadowReport:
    return ShadowReport(
        divergence_series=[0.0],
        mean_divergence=0.0,
        governance_divergence=category_counts(),
        envelope_divergence=0.0,
        passed=True,
    )


# ---------------------------------------------------------------- shadow


def test_shadow_never_changes_live_outcomes(manager: UpgradeManager, parent: CapabilityManifest):
    pool = generate_pool("grasp", 42)
    active = manager.registry.active_record("grasp")
    outcomes = []
    for spec in (pool[0], pool[12]):
        manager.register_candidate(spec, parent)
        candidate = LifecycleRecord(
            manifest=spec.build_manifest(parent), state=LifecycleState.SANDBOXED
        )
        run = run_shadow(
            candidate, active, manager.env, manager.profile, derive_rng(42, "shadow")
        )
        assert all(t.capability_version == "1.0.0" for t in run.live_traces)
        assert all(t.context == TraceContext.LIVE for t in run.live_traces)
        assert all(t.context == TraceContext.SHADOW for t in run.shadow_traces)
        outcomes.append(
            [
                (t.success, t.duration, t.retry_count, t.policy_hits, t.anomaly_flags)
                for t in run.live_traces
            ]
        )
    assert outcomes[0] == outcomes[1]


def test_shadow_needs_sandboxed_candidate(manager: UpgradeManager, parent: CapabilityManifest):
    active = manager.registry.active_record("grasp")
    with pytest.raises(InvalidTransitionError, match="sandboxed candidate"):
        run_shadow(
            LifecycleRecord(manifest=parent, state=LifecycleState.VALIDATED),
            active,
            manager.env,
            manager.profile,
            derive_rng(42, "shadow"),
        )


def test_shadow_report_counts_new_signals(sim_profile: DeploymentProfile):
    live = [trace() for _ in range(10)]
    shadow = [trace(signals=(RegressionCategory.POLICY_DRIFT,)) for _ in range(3)] + [
        trace() for _ in range(7)
    ]
    report = shadow_report(live, shadow, sim_profile)
    assert report.governance_divergence[RegressionCategory.POLICY_DRIFT] == 3
    assert not report.passed
    assert report.failures == ("divergence:policy_drift",)
    assert report.mean_divergence == 0.0


def test_shadow_report_needs_paired_traces(sim_profile: DeploymentProfile):
    with pytest.raises(ValueError):
        shadow_report([trace()], [trace(), trace()], sim_profile)


# ------------------------------------------------------------ activation


def test_sandbox_is_required(compat_ok: CompatReport, sim_profile: DeploymentProfile):
    decision = gate_activation(compat_ok, None, None, sim_profile)
    assert decision.mode == ActivationMode.DENY
    assert decision.governance_failure
    assert "sandbox not passed" in decision.reasons


def test_shadow_waived_only_when_not_mandatory(
    compat_ok: CompatReport,
    sandbox_ok: SandboxReport,
    sim_profile: DeploymentProfile,
    human_profile: DeploymentProfile,
):
    assert gate_activation(compat_ok, sandbox_ok, None, sim_profile).mode == ActivationMode.FULL
    denied = gate_activation(compat_ok, sandbox_ok, None, human_profile)
    assert denied.mode == ActivationMode.DENY
    assert denied.reasons == ("shadow required",)


def test_failed_shadow_denies(
    compat_ok: CompatReport,
    sandbox_ok: SandboxReport,
    shadow_ok: ShadowReport,
    sim_profile: DeploymentProfile,
):
    failed = replace(shadow_ok, passed=False, failures=("divergence:timeout_stall",))
    decision = gate_activation(compat_ok, sandbox_ok, failed, sim_profile)
    assert decision.mode == ActivationMode.DENY
    assert decision.governance_failure


def test_composite_below_threshold_is_not_a_stage_failure(
    compat_ok: CompatReport, sandbox_ok: SandboxReport, sim_profile: DeploymentProfile
):
    low = replace(compat_ok, composite=0.85)
    decision = gate_activation(low, sandbox_ok, None, sim_profile)
    assert decision.mode == ActivationMode.DENY
    assert not decision.governance_failure


def test_activation_modes(
    compat_ok: CompatReport, sandbox_ok: SandboxReport, shadow_ok: ShadowReport
):
    real = default_profiles()[ProfileId.REAL]
    assert (
        gate_activation(compat_ok, sandbox_ok, shadow_ok, real, RiskLevel.LOW).mode
        == ActivationMode.ROLLBACK_COUPLED
    )
    assert (
        gate_activation(compat_ok, sandbox_ok, shadow_ok, real, RiskLevel.HIGH).mode
        == ActivationMode.APPROVAL_BOUND
    )
    fragile = replace(
        compat_ok,
        categories=replace(compat_ok.categories, recovery=RecoveryCategory.FRAGILE),
    )
    assert (
        gate_activation(fragile, sandbox_ok, shadow_ok, real, RiskLevel.HIGH).mode
        == ActivationMode.ROLLBACK_COUPLED
    )


# ------------------------------------------------------------ monitoring


def test_clean_window_continues(sim_profile: DeploymentProfile):
    assert monitor(window(), BASELINE, sim_profile).value == MonitorValue.CONTINUE


def test_monitor_rules(sim_profile: DeploymentProfile):
    surge = monitor(window(anomalous=5), BASELINE, sim_profile, start=40)
    assert (surge.value, surge.trigger, surge.window) == (
        MonitorValue.ROLLBACK,
        "anomaly_rate",
        (40, 60),
    )
    assert monitor(window(violation=6), BASELINE, sim_profile).value == MonitorValue.ESCALATE
    assert monitor(window(retries=20), BASELINE, sim_profile).value == MonitorValue.RESTRICT


def test_unsafe_continuation_under_human_profile(
    sim_profile: DeploymentProfile, human_profile: DeploymentProfile
):
    decision = monitor(window(unsafe=1), BASELINE, human_profile)
    assert (decision.value, decision.trigger) == (MonitorValue.ROLLBACK, "unsafe_continuation")
    assert monitor(window(unsafe=1), BASELINE, sim_profile).value == MonitorValue.CONTINUE


@pytest.mark.parametrize("marked", [{}, {"violation": 6}, {"retries": 20}, {"unsafe": 1}])
@pytest.mark.parametrize("profile_id", [ProfileId.SIM, ProfileId.HUMAN])
def test_more_anomalies_never_relax_the_decision(marked: dict[str, int], profile_id: ProfileId):
    profile = default_profiles()[profile_id]
    severities = [
        monitor(window(anomalous=k, **marked), BASELINE, profile).value.severity
        for k in range(21)
    ]
    assert severities == sorted(severities)
    assert severities[-1] == MonitorValue.ROLLBACK.severity


def test_empty_window(sim_profile: DeploymentProfile):
    with pytest.raises(EmptyWindowError):
        monitor([], BASELINE, sim_profile)


def test_rollback_decision_needs_trigger():
    with pytest.raises(ValueError):
        MonitorDecision(value=MonitorValue.ROLLBACK, trigger="", window=(0, 20))


def test_ladder_confirms_anomaly_before_rollback():
    ladder = EscalationLadder()
    anomaly = MonitorDecision(MonitorValue.ROLLBACK, "anomaly_rate", (0, 20))
    calm = MonitorDecision(MonitorValue.CONTINUE, "", (20, 40))

    assert ladder.observe(anomaly) == LadderVerdict.HOLD
    assert ladder.observe(calm) == LadderVerdict.HOLD
    assert ladder.first_alert is None
    assert ladder.observe(anomaly) == LadderVerdict.HOLD
    assert ladder.observe(anomaly) == LadderVerdict.ROLLBACK


def test_ladder_escalates_after_patience():
    ladder = EscalationLadder()
    restrict = MonitorDecision(MonitorValue.RESTRICT, "retry_rate", (20, 40))
    escalate = MonitorDecision(MonitorValue.ESCALATE, "violation_rate", (40, 60))
    assert ladder.observe(restrict) == LadderVerdict.HOLD
    assert ladder.observe(escalate) == LadderVerdict.HOLD
    assert ladder.observe(restrict) == LadderVerdict.LADDER
    assert ladder.first_alert == 20


# ------------------------------------------------------ upgrade manager


def test_benign_candidate_is_activated(manager: UpgradeManager, parent: CapabilityManifest):
    b1 = generate_pool("grasp", 42)[0]
    outcome = manager.process_candidate(b1, parent)

    assert outcome.activated
    assert outcome.decision is not None
    assert outcome.decision.mode == ActivationMode.FULL
    assert manager.registry.views().active_version("grasp") == "1.1.0"
    assert manager.registry.get("grasp", "1.0.0").state == LifecycleState.DEMOTED


def test_faulty_candidates_stop_at_screening(manager: UpgradeManager, parent: CapabilityManifest):
    pool = generate_pool("grasp", 42)
    for spec in pool[6:12]:
        outcome = manager.process_candidate(spec, parent)
        assert outcome.stopped_at == Stage.COMPAT, spec.label
        assert outcome.record.state == LifecycleState.REJECTED
    assert manager.registry.views().active_version("grasp") == "1.0.0"


def test_confirmed_anomaly_rolls_back(manager: UpgradeManager, parent: CapabilityManifest):
    b1 = generate_pool("grasp", 42)[0]
    manager.process_candidate(b1, parent)
    manager.env.apply_drift("grasp", "1.1.0", ANOMALY_SURGE)

    traces = manager.run_live_batch("grasp", 60, "drifted")

    assert len(manager.rollbacks) == 1
    event = manager.rollbacks[0]
    assert event.trigger_type == "anomaly_rate"
    assert event.predecessor_version == "1.0.0"
    assert event.time_to_rollback == 2 * manager.monitor_policy.window
    assert manager.registry.get("grasp", "1.1.0").state == LifecycleState.ROLLED_BACK
    assert manager.registry.views().active_version("grasp") == "1.0.0"
    assert [t.capability_version for t in traces[40:]] == ["1.0.0"] * 20


def test_rollback_trial_triggers_on_drift(
    policy_sets: dict[str, PolicySet], sim_profile: DeploymentProfile
):
    trial = generate_rollback_trials(["grasp"], 42, trials_per_kind=1)[0]
    outcome = run_rollback_trial(trial, ANOMALY_SURGE, sim_profile, 42, policy_sets, max_windows=5)
    assert outcome.triggered
    assert outcome.windows == 2
    assert outcome.event is not None
    assert outcome.event.post_rollback_safe


def test_strategies(policy_sets: dict[str, PolicySet], sim_profile: DeploymentProfile):
    pools = {"grasp": generate_pool("grasp", 42)}
    static = run_strategy(Strategy.STATIC, pools, sim_profile, 3, 42, policy_sets)
    naive = run_strategy(Strategy.NAIVE, pools, sim_profile, 3, 42, policy_sets)

    assert static.activated == set()
    assert len(static.rounds) == 3
    assert len(naive.activated) == 3
    assert naive.manager.registry.views().active_version("grasp") in {
        s.version_id for s in pools["grasp"]
    }


def test_replay_without_disabled_stage_matches_run(
    policy_sets: dict[str, PolicySet], sim_profile: DeploymentProfile
):
    pools = {"grasp": generate_pool("grasp", 42)}
    run = run_strategy(
        Strategy.GOVERNED, pools, sim_profile, 14, 42, policy_sets, record_evidence=True
    )
    assert len(run.evidence) == 14

    decisions = replay_counterfactual(run.evidence, sim_profile, DisabledStage.NONE)
    for item in run.evidence:
        assert decisions[item.key].activated == item.activated, item.label


def test_replay_needs_evidence(sim_profile: DeploymentProfile):
    with pytest.raises(IncompleteAuditError):
        replay_counterfactual([], sim_profile, DisabledStage.NONE)
