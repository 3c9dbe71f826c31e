"""
Upgrade manager: drives candidates through the governed stages.
"""

import time
from collections import defaultdict
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field

from compat.compat_manager import BehavioralEvidence, CompatManager, CompatReport
from compat.checkers.behavioral import compute_signature
from core.enums import LifecycleState, Recommendation, TraceContext
from core.manifest import CapabilityManifest
from core.policy import PolicySet
from core.profiles import DeploymentProfile
from core.telemetry import BehavioralSignature, TraceRecord
from envsim.environment import CapabilityEnvironment
from envsim.generator import CandidateSpec
from envsim.latent import declare_pretraces
from envsim.seeding import derive_rng
from pipeline.activation import gate_activation, shadow_required
from pipeline.monitor import EscalationLadder, LadderVerdict, MonitorPolicy, monitor
from pipeline.reports import (
    ActivationDecision,
    ActivationMode,
    MonitorDecision,
    MonitorValue,
    RollbackEvent,
    SandboxReport,
    ShadowReport,
)
from pipeline.rollback import execute_rollback
from pipeline.sandbox import run_sandbox
from pipeline.shadow import NoActiveVersionError, ShadowRun, run_shadow
from registry.lifecycle import LifecycleRecord, TransitionEvent
from registry.version_registry import VersionRegistry

E = TransitionEvent

BLOCKING = (
    Recommendation.REJECT,
    Recommendation.REJECT_OR_REVIEW,
    Recommendation.SANDBOX,
    Recommendation.SANDBOX_OR_REVIEW,
)


class PipelineBudgets(BaseModel):
    model_config = ConfigDict(frozen=True)

    pretrace_episodes: int = Field(default=100, ge=1)
    sandbox_episodes: int = Field(default=30, ge=1)
    shadow_episodes: int = Field(default=40, ge=1)
    live_episodes: int = Field(default=25, ge=1)
    success_floor: float = Field(default=0.5, ge=0.0, le=1.0)


class ApprovalPolicy(StrEnum):
    AUTO_APPROVE = "auto_approve"
    AUTO_DENY = "auto_deny"
    SCRIPTED = "scripted"


class ApprovalConfig(BaseModel):
    """Stand-in for the human authority that signs off approval-bound activations."""

    model_config = ConfigDict(frozen=True)

    policy: ApprovalPolicy = ApprovalPolicy.AUTO_APPROVE
    # rounds in which a scripted approver says yes
    approved_rounds: tuple[int, ...] = ()

    def approves(self, round_index: int) -> bool:
        if self.policy == ApprovalPolicy.AUTO_APPROVE:
            return True
        if self.policy == ApprovalPolicy.AUTO_DENY:
            return False
        return round_index in self.approved_rounds


class StageTimer:
    """Wall-clock time spent per pipeline stage."""

    def __init__(self) -> None:
        self.samples: dict[str, list[float]] = defaultdict(list)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.samples[name].append(time.perf_counter() - start)

    def merge(self, other: "StageTimer") -> None:
        for name, values in other.samples.items():
            self.samples[name].extend(values)

    def summary(self) -> dict[str, dict[str, float]]:
        return {
            name: {
                "calls": float(len(values)),
                "total_ms": 1000 * sum(values),
                "mean_ms": 1000 * sum(values) / len(values),
            }
            for name, values in sorted(self.samples.items())
            if values
        }


class Stage(StrEnum):
    COMPAT = "compat"
    SANDBOX = "sandbox"
    SHADOW = "shadow"
    ACTIVATION = "activation"


@dataclass
class CandidateOutcome:
    spec: CandidateSpec
    record: LifecycleRecord
    compat: CompatReport | None = None
    sandbox: SandboxReport | None = None
    shadow: ShadowReport | None = None
    decision: ActivationDecision | None = None
    # stage at which a non-activated candidate stopped
    stopped_at: Stage | None = None
    approved: bool = True

    @property
    def activated(self) -> bool:
        return self.decision is not None and self.decision.activates and self.approved


@dataclass
class LiveWatch:
    """Monitoring state of one family's active version."""

    version_id: str
    baseline: BehavioralSignature
    ladder: EscalationLadder
    episodes: int = 0
    buffer: list[TraceRecord] = field(default_factory=list)
    restricted: bool = False


class UpgradeManager:
    """Facade over registry, compatibility checking and the stage executors."""

    def __init__(
        self,
        profile: DeploymentProfile,
        policy_sets: dict[str, PolicySet],
        seed: int,
        compat: CompatManager | None = None,
        budgets: PipelineBudgets | None = None,
        monitor_policy: MonitorPolicy | None = None,
        approval: ApprovalConfig | None = None,
        env: CapabilityEnvironment | None = None,
        timer: StageTimer | None = None,
        fail_fast: bool = True,
    ):
        self.profile = profile
        self.policy_sets = policy_sets
        self.seed = seed
        self.compat = compat or CompatManager()
        self.budgets = budgets or PipelineBudgets()
        self.monitor_policy = monitor_policy or MonitorPolicy()
        self.approval = approval or ApprovalConfig()
        self.env = env or CapabilityEnvironment()
        self.timer = timer or StageTimer()
        self.fail_fast = fail_fast

        self.registry = VersionRegistry()
        self.specs: dict[tuple[str, str], CandidateSpec] = {}
        self.pretraces: dict[tuple[str, str], BehavioralSignature] = {}
        self.watches: dict[str, LiveWatch] = {}
        # (round, family, trace)
        self.live_log: list[tuple[int, str, TraceRecord]] = []
        self.shadow_log: list[tuple[int, str, TraceRecord]] = []
        self.rollbacks: list[RollbackEvent] = []
        self._rollback_count = 0

    @property
    def round(self) -> int:
        return self.registry.current_round

    def set_round(self, round_index: int) -> None:
        self.registry.current_round = round_index

    # --------------------------------------------------------------- registration

    def register_candidate(
        self, spec: CandidateSpec, parent: CapabilityManifest, provenance: str = "generator"
    ) -> LifecycleRecord:
        """Register the candidate's manifest and install its latent behavior."""
        manifest = spec.build_manifest(parent) if spec.version_id != parent.version_id else parent
        record = self.registry.register_candidate(manifest, provenance=provenance)
        key = (record.family_id, record.version_id)
        self.specs[key] = spec
        self.env.install(record.family_id, record.version_id, spec.latent)
        traces = declare_pretraces(
            spec.latent,
            self.budgets.pretrace_episodes,
            derive_rng(self.seed, "pretraces", *key),
            version_id=record.version_id,
        )
        self.pretraces[key] = compute_signature(traces)
        return record

    def force_activate(self, record: LifecycleRecord, reason: str) -> LifecycleRecord:
        """Walk a record to active without any gate; every step is still audited."""
        forced = {"forced": True, "reason": reason}
        self.registry.transition(record, E.VALIDATE_PASS, payload=forced)
        self.registry.transition(record, E.SANDBOX_DONE, payload=forced)
        self.registry.transition(record, E.SHADOW_DONE, payload=forced)
        self.registry.activate(record, "full", self.profile.profile_id.value, forced=True)
        self._watch(record)
        return record

    def bootstrap(self, spec: CandidateSpec, parent: CapabilityManifest) -> LifecycleRecord:
        """Install the parent version as the family's first active version."""
        record = self.register_candidate(spec, parent, provenance="baseline")
        return self.force_activate(record, "baseline")

    # -------------------------------------------------------------- compatibility

    def behavioral_evidence(self, record: LifecycleRecord) -> BehavioralEvidence:
        active = self._require_active(record.family_id)
        return BehavioralEvidence(
            old=self.pretraces[(active.family_id, active.version_id)],
            new=self.pretraces[(record.family_id, record.version_id)],
        )

    def evaluate_compat(
        self, record: LifecycleRecord, fail_fast: bool | None = None
    ) -> CompatReport:
        """Score a candidate against the active version without touching the registry."""
        active = self._require_active(record.family_id)
        return self.compat.evaluate(
            active.manifest,
            record.manifest,
            self.policy_sets[record.family_id],
            self.profile,
            dynamic_evidence=self.behavioral_evidence(record),
            fail_fast=self.fail_fast if fail_fast is None else fail_fast,
        )

    def run_compat_checks(self, record: LifecycleRecord) -> CompatReport:
        """Record the compat report and move the record to validated or rejected."""
        with self.timer.stage("compat"):
            report = self.evaluate_compat(record)
        self.registry.record_compat(record, report.to_dict())
        if report.recommendation in BLOCKING:
            self.registry.transition(
                record,
                E.INCOMPATIBILITY_DETECTED,
                reason=f"compat:{report.recommendation.value}",
                payload={"stage": Stage.COMPAT.value},
            )
        else:
            self.registry.transition(
                record,
                E.VALIDATE_PASS,
                payload={"recommendation": report.recommendation.value},
            )
        return report

    # -------------------------------------------------------------------- sandbox

    def launch_sandbox_eval(self, record: LifecycleRecord) -> SandboxReport:
        with self.timer.stage("sandbox"):
            report, _ = run_sandbox(
                record,
                self.env,
                self.profile,
                derive_rng(self.seed, "sandbox", record.family_id, record.version_id),
                episodes=self.budgets.sandbox_episodes,
                success_floor=self.budgets.success_floor,
            )
        self.registry.transition(record, E.SANDBOX_DONE, payload={"summary": report.to_dict()})
        if not report.passed:
            self.registry.transition(
                record,
                E.INCOMPATIBILITY_DETECTED,
                reason="sandbox:" + ",".join(report.failures),
                payload={"stage": Stage.SANDBOX.value},
            )
        return report

    # --------------------------------------------------------------------- shadow

    def launch_shadow_eval(self, record: LifecycleRecord) -> ShadowRun:
        active = self.registry.active_record(record.family_id)
        with self.timer.stage("shadow"):
            run = run_shadow(
                record,
                active,
                self.env,
                self.profile,
                derive_rng(self.seed, "shadow", record.family_id, record.version_id),
                episodes=self.budgets.shadow_episodes,
            )
        self.live_log.extend((self.round, record.family_id, t) for t in run.live_traces)
        self.shadow_log.extend((self.round, record.family_id, t) for t in run.shadow_traces)
        return run

    # ----------------------------------------------------------------- activation

    def activate_candidate(
        self,
        record: LifecycleRecord,
        compat: CompatReport,
        sandbox: SandboxReport,
        shadow: ShadowReport | None,
    ) -> tuple[ActivationDecision, bool]:
        """
        Gate a shadowed candidate and apply the decision to the registry.

        Returns:
            Tuple of (gate decision, whether approval was granted)
        """
        with self.timer.stage("activation"):
            decision = gate_activation(
                compat, sandbox, shadow, self.profile, record.manifest.risk_level
            )
        if not decision.activates:
            if decision.governance_failure:
                self.registry.transition(
                    record,
                    E.INCOMPATIBILITY_DETECTED,
                    reason="; ".join(decision.reasons),
                    payload={"stage": Stage.ACTIVATION.value, "decision": decision.to_dict()},
                )
            else:
                self.registry.transition(
                    record,
                    E.DEMOTE,
                    reason="; ".join(decision.reasons),
                    payload={"decision": decision.to_dict()},
                )
            return decision, True

        approved = decision.mode != ActivationMode.APPROVAL_BOUND or self.approval.approves(
            self.round
        )
        if not approved:
            self.registry.transition(
                record,
                E.DEMOTE,
                reason="approval denied",
                payload={"decision": decision.to_dict()},
            )
            return decision, False

        self.registry.activate(
            record, decision.mode.registry_mode, self.profile.profile_id.value
        )
        self._watch(record)
        return decision, True

    # ----------------------------------------------------------------- monitoring

    def run_live_batch(
        self, family_id: str, episodes: int, *stream: object, monitored: bool = True
    ) -> list[TraceRecord]:
        """
        Execute a live batch with the family's active version.

        Traces are monitored in tumbling windows; a firing ladder rolls the
        active version back mid-batch and the remaining episodes run on the
        restored predecessor.
        """
        rng = derive_rng(self.seed, "live", family_id, *stream)
        traces: list[TraceRecord] = []
        for episode in self.env.episode_inputs(rng, episodes):
            active = self.registry.active_record(family_id)
            if active is None:
                break
            trace = self.env.run_input(
                family_id, active.version_id, TraceContext.LIVE, episode, self.env.clock.tick()
            )
            traces.append(trace)
            self.live_log.append((self.round, family_id, trace))
            if monitored:
                self.observe(active, trace)
        return traces

    def observe(self, active: LifecycleRecord, trace: TraceRecord) -> RollbackEvent | None:
        watch = self.watches[active.family_id]
        watch.buffer.append(trace)
        watch.episodes += 1
        if len(watch.buffer) < self.monitor_policy.window:
            return None

        window, watch.buffer = watch.buffer, []
        with self.timer.stage("monitoring"):
            decision = monitor(
                window,
                watch.baseline,
                self.profile,
                self.monitor_policy,
                start=watch.episodes - len(window),
            )
        if decision.value == MonitorValue.RESTRICT:
            self.restrict_candidate(active, decision)
        else:
            self.registry.record_monitor(active, decision.to_dict())

        verdict = watch.ladder.observe(decision)
        if verdict == LadderVerdict.HOLD:
            return None
        soft = (
            verdict == LadderVerdict.LADDER
            and active.manifest.recovery_profile.fallback_binding
        )
        return self.rollback_candidate(active, decision, soft=soft)

    def restrict_candidate(self, record: LifecycleRecord, decision: MonitorDecision) -> None:
        """Narrow the active version to restricted mode; lifecycle state is unchanged."""
        self.registry.record_monitor(record, decision.to_dict())
        self.watches[record.family_id].restricted = True

    # ------------------------------------------------------------------- rollback

    def rollback_candidate(
        self, record: LifecycleRecord, decision: MonitorDecision, soft: bool = False
    ) -> RollbackEvent:
        watch = self.watches.pop(record.family_id)
        first_alert = watch.ladder.first_alert or 0
        self._rollback_count += 1
        with self.timer.stage("rollback"):
            event = execute_rollback(
                record,
                self.registry,
                self.env,
                derive_rng(
                    self.seed, "rollback", record.family_id, record.version_id, self._rollback_count
                ),
                trigger_type=decision.trigger or decision.value.value,
                time_to_rollback=watch.episodes,
                recovery_latency=watch.episodes - first_alert,
                soft=soft,
            )
        self.rollbacks.append(event)
        restored = self.registry.active_record(record.family_id)
        if restored is not None:
            self._watch(restored)
        return event

    # ---------------------------------------------------------------- pipeline

    def process_candidate(
        self, spec: CandidateSpec, parent: CapabilityManifest
    ) -> CandidateOutcome:
        """Run one candidate through every stage until it is stopped or activated."""
        record = self.register_candidate(spec, parent)
        outcome = CandidateOutcome(spec=spec, record=record)

        outcome.compat = self.run_compat_checks(record)
        if record.state == LifecycleState.REJECTED:
            outcome.stopped_at = Stage.COMPAT
            return outcome

        outcome.sandbox = self.launch_sandbox_eval(record)
        if record.state == LifecycleState.REJECTED:
            outcome.stopped_at = Stage.SANDBOX
            return outcome

        if shadow_required(outcome.compat, self.profile):
            shadow_run = self.launch_shadow_eval(record)
            outcome.shadow = shadow_run.report
            summary = shadow_run.report.to_dict()
        else:
            summary = {"waived": True}
        self.registry.transition(record, E.SHADOW_DONE, payload={"summary": summary})

        outcome.decision, outcome.approved = self.activate_candidate(
            record, outcome.compat, outcome.sandbox, outcome.shadow
        )
        if not outcome.activated:
            outcome.stopped_at = Stage.SHADOW if (
                outcome.shadow is not None and not outcome.shadow.passed
            ) else Stage.ACTIVATION
        return outcome

    # --------------------------------------------------------------- internals

    def _require_active(self, family_id: str) -> LifecycleRecord:
        active = self.registry.active_record(family_id)
        if active is None:
            raise NoActiveVersionError(f"Family {family_id} has no active version")
        return active

    def _watch(self, record: LifecycleRecord) -> None:
        self.watches[record.family_id] = LiveWatch(
            version_id=record.version_id,
            baseline=self.pretraces[(record.family_id, record.version_id)],
            ladder=EscalationLadder(self.monitor_policy),
        )
