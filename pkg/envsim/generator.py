"""
Seeded candidate generator implementing the fault taxonomy.

Manifest deltas and latent parameters are calibrated against the parent so the
compatibility checkers land where the per-candidate score table expects them:
interface drift at 0.50, permission expansion at 5/6, behavioral regression
below the behavioral band and the marginal pair just under full marks on every
dimension.
"""

from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.enums import (
    SANDBOX_MODES,
    ProfileId,
    RegressionCategory,
    RiskLevel,
    TagClass,
    TraceContext,
)
from core.manifest import (
    CapabilityManifest,
    Dependency,
    ExecutionMode,
    FieldDescriptor,
    InvocationEntry,
    RecoveryProfile,
)
from envsim.drift import DriftKind
from envsim.latent import LatentBehavior
from envsim.seeding import derive_rng

POOL_SIZE = 14
BENIGN_PER_POOL = 6
SHADOW_AND_LIVE = (TraceContext.SHADOW, TraceContext.LIVE)
EVERYWHERE = SANDBOX_MODES + SHADOW_AND_LIVE


class CandidateKind(StrEnum):
    BENIGN = "benign"
    INTERFACE_DRIFT = "interface_drift"
    PERMISSION_EXPANSION = "permission_expansion"
    BEHAVIORAL_REGRESSION = "behavioral_regression"
    RECOVERY_DEGRADATION = "recovery_degradation"
    MARGINAL_COMPOSITE = "marginal_composite"


class GeneratorCalibration(BaseModel):
    """Calibration constants of the synthetic environment."""

    model_config = ConfigDict(frozen=True)

    fourth_fault_class: CandidateKind = CandidateKind.MARGINAL_COMPOSITE
    pretrace_episodes: int = 100
    parent_success: float = 0.66
    parent_duration: float = 10.0
    parent_retry_rate: float = 0.10
    parent_violation_rate: float = 0.10
    recovery_success_prob: float = 0.80
    benign_success_gains: tuple[float, ...] = (0.08, 0.09, 0.10, 0.11, 0.12, 0.10)
    benign_violation_rate: float = 0.08
    # seeded per pool; stays below the parent violation rate
    benign_violation_jitter: tuple[float, ...] = (0.0, 0.01)
    # per benign index
    benign_anomaly_jitter: tuple[float, ...] = (0.0, 0.01, 0.0, 0.01, 0.0, 0.0)
    # per slot of each faulty pair
    interface_anomaly_drift: tuple[float, float] = (0.22, 0.21)
    behavioral_anomaly_drift: tuple[float, float] = (0.22, 0.20)
    # per slot of the marginal pair
    marginal_anomaly_drift: tuple[float, float] = (0.07, 0.08)
    marginal_extra_modes: tuple[int, int] = (24, 44)
    marginal_fallback_degradation: float = 0.15
    faulty_success: float = 0.72
    # above every benign version, so a marginal candidate always looks like an improvement
    marginal_success: float = 0.80
    faulty_live_unsafe: float = 0.35
    degraded_recovery_success: float = 0.30
    signal_rate: float = 0.5
    # regression carriers per seed: revealed by the sandbox, or only by shadow
    sandbox_regressions: dict[RegressionCategory, int] = {
        RegressionCategory.POLICY_DRIFT: 24,
        RegressionCategory.TIMEOUT_STALL: 18,
        RegressionCategory.RECOVERY_DEGRADATION: 6,
    }
    shadow_only_regressions: dict[RegressionCategory, int] = {
        RegressionCategory.RETRY_INSTABILITY: 8,
        RegressionCategory.POLICY_DRIFT: 17,
        RegressionCategory.TIMEOUT_STALL: 7,
    }
    regression_jitter: int = 2


@dataclass(frozen=True)
class Regression:
    category: RegressionCategory
    contexts: tuple[TraceContext, ...] = EVERYWHERE

    @property
    def sandbox_visible(self) -> bool:
        return any(ctx.is_sandbox for ctx in self.contexts)

    @property
    def shadow_visible(self) -> bool:
        return TraceContext.SHADOW in self.contexts


@dataclass(frozen=True)
class ManifestDelta:
    """Structured edit applied to the parent manifest."""

    retype_fields: bool = False
    change_contracts: bool = False
    add_modes: tuple[ExecutionMode, ...] = ()
    recovery_profile: RecoveryProfile | None = None
    risk_level: RiskLevel | None = None
    environment_scope: tuple[ProfileId, ...] | None = None


@dataclass(frozen=True)
class CandidateSpec:
    kind: CandidateKind
    label: str
    family_id: str
    version_id: str
    ground_truth_faulty: bool
    latent: LatentBehavior
    manifest_delta: ManifestDelta = field(default_factory=ManifestDelta)
    regressions: tuple[Regression, ...] = ()

    def __post_init__(self) -> None:
        if (self.kind == CandidateKind.BENIGN) == self.ground_truth_faulty:
            raise ValueError(f"{self.label}: only benign candidates are non-faulty")
        if self.kind == CandidateKind.BENIGN and (
            self.latent.unsafe_event_rate > 0
            or any(
                mods.get("unsafe_event_rate", 0.0) > 0
                for mods in self.latent.context_modifiers.values()
            )
        ):
            raise ValueError(f"{self.label}: benign candidates cannot be unsafe")

    def build_manifest(self, parent: CapabilityManifest) -> CapabilityManifest:
        return apply_delta(parent, self.manifest_delta, self.version_id)


def parent_manifest(family: str) -> CapabilityManifest:
    """The incumbent version every pool is generated against."""
    return CapabilityManifest(
        family_id=family,
        version_id="1.0.0",
        input_schema=(
            FieldDescriptor(name="target_pose", kind="pose"),
            FieldDescriptor(name="object_id", kind="identifier"),
            FieldDescriptor(name="workspace", kind="region"),
            FieldDescriptor(name="speed", kind="scalar"),
        ),
        output_schema=(
            FieldDescriptor(name="status", kind="enum"),
            FieldDescriptor(name="final_pose", kind="pose"),
            FieldDescriptor(name="grip_force", kind="scalar"),
            FieldDescriptor(name="elapsed", kind="duration"),
        ),
        invocation_schema=(
            InvocationEntry(
                name="execute",
                contract="execute(target_pose, object_id) -> status",
                preconditions=("object_visible", "workspace_clear"),
                postconditions=("status_reported",),
            ),
            InvocationEntry(
                name="plan",
                contract="plan(target_pose, workspace) -> final_pose",
                preconditions=("workspace_known",),
                postconditions=("plan_bounded",),
            ),
            InvocationEntry(
                name="abort",
                contract="abort() -> status",
                preconditions=("session_open",),
                postconditions=("actuators_idle",),
            ),
            InvocationEntry(
                name="query",
                contract="query(object_id) -> status",
                preconditions=("session_open",),
                postconditions=("status_reported",),
            ),
        ),
        permission_profile=(
            ExecutionMode(name="gripper", tag_class=TagClass.ACTUATOR_ACCESS, target="gripper"),
            ExecutionMode(name="arm", tag_class=TagClass.ACTUATOR_ACCESS, target="arm"),
            ExecutionMode(name="camera", tag_class=TagClass.TOOL_ACCESS, target="camera"),
            ExecutionMode(
                name="workcell", tag_class=TagClass.ENVIRONMENT_SCOPE, target="workcell"
            ),
            ExecutionMode(
                name="cpu_standard", tag_class=TagClass.RESOURCE_CLASS, target="cpu-standard"
            ),
        ),
        dependency_set=(
            Dependency(name="motion-core", version_range=">=2.0.0,<3.0.0"),
            Dependency(name="perception", version_range=">=1.5.0"),
            Dependency(name="grasp-planner", version_range=">=3.0.0,<4.0.0"),
            Dependency(name="safety-monitor", version_range=">=1.0.0"),
        ),
    )


def apply_delta(
    parent: CapabilityManifest, delta: ManifestDelta, version_id: str
) -> CapabilityManifest:
    def retyped(fields: tuple[FieldDescriptor, ...]) -> tuple[FieldDescriptor, ...]:
        if not delta.retype_fields:
            return fields
        return tuple(FieldDescriptor(name=f.name, kind=f"{f.kind}_v2") for f in fields)

    entries = parent.invocation_schema
    if delta.change_contracts:
        entries = tuple(
            e.model_copy(update={"contract": f"{e.contract} [batched]"}) for e in entries
        )

    return parent.model_copy(
        update={
            "version_id": version_id,
            "parent_version": parent.version_id,
            "input_schema": retyped(parent.input_schema),
            "output_schema": retyped(parent.output_schema),
            "invocation_schema": entries,
            "permission_profile": parent.permission_profile + delta.add_modes,
            "recovery_profile": delta.recovery_profile or parent.recovery_profile,
            "risk_level": delta.risk_level or parent.risk_level,
            "environment_scope": delta.environment_scope or parent.environment_scope,
        }
    )


def parent_latent(cal: GeneratorCalibration) -> LatentBehavior:
    return LatentBehavior(
        success_prob=cal.parent_success,
        base_duration=cal.parent_duration,
        retry_rate=cal.parent_retry_rate,
        violation_rate=cal.parent_violation_rate,
        anomaly_rate=0.0,
        recovery_success_prob=cal.recovery_success_prob,
        signal_rate=cal.signal_rate,
    )


def parent_spec(family: str, cal: GeneratorCalibration | None = None) -> CandidateSpec:
    return CandidateSpec(
        kind=CandidateKind.BENIGN,
        label="B0",
        family_id=family,
        version_id="1.0.0",
        ground_truth_faulty=False,
        latent=parent_latent(cal or GeneratorCalibration()),
    )


def with_regressions(
    base: LatentBehavior, regressions: tuple[Regression, ...]
) -> LatentBehavior:
    """Attach regression signals to the contexts that reveal them."""
    signals = dict(base.signals)
    modifiers = {ctx: dict(mods) for ctx, mods in base.context_modifiers.items()}
    for regression in regressions:
        for ctx in regression.contexts:
            signals[ctx] = signals.get(ctx, ()) + (regression.category,)
        # unstable retries are visible in the retry counts as well as the signal
        if regression.category == RegressionCategory.RETRY_INSTABILITY:
            for ctx in regression.contexts:
                mods = modifiers.setdefault(ctx, {})
                mods["retry_rate"] = mods.get("retry_rate", 0.0) + 1.0
    return replace(base, signals=signals, context_modifiers=modifiers)


def benign_candidate(
    family: str,
    index: int,
    version: str,
    cal: GeneratorCalibration,
    rng: np.random.Generator,
    label: str | None = None,
) -> CandidateSpec:
    gain = cal.benign_success_gains[index % len(cal.benign_success_gains)]
    jitter = cal.benign_anomaly_jitter[index % len(cal.benign_anomaly_jitter)]
    scope = {4: (ProfileId.SIM, ProfileId.REAL), 5: (ProfileId.SIM,)}.get(index)
    risk = {2: RiskLevel.HIGH, 3: RiskLevel.MEDIUM}.get(index)
    return CandidateSpec(
        kind=CandidateKind.BENIGN,
        label=label or f"B{index + 1}",
        family_id=family,
        version_id=version,
        ground_truth_faulty=False,
        latent=LatentBehavior(
            success_prob=cal.parent_success + gain,
            base_duration=cal.parent_duration,
            retry_rate=cal.parent_retry_rate,
            violation_rate=cal.benign_violation_rate
            + float(rng.choice(cal.benign_violation_jitter)),
            anomaly_rate=jitter,
            recovery_success_prob=cal.recovery_success_prob,
            signal_rate=cal.signal_rate,
        ),
        manifest_delta=ManifestDelta(risk_level=risk, environment_scope=scope),
    )


def _faulty_latent(
    cal: GeneratorCalibration,
    anomaly_drift: float = 0.0,
    success: float | None = None,
    unsafe: float = 0.0,
    modifiers: dict[TraceContext, dict[str, float]] | None = None,
) -> LatentBehavior:
    """Faulty latent that turns unsafe once it acts live."""
    modifiers = {ctx: dict(mods) for ctx, mods in (modifiers or {}).items()}
    live = modifiers.setdefault(TraceContext.LIVE, {})
    live["unsafe_event_rate"] = live.get("unsafe_event_rate", 0.0) + cal.faulty_live_unsafe
    return LatentBehavior(
        success_prob=cal.faulty_success if success is None else success,
        base_duration=cal.parent_duration,
        retry_rate=cal.parent_retry_rate,
        violation_rate=cal.parent_violation_rate,
        anomaly_rate=anomaly_drift,
        unsafe_event_rate=unsafe,
        recovery_success_prob=cal.recovery_success_prob,
        context_modifiers=modifiers,
        signal_rate=cal.signal_rate,
    )


def _resource_modes(count: int) -> tuple[ExecutionMode, ...]:
    return tuple(
        ExecutionMode(
            name=f"resource_{i}", tag_class=TagClass.RESOURCE_CLASS, target=f"pool-{i}"
        )
        for i in range(count)
    )


LOGGER_MODE = ExecutionMode(name="telemetry_logger", tag_class=TagClass.TOOL_ACCESS, target="logger")
TORQUE_OVERRIDE_MODE = ExecutionMode(
    name="wrist_torque_override",
    tag_class=TagClass.ACTUATOR_ACCESS,
    target="wrist",
    risk=RiskLevel.MEDIUM,
)


def faulty_candidate(
    kind: CandidateKind,
    family: str,
    label: str,
    version: str,
    slot: int,
    cal: GeneratorCalibration,
) -> CandidateSpec:
    """Build one faulty candidate; slot selects the variant within a pair."""
    regressions: tuple[Regression, ...] = ()
    delta = ManifestDelta()

    if kind == CandidateKind.INTERFACE_DRIFT:
        # the new contract breaks callers: sandbox episodes mostly fail
        sandbox_fail = {"success_prob": -0.45}
        live_degraded = {"success_prob": -0.08}
        latent = _faulty_latent(
            cal,
            anomaly_drift=cal.interface_anomaly_drift[slot],
            success=0.70,
            modifiers={
                **{ctx: sandbox_fail for ctx in SANDBOX_MODES},
                **{ctx: live_degraded for ctx in SHADOW_AND_LIVE},
            },
        )
        delta = ManifestDelta(retype_fields=True, change_contracts=True)
    elif kind == CandidateKind.PERMISSION_EXPANSION:
        over_authority = {"violation_rate": 0.35}
        contexts = (TraceContext.SANDBOX_ADVERSARIAL, *SHADOW_AND_LIVE)
        latent = _faulty_latent(cal, modifiers={ctx: over_authority for ctx in contexts})
        regressions = (Regression(RegressionCategory.POLICY_DRIFT, contexts),)
        delta = ManifestDelta(add_modes=(TORQUE_OVERRIDE_MODE,))
    elif kind == CandidateKind.BEHAVIORAL_REGRESSION:
        latent = _faulty_latent(
            cal, anomaly_drift=cal.behavioral_anomaly_drift[slot], unsafe=0.05
        )
        regressions = (Regression(RegressionCategory.TIMEOUT_STALL),)
    elif kind == CandidateKind.MARGINAL_COMPOSITE:
        latent = _faulty_latent(
            cal, anomaly_drift=cal.marginal_anomaly_drift[slot], success=cal.marginal_success
        )
        if slot == 0:
            # only live traffic reveals the retry storm
            regressions = (
                Regression(RegressionCategory.RETRY_INSTABILITY, SHADOW_AND_LIVE),
            )
        else:
            # only adversarial probing reveals the policy drift
            regressions = (
                Regression(
                    RegressionCategory.POLICY_DRIFT, (TraceContext.SANDBOX_ADVERSARIAL,)
                ),
            )
        delta = ManifestDelta(
            add_modes=_resource_modes(cal.marginal_extra_modes[slot]) + (LOGGER_MODE,),
            recovery_profile=RecoveryProfile(
                degradation={"fallback_binding": cal.marginal_fallback_degradation}
            ),
        )
    elif kind == CandidateKind.RECOVERY_DEGRADATION:
        # never unsafe on its own; the fault only shows once a rollback is needed
        latent = LatentBehavior(
            success_prob=cal.faulty_success,
            base_duration=cal.parent_duration,
            retry_rate=cal.parent_retry_rate,
            violation_rate=cal.parent_violation_rate,
            anomaly_rate=0.0,
            recovery_success_prob=cal.degraded_recovery_success,
            signal_rate=cal.signal_rate,
        )
        regressions = (Regression(RegressionCategory.RECOVERY_DEGRADATION),)
        delta = ManifestDelta(recovery_profile=RecoveryProfile(rollback_hook=False))
    else:
        raise ValueError(f"Not a faulty candidate kind: {kind}")

    return CandidateSpec(
        kind=kind,
        label=label,
        family_id=family,
        version_id=version,
        ground_truth_faulty=True,
        latent=with_regressions(latent, regressions),
        manifest_delta=delta,
        regressions=regressions,
    )


def generate_pool(
    family: str, seed: int, cal: GeneratorCalibration | None = None
) -> list[CandidateSpec]:
    """
    Generate the candidate pool of one family: 6 benign, then 8 faulty.

    The faulty candidates are two each of interface drift, permission
    expansion and behavioral regression, plus two of the configured fourth
    class (marginal composite by default, or recovery degradation).
    Versions are 1.1.0 to 1.14.0 in pool order.
    """
    cal = cal or GeneratorCalibration()
    rng = derive_rng(seed, "pool", family)
    versions = [f"1.{i + 1}.0" for i in range(POOL_SIZE)]

    pool = [benign_candidate(family, i, versions[i], cal, rng) for i in range(BENIGN_PER_POOL)]
    kinds = (
        CandidateKind.INTERFACE_DRIFT,
        CandidateKind.PERMISSION_EXPANSION,
        CandidateKind.BEHAVIORAL_REGRESSION,
        cal.fourth_fault_class,
    )
    for i in range(POOL_SIZE - BENIGN_PER_POOL):
        pool.append(
            faulty_candidate(
                kinds[i // 2],
                family,
                label=f"F{i + 1}",
                version=versions[BENIGN_PER_POOL + i],
                slot=i % 2,
                cal=cal,
            )
        )
    return pool


@dataclass(frozen=True)
class RollbackTrial:
    drift_kind: DriftKind
    candidate: CandidateSpec

    @property
    def family_id(self) -> str:
        return self.candidate.family_id


def generate_rollback_trials(
    families: list[str],
    seed: int,
    trials_per_kind: int = 12,
    recovery_trial_share: float = 0.0,
    cal: GeneratorCalibration | None = None,
) -> list[RollbackTrial]:
    """
    Candidates for rollback evaluation, trials_per_kind per drift kind.

    Trial candidates are benign and take versions <2+k>.<i>.0 so they never
    collide with a pool. When recovery_trial_share > 0 that share of each
    kind's trials uses a recovery-degradation candidate instead.
    """
    cal = cal or GeneratorCalibration()
    degraded_per_kind = int(round(trials_per_kind * recovery_trial_share))
    trials: list[RollbackTrial] = []
    for k, drift_kind in enumerate(DriftKind):
        rng = derive_rng(seed, "rollback-trials", drift_kind.value)
        for i in range(trials_per_kind):
            family = families[i % len(families)]
            version = f"{2 + k}.{i}.0"
            label = f"{drift_kind.value}-{i}"
            if i < degraded_per_kind:
                candidate = faulty_candidate(
                    CandidateKind.RECOVERY_DEGRADATION, family, label, version, 0, cal
                )
            else:
                candidate = benign_candidate(
                    family, i % 4, version, cal, rng, label=label
                )
            trials.append(RollbackTrial(drift_kind=drift_kind, candidate=candidate))
    return trials


def allocate_regressions(
    family: str, seed: int, cal: GeneratorCalibration | None = None
) -> list[CandidateSpec]:
    """
    Regression carriers for sandbox-versus-shadow detection.

    Each candidate is the parent behavior plus exactly one regression.
    Per-category counts follow the calibration with seeded zero-sum jitter
    between the first two categories of each visibility class, so the class
    totals never move.
    """
    cal = cal or GeneratorCalibration()
    rng = derive_rng(seed, "regressions", family)

    def jittered(targets: dict[RegressionCategory, int]) -> dict[RegressionCategory, int]:
        counts = dict(targets)
        first, second = list(counts)[:2]
        shift = int(rng.integers(-cal.regression_jitter, cal.regression_jitter + 1))
        shift = max(-counts[first], min(counts[second], shift))
        counts[first] += shift
        counts[second] -= shift
        return counts

    base = parent_latent(cal)
    specs: list[CandidateSpec] = []
    for targets, contexts in (
        (cal.sandbox_regressions, EVERYWHERE),
        (cal.shadow_only_regressions, SHADOW_AND_LIVE),
    ):
        for category, count in jittered(targets).items():
            for _ in range(count):
                regression = Regression(category, contexts)
                specs.append(
                    CandidateSpec(
                        kind=CandidateKind.BEHAVIORAL_REGRESSION,
                        label=f"R{len(specs) + 1}-{category.value}",
                        family_id=family,
                        version_id=f"9.{len(specs)}.0",
                        ground_truth_faulty=True,
                        latent=with_regressions(base, (regression,)),
                        regressions=(regression,),
                    )
                )
    return specs
