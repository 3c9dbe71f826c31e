"""
Per-candidate evidence and counterfactual replay with one governance stage disabled.

The governed run records, for every candidate, the diagnostic compat report and
the sandbox, shadow and live-probe results, whether or not the candidate
reached those stages. Replaying the gate over that evidence answers what the
pipeline would have activated without a given stage.
"""

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np

from compat.compat_manager import (
    BehavioralEvidence,
    CompatCategories,
    CompatReport,
    aggregate,
)
from core.enums import (
    InterfaceCategory,
    LifecycleState,
    PolicyCategory,
    RecoveryCategory,
    RiskLevel,
    TraceContext,
)
from core.profiles import DeploymentProfile
from envsim.environment import CapabilityEnvironment
from envsim.seeding import derive_rng
from pipeline.activation import gate_activation, shadow_required
from pipeline.reports import ActivationMode, SandboxReport, ShadowReport
from pipeline.sandbox import run_sandbox
from pipeline.shadow import run_shadow
from pipeline.upgrade_manager import CandidateOutcome, UpgradeManager
from registry.lifecycle import LifecycleRecord


class IncompleteAuditError(Exception):
    pass


class DisabledStage(StrEnum):
    NONE = "none"
    SHADOW = "shadow"
    RECOVERY_COMPAT = "recovery_compat"
    ONLINE_MON = "online_mon"
    ROLLBACK = "rollback"
    SANDBOX = "sandbox"
    COMPAT_ONLY = "compat_only"


@dataclass(frozen=True)
class LiveProbe:
    """Outcome of a fixed live batch the candidate would have served."""

    episodes: int
    successes: int
    # episodes with a policy hit or an anomaly flag
    violations: int
    unsafe_episodes: int

    @property
    def unsafe(self) -> bool:
        return self.unsafe_episodes > 0


@dataclass(frozen=True)
class CandidateEvidence:
    family_id: str
    version_id: str
    label: str
    kind: str
    ground_truth_faulty: bool
    risk_level: RiskLevel
    approved: bool
    activated: bool
    compat: CompatReport | None
    sandbox: SandboxReport | None
    shadow: ShadowReport | None
    live: LiveProbe | None

    @property
    def key(self) -> tuple[str, str]:
        return (self.family_id, self.version_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "family_id": self.family_id,
            "version_id": self.version_id,
            "label": self.label,
            "kind": self.kind,
            "ground_truth_faulty": self.ground_truth_faulty,
            "risk_level": self.risk_level.value,
            "approved": self.approved,
            "activated": self.activated,
            "compat": self.compat.to_dict() if self.compat else None,
            "sandbox": self.sandbox.to_dict() if self.sandbox else None,
            "shadow": self.shadow.to_dict() if self.shadow else None,
            "live": vars(self.live) if self.live else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CandidateEvidence":
        try:
            return cls(
                family_id=data["family_id"],
                version_id=data["version_id"],
                label=data["label"],
                kind=data["kind"],
                ground_truth_faulty=data["ground_truth_faulty"],
                risk_level=RiskLevel(data["risk_level"]),
                approved=data["approved"],
                activated=data["activated"],
                compat=CompatReport.from_dict(data["compat"]) if data.get("compat") else None,
                sandbox=SandboxReport.from_dict(data["sandbox"]) if data.get("sandbox") else None,
                shadow=ShadowReport.from_dict(data["shadow"]) if data.get("shadow") else None,
                live=LiveProbe(**data["live"]) if data.get("live") else None,
            )
        except KeyError as e:
            raise IncompleteAuditError(f"Evidence record is missing field {e}")


def write_evidence(path: Path, evidence: Iterable[CandidateEvidence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for item in evidence:
            f.write(json.dumps(item.to_dict(), sort_keys=True) + "\n")


def read_evidence(path: Path) -> list[CandidateEvidence]:
    with open(path) as f:
        return [CandidateEvidence.from_dict(json.loads(line)) for line in f if line.strip()]


def collect_evidence(
    manager: UpgradeManager, outcome: CandidateOutcome, incumbent: LifecycleRecord
) -> CandidateEvidence:
    """
    Complete the evidence of one processed candidate.

    Stages the candidate never reached are probed in a scratch environment that
    shares the installed latents but not the trace clock, with the same named
    streams the pipeline uses, so the main run is unaffected and a reached
    stage's probe would equal its real report.
    """
    record = outcome.record
    key = (record.family_id, record.version_id)
    probe_env = CapabilityEnvironment(manager.env.task_families)
    probe_env.latents = manager.env.latents

    compat = manager.compat.evaluate(
        incumbent.manifest,
        record.manifest,
        manager.policy_sets[record.family_id],
        manager.profile,
        dynamic_evidence=BehavioralEvidence(
            old=manager.pretraces[(incumbent.family_id, incumbent.version_id)],
            new=manager.pretraces[key],
        ),
        fail_fast=False,
    )

    sandbox = outcome.sandbox
    if sandbox is None:
        sandbox, _ = run_sandbox(
            LifecycleRecord(manifest=record.manifest, state=LifecycleState.VALIDATED),
            probe_env,
            manager.profile,
            derive_rng(manager.seed, "sandbox", *key),
            episodes=manager.budgets.sandbox_episodes,
            success_floor=manager.budgets.success_floor,
        )

    shadow = outcome.shadow
    if shadow is None:
        shadow = run_shadow(
            LifecycleRecord(manifest=record.manifest, state=LifecycleState.SANDBOXED),
            incumbent,
            probe_env,
            manager.profile,
            derive_rng(manager.seed, "shadow", *key),
            episodes=manager.budgets.shadow_episodes,
        ).report

    inputs = probe_env.episode_inputs(
        derive_rng(manager.seed, "probe", *key), manager.budgets.live_episodes
    )
    traces = probe_env.run_batch(record.family_id, record.version_id, TraceContext.LIVE, inputs)
    live = LiveProbe(
        episodes=len(traces),
        successes=int(np.sum([t.success for t in traces])),
        violations=int(np.sum([t.policy_hits > 0 or t.anomaly_flags > 0 for t in traces])),
        unsafe_episodes=int(np.sum([t.unsafe_continuation for t in traces])),
    )

    return CandidateEvidence(
        family_id=record.family_id,
        version_id=record.version_id,
        label=outcome.spec.label,
        kind=outcome.spec.kind.value,
        ground_truth_faulty=outcome.spec.ground_truth_faulty,
        risk_level=record.manifest.risk_level,
        approved=manager.approval.approves(manager.round),
        activated=outcome.activated,
        compat=compat,
        sandbox=sandbox,
        shadow=shadow,
        live=live,
    )


def without_recovery_check(compat: CompatReport) -> CompatReport:
    """The report admission would see if rollback readiness were not considered."""
    cats = compat.categories
    if cats.interface == InterfaceCategory.INCOMPATIBLE or cats.policy == PolicyCategory.INCOMPATIBLE:
        return compat
    relaxed = replace(cats, recovery=RecoveryCategory.COMPATIBLE)
    return replace(compat, categories=relaxed, recommendation=aggregate(relaxed))


def static_blocked(categories: CompatCategories) -> bool:
    """Screening on interface and policy alone."""
    return categories.interface == InterfaceCategory.INCOMPATIBLE or categories.policy in (
        PolicyCategory.INCOMPATIBLE,
        PolicyCategory.REVIEW,
    )


@dataclass(frozen=True)
class ReplayDecision:
    screen_blocked: bool
    activated: bool


def replay_gate(
    evidence: CandidateEvidence, profile: DeploymentProfile, disabled: DisabledStage
) -> ReplayDecision:
    """Pure re-evaluation of one candidate's screening and activation."""
    if evidence.compat is None or evidence.sandbox is None or evidence.shadow is None:
        raise IncompleteAuditError(
            f"Evidence for {evidence.family_id}@{evidence.version_id} lacks a stage report"
        )
    compat = evidence.compat
    if disabled == DisabledStage.RECOVERY_COMPAT:
        compat = without_recovery_check(compat)

    if disabled == DisabledStage.COMPAT_ONLY:
        cats = compat.categories
        blocked = cats.interface == InterfaceCategory.INCOMPATIBLE or (
            cats.policy == PolicyCategory.INCOMPATIBLE
        )
        needs_approval = cats.policy == PolicyCategory.REVIEW or profile.approval_required(
            evidence.risk_level
        )
        activated = not blocked and (evidence.approved or not needs_approval)
        return ReplayDecision(screen_blocked=static_blocked(cats), activated=activated)

    sandbox: SandboxReport = evidence.sandbox
    if disabled == DisabledStage.SANDBOX:
        sandbox = replace(sandbox, passed=True, failures=())
    shadow: ShadowReport | None = (
        evidence.shadow if shadow_required(compat, profile) else None
    )
    if disabled == DisabledStage.SHADOW and shadow is not None:
        shadow = replace(shadow, passed=True, failures=())

    decision = gate_activation(compat, sandbox, shadow, profile, evidence.risk_level)
    approved = decision.mode != ActivationMode.APPROVAL_BOUND or evidence.approved
    return ReplayDecision(
        screen_blocked=compat.recommendation.screen_blocked,
        activated=decision.activates and approved,
    )


def replay_counterfactual(
    evidence: Sequence[CandidateEvidence],
    profile: DeploymentProfile,
    disabled: DisabledStage,
) -> dict[tuple[str, str], ReplayDecision]:
    """
    Recompute every candidate's decisions with one stage's gate bypassed.

    Online monitoring and rollback act after activation, so disabling them
    leaves these decisions unchanged; their effect shows in recovery outcomes.
    """
    if not evidence:
        raise IncompleteAuditError("No evidence recorded for replay")
    return {item.key: replay_gate(item, profile, disabled) for item in evidence}
