"""
Upgrade strategies (static, naive, governed) and post-activation rollback trials.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

from compat.compat_manager import CompatManager
from core.manifest import CapabilityManifest
from core.policy import PolicySet
from core.profiles import DeploymentProfile
from envsim.drift import DriftScenario
from envsim.environment import CapabilityEnvironment
from envsim.generator import (
    CandidateKind,
    CandidateSpec,
    GeneratorCalibration,
    RollbackTrial,
    parent_manifest,
    parent_spec,
)
from envsim.seeding import derive_rng
from pipeline.evidence import CandidateEvidence, collect_evidence
from pipeline.monitor import MonitorPolicy
from pipeline.reports import RollbackEvent
from pipeline.upgrade_manager import (
    ApprovalConfig,
    CandidateOutcome,
    PipelineBudgets,
    StageTimer,
    UpgradeManager,
)


class Strategy(StrEnum):
    STATIC = "static"
    NAIVE = "naive"
    GOVERNED = "governed"


@dataclass(frozen=True)
class RoundOutcome:
    round: int
    live_episodes: int
    successes: int
    violations: int
    # cumulative up to and including this round
    activated: int
    unsafe_activated: int

    @property
    def sr(self) -> float | None:
        return self.successes / self.live_episodes if self.live_episodes else None

    @property
    def pvr(self) -> float | None:
        return self.violations / self.live_episodes if self.live_episodes else None

    @property
    def uar(self) -> float | None:
        return self.unsafe_activated / self.activated if self.activated else None


@dataclass(frozen=True)
class FailureClasses:
    """Governance-layer failures of one run."""

    bad_admission: int = 0
    missed_regression: int = 0
    failed_recovery: int = 0


@dataclass
class StrategyRun:
    strategy: Strategy
    seed: int
    manager: UpgradeManager
    specs: dict[tuple[str, str], CandidateSpec] = field(default_factory=dict)
    rounds: list[RoundOutcome] = field(default_factory=list)
    outcomes: list[CandidateOutcome] = field(default_factory=list)
    evidence: list[CandidateEvidence] = field(default_factory=list)
    activated: set[tuple[str, str]] = field(default_factory=set)
    unsafe: set[tuple[str, str]] = field(default_factory=set)

    @property
    def rollbacks(self) -> list[RollbackEvent]:
        return self.manager.rollbacks

    @property
    def failures(self) -> FailureClasses:
        return FailureClasses(
            bad_admission=sum(self.specs[key].ground_truth_faulty for key in self.activated),
            missed_regression=len(self.activated & self.unsafe),
            failed_recovery=sum(not event.recovery_success for event in self.rollbacks),
        )


def proposal_order(pool: Sequence[CandidateSpec], seed: int, family: str) -> list[CandidateSpec]:
    """Seeded permutation of a family's pool; one proposal per round."""
    order = derive_rng(seed, "proposals", family).permutation(len(pool))
    return [pool[int(i)] for i in order]


def run_strategy(
    strategy: Strategy,
    pools: dict[str, list[CandidateSpec]],
    profile: DeploymentProfile,
    rounds: int,
    seed: int,
    policy_sets: dict[str, PolicySet],
    compat: CompatManager | None = None,
    budgets: PipelineBudgets | None = None,
    monitor_policy: MonitorPolicy | None = None,
    approval: ApprovalConfig | None = None,
    calibration: GeneratorCalibration | None = None,
    record_evidence: bool = False,
    timer: StageTimer | None = None,
) -> StrategyRun:
    """
    Run one strategy over the given pools for a number of upgrade rounds.

    Every round proposes the next candidate of each family's seeded order, then
    serves one held-out live batch per family. Static never upgrades. Naive
    force-activates every proposal, each bypassed transition still audited.
    Governed runs the full pipeline with online monitoring and rollback.

    Args:
        strategy: Upgrade strategy
        pools: Candidate pool per family
        profile: Deployment profile
        rounds: Number of upgrade rounds
        seed: Experiment seed; every random stream derives from it
        policy_sets: Policy rule set per family
        record_evidence: Record replay evidence for every governed candidate

    Returns:
        The run with per-round outcomes and the manager that produced them
    """
    cal = calibration or GeneratorCalibration()
    manager = UpgradeManager(
        profile,
        policy_sets,
        seed,
        compat=compat,
        budgets=budgets or PipelineBudgets(pretrace_episodes=cal.pretrace_episodes),
        monitor_policy=monitor_policy,
        approval=approval,
        timer=timer,
    )
    run = StrategyRun(strategy=strategy, seed=seed, manager=manager)
    families = sorted(pools)
    parents = {family: parent_manifest(family) for family in families}
    orders = {family: proposal_order(pools[family], seed, family) for family in families}
    for family in families:
        manager.bootstrap(parent_spec(family, cal), parents[family])

    for round_index in range(1, rounds + 1):
        manager.set_round(round_index)
        if strategy != Strategy.STATIC:
            for family in families:
                order = orders[family]
                spec = order[(round_index - 1) % len(order)]
                if (family, spec.version_id) in manager.specs:
                    # pool exhausted
                    continue
                _propose(run, spec, parents[family], record_evidence)

        episodes = successes = violations = 0
        for family in families:
            batch = manager.run_live_batch(
                family,
                manager.budgets.live_episodes,
                round_index,
                monitored=strategy == Strategy.GOVERNED,
            )
            episodes += len(batch)
            successes += sum(t.success for t in batch)
            violations += sum(t.policy_hits > 0 or t.anomaly_flags > 0 for t in batch)

        run.unsafe.update(
            (family, trace.capability_version)
            for _, family, trace in manager.live_log
            if trace.unsafe_continuation
        )
        run.rounds.append(
            RoundOutcome(
                round=round_index,
                live_episodes=episodes,
                successes=successes,
                violations=violations,
                activated=len(run.activated),
                unsafe_activated=len(run.activated & run.unsafe),
            )
        )
    return run


def _propose(
    run: StrategyRun,
    spec: CandidateSpec,
    parent: CapabilityManifest,
    record_evidence: bool,
) -> None:
    manager = run.manager
    key = (spec.family_id, spec.version_id)
    run.specs[key] = spec

    if run.strategy == Strategy.NAIVE:
        record = manager.register_candidate(spec, parent)
        manager.force_activate(record, "naive")
        run.activated.add(key)
        return

    incumbent = manager.registry.active_record(spec.family_id)
    outcome = manager.process_candidate(spec, parent)
    run.outcomes.append(outcome)
    if outcome.activated:
        run.activated.add(key)
    if record_evidence and incumbent is not None:
        run.evidence.append(collect_evidence(manager, outcome, incumbent))


@dataclass(frozen=True)
class TrialOutcome:
    drift_kind: str
    family_id: str
    version_id: str
    degraded: bool
    triggered: bool
    windows: int
    event: RollbackEvent | None = None


def run_rollback_trial(
    trial: RollbackTrial,
    scenario: DriftScenario | None,
    profile: DeploymentProfile,
    seed: int,
    policy_sets: dict[str, PolicySet],
    max_windows: int = 60,
    monitor_policy: MonitorPolicy | None = None,
    timer: StageTimer | None = None,
) -> TrialOutcome:
    """
    Activate a trial candidate over its family parent, drift it and monitor until rollback.

    A scenario of None is the zero-drift control. The trial stops at the first
    rollback or after max_windows monitoring windows.
    """
    family = trial.family_id
    manager = UpgradeManager(
        profile,
        policy_sets,
        seed,
        monitor_policy=monitor_policy,
        env=CapabilityEnvironment(),
        timer=timer,
    )
    parent = parent_manifest(family)
    manager.bootstrap(parent_spec(family), parent)
    record = manager.register_candidate(trial.candidate, parent, provenance="rollback_trial")
    manager.force_activate(record, "rollback_trial")
    if scenario is not None:
        manager.env.apply_drift(family, record.version_id, scenario)

    drift_name = scenario.kind.value if scenario is not None else "none"
    degraded = trial.candidate.kind == CandidateKind.RECOVERY_DEGRADATION
    for index in range(max_windows):
        manager.run_live_batch(
            family,
            manager.monitor_policy.window,
            "trial",
            drift_name,
            trial.candidate.label,
            index,
        )
        if manager.rollbacks:
            return TrialOutcome(
                drift_kind=drift_name,
                family_id=family,
                version_id=record.version_id,
                degraded=degraded,
                triggered=True,
                windows=index + 1,
                event=manager.rollbacks[0],
            )
    return TrialOutcome(
        drift_kind=drift_name,
        family_id=family,
        version_id=record.version_id,
        degraded=degraded,
        triggered=False,
        windows=max_windows,
    )
