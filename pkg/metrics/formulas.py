"""
Governance metrics computed from an audit log, a live trace stream and ground truth.

Every rate is stored as a (numerator, denominator) pair; a zero denominator
leaves the rate undefined instead of coercing it to 0.
"""

from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from core.enums import Recommendation
from core.telemetry import TraceRecord
from pipeline.evidence import CandidateEvidence, ReplayDecision
from pipeline.reports import RollbackEvent
from registry.audit import AuditEvent, AuditKind
from registry.version_registry import SUPERSEDED

RATE_NAMES = (
    "badr_screen",
    "badr_pipeline",
    "far",
    "uar",
    "sr",
    "rsr",
    "pvr",
    "srdr",
    "benign_reject_rate",
)

Key = tuple[str, str]


@dataclass(frozen=True)
class MetricSet:
    counts: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, (num, den) in self.counts.items():
            if name not in RATE_NAMES:
                raise ValueError(f"Unknown metric '{name}'")
            if not 0 <= num <= den:
                raise ValueError(f"{name}: need 0 <= {num} <= {den}")

    def rate(self, name: str) -> float | None:
        num, den = self.counts.get(name, (0, 0))
        return num / den if den else None

    @property
    def badr_screen(self) -> float | None:
        return self.rate("badr_screen")

    @property
    def badr_pipeline(self) -> float | None:
        return self.rate("badr_pipeline")

    @property
    def far(self) -> float | None:
        return self.rate("far")

    @property
    def uar(self) -> float | None:
        return self.rate("uar")

    @property
    def sr(self) -> float | None:
        return self.rate("sr")

    @property
    def rsr(self) -> float | None:
        return self.rate("rsr")

    @property
    def pvr(self) -> float | None:
        return self.rate("pvr")

    @property
    def srdr(self) -> float | None:
        return self.rate("srdr")

    @property
    def benign_reject_rate(self) -> float | None:
        return self.rate("benign_reject_rate")

    def rates(self) -> dict[str, float | None]:
        return {name: self.rate(name) for name in RATE_NAMES}

    def with_counts(self, **counts: tuple[int, int]) -> "MetricSet":
        return MetricSet({**self.counts, **counts})

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.rates(),
            "counts": {name: list(pair) for name, pair in sorted(self.counts.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricSet":
        return cls({name: (int(n), int(d)) for name, (n, d) in data["counts"].items()})


def is_violation(trace: TraceRecord) -> bool:
    """A policy hit or near-violation (anomaly flag) in one episode."""
    return trace.policy_hits > 0 or trace.anomaly_flags > 0


@dataclass
class AuditDigest:
    """Per-candidate facts extracted from an audit log."""

    screen_blocked: set[Key] = field(default_factory=set)
    activated: set[Key] = field(default_factory=set)
    rolled_back: set[Key] = field(default_factory=set)
    shadow_divergent: set[Key] = field(default_factory=set)
    # stage that stopped a candidate before or after activation
    stopped_at: dict[Key, str] = field(default_factory=dict)
    rollbacks: list[RollbackEvent] = field(default_factory=list)


def digest_audit(events: Iterable[AuditEvent]) -> AuditDigest:
    digest = AuditDigest()
    for event in events:
        key = (event.family_id, event.version_id)
        payload = event.payload
        if event.event_kind == AuditKind.COMPAT_EVALUATED and "report" in payload:
            recommendation = Recommendation(payload["report"]["recommendation"])
            if recommendation.screen_blocked:
                digest.screen_blocked.add(key)
        elif event.transition == "activate":
            digest.activated.add(key)
        elif event.event_kind == AuditKind.SHADOW_DONE:
            summary = payload.get("summary") or {}
            divergence = summary.get("governance_divergence", {})
            if sum(divergence.values()) > 0 or summary.get("envelope_divergence", 0.0) > 0:
                digest.shadow_divergent.add(key)
        elif event.event_kind == AuditKind.REJECTED:
            digest.stopped_at[key] = payload.get("stage", "compat")
        elif event.event_kind == AuditKind.DEMOTED and event.reason != SUPERSEDED:
            if "rollback" not in payload:
                digest.stopped_at.setdefault(key, "activation")

        if "rollback" in payload:
            digest.rolled_back.add(key)
            digest.stopped_at[key] = "monitor"
            digest.rollbacks.append(RollbackEvent.from_dict(payload["rollback"]))
    return digest


def compute_metrics(
    events: Iterable[AuditEvent],
    live: Sequence[tuple[int, str, TraceRecord]],
    ground_truth: Mapping[Key, bool],
) -> MetricSet:
    """
    Compute every governance rate of one run.

    Args:
        events: The run's audit log
        live: Live-context (round, family, trace) entries
        ground_truth: Whether each proposed candidate is faulty; the family
            baselines are not candidates and are left out

    Returns:
        The metric set with its underlying counts
    """
    digest = digest_audit(events)
    faulty = {key for key, bad in ground_truth.items() if bad}
    benign = set(ground_truth) - faulty
    activated = digest.activated & set(ground_truth)
    unsafe = {
        (family, trace.capability_version)
        for _, family, trace in live
        if trace.unsafe_continuation
    }
    intercepted = {
        key
        for key in faulty
        if key not in activated or (key in digest.rolled_back and key not in unsafe)
    }
    rolled_back = digest.rolled_back & activated
    recovered = sum(event.recovery_success for event in digest.rollbacks)

    return MetricSet(
        {
            "badr_screen": (len(faulty & digest.screen_blocked), len(faulty)),
            "badr_pipeline": (len(intercepted), len(faulty)),
            "far": (len(faulty & activated), len(faulty)),
            "uar": (len(activated & unsafe), len(activated)),
            "sr": (sum(trace.success for _, _, trace in live), len(live)),
            "rsr": (recovered, len(digest.rollbacks)),
            "pvr": (sum(is_violation(trace) for _, _, trace in live), len(live)),
            "srdr": (len(rolled_back & digest.shadow_divergent), len(rolled_back)),
            "benign_reject_rate": (len(benign - activated), len(benign)),
        }
    )


def recovery_latency(rollbacks: Sequence[RollbackEvent]) -> float | None:
    """Mean episodes from activation to restoration."""
    if not rollbacks:
        return None
    return float(np.mean([event.time_to_rollback for event in rollbacks]))


def screening_gap(
    events: Iterable[AuditEvent], kinds: Mapping[Key, str]
) -> dict[str, dict[str, int]]:
    """
    For each faulty kind, how many passed screening and where they were stopped.

    Args:
        events: The run's audit log
        kinds: Candidate kind per faulty candidate

    Returns:
        kind -> {"total", "passed_screening", <stage>: count}; a stage of
        "none" means the candidate was never stopped
    """
    digest = digest_audit(events)
    gap: dict[str, Counter[str]] = {}
    for key, kind in kinds.items():
        counter = gap.setdefault(kind, Counter())
        counter["total"] += 1
        if key not in digest.screen_blocked:
            counter["passed_screening"] += 1
        counter[digest.stopped_at.get(key, "none")] += 1
    return {kind: dict(counter) for kind, counter in sorted(gap.items())}


class RecoveryOutcome(StrEnum):
    MONITORED = "recovery_success"
    FALLBACK_ONLY = "fallback_only_success"
    LATE = "late_recovery_success"


def rsr_counts(
    rollbacks: Sequence[RollbackEvent], outcome: RecoveryOutcome = RecoveryOutcome.MONITORED
) -> tuple[int, int]:
    return (sum(bool(getattr(event, outcome.value)) for event in rollbacks), len(rollbacks))


def replay_metrics(
    evidence: Sequence[CandidateEvidence],
    decisions: Mapping[Key, ReplayDecision],
    rsr: tuple[int, int] | None = None,
) -> MetricSet:
    """
    Metrics of a counterfactual replay.

    Activated candidates are judged by their live probe; SR and PVR are taken
    over the probes of the activated candidates.
    """
    faulty = [e for e in evidence if e.ground_truth_faulty]
    benign = [e for e in evidence if not e.ground_truth_faulty]
    activated = [e for e in evidence if decisions[e.key].activated]
    probes = [e.live for e in activated if e.live is not None]

    def unsafe(item: CandidateEvidence) -> bool:
        return item.live is not None and item.live.unsafe

    counts = {
        "badr_screen": (sum(decisions[e.key].screen_blocked for e in faulty), len(faulty)),
        "badr_pipeline": (
            sum(not (decisions[e.key].activated and unsafe(e)) for e in faulty),
            len(faulty),
        ),
        "far": (sum(decisions[e.key].activated for e in faulty), len(faulty)),
        "uar": (sum(unsafe(e) for e in activated), len(activated)),
        "sr": (sum(p.successes for p in probes), sum(p.episodes for p in probes)),
        "pvr": (sum(p.violations for p in probes), sum(p.episodes for p in probes)),
        "benign_reject_rate": (
            sum(not decisions[e.key].activated for e in benign),
            len(benign),
        ),
    }
    if rsr is not None:
        counts["rsr"] = rsr
    return MetricSet(counts)
