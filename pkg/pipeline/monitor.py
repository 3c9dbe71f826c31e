"""
Online monitoring of the active version and the escalation ladder.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.enums import ProfileId
from core.profiles import DeploymentProfile
from core.telemetry import BehavioralSignature, TraceRecord
from pipeline.reports import MonitorDecision, MonitorValue


class MonitorPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    window: int = Field(default=20, ge=1)
    anomaly_factor: float = 2.0
    anomaly_offset: float = 0.10
    retry_factor: float = 2.0
    retry_offset: float = 0.10
    confirm_windows: int = Field(default=2, ge=1)
    escalation_patience: int = Field(default=3, ge=1)


class EmptyWindowError(ValueError):
    pass


def window_rates(traces: Sequence[TraceRecord]) -> dict[str, float]:
    if not traces:
        raise EmptyWindowError("Cannot monitor an empty telemetry window")
    return {
        "anomaly": float(np.mean([t.anomaly_flags > 0 for t in traces])),
        "violation": float(np.mean([t.policy_hits > 0 for t in traces])),
        "retry": float(np.mean([t.retry_count for t in traces])),
        "unsafe": float(np.mean([t.unsafe_continuation for t in traces])),
        "success": float(np.mean([t.success for t in traces])),
    }


def monitor(
    window: Sequence[TraceRecord],
    baseline: BehavioralSignature,
    profile: DeploymentProfile,
    policy: MonitorPolicy | None = None,
    start: int = 0,
) -> MonitorDecision:
    """
    Judge one telemetry window against the pre-activation baseline.

    Rules, most severe first: rollback on an anomaly surge or on any unsafe
    continuation under the human profile; escalate when the violation rate
    exceeds the profile tolerance; restrict on a retry surge; else continue.
    """
    policy = policy or MonitorPolicy()
    rates = window_rates(window)
    span = (start, start + len(window))

    def decide(value: MonitorValue, trigger: str = "") -> MonitorDecision:
        return MonitorDecision(
            value=value,
            trigger=trigger,
            window=span,
            rates=rates,
            profile_id=profile.profile_id.value,
        )

    if (
        rates["unsafe"] > 0
        and profile.profile_id == ProfileId.HUMAN
        and profile.unsafe_continuation_penalty_weight > 0
    ):
        return decide(MonitorValue.ROLLBACK, "unsafe_continuation")
    if rates["anomaly"] > policy.anomaly_factor * baseline.mu_anom + policy.anomaly_offset:
        return decide(MonitorValue.ROLLBACK, "anomaly_rate")
    if rates["violation"] > profile.violation_tolerance:
        return decide(MonitorValue.ESCALATE, "violation_rate")
    if rates["retry"] > policy.retry_factor * baseline.mu_retry + policy.retry_offset:
        return decide(MonitorValue.RESTRICT, "retry_rate")
    return decide(MonitorValue.CONTINUE)


class LadderVerdict(StrEnum):
    HOLD = "hold"
    # immediate or confirmed rule; always a hard rollback
    ROLLBACK = "rollback"
    # patience exhausted; soft demotion when a fallback binding exists
    LADDER = "ladder"


@dataclass
class EscalationLadder:
    """Turns a stream of window decisions into a rollback verdict."""

    policy: MonitorPolicy = field(default_factory=MonitorPolicy)
    anomaly_streak: int = 0
    alert_streak: int = 0
    first_alert: int | None = None
    decisions: list[MonitorDecision] = field(default_factory=list)

    def observe(self, decision: MonitorDecision) -> LadderVerdict:
        self.decisions.append(decision)
        if decision.value == MonitorValue.CONTINUE:
            self.anomaly_streak = 0
            self.alert_streak = 0
            self.first_alert = None
            return LadderVerdict.HOLD

        if self.first_alert is None:
            self.first_alert = decision.window[0]
        self.alert_streak += 1
        if decision.trigger == "anomaly_rate":
            self.anomaly_streak += 1
        else:
            self.anomaly_streak = 0

        if decision.trigger == "unsafe_continuation":
            return LadderVerdict.ROLLBACK
        if self.anomaly_streak >= self.policy.confirm_windows:
            return LadderVerdict.ROLLBACK
        if self.alert_streak >= self.policy.escalation_patience:
            return LadderVerdict.LADDER
        return LadderVerdict.HOLD
