"""
Stage reports produced by the governed upgrade pipeline.
"""

from dataclasses import asdict, dataclass, field
from enum import StrEnum
from typing import Any

from core.enums import RegressionCategory, TraceContext
from core.telemetry import BehavioralSignature


def category_counts(counts: dict[RegressionCategory, int] | None = None) -> dict[RegressionCategory, int]:
    """A count for every regression category, zero-filled."""
    base = dict.fromkeys(RegressionCategory, 0)
    base.update(counts or {})
    return base


@dataclass(frozen=True)
class SandboxReport:
    # m_succ, m_viol, m_anom, m_retry, m_recover over all sandbox modes
    metrics: dict[str, float]
    signatures: dict[TraceContext, BehavioralSignature]
    signal_counts: dict[RegressionCategory, int]
    passed: bool
    failures: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "metrics": self.metrics,
            "signatures": {ctx.value: sig.to_dict() for ctx, sig in self.signatures.items()},
            "signal_counts": {c.value: n for c, n in self.signal_counts.items()},
            "pass": self.passed,
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SandboxReport":
        return cls(
            metrics=dict(data["metrics"]),
            signatures={
                TraceContext(ctx): BehavioralSignature.from_dict(sig)
                for ctx, sig in data["signatures"].items()
            },
            signal_counts={RegressionCategory(c): n for c, n in data["signal_counts"].items()},
            passed=data["pass"],
            failures=tuple(data.get("failures", ())),
        )


@dataclass(frozen=True)
class ShadowReport:
    divergence_series: list[float]
    mean_divergence: float
    governance_divergence: dict[RegressionCategory, int]
    # fraction of episodes where the candidate leaves the active retry/duration envelope
    envelope_divergence: float
    passed: bool
    failures: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if any(d < 0 for d in self.divergence_series):
            raise ValueError("Shadow divergence values must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "divergence_series": self.divergence_series,
            "mean_divergence": self.mean_divergence,
            "governance_divergence": {
                c.value: n for c, n in self.governance_divergence.items()
            },
            "envelope_divergence": self.envelope_divergence,
            "pass": self.passed,
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ShadowReport":
        return cls(
            divergence_series=list(data["divergence_series"]),
            mean_divergence=data["mean_divergence"],
            governance_divergence={
                RegressionCategory(c): n for c, n in data["governance_divergence"].items()
            },
            envelope_divergence=data["envelope_divergence"],
            passed=data["pass"],
            failures=tuple(data.get("failures", ())),
        )


class MonitorValue(StrEnum):
    """Monitor outcomes, declared from least to most severe."""

    CONTINUE = "continue"
    RESTRICT = "restrict"
    ESCALATE = "escalate"
    ROLLBACK = "rollback"

    @property
    def severity(self) -> int:
        return list(MonitorValue).index(self)


@dataclass(frozen=True)
class MonitorDecision:
    value: MonitorValue
    trigger: str
    # episode range [start, end) inspected
    window: tuple[int, int]
    rates: dict[str, float] = field(default_factory=dict)
    profile_id: str = ""

    def __post_init__(self) -> None:
        if self.value == MonitorValue.ROLLBACK and not self.trigger:
            raise ValueError("A rollback decision must name its trigger")

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value.value,
            "trigger": self.trigger,
            "window": list(self.window),
            "rates": self.rates,
            "profile_id": self.profile_id,
        }


@dataclass(frozen=True)
class RollbackEvent:
    candidate_version: str
    predecessor_version: str | None
    trigger_type: str
    time_to_rollback: int
    post_rollback_safe: bool
    recovery_success: bool
    soft: bool = False
    recovery_latency: int = 0
    # outcomes a stage-disabled replay substitutes for recovery_success
    fallback_only_success: bool = False
    late_recovery_success: bool = False

    def __post_init__(self) -> None:
        if self.recovery_success and not self.post_rollback_safe:
            raise ValueError("A successful recovery must leave the family in a safe state")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RollbackEvent":
        return cls(**data)


class ActivationMode(StrEnum):
    FULL = "activate_full"
    CONDITIONAL = "activate_conditional"
    APPROVAL_BOUND = "activate_approval_bound"
    ROLLBACK_COUPLED = "activate_rollback_coupled"
    DENY = "deny"

    @property
    def registry_mode(self) -> str:
        """Short mode name stored in the activation history."""
        return self.value.removeprefix("activate_")


@dataclass(frozen=True)
class ActivationDecision:
    mode: ActivationMode
    reasons: tuple[str, ...] = ()
    # deny caused by a failed governance stage rather than by approval or composite
    governance_failure: bool = False

    @property
    def activates(self) -> bool:
        return self.mode != ActivationMode.DENY

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "reasons": list(self.reasons),
            "governance_failure": self.governance_failure,
        }
