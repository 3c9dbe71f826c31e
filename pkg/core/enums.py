"""
Shared enumerations for capability governance.
"""

from enum import StrEnum


class RiskLevel(StrEnum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _RISK_RANK[self]


_RISK_RANK = {RiskLevel.LOW: 0, RiskLevel.MEDIUM: 1, RiskLevel.HIGH: 2}


class ProfileId(StrEnum):
    SIM = "sim"
    REAL = "real"
    HUMAN = "human"


class TagClass(StrEnum):
    ACTUATOR_ACCESS = "actuator_access"
    TOOL_ACCESS = "tool_access"
    ENVIRONMENT_SCOPE = "environment_scope"
    RESOURCE_CLASS = "resource_class"


class LifecycleState(StrEnum):
    REGISTERED = "registered"
    VALIDATED = "validated"
    SANDBOXED = "sandboxed"
    SHADOWED = "shadowed"
    ACTIVE = "active"
    DEMOTED = "demoted"
    REJECTED = "rejected"
    ROLLED_BACK = "rolled_back"


class TraceContext(StrEnum):
    SANDBOX_CANONICAL = "sandbox_canonical"
    SANDBOX_PERTURBED = "sandbox_perturbed"
    SANDBOX_ADVERSARIAL = "sandbox_adversarial"
    SHADOW = "shadow"
    LIVE = "live"

    @property
    def is_sandbox(self) -> bool:
        return self.value.startswith("sandbox_")


SANDBOX_MODES = (
    TraceContext.SANDBOX_CANONICAL,
    TraceContext.SANDBOX_PERTURBED,
    TraceContext.SANDBOX_ADVERSARIAL,
)


class TaskFamily(StrEnum):
    GRASP = "grasp"
    ALIGN = "align"
    PLACE = "place"
    SEQUENCE = "sequence"


class RegressionCategory(StrEnum):
    RETRY_INSTABILITY = "retry_instability"
    POLICY_DRIFT = "policy_drift"
    TIMEOUT_STALL = "timeout_stall"
    RECOVERY_DEGRADATION = "recovery_degradation"
    LIVE_DIVERGENCE = "live_divergence"


class InterfaceCategory(StrEnum):
    COMPATIBLE = "compatible"
    CONDITIONAL = "conditional"
    INCOMPATIBLE = "incompatible"


class PolicyCategory(StrEnum):
    """The conditional coverage band is reported as review."""

    COMPATIBLE = "compatible"
    REVIEW = "review"
    INCOMPATIBLE = "incompatible"


class BehavioralCategory(StrEnum):
    COMPATIBLE = "compatible"
    SUSPICIOUS = "suspicious"
    INCOMPATIBLE = "incompatible"


class RecoveryCategory(StrEnum):
    COMPATIBLE = "compatible"
    CONDITIONAL = "conditional"
    FRAGILE = "fragile"
    INCOMPATIBLE = "incompatible"


class Recommendation(StrEnum):
    """Aggregated compatibility outcome, declared from least to most permissive."""

    REJECT = "reject"
    REJECT_OR_REVIEW = "reject_or_review"
    REVIEW = "review"
    SANDBOX = "sandbox"
    SANDBOX_OR_REVIEW = "sandbox_or_review"
    SHADOW = "shadow"
    ACTIVATE = "activate"

    @property
    def permissiveness(self) -> int:
        return list(Recommendation).index(self)

    @property
    def admits(self) -> bool:
        """Whether screening lets the candidate continue without approval."""
        return self in (Recommendation.ACTIVATE, Recommendation.SHADOW)

    @property
    def screen_blocked(self) -> bool:
        return not self.admits
