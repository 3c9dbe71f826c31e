"""
Gated activation and activation-mode selection.
"""

from compat.compat_manager import CompatReport
from core.enums import (
    BehavioralCategory,
    InterfaceCategory,
    PolicyCategory,
    Recommendation,
    RecoveryCategory,
    RiskLevel,
)
from core.profiles import DeploymentProfile
from pipeline.reports import ActivationDecision, ActivationMode, SandboxReport, ShadowReport


def shadow_required(compat: CompatReport, profile: DeploymentProfile) -> bool:
    return profile.shadow_mandatory or compat.recommendation != Recommendation.ACTIVATE


def select_mode(
    compat: CompatReport, profile: DeploymentProfile, risk_level: RiskLevel
) -> ActivationMode:
    """First matching rule wins."""
    cats = compat.categories
    if cats.recovery == RecoveryCategory.FRAGILE:
        return ActivationMode.ROLLBACK_COUPLED
    if cats.policy == PolicyCategory.REVIEW or profile.approval_required(risk_level):
        return ActivationMode.APPROVAL_BOUND
    if (
        cats.interface == InterfaceCategory.CONDITIONAL
        or cats.behavioral == BehavioralCategory.SUSPICIOUS
        or cats.recovery == RecoveryCategory.CONDITIONAL
    ):
        return ActivationMode.CONDITIONAL
    if profile.rollback_coupled_activation:
        return ActivationMode.ROLLBACK_COUPLED
    return ActivationMode.FULL


def gate_activation(
    compat: CompatReport,
    sandbox: SandboxReport | None,
    shadow: ShadowReport | None,
    profile: DeploymentProfile,
    risk_level: RiskLevel = RiskLevel.LOW,
) -> ActivationDecision:
    """
    Decide whether a candidate may become active, and in which mode.

    Activation needs a permitting recommendation, a passed sandbox, a passed
    shadow phase (waivable only when the profile does not mandate shadow and
    compat recommends activate) and a composite at or above the profile bar.
    A review recommendation permits activation in approval-bound mode.

    Returns:
        ActivationDecision; governance_failure is set when a stage failed
    """
    reasons: list[str] = []
    if not (compat.recommendation.admits or compat.recommendation == Recommendation.REVIEW):
        reasons.append(f"compat recommendation {compat.recommendation.value}")
    if sandbox is None or not sandbox.passed:
        reasons.append("sandbox not passed")
    if shadow is None:
        if shadow_required(compat, profile):
            reasons.append("shadow required")
    elif not shadow.passed:
        reasons.append("shadow not passed")
    if reasons:
        return ActivationDecision(ActivationMode.DENY, tuple(reasons), governance_failure=True)

    if compat.composite is None or compat.composite < profile.composite_threshold:
        return ActivationDecision(
            ActivationMode.DENY, (f"composite {compat.composite} below threshold",)
        )
    return ActivationDecision(select_mode(compat, profile, risk_level))
