"""
Policy compatibility: how much of the declared authority the active policy set constrains.
"""

from compat.checkers.base import StaticChecker
from core.enums import PolicyCategory, RiskLevel
from core.manifest import CapabilityManifest, ExecutionMode
from core.policy import PolicySet
from core.profiles import DeploymentProfile


class PolicyChecker(StaticChecker):
    def __init__(self, weight: float = 0.25):
        super().__init__(weight)

    @property
    def name(self) -> str:
        return "policy"

    @property
    def description(self) -> str:
        return "Fraction of declared execution modes covered by the active policy set"

    def uncovered_modes(
        self, new: CapabilityManifest, policy_set: PolicySet
    ) -> list[ExecutionMode]:
        return [m for m in new.permission_profile if not policy_set.covers(m)]

    def check(
        self,
        new: CapabilityManifest,
        policy_set: PolicySet,
        profile: DeploymentProfile,
    ) -> tuple[float, PolicyCategory]:
        """
        Compute policy coverage and its category.

        An uncovered high-risk mode, or a profile outside the manifest's
        environment scope, is incompatible whatever the coverage.
        """
        if not policy_set.rules:
            raise ValueError(f"Policy set '{policy_set.name}' has no rules")
        self.calls += 1

        declared = new.permission_profile
        uncovered = self.uncovered_modes(new, policy_set)
        score = (len(declared) - len(uncovered)) / len(declared) if declared else 0.0

        category = self.categorize(score, profile)
        if profile.profile_id not in new.environment_scope:
            return score, PolicyCategory.INCOMPATIBLE
        if any(m.risk == RiskLevel.HIGH for m in uncovered):
            return score, PolicyCategory.INCOMPATIBLE
        if category == PolicyCategory.COMPATIBLE and any(
            profile.approval_required(m.risk) for m in uncovered
        ):
            return score, PolicyCategory.REVIEW
        return score, category

    def categorize(self, score: float, profile: DeploymentProfile) -> PolicyCategory:
        theta = profile.dim_thresholds.policy
        if score >= theta:
            return PolicyCategory.COMPATIBLE
        if score >= theta - profile.conditional_margin:
            return PolicyCategory.REVIEW
        return PolicyCategory.INCOMPATIBLE

    def is_critical_failure(self, category: PolicyCategory) -> bool:  # type: ignore[override]
        return category == PolicyCategory.INCOMPATIBLE
