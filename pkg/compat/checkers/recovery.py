"""
Recovery compatibility: readiness of rollback, fallback, abort and detection.
"""

from compat.checkers.base import DynamicChecker
from core.enums import RecoveryCategory
from core.manifest import CapabilityManifest, RecoveryProfile
from core.profiles import DeploymentProfile

READINESS_WEIGHTS = {
    "rollback_hook": 0.4,
    "fallback_binding": 0.2,
    "safe_abort_hook": 0.2,
    "failure_signal_observable": 0.2,
}


def recovery_readiness(profile: RecoveryProfile) -> float:
    """Weighted mean of per-facility readiness."""
    score = sum(w * profile.readiness(f) for f, w in READINESS_WEIGHTS.items())
    return min(1.0, max(0.0, score))


class RecoveryChecker(DynamicChecker):
    def __init__(self, weight: float = 0.23):
        super().__init__(weight)

    @property
    def name(self) -> str:
        return "recovery"

    @property
    def description(self) -> str:
        return "Recovery-readiness of the new version"

    def check(
        self,
        old: CapabilityManifest,
        new: CapabilityManifest,
        profile: DeploymentProfile,
    ) -> tuple[float, float, RecoveryCategory]:
        """
        Returns:
            Tuple of (kappa_r, rho, category); kappa_r equals rho
        """
        self.calls += 1
        rho = recovery_readiness(new.recovery_profile)
        return rho, rho, self.categorize(rho, profile)

    def categorize(self, score: float, profile: DeploymentProfile) -> RecoveryCategory:
        theta = profile.dim_thresholds.recovery
        margin = profile.conditional_margin
        if score < theta:
            return RecoveryCategory.INCOMPATIBLE
        if score < theta + margin / 2:
            return RecoveryCategory.FRAGILE
        if score < theta + margin:
            return RecoveryCategory.CONDITIONAL
        return RecoveryCategory.COMPATIBLE
