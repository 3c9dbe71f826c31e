"""
Deployment profiles: sim, real and human contexts with their own admissibility.
"""

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.enums import ProfileId, RiskLevel

THRESHOLD_CAP = 0.995


class DimThresholds(BaseModel):
    model_config = ConfigDict(frozen=True)

    interface: float
    policy: float
    behavioral: float
    recovery: float

    @field_validator("interface", "policy", "behavioral", "recovery")
    @classmethod
    def validate_threshold(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError(f"Thresholds must lie in (0, 1], got {v}")
        return v

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.interface, self.policy, self.behavioral, self.recovery)

    def scaled(self, factor: float, cap: float = THRESHOLD_CAP) -> "DimThresholds":
        i, p, b, r = (min(cap, t * factor) for t in self.as_tuple())
        return DimThresholds(interface=i, policy=p, behavioral=b, recovery=r)


class DeploymentProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    profile_id: ProfileId
    dim_thresholds: DimThresholds
    composite_threshold: float
    conditional_margin: float = 0.05
    approval_required_above_risk: RiskLevel = RiskLevel.HIGH
    anomaly_tolerance: float = 0.15
    violation_tolerance: float = 0.25
    shadow_divergence_limit: int = 2
    unsafe_continuation_penalty_weight: float = 0.0
    shadow_mandatory: bool = True
    rollback_coupled_activation: bool = False

    @model_validator(mode="after")
    def validate_composite(self) -> "DeploymentProfile":
        if not min(self.dim_thresholds.as_tuple()) <= self.composite_threshold <= 1.0:
            raise ValueError(
                "composite_threshold must lie within [min dim threshold, 1]"
            )
        if self.conditional_margin < 0:
            raise ValueError("conditional_margin must be nonnegative")
        return self

    def approval_required(self, risk: RiskLevel) -> bool:
        return risk.rank > self.approval_required_above_risk.rank

    def scaled(self, factor: float, cap: float = THRESHOLD_CAP) -> "DeploymentProfile":
        """Uniformly scale the admission thresholds, clamping at the cap."""
        return self.model_copy(
            update={
                "dim_thresholds": self.dim_thresholds.scaled(factor, cap),
                "composite_threshold": min(cap, self.composite_threshold * factor),
            }
        )


def default_profiles() -> dict[ProfileId, DeploymentProfile]:
    """Shipped profiles, monotonically stricter from sim to human."""
    return {
        ProfileId.SIM: DeploymentProfile(
            profile_id=ProfileId.SIM,
            dim_thresholds=DimThresholds(
                interface=0.95, policy=0.90, behavioral=0.85, recovery=0.80
            ),
            composite_threshold=0.90,
            approval_required_above_risk=RiskLevel.HIGH,
            anomaly_tolerance=0.15,
            violation_tolerance=0.25,
            shadow_divergence_limit=2,
            unsafe_continuation_penalty_weight=0.0,
            shadow_mandatory=False,
            rollback_coupled_activation=False,
        ),
        ProfileId.REAL: DeploymentProfile(
            profile_id=ProfileId.REAL,
            dim_thresholds=DimThresholds(
                interface=0.96, policy=0.92, behavioral=0.87, recovery=0.84
            ),
            composite_threshold=0.92,
            approval_required_above_risk=RiskLevel.MEDIUM,
            anomaly_tolerance=0.12,
            violation_tolerance=0.22,
            shadow_divergence_limit=1,
            unsafe_continuation_penalty_weight=0.5,
            shadow_mandatory=True,
            rollback_coupled_activation=True,
        ),
        ProfileId.HUMAN: DeploymentProfile(
            profile_id=ProfileId.HUMAN,
            dim_thresholds=DimThresholds(
                interface=0.97, policy=0.94, behavioral=0.90, recovery=0.88
            ),
            composite_threshold=0.94,
            approval_required_above_risk=RiskLevel.LOW,
            anomaly_tolerance=0.10,
            violation_tolerance=0.20,
            shadow_divergence_limit=0,
            unsafe_continuation_penalty_weight=1.0,
            shadow_mandatory=True,
            rollback_coupled_activation=True,
        ),
    }


def monotonicity_violations(profiles: dict[ProfileId, DeploymentProfile]) -> list[str]:
    """List every dimension where a stricter profile has a lower threshold."""
    order = [ProfileId.SIM, ProfileId.REAL, ProfileId.HUMAN]
    names = ("interface", "policy", "behavioral", "recovery")
    violations = []
    for looser, stricter in zip(order, order[1:], strict=False):
        if looser not in profiles or stricter not in profiles:
            continue
        lo = profiles[looser].dim_thresholds.as_tuple()
        hi = profiles[stricter].dim_thresholds.as_tuple()
        for name, a, b in zip(names, lo, hi, strict=True):
            if a > b:
                violations.append(f"{name}: {looser} {a} > {stricter} {b}")
    return violations
