"""
Compatibility manager: runs the four checkers, aggregates their categories and
computes the weighted composite score.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from compat.checkers.behavioral import BehavioralChecker
from compat.checkers.interface import InterfaceChecker
from compat.checkers.policy import PolicyChecker
from compat.checkers.recovery import RecoveryChecker
from core.enums import (
    BehavioralCategory,
    InterfaceCategory,
    PolicyCategory,
    Recommendation,
    RecoveryCategory,
)
from core.manifest import CapabilityManifest
from core.policy import PolicySet
from core.profiles import DeploymentProfile
from core.telemetry import BehavioralSignature

DEFAULT_WEIGHTS = {
    "interface": 0.22,
    "policy": 0.25,
    "behavioral": 0.30,
    "recovery": 0.23,
}

DIMENSIONS = ("interface", "policy", "behavioral", "recovery")


@dataclass(frozen=True)
class BehavioralEvidence:
    """Signatures of the incumbent and the candidate used to estimate kappa_b."""

    old: BehavioralSignature
    new: BehavioralSignature
    source: str = "pre_traces"


@dataclass(frozen=True)
class CompatCategories:
    interface: InterfaceCategory | None = None
    policy: PolicyCategory | None = None
    behavioral: BehavioralCategory | None = None
    recovery: RecoveryCategory | None = None

    def to_dict(self) -> dict[str, str | None]:
        return {d: (c.value if (c := getattr(self, d)) else None) for d in DIMENSIONS}

    @classmethod
    def from_dict(cls, data: Mapping[str, str | None]) -> "CompatCategories":
        def parse(enum: Any, key: str) -> Any:
            value = data.get(key)
            return enum(value) if value else None

        return cls(
            interface=parse(InterfaceCategory, "interface"),
            policy=parse(PolicyCategory, "policy"),
            behavioral=parse(BehavioralCategory, "behavioral"),
            recovery=parse(RecoveryCategory, "recovery"),
        )


@dataclass(frozen=True)
class CompatReport:
    kappa_i: float
    kappa_p: float | None
    kappa_b: float | None
    kappa_r: float | None
    categories: CompatCategories
    composite: float | None
    recommendation: Recommendation
    profile_id: str
    rho: float | None = None
    evidence_source: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def kappas(self) -> dict[str, float | None]:
        return {
            "interface": self.kappa_i,
            "policy": self.kappa_p,
            "behavioral": self.kappa_b,
            "recovery": self.kappa_r,
        }

    @property
    def decision(self) -> str:
        """Screening outcome as reported in the per-candidate score table."""
        return "accept" if self.recommendation.admits else "reject"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kappa": self.kappas,
            "categories": self.categories.to_dict(),
            "composite": self.composite,
            "recommendation": self.recommendation.value,
            "profile_id": self.profile_id,
            "rho": self.rho,
            "evidence_source": self.evidence_source,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CompatReport":
        kappa = data["kappa"]
        return cls(
            kappa_i=kappa["interface"],
            kappa_p=kappa["policy"],
            kappa_b=kappa["behavioral"],
            kappa_r=kappa["recovery"],
            categories=CompatCategories.from_dict(data["categories"]),
            composite=data["composite"],
            recommendation=Recommendation(data["recommendation"]),
            profile_id=data["profile_id"],
            rho=data.get("rho"),
            evidence_source=data.get("evidence_source"),
            notes=list(data.get("notes", [])),
        )


def aggregate(categories: CompatCategories) -> Recommendation:
    """Map the four dimension categories to a recommendation; first match wins."""
    if None in (
        categories.interface,
        categories.policy,
        categories.behavioral,
        categories.recovery,
    ):
        raise ValueError("Aggregation needs all four dimension categories")

    if categories.interface == InterfaceCategory.INCOMPATIBLE:
        return Recommendation.REJECT
    if categories.policy == PolicyCategory.INCOMPATIBLE:
        return Recommendation.REJECT
    if categories.policy == PolicyCategory.REVIEW:
        return Recommendation.REVIEW
    if categories.behavioral == BehavioralCategory.INCOMPATIBLE:
        return Recommendation.SANDBOX
    if categories.recovery == RecoveryCategory.INCOMPATIBLE:
        return Recommendation.SANDBOX_OR_REVIEW
    if (
        categories.behavioral == BehavioralCategory.SUSPICIOUS
        or categories.recovery == RecoveryCategory.FRAGILE
    ):
        return Recommendation.SHADOW
    return Recommendation.ACTIVATE


class CompatManager:
    """Manages the compatibility checkers and the composite score."""

    def __init__(
        self,
        weights: Mapping[str, float] | None = None,
        platform: Mapping[str, str] | None = None,
    ):
        # Score weights (must sum to 1.0)
        self.score_weights = dict(DEFAULT_WEIGHTS)
        if weights is not None:
            self.update_score_weights(dict(weights))

        self.interface = InterfaceChecker(self.score_weights["interface"], platform)
        self.policy = PolicyChecker(self.score_weights["policy"])
        self.behavioral = BehavioralChecker(self.score_weights["behavioral"])
        self.recovery = RecoveryChecker(self.score_weights["recovery"])

    def update_score_weights(self, new_weights: dict[str, float]) -> None:
        """Update scoring weights (must sum to 1.0)."""
        merged = {**self.score_weights, **new_weights}
        if set(merged) != set(DIMENSIONS):
            raise ValueError(f"Unknown compatibility dimensions: {sorted(set(merged) - set(DIMENSIONS))}")
        if abs(sum(merged.values()) - 1.0) > 0.001:
            raise ValueError("Score weights must sum to 1.0")
        self.score_weights = merged

    def calculate_composite(self, kappas: Mapping[str, float | None]) -> float | None:
        """Weighted composite; None if a static dimension was never evaluated."""
        if kappas.get("interface") is None or kappas.get("policy") is None:
            return None
        if kappas.get("recovery") is None:
            return None
        present = {d: k for d, k in kappas.items() if k is not None}
        total_weight = sum(self.score_weights[d] for d in present)
        score = sum(self.score_weights[d] * k for d, k in present.items()) / total_weight
        return min(1.0, max(0.0, score))

    def evaluate(
        self,
        old: CapabilityManifest,
        new: CapabilityManifest,
        policy_set: PolicySet,
        profile: DeploymentProfile,
        dynamic_evidence: BehavioralEvidence | None = None,
        fail_fast: bool = True,
    ) -> CompatReport:
        """
        Evaluate a candidate against the incumbent.

        Interface is checked first and policy second; with fail_fast an
        incompatible outcome on either returns immediately without running the
        remaining checkers. With fail_fast=False all four run (diagnostic
        scoring) and the recommendation is unchanged.

        Args:
            old: Manifest of the active version
            new: Manifest of the candidate
            policy_set: Active policy rules of the family
            profile: Deployment profile supplying thresholds
            dynamic_evidence: Signatures for the behavioral dimension
            fail_fast: Stop at the first static incompatibility

        Returns:
            CompatReport
        """
        kappa_i, cat_i = self.interface.check(old, new, profile)
        early: Recommendation | None = None
        if self.interface.is_critical_failure(cat_i):
            early = Recommendation.REJECT
            if fail_fast:
                return CompatReport(
                    kappa_i=kappa_i,
                    kappa_p=None,
                    kappa_b=None,
                    kappa_r=None,
                    categories=CompatCategories(interface=cat_i),
                    composite=None,
                    recommendation=early,
                    profile_id=profile.profile_id.value,
                    notes=["interface incompatible"],
                )

        kappa_p, cat_p = self.policy.check(new, policy_set, profile)
        if early is None and self.policy.is_critical_failure(cat_p):
            early = Recommendation.REJECT_OR_REVIEW
            if fail_fast:
                return CompatReport(
                    kappa_i=kappa_i,
                    kappa_p=kappa_p,
                    kappa_b=None,
                    kappa_r=None,
                    categories=CompatCategories(interface=cat_i, policy=cat_p),
                    composite=None,
                    recommendation=early,
                    profile_id=profile.profile_id.value,
                    notes=["policy incompatible"],
                )

        notes: list[str] = []
        kappa_b: float | None = None
        if dynamic_evidence is not None:
            kappa_b, cat_b = self.behavioral.check(
                dynamic_evidence.old, dynamic_evidence.new, profile
            )
        else:
            cat_b = BehavioralCategory.SUSPICIOUS
            notes.append("no behavioral evidence")

        kappa_r, rho, cat_r = self.recovery.check(old, new, profile)

        categories = CompatCategories(
            interface=cat_i, policy=cat_p, behavioral=cat_b, recovery=cat_r
        )
        kappas = {
            "interface": kappa_i,
            "policy": kappa_p,
            "behavioral": kappa_b,
            "recovery": kappa_r,
        }
        return CompatReport(
            kappa_i=kappa_i,
            kappa_p=kappa_p,
            kappa_b=kappa_b,
            kappa_r=kappa_r,
            categories=categories,
            composite=self.calculate_composite(kappas),
            recommendation=early or aggregate(categories),
            profile_id=profile.profile_id.value,
            rho=rho,
            evidence_source=dynamic_evidence.source if dynamic_evidence else None,
            notes=notes,
        )

    def get_checker_info(self) -> dict[str, Any]:
        """Get information about the registered checkers."""
        return {
            "score_weights": self.score_weights,
            "checkers": {
                checker.name: {
                    "description": checker.description,
                    "weight": checker.weight,
                    "calls": checker.calls,
                }
                for checker in (self.interface, self.policy, self.behavioral, self.recovery)
            },
        }
