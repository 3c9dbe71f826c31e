"""
Behavioral compatibility from trace-derived signatures.
"""

from collections.abc import Sequence

import numpy as np

from compat.checkers.base import DynamicChecker, banded
from core.enums import BehavioralCategory
from core.profiles import DeploymentProfile
from core.telemetry import BehavioralSignature, TraceRecord

EPSILON = 1e-6


class EmptySignatureError(Exception):
    pass


def compute_signature(traces: Sequence[TraceRecord]) -> BehavioralSignature:
    """Component-wise means over a batch of traces of one capability version."""
    if not traces:
        raise EmptySignatureError("Cannot compute a signature from zero traces")
    versions = {t.capability_version for t in traces}
    if len(versions) > 1:
        raise ValueError(f"Traces mix capability versions: {sorted(versions)}")

    return BehavioralSignature(
        mu_succ=float(np.mean([t.success for t in traces])),
        mu_time=float(np.mean([t.duration for t in traces])),
        mu_retry=float(np.mean([t.retry_count for t in traces])),
        mu_viol=float(np.mean([t.policy_hits > 0 for t in traces])),
        mu_anom=float(np.mean([t.anomaly_flags > 0 for t in traces])),
        mu_recover=float(np.mean([t.recovery_triggered for t in traces])),
        episode_count=len(traces),
    )


def component_drift(old: BehavioralSignature, new: BehavioralSignature) -> dict[str, float]:
    """Directional drift per component; only adverse changes count."""
    return {
        "mu_succ": max(0.0, old.mu_succ - new.mu_succ),
        "mu_recover": max(0.0, old.mu_recover - new.mu_recover),
        "mu_viol": max(0.0, new.mu_viol - old.mu_viol),
        "mu_anom": max(0.0, new.mu_anom - old.mu_anom),
        "mu_time": max(0.0, new.mu_time - old.mu_time) / (old.mu_time + EPSILON),
        "mu_retry": max(0.0, new.mu_retry - old.mu_retry) / (old.mu_retry + EPSILON),
    }


class BehavioralChecker(DynamicChecker):
    def __init__(self, weight: float = 0.30):
        super().__init__(weight)

    @property
    def name(self) -> str:
        return "behavioral"

    @property
    def description(self) -> str:
        return "Worst-case directional drift between behavioral signatures"

    def check(
        self,
        old_sig: BehavioralSignature,
        new_sig: BehavioralSignature,
        profile: DeploymentProfile,
    ) -> tuple[float, BehavioralCategory]:
        if old_sig.empty or new_sig.empty:
            raise EmptySignatureError("Behavioral drift needs two non-empty signatures")
        self.calls += 1

        drift = component_drift(old_sig, new_sig)
        score = min(1.0, max(0.0, 1.0 - max(drift.values())))
        category = self.categorize(score, profile)

        # nominal success bought with worse safety-critical behavior
        margin = profile.conditional_margin
        safety_worse = drift["mu_viol"] > margin or drift["mu_anom"] > margin
        if (
            category == BehavioralCategory.COMPATIBLE
            and new_sig.mu_succ > old_sig.mu_succ
            and safety_worse
        ):
            category = BehavioralCategory.SUSPICIOUS
        return score, category

    def categorize(self, score: float, profile: DeploymentProfile) -> BehavioralCategory:
        band = banded(score, profile.dim_thresholds.behavioral, profile.conditional_margin)
        return (
            BehavioralCategory.INCOMPATIBLE,
            BehavioralCategory.SUSPICIOUS,
            BehavioralCategory.COMPATIBLE,
        )[band]
