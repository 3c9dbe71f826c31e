"""
Interface compatibility: can the new version still be invoked like the old one.
"""

from collections.abc import Mapping
from dataclasses import dataclass

from compat.checkers.base import StaticChecker
from core.enums import InterfaceCategory
from core.manifest import CapabilityManifest
from core.profiles import DeploymentProfile

# runtime platform the capability dependencies must resolve against
DEFAULT_PLATFORM: dict[str, str] = {
    "motion-core": "2.4.0",
    "perception": "1.8.2",
    "grasp-planner": "3.1.0",
    "safety-monitor": "1.2.0",
}


class FamilyMismatchError(Exception):
    pass


@dataclass(frozen=True)
class InterfaceDeviation:
    signature: float
    schema: float
    pre_post: float
    dependency: float

    @property
    def mean(self) -> float:
        return (self.signature + self.schema + self.pre_post + self.dependency) / 4


def _fraction(changed: int, total: int) -> float:
    return changed / total if total else 0.0


def interface_deviation(
    old: CapabilityManifest,
    new: CapabilityManifest,
    platform: Mapping[str, str] = DEFAULT_PLATFORM,
) -> InterfaceDeviation:
    if old.family_id != new.family_id:
        raise FamilyMismatchError(
            f"Cannot compare {old.family_id}@{old.version_id} with {new.family_id}@{new.version_id}"
        )

    old_fields = [("in", f) for f in old.input_schema] + [
        ("out", f) for f in old.output_schema
    ]
    new_fields = {("in", f.name): f.kind for f in new.input_schema}
    new_fields.update({("out", f.name): f.kind for f in new.output_schema})
    sig_changed = sum(
        1 for side, f in old_fields if new_fields.get((side, f.name)) != f.kind
    )

    new_entries = {e.name: e for e in new.invocation_schema}
    schema_changed = sum(
        1
        for e in old.invocation_schema
        if e.name not in new_entries or new_entries[e.name].contract != e.contract
    )

    old_tags = [
        (e.name, kind, tag)
        for e in old.invocation_schema
        for kind, tags in (("pre", e.preconditions), ("post", e.postconditions))
        for tag in tags
    ]
    new_tags = {
        (e.name, kind, tag)
        for e in new.invocation_schema
        for kind, tags in (("pre", e.preconditions), ("post", e.postconditions))
        for tag in tags
    }
    tags_dropped = sum(1 for tag in old_tags if tag not in new_tags)

    already_broken = {
        d.name for d in old.dependency_set if not d.satisfied_by(platform.get(d.name))
    }
    newly_broken = sum(
        1
        for d in new.dependency_set
        if not d.satisfied_by(platform.get(d.name)) and d.name not in already_broken
    )

    return InterfaceDeviation(
        signature=_fraction(sig_changed, len(old_fields)),
        schema=_fraction(schema_changed, len(old.invocation_schema)),
        pre_post=_fraction(tags_dropped, len(old_tags)),
        dependency=_fraction(newly_broken, len(new.dependency_set)),
    )


class InterfaceChecker(StaticChecker):
    def __init__(self, weight: float = 0.22, platform: Mapping[str, str] | None = None):
        super().__init__(weight)
        self.platform = dict(platform or DEFAULT_PLATFORM)

    @property
    def name(self) -> str:
        return "interface"

    @property
    def description(self) -> str:
        return "Signature, invocation contract, pre/postcondition and dependency deviations"

    def check(
        self,
        old: CapabilityManifest,
        new: CapabilityManifest,
        profile: DeploymentProfile,
    ) -> tuple[float, InterfaceCategory]:
        self.calls += 1
        score = 1.0 - interface_deviation(old, new, self.platform).mean
        return score, self.categorize(score, profile)

    def categorize(self, score: float, profile: DeploymentProfile) -> InterfaceCategory:
        theta = profile.dim_thresholds.interface
        if score >= theta:
            return InterfaceCategory.COMPATIBLE
        if score >= theta - profile.conditional_margin:
            return InterfaceCategory.CONDITIONAL
        return InterfaceCategory.INCOMPATIBLE

    def is_critical_failure(self, category: InterfaceCategory) -> bool:  # type: ignore[override]
        return category == InterfaceCategory.INCOMPATIBLE
