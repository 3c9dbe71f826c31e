"""
Manifest validation, policy coverage and deployment profile tests.
"""

import pytest
from pydantic import ValidationError

from core.enums import ProfileId, RiskLevel, TagClass
from core.manifest import (
    CapabilityManifest,
    Dependency,
    ExecutionMode,
    RecoveryProfile,
    manifest_hash,
    validate_manifest,
)
from core.policy import PolicySet
from core.profiles import DimThresholds, default_profiles, monotonicity_violations


def test_parent_manifest_is_valid(parent: CapabilityManifest):
    result = validate_manifest(parent)
    assert result.ok
    assert result.violations == []


def test_every_violation_is_collected(parent: CapabilityManifest):
    broken = parent.model_copy(
        update={
            "version_id": "v2",
            "input_schema": (),
            "permission_profile": parent.permission_profile[:1] * 2,
        }
    )
    result = validate_manifest(broken)

    assert not result.ok
    assert "input_schema empty" in result.violations
    assert any("not a semantic version" in v for v in result.violations)
    assert "permission_profile has duplicate mode names" in result.violations


def test_duplicate_version_is_a_violation(parent: CapabilityManifest):
    result = validate_manifest(parent, known_versions=["1.0.0"])
    assert result.violations == ["duplicate version"]


def test_recovery_degradation_bounds(parent: CapabilityManifest):
    manifest = parent.model_copy(
        update={
            "recovery_profile": RecoveryProfile(
                degradation={"fallback_binding": 1.5, "teleport": 0.1}
            )
        }
    )
    violations = validate_manifest(manifest).violations
    assert "degradation of 'fallback_binding' outside [0, 1]" in violations
    assert "unknown recovery facility 'teleport'" in violations


def test_recovery_readiness():
    profile = RecoveryProfile(rollback_hook=False, degradation={"fallback_binding": 0.25})
    assert profile.readiness("rollback_hook") == 0.0
    assert profile.readiness("fallback_binding") == pytest.approx(0.75)
    assert profile.readiness("safe_abort_hook") == 1.0


def test_dependency_ranges():
    dep = Dependency(name="motion-core", version_range=">=2.0.0,<3.0.0")
    assert dep.satisfied_by("2.4.0")
    assert not dep.satisfied_by("3.0.0")
    assert not dep.satisfied_by("1.9.9")
    assert not dep.satisfied_by(None)


def test_manifest_json_and_hash(parent: CapabilityManifest):
    restored = CapabilityManifest.from_json(parent.to_json())
    assert restored == parent
    assert manifest_hash(restored) == manifest_hash(parent)
    assert manifest_hash(parent.model_copy(update={"version_id": "1.0.1"})) != manifest_hash(parent)


def test_manifests_are_frozen(parent: CapabilityManifest):
    with pytest.raises(ValidationError):
        parent.version_id = "2.0.0"  # type: ignore[misc]


def test_policy_coverage(policy_sets: dict[str, PolicySet]):
    grasp = policy_sets["grasp"]
    assert grasp.covers(ExecutionMode(name="arm", tag_class=TagClass.ACTUATOR_ACCESS, target="arm"))
    assert grasp.covers(
        ExecutionMode(name="gpu", tag_class=TagClass.RESOURCE_CLASS, target="gpu-large")
    )
    assert not grasp.covers(
        ExecutionMode(
            name="wrist",
            tag_class=TagClass.ACTUATOR_ACCESS,
            target="wrist",
            risk=RiskLevel.MEDIUM,
        )
    )


def test_parent_modes_are_all_covered(
    parent: CapabilityManifest, policy_sets: dict[str, PolicySet]
):
    assert all(policy_sets["grasp"].covers(m) for m in parent.permission_profile)


def test_threshold_range():
    with pytest.raises(ValidationError):
        DimThresholds(interface=0.0, policy=0.9, behavioral=0.85, recovery=0.8)
    with pytest.raises(ValidationError):
        DimThresholds(interface=1.2, policy=0.9, behavioral=0.85, recovery=0.8)


def test_scaled_profile_is_capped():
    sim = default_profiles()[ProfileId.SIM]
    strict = sim.scaled(1.1)
    assert strict.dim_thresholds.interface == pytest.approx(0.995)
    assert strict.dim_thresholds.policy == pytest.approx(0.99)
    assert strict.composite_threshold == pytest.approx(0.99)
    relaxed = sim.scaled(0.9)
    assert relaxed.dim_thresholds.recovery == pytest.approx(0.72)
    # the original is untouched
    assert sim.dim_thresholds.recovery == 0.80


def test_default_profiles_are_monotone():
    assert monotonicity_violations(default_profiles()) == []


def test_monotonicity_violation_is_reported():
    profiles = default_profiles()
    loose_real = profiles[ProfileId.REAL].model_copy(
        update={
            "dim_thresholds": DimThresholds(
                interface=0.90, policy=0.92, behavioral=0.87, recovery=0.84
            )
        }
    )
    profiles[ProfileId.REAL] = loose_real
    violations = monotonicity_violations(profiles)
    assert violations == ["interface: sim 0.95 > real 0.9"]


def test_approval_required_above_risk():
    profiles = default_profiles()
    assert not profiles[ProfileId.SIM].approval_required(RiskLevel.HIGH)
    assert profiles[ProfileId.REAL].approval_required(RiskLevel.HIGH)
    assert not profiles[ProfileId.REAL].approval_required(RiskLevel.MEDIUM)
    assert profiles[ProfileId.HUMAN].approval_required(RiskLevel.MEDIUM)
