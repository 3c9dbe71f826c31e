"""
Capability manifests: the declared surface of one capability version.

A manifest says how a version is invoked, what it is allowed to do and which
recovery facilities it ships with. It carries no behavioral claim; behavior is
only ever observed through traces.
"""

import hashlib
from collections.abc import Collection
from dataclasses import dataclass, field

import semver
from pydantic import BaseModel, ConfigDict, Field

from core.enums import ProfileId, RiskLevel, TagClass

RECOVERY_FACILITIES = (
    "rollback_hook",
    "fallback_binding",
    "safe_abort_hook",
    "failure_signal_observable",
)


class FieldDescriptor(BaseModel):
    """A schema field compared by name-and-kind equality."""

    model_config = ConfigDict(frozen=True)

    name: str
    kind: str


class InvocationEntry(BaseModel):
    """An entry point with its invocation contract and pre/postcondition tags."""

    model_config = ConfigDict(frozen=True)

    name: str
    contract: str
    preconditions: tuple[str, ...] = ()
    postconditions: tuple[str, ...] = ()


class ExecutionMode(BaseModel):
    """A declared execution mode: one tagged capability request."""

    model_config = ConfigDict(frozen=True)

    name: str
    tag_class: TagClass
    target: str
    risk: RiskLevel = RiskLevel.LOW


class RecoveryProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    rollback_hook: bool = True
    fallback_binding: bool = True
    safe_abort_hook: bool = True
    failure_signal_observable: bool = True
    # facility name -> fraction of the facility lost, in [0, 1]
    degradation: dict[str, float] = Field(default_factory=dict)

    def readiness(self, facility: str) -> float:
        """Readiness of one facility: 0 if absent, else 1 minus its degradation."""
        if not getattr(self, facility):
            return 0.0
        return 1.0 - self.degradation.get(facility, 0.0)


class Dependency(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    version_range: str

    def satisfied_by(self, version: str | None) -> bool:
        """Check a platform version against every clause of the range."""
        if version is None:
            return False
        parsed = semver.Version.parse(version)
        clauses = [c.strip() for c in self.version_range.split(",") if c.strip()]
        return all(parsed.match(clause) for clause in clauses)


class CapabilityManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    family_id: str
    version_id: str
    parent_version: str | None = None
    input_schema: tuple[FieldDescriptor, ...] = ()
    output_schema: tuple[FieldDescriptor, ...] = ()
    invocation_schema: tuple[InvocationEntry, ...] = ()
    permission_profile: tuple[ExecutionMode, ...] = ()
    recovery_profile: RecoveryProfile = Field(default_factory=RecoveryProfile)
    dependency_set: tuple[Dependency, ...] = ()
    environment_scope: tuple[ProfileId, ...] = (
        ProfileId.SIM,
        ProfileId.REAL,
        ProfileId.HUMAN,
    )
    risk_level: RiskLevel = RiskLevel.LOW

    @property
    def key(self) -> tuple[str, str]:
        return (self.family_id, self.version_id)

    def to_json(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_json(cls, payload: str) -> "CapabilityManifest":
        return cls.model_validate_json(payload)


class ManifestValidationError(Exception):
    """Raised when an invalid manifest is offered for registration."""

    def __init__(self, manifest: CapabilityManifest, violations: list[str]):
        self.manifest = manifest
        self.violations = violations
        super().__init__(
            f"Manifest {manifest.family_id}@{manifest.version_id} is invalid: "
            + "; ".join(violations)
        )


@dataclass(frozen=True)
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_manifest(
    manifest: CapabilityManifest, known_versions: Collection[str] = ()
) -> ValidationResult:
    """
    Collect every invariant violation of a manifest.

    Args:
        manifest: Manifest to check
        known_versions: Version ids already registered in the same family

    Returns:
        ValidationResult, ok iff no violation was found
    """
    violations: list[str] = []

    if manifest.version_id in known_versions:
        violations.append("duplicate version")
    if not semver.Version.is_valid(manifest.version_id):
        violations.append(f"version_id '{manifest.version_id}' is not a semantic version")
    if not manifest.input_schema:
        violations.append("input_schema empty")
    if not manifest.output_schema:
        violations.append("output_schema empty")
    if not manifest.permission_profile:
        violations.append("permission_profile empty")

    mode_names = [mode.name for mode in manifest.permission_profile]
    if len(set(mode_names)) != len(mode_names):
        violations.append("permission_profile has duplicate mode names")

    for facility, lost in manifest.recovery_profile.degradation.items():
        if facility not in RECOVERY_FACILITIES:
            violations.append(f"unknown recovery facility '{facility}'")
        elif not 0.0 <= lost <= 1.0:
            violations.append(f"degradation of '{facility}' outside [0, 1]")

    return ValidationResult(violations)


def manifest_hash(manifest: CapabilityManifest) -> str:
    """sha256 of the canonical JSON form."""
    return hashlib.sha256(manifest.to_json().encode()).hexdigest()
