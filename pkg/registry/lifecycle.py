"""
The lifecycle state machine for capability candidates.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

from core.enums import LifecycleState
from core.manifest import CapabilityManifest, manifest_hash

S = LifecycleState


class TransitionEvent(StrEnum):
    VALIDATE_PASS = "validate_pass"
    SANDBOX_DONE = "sandbox_done"
    SHADOW_DONE = "shadow_done"
    ACTIVATE = "activate"
    INCOMPATIBILITY_DETECTED = "incompatibility_detected"
    DRIFT_DETECTED = "drift_detected"
    DEMOTE = "demote"
    REEVALUATE_SANDBOX = "reevaluate_sandbox"
    REEVALUATE_SHADOW = "reevaluate_shadow"
    RESTORE = "restore"


E = TransitionEvent

_REJECTABLE = (S.REGISTERED, S.VALIDATED, S.SANDBOXED, S.SHADOWED, S.DEMOTED)

TRANSITIONS: dict[tuple[LifecycleState, TransitionEvent], LifecycleState] = {
    (S.REGISTERED, E.VALIDATE_PASS): S.VALIDATED,
    (S.VALIDATED, E.SANDBOX_DONE): S.SANDBOXED,
    (S.SANDBOXED, E.SHADOW_DONE): S.SHADOWED,
    (S.SHADOWED, E.ACTIVATE): S.ACTIVE,
    (S.ACTIVE, E.DRIFT_DETECTED): S.ROLLED_BACK,
    (S.SHADOWED, E.DEMOTE): S.DEMOTED,
    (S.SANDBOXED, E.DEMOTE): S.DEMOTED,
    # soft demotion and supersession of the incumbent
    (S.ACTIVE, E.DEMOTE): S.DEMOTED,
    (S.DEMOTED, E.REEVALUATE_SANDBOX): S.SANDBOXED,
    (S.DEMOTED, E.REEVALUATE_SHADOW): S.SHADOWED,
    # restoration, only for the stacked predecessor of a rolled-back version
    (S.DEMOTED, E.RESTORE): S.ACTIVE,
    **{(state, E.INCOMPATIBILITY_DETECTED): S.REJECTED for state in _REJECTABLE},
}

# events whose audit entry must say why
REASON_REQUIRED = {E.DEMOTE, E.REEVALUATE_SANDBOX, E.REEVALUATE_SHADOW, E.RESTORE}

TERMINAL_STATES = {S.REJECTED, S.ROLLED_BACK}


class InvalidTransitionError(Exception):
    def __init__(self, state: LifecycleState, event: TransitionEvent, detail: str = ""):
        self.state = state
        self.event = event
        message = f"Transition '{event}' is not allowed from state '{state}'"
        super().__init__(f"{message}: {detail}" if detail else message)


def next_state(state: LifecycleState, event: TransitionEvent) -> LifecycleState:
    target = TRANSITIONS.get((state, event))
    if target is None:
        raise InvalidTransitionError(state, event)
    return target


@dataclass
class ActivationEntry:
    round: int
    profile_id: str
    mode: str


@dataclass
class LifecycleRecord:
    manifest: CapabilityManifest
    state: LifecycleState = S.REGISTERED
    provenance: str = "generator"
    compat_history: list[dict[str, Any]] = field(default_factory=list)
    sandbox_summary: dict[str, Any] | None = None
    shadow_summary: dict[str, Any] | None = None
    activation_history: list[ActivationEntry] = field(default_factory=list)
    rollback_history: list[dict[str, Any]] = field(default_factory=list)
    state_history: list[str] = field(default_factory=list)

    @property
    def family_id(self) -> str:
        return self.manifest.family_id

    @property
    def version_id(self) -> str:
        return self.manifest.version_id

    @property
    def manifest_hash(self) -> str:
        return manifest_hash(self.manifest)

    def to_dict(self) -> dict[str, Any]:
        """Registry entry in canonical form."""
        latest = self.compat_history[-1] if self.compat_history else None
        return {
            "name": self.family_id,
            "version": self.version_id,
            "parent": self.manifest.parent_version,
            "state": self.state.value,
            "provenance": self.provenance,
            "manifest_hash": self.manifest_hash,
            "manifest": self.manifest.model_dump(mode="json"),
            "kappa": latest.get("kappa") if latest else None,
            "compat_history": self.compat_history,
            "sandbox_summary": self.sandbox_summary,
            "shadow_summary": self.shadow_summary,
            "activation_history": [vars(a) for a in self.activation_history],
            "rollback_history": self.rollback_history,
            "state_history": self.state_history,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LifecycleRecord":
        return cls(
            manifest=CapabilityManifest.model_validate(data["manifest"]),
            state=LifecycleState(data["state"]),
            provenance=data["provenance"],
            compat_history=list(data["compat_history"]),
            sandbox_summary=data["sandbox_summary"],
            shadow_summary=data["shadow_summary"],
            activation_history=[ActivationEntry(**a) for a in data["activation_history"]],
            rollback_history=list(data["rollback_history"]),
            state_history=list(data["state_history"]),
        )


def reachable_paths_to_active(max_depth: int = 8) -> list[list[LifecycleState]]:
    """Enumerate every simple path from registered to active in the table."""
    paths: list[list[LifecycleState]] = []

    def walk(path: list[LifecycleState]) -> None:
        if path[-1] == S.ACTIVE:
            paths.append(path)
            return
        if len(path) > max_depth:
            return
        for (source, _), target in TRANSITIONS.items():
            if source == path[-1] and target not in path:
                walk([*path, target])

    walk([S.REGISTERED])
    return paths
