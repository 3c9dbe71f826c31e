"""
Versioned capability registry with active, candidate and history views.

Every mutation is expressed as an AuditEvent and applied through a single
`_apply` method, so replaying the audit log from an empty registry rebuilds the
same state.
"""

import copy
import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from core.enums import LifecycleState
from core.manifest import (
    CapabilityManifest,
    ManifestValidationError,
    validate_manifest,
)
from registry.audit import AuditEvent, AuditKind, AuditLog
from registry.lifecycle import (
    REASON_REQUIRED,
    ActivationEntry,
    InvalidTransitionError,
    LifecycleRecord,
    TransitionEvent,
    next_state,
)


S = LifecycleState
E = TransitionEvent

SUPERSEDED = "superseded"
RESTRICTED = "restricted"


class DuplicateVersionError(Exception):
    pass


class RegistryLoadError(Exception):
    pass


@dataclass(frozen=True)
class RegistryViews:
    active: dict[str, LifecycleRecord]
    candidates: list[LifecycleRecord]
    history: list[LifecycleRecord]

    def active_version(self, family_id: str) -> str | None:
        record = self.active.get(family_id)
        return record.version_id if record else None


class VersionRegistry:
    """Single-owner store of lifecycle records and their audit trail."""

    def __init__(self) -> None:
        self.records: dict[tuple[str, str], LifecycleRecord] = {}
        self.stacks: dict[str, list[str]] = {}
        self.audit = AuditLog()
        self.current_round = 0

    # ------------------------------------------------------------------ lookups

    def get(self, family_id: str, version_id: str) -> LifecycleRecord:
        try:
            return self.records[(family_id, version_id)]
        except KeyError:
            raise KeyError(f"Unknown capability version {family_id}@{version_id}")

    def versions_of(self, family_id: str) -> list[str]:
        return [v for (f, v) in self.records if f == family_id]

    def active_record(self, family_id: str) -> LifecycleRecord | None:
        for record in self.records.values():
            if record.family_id == family_id and record.state == S.ACTIVE:
                return record
        return None

    def predecessor_of(self, family_id: str) -> str | None:
        """The version that a rollback of the current active would restore."""
        stack = self.stacks.get(family_id, [])
        return stack[-2] if len(stack) >= 2 else None

    # --------------------------------------------------------------- mutations

    def register_candidate(
        self, manifest: CapabilityManifest, provenance: str = "generator"
    ) -> LifecycleRecord:
        """Insert a new version in state registered."""
        known = self.versions_of(manifest.family_id)
        if manifest.version_id in known:
            raise DuplicateVersionError(
                f"Version {manifest.version_id} already registered in family {manifest.family_id}"
            )
        result = validate_manifest(manifest, known)
        if not result.ok:
            raise ManifestValidationError(manifest, result.violations)

        self._emit(
            AuditKind.REGISTERED,
            manifest.family_id,
            manifest.version_id,
            payload={"manifest": manifest.model_dump(mode="json"), "provenance": provenance},
        )
        return self.get(manifest.family_id, manifest.version_id)

    def transition(
        self,
        record: LifecycleRecord,
        event: TransitionEvent,
        *,
        reason: str = "",
        payload: dict[str, Any] | None = None,
    ) -> LifecycleRecord:
        """
        Move a record along the transition table.

        Args:
            record: Record to move
            event: Transition event
            reason: Why; required for demotion, re-evaluation and restoration
            payload: Event-specific data stored in the audit entry

        Returns:
            The updated record
        """
        return self._emit(
            _KIND_FOR_EVENT[event],
            record.family_id,
            record.version_id,
            transition=event,
            payload=payload,
            reason=reason,
        )

    def record_compat(self, record: LifecycleRecord, report: dict[str, Any]) -> None:
        self._emit(
            AuditKind.COMPAT_EVALUATED,
            record.family_id,
            record.version_id,
            payload={"report": report},
        )

    def record_monitor(self, record: LifecycleRecord, decision: dict[str, Any]) -> None:
        self._emit(
            AuditKind.MONITOR_DECISION,
            record.family_id,
            record.version_id,
            payload={"decision": decision},
        )

    def activate(
        self,
        record: LifecycleRecord,
        mode: str,
        profile_id: str,
        forced: bool = False,
    ) -> LifecycleRecord:
        """Promote a shadowed record; the incumbent is demoted as superseded."""
        incumbent = self.active_record(record.family_id)
        if incumbent is not None:
            self.transition(incumbent, E.DEMOTE, reason=SUPERSEDED)
        return self.transition(
            record,
            E.ACTIVATE,
            payload={"mode": mode, "profile_id": profile_id, "forced": forced},
        )

    def rollback(
        self,
        record: LifecycleRecord,
        rollback: dict[str, Any],
        soft: bool = False,
    ) -> LifecycleRecord | None:
        """
        Take an active version out of service and restore its predecessor.

        Returns:
            The restored predecessor record, or None when the family has none
        """
        if soft:
            self.transition(
                record, E.DEMOTE, reason="soft_demotion", payload={"rollback": rollback}
            )
        else:
            self.transition(record, E.DRIFT_DETECTED, payload={"rollback": rollback})

        stack = self.stacks.get(record.family_id, [])
        if not stack:
            return None
        predecessor = self.get(record.family_id, stack[-1])
        return self.transition(
            predecessor,
            E.RESTORE,
            reason=f"restore after rollback of {record.version_id}",
        )

    # ------------------------------------------------------------------- views

    def views(self) -> RegistryViews:
        active: dict[str, LifecycleRecord] = {}
        candidates: list[LifecycleRecord] = []
        history: list[LifecycleRecord] = []
        for record in self.records.values():
            stacked = record.version_id in self.stacks.get(record.family_id, [])
            if record.state == S.ACTIVE:
                active[record.family_id] = copy.deepcopy(record)
            elif record.state in (S.REJECTED, S.ROLLED_BACK) or (
                record.state == S.DEMOTED and stacked
            ):
                history.append(copy.deepcopy(record))
            else:
                candidates.append(copy.deepcopy(record))
        return RegistryViews(active=active, candidates=candidates, history=history)

    # ------------------------------------------------------------- persistence

    def canonical(self) -> str:
        """Canonical serialization of records, activation stacks and audit log."""
        document = {
            "records": [record.to_dict() for record in self.records.values()],
            "stacks": self.stacks,
            "audit": [event.to_dict() for event in self.audit],
        }
        return json.dumps(document, sort_keys=True, indent=2)

    def snapshot(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.canonical())

    @classmethod
    def load(cls, path: Path) -> "VersionRegistry":
        try:
            document = json.loads(path.read_text())
            events = [AuditEvent.from_dict(e) for e in document["audit"]]
            registry = cls.replay(events)
            stored = [LifecycleRecord.from_dict(r) for r in document["records"]]
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise RegistryLoadError(f"Cannot load registry snapshot {path}: {e}")

        if [r.to_dict() for r in stored] != [
            r.to_dict() for r in registry.records.values()
        ]:
            raise RegistryLoadError(
                f"Registry snapshot {path} disagrees with its own audit log"
            )
        return registry

    @classmethod
    def replay(cls, events: Iterable[AuditEvent]) -> "VersionRegistry":
        """Rebuild a registry by applying audit events in order."""
        registry = cls()
        for event in events:
            registry._validate(event)
            registry.audit.append(event)
            registry._apply(event)
        return registry

    # ---------------------------------------------------------------- internals

    def _emit(
        self,
        kind: AuditKind,
        family_id: str,
        version_id: str,
        *,
        transition: TransitionEvent | None = None,
        payload: dict[str, Any] | None = None,
        reason: str = "",
    ) -> LifecycleRecord:
        to_state = None
        if transition is not None:
            current = self.get(family_id, version_id).state
            to_state = next_state(current, transition).value

        event = AuditEvent(
            sequence=self.audit.next_sequence,
            event_kind=kind,
            family_id=family_id,
            version_id=version_id,
            round=self.current_round,
            payload=payload or {},
            transition=transition.value if transition else None,
            to_state=to_state,
            reason=reason,
        )
        self._validate(event)
        self.audit.append(event)
        self._apply(event)
        return self.get(family_id, version_id)

    def _validate(self, event: AuditEvent) -> None:
        """Reject an event before anything is mutated."""
        if event.event_kind == AuditKind.REGISTERED:
            if (event.family_id, event.version_id) in self.records:
                raise DuplicateVersionError(
                    f"Version {event.version_id} already registered in family {event.family_id}"
                )
            return
        if event.transition is None:
            self.get(event.family_id, event.version_id)
            return

        record = self.get(event.family_id, event.version_id)
        transition = TransitionEvent(event.transition)
        next_state(record.state, transition)
        if transition in REASON_REQUIRED and not event.reason:
            raise InvalidTransitionError(record.state, transition, "a reason is required")
        if transition == E.RESTORE:
            stack = self.stacks.get(event.family_id, [])
            if not stack or stack[-1] != event.version_id:
                raise InvalidTransitionError(
                    record.state, transition, "only the stacked predecessor can be restored"
                )
        if transition == E.ACTIVATE and self.active_record(event.family_id) is not None:
            raise InvalidTransitionError(
                record.state, transition, "family already has an active version"
            )

    def _apply(self, event: AuditEvent) -> None:
        key = (event.family_id, event.version_id)
        payload = event.payload

        if event.event_kind == AuditKind.REGISTERED:
            self.records[key] = LifecycleRecord(
                manifest=CapabilityManifest.model_validate(payload["manifest"]),
                provenance=payload.get("provenance", "generator"),
                state_history=[S.REGISTERED.value],
            )
            return

        record = self.records[key]
        stack = self.stacks.setdefault(event.family_id, [])

        if event.event_kind == AuditKind.COMPAT_EVALUATED:
            if "report" in payload:
                record.compat_history.append(payload["report"])
        elif event.event_kind == AuditKind.SANDBOX_DONE:
            record.sandbox_summary = payload.get("summary")
        elif event.event_kind == AuditKind.SHADOW_DONE:
            record.shadow_summary = payload.get("summary")
        elif event.event_kind == AuditKind.MONITOR_DECISION:
            decision = payload["decision"]
            history = record.activation_history
            already_restricted = bool(history) and history[-1].mode == RESTRICTED
            if decision.get("value") == "restrict" and not already_restricted:
                record.activation_history.append(
                    ActivationEntry(
                        round=event.round,
                        profile_id=decision.get("profile_id", ""),
                        mode=RESTRICTED,
                    )
                )

        if event.transition is None:
            return

        transition = TransitionEvent(event.transition)
        previous = record.state
        record.state = next_state(previous, transition)
        record.state_history.append(record.state.value)

        if transition == E.ACTIVATE:
            record.activation_history.append(
                ActivationEntry(
                    round=event.round,
                    profile_id=payload.get("profile_id", ""),
                    mode=payload.get("mode", "full"),
                )
            )
            stack.append(event.version_id)
        elif transition == E.DRIFT_DETECTED or (
            transition == E.DEMOTE and previous == S.ACTIVE and event.reason != SUPERSEDED
        ):
            if "rollback" in payload:
                record.rollback_history.append(payload["rollback"])
            if event.version_id in stack:
                stack.remove(event.version_id)

        self._check_single_active(event.family_id)

    def _check_single_active(self, family_id: str) -> None:
        active = [
            r
            for r in self.records.values()
            if r.family_id == family_id and r.state == S.ACTIVE
        ]
        if len(active) > 1:
            raise InvalidTransitionError(
                S.ACTIVE,
                E.ACTIVATE,
                f"family {family_id} has {len(active)} active versions",
            )


_KIND_FOR_EVENT = {
    E.VALIDATE_PASS: AuditKind.COMPAT_EVALUATED,
    E.SANDBOX_DONE: AuditKind.SANDBOX_DONE,
    E.SHADOW_DONE: AuditKind.SHADOW_DONE,
    E.ACTIVATE: AuditKind.ACTIVATION_DECIDED,
    E.INCOMPATIBILITY_DETECTED: AuditKind.REJECTED,
    E.DRIFT_DETECTED: AuditKind.ROLLBACK_EXECUTED,
    E.DEMOTE: AuditKind.DEMOTED,
    E.REEVALUATE_SANDBOX: AuditKind.REEVALUATED,
    E.REEVALUATE_SHADOW: AuditKind.REEVALUATED,
    E.RESTORE: AuditKind.RESTORED,
}
