"""
Append-only audit store for lifecycle events.
"""

import json
import threading
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any


class AuditKind(StrEnum):
    REGISTERED = "registered"
    COMPAT_EVALUATED = "compat_evaluated"
    SANDBOX_DONE = "sandbox_done"
    SHADOW_DONE = "shadow_done"
    ACTIVATION_DECIDED = "activation_decided"
    MONITOR_DECISION = "monitor_decision"
    ROLLBACK_EXECUTED = "rollback_executed"
    DEMOTED = "demoted"
    REJECTED = "rejected"
    RESTORED = "restored"
    REEVALUATED = "reevaluated"


@dataclass(frozen=True)
class AuditEvent:
    sequence: int
    event_kind: AuditKind
    family_id: str
    version_id: str
    round: int
    payload: dict[str, Any] = field(default_factory=dict)
    # set only when the event changes a lifecycle state
    transition: str | None = None
    to_state: str | None = None
    reason: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "sequence": self.sequence,
            "event_kind": self.event_kind.value,
            "family_id": self.family_id,
            "version_id": self.version_id,
            "round": self.round,
            "payload": self.payload,
            "transition": self.transition,
            "to_state": self.to_state,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AuditEvent":
        return cls(
            sequence=int(data["sequence"]),
            event_kind=AuditKind(data["event_kind"]),
            family_id=data["family_id"],
            version_id=data["version_id"],
            round=int(data["round"]),
            payload=data.get("payload", {}),
            transition=data.get("transition"),
            to_state=data.get("to_state"),
            reason=data.get("reason", ""),
        )

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class AuditLog:
    """In-memory audit log with gap-free sequence numbers."""

    def __init__(self) -> None:
        self._events: list[AuditEvent] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[AuditEvent]:
        return iter(list(self._events))

    @property
    def next_sequence(self) -> int:
        return len(self._events) + 1

    def append(self, event: AuditEvent) -> AuditEvent:
        with self._lock:
            if event.sequence != self.next_sequence:
                raise ValueError(
                    f"Audit sequence gap: expected {self.next_sequence}, got {event.sequence}"
                )
            self._events.append(event)
        return event

    def events(self) -> list[AuditEvent]:
        return list(self._events)

    def write_jsonl(self, path: Path) -> None:
        write_audit(path, self._events)


def write_audit(path: Path, events: Iterable[AuditEvent]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for event in events:
            f.write(event.to_line() + "\n")


def read_audit(path: Path) -> list[AuditEvent]:
    """Read an audit JSONL file, checking that sequences are gap-free."""
    events = []
    with open(path) as f:
        for line in f:
            if line.strip():
                events.append(AuditEvent.from_dict(json.loads(line)))
    for expected, event in enumerate(events, start=1):
        if event.sequence != expected:
            raise ValueError(f"Audit log {path} has a sequence gap at {expected}")
    return events
