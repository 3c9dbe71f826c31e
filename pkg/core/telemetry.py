"""
Execution telemetry: per-episode trace records and behavioral signatures.
"""

import json
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from core.enums import RegressionCategory, TaskFamily, TraceContext


@dataclass(frozen=True)
class TraceRecord:
    capability_version: str
    context: TraceContext
    task_family: TaskFamily
    success: bool
    duration: float
    retry_count: int
    policy_hits: int
    anomaly_flags: int
    recovery_triggered: bool
    unsafe_continuation: bool
    timestamp: int
    regression_signals: tuple[RegressionCategory, ...] = ()

    def __post_init__(self) -> None:
        if self.unsafe_continuation and self.anomaly_flags < 1:
            raise ValueError("unsafe continuation requires at least one anomaly flag")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["context"] = self.context.value
        data["task_family"] = self.task_family.value
        data["regression_signals"] = [s.value for s in self.regression_signals]
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TraceRecord":
        return cls(
            capability_version=data["capability_version"],
            context=TraceContext(data["context"]),
            task_family=TaskFamily(data["task_family"]),
            success=bool(data["success"]),
            duration=float(data["duration"]),
            retry_count=int(data["retry_count"]),
            policy_hits=int(data["policy_hits"]),
            anomaly_flags=int(data["anomaly_flags"]),
            recovery_triggered=bool(data["recovery_triggered"]),
            unsafe_continuation=bool(data["unsafe_continuation"]),
            timestamp=int(data["timestamp"]),
            regression_signals=tuple(
                RegressionCategory(s) for s in data.get("regression_signals", [])
            ),
        )


@dataclass(frozen=True)
class BehavioralSignature:
    """Component-wise means of a batch of traces."""

    mu_succ: float = 0.0
    mu_time: float = 0.0
    mu_retry: float = 0.0
    mu_viol: float = 0.0
    mu_anom: float = 0.0
    mu_recover: float = 0.0
    episode_count: int = 0

    def __post_init__(self) -> None:
        for name in ("mu_succ", "mu_viol", "mu_anom", "mu_recover"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a rate in [0, 1], got {value}")
        if self.mu_time < 0 or self.mu_retry < 0 or self.episode_count < 0:
            raise ValueError("mu_time, mu_retry and episode_count must be nonnegative")

    @property
    def empty(self) -> bool:
        return self.episode_count == 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BehavioralSignature":
        return cls(**data)


@dataclass
class TraceClock:
    """Monotone sequence numbers for trace timestamps within one run."""

    value: int = field(default=0)

    def tick(self) -> int:
        self.value += 1
        return self.value


def write_trace_log(path: Path, entries: Iterable[tuple[int, str, TraceRecord]]) -> None:
    """Write (round, family, trace) entries as JSONL, one trace per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for round_index, family_id, trace in entries:
            line = {"round": round_index, "family_id": family_id, **trace.to_dict()}
            f.write(json.dumps(line, sort_keys=True) + "\n")


def read_trace_log(path: Path) -> list[tuple[int, str, TraceRecord]]:
    entries = []
    with open(path) as f:
        for line in f:
            if line.strip():
                data = json.loads(line)
                entries.append((int(data.pop("round")), data.pop("family_id"), TraceRecord.from_dict(data)))
    return entries
