"""
Latent behavior model: every capability version is a stochastic episode generator.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from core.enums import RegressionCategory, TaskFamily, TraceContext
from core.telemetry import TraceRecord

DRAWS_PER_EPISODE = 8

PROBABILITIES = (
    "success_prob",
    "violation_rate",
    "anomaly_rate",
    "unsafe_event_rate",
    "recovery_success_prob",
)

# perturbations every version sees in the isolated sandbox modes
SANDBOX_PERTURBATIONS: dict[TraceContext, dict[str, float]] = {
    TraceContext.SANDBOX_PERTURBED: {
        "success_prob": -0.05,
        "base_duration_scale": 0.2,
        "anomaly_rate": 0.02,
    },
    TraceContext.SANDBOX_ADVERSARIAL: {
        "violation_rate": 0.05,
        "anomaly_rate": 0.02,
    },
}


@dataclass(frozen=True)
class LatentBehavior:
    success_prob: float
    base_duration: float
    retry_rate: float
    violation_rate: float
    anomaly_rate: float
    unsafe_event_rate: float = 0.0
    recovery_success_prob: float = 0.8
    # context -> additive deltas; "base_duration_scale" scales duration instead
    context_modifiers: dict[TraceContext, dict[str, float]] = field(default_factory=dict)
    # context -> regression categories an episode in that context may reveal
    signals: dict[TraceContext, tuple[RegressionCategory, ...]] = field(
        default_factory=dict
    )
    signal_rate: float = 0.5

    def with_deltas(self, deltas: dict[str, float]) -> "LatentBehavior":
        """Apply additive deltas and clamp; the original is left untouched."""
        updates: dict[str, float] = {}
        for name, delta in deltas.items():
            if name == "base_duration_scale":
                current = updates.get("base_duration", self.base_duration)
                updates["base_duration"] = max(0.1, current * (1.0 + delta))
            else:
                updates[name] = updates.get(name, getattr(self, name)) + delta

        for name in PROBABILITIES:
            if name in updates:
                updates[name] = min(1.0, max(0.0, updates[name]))
        if "retry_rate" in updates:
            updates["retry_rate"] = max(0.0, updates["retry_rate"])
        return replace(self, **updates)

    def effective(self, context: TraceContext) -> "LatentBehavior":
        """Latent values in a context, sandbox perturbations included."""
        latent = self.with_deltas(SANDBOX_PERTURBATIONS.get(context, {}))
        return latent.with_deltas(self.context_modifiers.get(context, {}))

    def signals_in(self, context: TraceContext) -> tuple[RegressionCategory, ...]:
        return self.signals.get(context, ())


def _split_rate(rate: float) -> tuple[int, float]:
    whole = int(np.floor(rate))
    return whole, rate - whole


def run_episode(
    latent: LatentBehavior,
    context: TraceContext,
    task_family: TaskFamily,
    rng: np.random.Generator,
    version_id: str,
    timestamp: int,
) -> TraceRecord:
    """
    Sample one episode. Always consumes exactly eight uniform draws.

    Draw order: success, duration, retries, violation, anomaly, unsafe,
    recovery, regression signal.
    """
    u = rng.random(DRAWS_PER_EPISODE)
    eff = latent.effective(context)

    retry_rate = eff.retry_rate
    duration = eff.base_duration * (0.8 + 0.4 * u[1])
    if task_family == TaskFamily.SEQUENCE:
        duration *= 2.0
        retry_rate *= 1.5

    whole, frac = _split_rate(retry_rate)
    unsafe = bool(u[5] < eff.unsafe_event_rate)
    anomalous = bool(u[4] < eff.anomaly_rate)
    signals = eff.signals_in(context) if u[7] < eff.signal_rate else ()

    return TraceRecord(
        capability_version=version_id,
        context=context,
        task_family=task_family,
        success=bool(u[0] < eff.success_prob),
        duration=round(float(duration), 6),
        retry_count=whole + int(u[2] < frac),
        policy_hits=int(u[3] < eff.violation_rate),
        anomaly_flags=int(anomalous) + int(unsafe),
        recovery_triggered=bool(u[6] < eff.recovery_success_prob),
        unsafe_continuation=unsafe,
        timestamp=timestamp,
        regression_signals=tuple(signals),
    )


def declare_pretraces(
    latent: LatentBehavior,
    n: int,
    rng: np.random.Generator,
    version_id: str,
    task_family: TaskFamily = TaskFamily.GRASP,
    start_timestamp: int = 0,
) -> list[TraceRecord]:
    """
    Generator-declared pre-trace batch with exact event counts.

    Each event occurs in exactly round(rate * n) episodes, at positions chosen
    by the rng; unsafe episodes are a subset of the anomalous ones. Durations
    equal the base duration. No context modifier is applied.
    """
    if n <= 0:
        raise ValueError("A pre-trace batch needs at least one episode")

    def positions(rate: float) -> set[int]:
        return set(rng.permutation(n)[: int(round(rate * n))].tolist())

    succeeded = positions(latent.success_prob)
    violated = positions(latent.violation_rate)
    recovered = positions(latent.recovery_success_prob)
    whole, frac = _split_rate(latent.retry_rate)
    extra_retry = positions(frac)

    unsafe_count = int(round(latent.unsafe_event_rate * n))
    anomaly_count = max(int(round(latent.anomaly_rate * n)), unsafe_count)
    anomaly_order = rng.permutation(n)[:anomaly_count].tolist()
    anomalous = set(anomaly_order)
    unsafe = set(anomaly_order[:unsafe_count])

    return [
        TraceRecord(
            capability_version=version_id,
            context=TraceContext.SANDBOX_CANONICAL,
            task_family=task_family,
            success=i in succeeded,
            duration=latent.base_duration,
            retry_count=whole + int(i in extra_retry),
            policy_hits=int(i in violated),
            anomaly_flags=int(i in anomalous) + int(i in unsafe),
            recovery_triggered=i in recovered,
            unsafe_continuation=i in unsafe,
            timestamp=start_timestamp + i + 1,
        )
        for i in range(n)
    ]
