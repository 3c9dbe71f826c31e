"""
Shadow deployment next to the active version.

The candidate sees the same episode inputs as the active version but never
controls execution; only the active version's traces are live results.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from core.enums import LifecycleState, TraceContext
from core.profiles import DeploymentProfile
from core.telemetry import TraceRecord
from envsim.environment import CapabilityEnvironment
from pipeline.reports import ShadowReport, category_counts
from registry.lifecycle import InvalidTransitionError, LifecycleRecord, TransitionEvent

SHADOW_EPISODES = 40


class NoActiveVersionError(Exception):
    pass


@dataclass(frozen=True)
class ShadowRun:
    report: ShadowReport
    live_traces: list[TraceRecord]
    shadow_traces: list[TraceRecord]


def output_divergence(active: TraceRecord, candidate: TraceRecord) -> float:
    """Per-episode output distance in [0, 1]: success, relative duration and retries."""
    succ = float(active.success != candidate.success)
    duration = min(1.0, abs(candidate.duration - active.duration) / max(active.duration, 1e-6))
    retries = min(1.0, abs(candidate.retry_count - active.retry_count) / 2)
    return (succ + duration + retries) / 3


def outside_envelope(active: TraceRecord, candidate: TraceRecord) -> bool:
    return (
        candidate.retry_count > active.retry_count
        or candidate.duration > active.duration * 1.25
    )


def shadow_report(
    live: Sequence[TraceRecord],
    shadow: Sequence[TraceRecord],
    profile: DeploymentProfile,
) -> ShadowReport:
    """Compare paired live and shadow traces."""
    if len(live) != len(shadow) or not live:
        raise ValueError("Shadow comparison needs equally many paired episodes")

    series = [output_divergence(a, c) for a, c in zip(live, shadow, strict=True)]
    counts = category_counts()
    for a, c in zip(live, shadow, strict=True):
        for category in set(c.regression_signals) - set(a.regression_signals):
            counts[category] += 1
    envelope = sum(outside_envelope(a, c) for a, c in zip(live, shadow, strict=True))

    failures = tuple(
        f"divergence:{category.value}"
        for category, count in counts.items()
        if count > profile.shadow_divergence_limit
    )
    return ShadowReport(
        divergence_series=series,
        mean_divergence=float(np.mean(series)),
        governance_divergence=counts,
        envelope_divergence=envelope / len(live),
        passed=not failures,
        failures=failures,
    )


def run_shadow(
    candidate: LifecycleRecord,
    active: LifecycleRecord | None,
    env: CapabilityEnvironment,
    profile: DeploymentProfile,
    rng: np.random.Generator,
    episodes: int = SHADOW_EPISODES,
) -> ShadowRun:
    """
    Run the candidate in shadow against the active version of its family.

    Both versions get the identical episode input stream drawn from rng; each
    pair of episodes shares one clock tick.
    """
    if candidate.state != LifecycleState.SANDBOXED:
        raise InvalidTransitionError(
            candidate.state, TransitionEvent.SHADOW_DONE, "shadow needs a sandboxed candidate"
        )
    if active is None:
        raise NoActiveVersionError(
            f"Family {candidate.family_id} has no active version to shadow"
        )

    live: list[TraceRecord] = []
    shadow: list[TraceRecord] = []
    for episode in env.episode_inputs(rng, episodes):
        timestamp = env.clock.tick()
        live.append(
            env.run_input(
                active.family_id, active.version_id, TraceContext.LIVE, episode, timestamp
            )
        )
        shadow.append(
            env.run_input(
                candidate.family_id,
                candidate.version_id,
                TraceContext.SHADOW,
                episode,
                timestamp,
            )
        )
    return ShadowRun(
        report=shadow_report(live, shadow, profile), live_traces=live, shadow_traces=shadow
    )
