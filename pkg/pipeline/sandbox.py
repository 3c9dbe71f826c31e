"""
Isolated sandbox evaluation under canonical, perturbed and adversarial modes.
"""

from collections import Counter
from collections.abc import Sequence

import numpy as np

from compat.checkers.behavioral import compute_signature
from core.enums import SANDBOX_MODES, LifecycleState, RegressionCategory
from core.profiles import DeploymentProfile
from core.telemetry import TraceRecord
from envsim.environment import CapabilityEnvironment
from pipeline.reports import SandboxReport, category_counts
from registry.lifecycle import InvalidTransitionError, LifecycleRecord, TransitionEvent

SANDBOX_EPISODES = 30
SUCCESS_FLOOR = 0.5


def signal_counts(traces: Sequence[TraceRecord]) -> dict[RegressionCategory, int]:
    """Episodes revealing each regression category."""
    counter: Counter[RegressionCategory] = Counter()
    for trace in traces:
        counter.update(set(trace.regression_signals))
    return category_counts(dict(counter))


def sandbox_verdict(
    metrics: dict[str, float],
    counts: dict[RegressionCategory, int],
    profile: DeploymentProfile,
    success_floor: float = SUCCESS_FLOOR,
) -> tuple[bool, tuple[str, ...]]:
    failures = []
    if metrics["m_viol"] > profile.violation_tolerance:
        failures.append("m_viol")
    if metrics["m_anom"] > profile.anomaly_tolerance:
        failures.append("m_anom")
    if metrics["m_succ"] < success_floor:
        failures.append("m_succ")
    failures.extend(
        f"signal:{category.value}"
        for category, count in counts.items()
        if count > profile.shadow_divergence_limit
    )
    return not failures, tuple(failures)


def run_sandbox(
    candidate: LifecycleRecord,
    env: CapabilityEnvironment,
    profile: DeploymentProfile,
    rng: np.random.Generator,
    episodes: int = SANDBOX_EPISODES,
    success_floor: float = SUCCESS_FLOOR,
) -> tuple[SandboxReport, list[TraceRecord]]:
    """
    Execute the candidate in all sandbox modes and judge the aggregated metrics.

    Args:
        candidate: Record in state validated
        env: Environment holding the candidate's latent behavior
        profile: Profile supplying the tolerances
        rng: Sandbox stream; one child stream per mode
        episodes: Episodes per mode
        success_floor: Minimum aggregated success rate

    Returns:
        Tuple of (report, traces of every mode)
    """
    if candidate.state != LifecycleState.VALIDATED:
        raise InvalidTransitionError(
            candidate.state, TransitionEvent.SANDBOX_DONE, "sandbox needs a validated candidate"
        )

    traces: list[TraceRecord] = []
    signatures = {}
    for mode, mode_rng in zip(SANDBOX_MODES, rng.spawn(len(SANDBOX_MODES)), strict=True):
        inputs = env.episode_inputs(mode_rng, episodes)
        batch = env.run_batch(candidate.family_id, candidate.version_id, mode, inputs)
        signatures[mode] = compute_signature(batch)
        traces.extend(batch)

    overall = compute_signature(traces)
    metrics = {
        "m_succ": overall.mu_succ,
        "m_viol": overall.mu_viol,
        "m_anom": overall.mu_anom,
        "m_retry": overall.mu_retry,
        "m_recover": overall.mu_recover,
    }
    counts = signal_counts(traces)
    passed, failures = sandbox_verdict(metrics, counts, profile, success_floor)
    report = SandboxReport(
        metrics=metrics,
        signatures=signatures,
        signal_counts=counts,
        passed=passed,
        failures=failures,
    )
    return report, traces
