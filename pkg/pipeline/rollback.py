"""
Rollback of a drifting active version and restoration of its predecessor.
"""

import numpy as np

from core.enums import LifecycleState
from core.manifest import CapabilityManifest
from envsim.environment import CapabilityEnvironment
from envsim.latent import LatentBehavior
from pipeline.reports import RollbackEvent
from registry.lifecycle import InvalidTransitionError, LifecycleRecord, TransitionEvent
from registry.version_registry import VersionRegistry

# recovery odds when only the fallback binding is left to catch the failure
FALLBACK_ONLY_SUCCESS = 0.05
# recovery odds relative to a monitored rollback when the failure is caught late
LATE_RECOVERY_FACTOR = 0.65


def recovery_probability(latent: LatentBehavior, manifest: CapabilityManifest) -> float:
    """Recovery succeeds only through an installed rollback hook."""
    hook = 1.0 if manifest.recovery_profile.rollback_hook else 0.0
    return latent.recovery_success_prob * hook


def execute_rollback(
    candidate: LifecycleRecord,
    registry: VersionRegistry,
    env: CapabilityEnvironment,
    rng: np.random.Generator,
    trigger_type: str,
    time_to_rollback: int,
    recovery_latency: int = 0,
    soft: bool = False,
) -> RollbackEvent:
    """
    Take the candidate out of service, restore its predecessor and sample recovery.

    Three uniform draws are always consumed: monitored recovery, fallback-only
    recovery and late recovery. Without a predecessor the event is a forced safe
    abort and recovery fails.
    """
    if candidate.state != LifecycleState.ACTIVE:
        raise InvalidTransitionError(
            candidate.state, TransitionEvent.DRIFT_DETECTED, "only an active version can be rolled back"
        )

    p = recovery_probability(
        env.latent_of(candidate.family_id, candidate.version_id), candidate.manifest
    )
    u = rng.random(3)
    predecessor = registry.predecessor_of(candidate.family_id)
    restorable = predecessor is not None

    event = RollbackEvent(
        candidate_version=candidate.version_id,
        predecessor_version=predecessor,
        trigger_type=trigger_type if restorable else f"{trigger_type}:safe_abort",
        time_to_rollback=time_to_rollback,
        post_rollback_safe=restorable,
        recovery_success=restorable and bool(u[0] < p),
        soft=soft,
        recovery_latency=recovery_latency,
        fallback_only_success=restorable and bool(u[1] < FALLBACK_ONLY_SUCCESS),
        late_recovery_success=restorable and bool(u[2] < p * LATE_RECOVERY_FACTOR),
    )
    registry.rollback(candidate, event.to_dict(), soft=soft)
    return event
