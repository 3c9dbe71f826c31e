"""
Post-activation runtime drift scenarios.
"""

from dataclasses import dataclass, field
from enum import StrEnum

from envsim.latent import LatentBehavior


class DriftKind(StrEnum):
    SENSOR_NOISE = "sensor_noise"
    DISTRIBUTION_SHIFT = "distribution_shift"
    ACTUATOR_DELAY = "actuator_delay"
    COMBINED = "combined"


class Severity(StrEnum):
    MILD = "mild"
    STRONG = "strong"


SINGLE_KINDS = (DriftKind.SENSOR_NOISE, DriftKind.DISTRIBUTION_SHIFT, DriftKind.ACTUATOR_DELAY)

# mild deltas; strong severity doubles them
DEFAULT_DRIFT_DELTAS: dict[DriftKind, dict[str, float]] = {
    DriftKind.SENSOR_NOISE: {
        "anomaly_rate": 0.05,
        "success_prob": -0.05,
        "recovery_success_prob": -0.01,
    },
    DriftKind.DISTRIBUTION_SHIFT: {
        "success_prob": -0.08,
        "violation_rate": 0.03,
        "anomaly_rate": 0.05,
    },
    DriftKind.ACTUATOR_DELAY: {
        "base_duration_scale": 0.4,
        "retry_rate": 0.05,
        "anomaly_rate": 0.05,
        "recovery_success_prob": 0.01,
    },
}

SEVERITY_FACTOR = {Severity.MILD: 1.0, Severity.STRONG: 2.0}


@dataclass(frozen=True)
class DriftScenario:
    kind: DriftKind
    severity: Severity = Severity.MILD
    latent_deltas: dict[str, float] = field(default_factory=dict)


def make_scenario(
    kind: DriftKind,
    severity: Severity = Severity.MILD,
    deltas: dict[DriftKind, dict[str, float]] | None = None,
) -> DriftScenario:
    """Build a scenario; combined is the sum of the three single kinds."""
    table = deltas or DEFAULT_DRIFT_DELTAS
    parts = SINGLE_KINDS if kind == DriftKind.COMBINED else (kind,)
    factor = SEVERITY_FACTOR[severity]

    combined: dict[str, float] = {}
    for part in parts:
        for name, delta in table[part].items():
            combined[name] = combined.get(name, 0.0) + delta * factor
    return DriftScenario(kind=kind, severity=severity, latent_deltas=combined)


def inject_drift(latent: LatentBehavior, scenario: DriftScenario) -> LatentBehavior:
    """Return the drifted latent, clamped; the input is not modified."""
    return latent.with_deltas(scenario.latent_deltas)
