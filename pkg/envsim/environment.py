"""
The synthetic execution environment the pipeline runs capability versions in.

An episode input is a task family plus a behavior key. Every version run on the
same input draws its episode noise from a generator seeded with that key, so
two versions with identical latents produce identical outcomes on a shared
input stream, and one version's draws never shift another's.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from core.enums import TaskFamily, TraceContext
from core.telemetry import TraceClock, TraceRecord
from envsim.drift import DriftScenario, inject_drift
from envsim.latent import LatentBehavior, run_episode

KEY_BOUND = 2**63 - 1


class UnknownVersionError(KeyError):
    pass


@dataclass(frozen=True)
class EpisodeInput:
    task: TaskFamily
    key: int


class CapabilityEnvironment:
    """Holds the latent behavior of every installed version and a shared trace clock."""

    def __init__(self, task_families: Sequence[TaskFamily] = tuple(TaskFamily)):
        if not task_families:
            raise ValueError("The environment needs at least one task family")
        self.task_families = tuple(task_families)
        self.latents: dict[tuple[str, str], LatentBehavior] = {}
        self.drift: dict[tuple[str, str], DriftScenario] = {}
        self.clock = TraceClock()

    def install(self, family_id: str, version_id: str, latent: LatentBehavior) -> None:
        self.latents[(family_id, version_id)] = latent

    def latent_of(self, family_id: str, version_id: str) -> LatentBehavior:
        """Current runtime latent, drift included."""
        key = (family_id, version_id)
        if key not in self.latents:
            raise UnknownVersionError(f"No latent installed for {family_id}@{version_id}")
        latent = self.latents[key]
        if key in self.drift:
            return inject_drift(latent, self.drift[key])
        return latent

    def apply_drift(self, family_id: str, version_id: str, scenario: DriftScenario) -> None:
        self.latent_of(family_id, version_id)
        self.drift[(family_id, version_id)] = scenario

    def clear_drift(self, family_id: str, version_id: str) -> None:
        self.drift.pop((family_id, version_id), None)

    def episode_inputs(self, rng: np.random.Generator, n: int) -> list[EpisodeInput]:
        tasks = rng.integers(0, len(self.task_families), size=n)
        keys = rng.integers(0, KEY_BOUND, size=n, dtype=np.int64)
        return [
            EpisodeInput(task=self.task_families[int(t)], key=int(k))
            for t, k in zip(tasks, keys, strict=True)
        ]

    def run_input(
        self,
        family_id: str,
        version_id: str,
        context: TraceContext,
        episode: EpisodeInput,
        timestamp: int,
    ) -> TraceRecord:
        return run_episode(
            self.latent_of(family_id, version_id),
            context,
            episode.task,
            np.random.default_rng(episode.key),
            version_id=version_id,
            timestamp=timestamp,
        )

    def run_batch(
        self,
        family_id: str,
        version_id: str,
        context: TraceContext,
        inputs: Sequence[EpisodeInput],
    ) -> list[TraceRecord]:
        """Run one episode per input, each on a fresh clock tick."""
        return [
            self.run_input(family_id, version_id, context, episode, self.clock.tick())
            for episode in inputs
        ]
