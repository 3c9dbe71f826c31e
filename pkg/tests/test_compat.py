"""
Compatibility manager tests: checkers, aggregation, fail-fast ordering and
the per-candidate score table of the seed-42 grasp pool.
"""

import numpy as np
import pytest

from compat.checkers.behavioral import EmptySignatureError, component_drift, compute_signature
from compat.checkers.interface import FamilyMismatchError, interface_deviation
from compat.checkers.recovery import RecoveryChecker
from compat.compat_manager import (
    BehavioralEvidence,
    CompatCategories,
    CompatManager,
    aggregate,
)
from core.enums import (
    BehavioralCategory,
    InterfaceCategory,
    PolicyCategory,
    ProfileId,
    Recommendation,
    RecoveryCategory,
)
from core.manifest import CapabilityManifest, Dependency, RecoveryProfile
from core.policy import PolicySet
from core.profiles import DeploymentProfile
from core.telemetry import BehavioralSignature
from envsim.generator import CandidateKind, GeneratorCalibration, faulty_candidate
from harness.config import ConfigError, HarnessConfig
from harness.experiments import scorecard

# label -> (composite, decision, recommendation)
EXPECTED_SCORECARD = {
    "B1": (1.000, "accept", "activate"),
    "B2": (0.997, "accept", "activate"),
    "B3": (1.000, "accept", "activate"),
    "B4": (0.997, "accept", "activate"),
    "B5": (1.000, "accept", "activate"),
    "B6": (1.000, "accept", "activate"),
    "F1": (0.824, "reject", "reject"),
    "F2": (0.826, "reject", "reject"),
    "F3": (0.958, "reject", "reject_or_review"),
    "F4": (0.958, "reject", "reject_or_review"),
    "F5": (0.934, "reject", "sandbox"),
    "F6": (0.940, "reject", "sandbox"),
    "F7": (0.964, "accept", "shadow"),
    "F8": (0.964, "accept", "shadow"),
}

BASELINE = BehavioralSignature(
    mu_succ=0.66, mu_time=10.0, mu_retry=0.1, mu_viol=0.1, mu_recover=0.8, episode_count=100
)


def all_compatible() -> dict[str, object]:
    return {
        "interface": InterfaceCategory.COMPATIBLE,
        "policy": PolicyCategory.COMPATIBLE,
        "behavioral": BehavioralCategory.COMPATIBLE,
        "recovery": RecoveryCategory.COMPATIBLE,
    }


@pytest.mark.parametrize(
    "override,expected",
    [
        ({}, Recommendation.ACTIVATE),
        ({"interface": InterfaceCategory.INCOMPATIBLE}, Recommendation.REJECT),
        ({"policy": PolicyCategory.INCOMPATIBLE}, Recommendation.REJECT),
        ({"policy": PolicyCategory.REVIEW}, Recommendation.REVIEW),
        ({"behavioral": BehavioralCategory.INCOMPATIBLE}, Recommendation.SANDBOX),
        ({"recovery": RecoveryCategory.INCOMPATIBLE}, Recommendation.SANDBOX_OR_REVIEW),
        ({"behavioral": BehavioralCategory.SUSPICIOUS}, Recommendation.SHADOW),
        ({"recovery": RecoveryCategory.FRAGILE}, Recommendation.SHADOW),
        ({"interface": InterfaceCategory.CONDITIONAL}, Recommendation.ACTIVATE),
        # first matching rule wins
        (
            {
                "policy": PolicyCategory.REVIEW,
                "behavioral": BehavioralCategory.INCOMPATIBLE,
            },
            Recommendation.REVIEW,
        ),
        (
            {
                "behavioral": BehavioralCategory.INCOMPATIBLE,
                "recovery": RecoveryCategory.INCOMPATIBLE,
            },
            Recommendation.SANDBOX,
        ),
    ],
)
def test_aggregate(override: dict[str, object], expected: Recommendation):
    categories = CompatCategories(**{**all_compatible(), **override})  # type: ignore[arg-type]
    assert aggregate(categories) == expected


def test_aggregate_needs_every_dimension():
    with pytest.raises(ValueError):
        aggregate(CompatCategories(interface=InterfaceCategory.COMPATIBLE))


def test_identical_manifest_has_no_interface_deviation(parent: CapabilityManifest):
    deviation = interface_deviation(parent, parent.model_copy(update={"version_id": "1.1.0"}))
    assert deviation.mean == 0.0


def test_interface_deviation_components(parent: CapabilityManifest):
    spec = faulty_candidate(
        CandidateKind.INTERFACE_DRIFT, "grasp", "F1", "1.7.0", 0, GeneratorCalibration()
    )
    deviation = interface_deviation(parent, spec.build_manifest(parent))
    assert deviation.signature == 1.0
    assert deviation.schema == 1.0
    assert deviation.pre_post == 0.0
    assert deviation.dependency == 0.0
    assert deviation.mean == pytest.approx(0.5)


def test_newly_unsatisfiable_dependency(parent: CapabilityManifest):
    new = parent.model_copy(
        update={
            "version_id": "1.1.0",
            "dependency_set": parent.dependency_set
            + (Dependency(name="motion-core-next", version_range=">=1.0.0"),),
        }
    )
    assert interface_deviation(parent, new).dependency == pytest.approx(1 / 5)


def test_interface_check_rejects_other_family(parent: CapabilityManifest):
    with pytest.raises(FamilyMismatchError):
        interface_deviation(parent, parent.model_copy(update={"family_id": "place"}))


def test_behavioral_drift_counts_only_adverse_changes():
    better = BehavioralSignature(
        mu_succ=0.80, mu_time=8.0, mu_retry=0.0, mu_viol=0.0, mu_recover=0.9, episode_count=100
    )
    assert max(component_drift(BASELINE, better).values()) == 0.0

    worse = BehavioralSignature(
        mu_succ=0.56, mu_time=12.0, mu_retry=0.1, mu_viol=0.1, mu_recover=0.8, episode_count=100
    )
    drift = component_drift(BASELINE, worse)
    assert drift["mu_succ"] == pytest.approx(0.10)
    assert drift["mu_time"] == pytest.approx(0.2, abs=1e-6)


def test_success_gain_with_anomaly_drift_is_suspicious(sim_profile: DeploymentProfile):
    manager = CompatManager()
    candidate = BehavioralSignature(
        mu_succ=0.80,
        mu_time=10.0,
        mu_retry=0.1,
        mu_viol=0.1,
        mu_anom=0.07,
        mu_recover=0.8,
        episode_count=100,
    )
    score, category = manager.behavioral.check(BASELINE, candidate, sim_profile)
    assert score == pytest.approx(0.93)
    assert category == BehavioralCategory.SUSPICIOUS


def test_empty_signature_is_refused(sim_profile: DeploymentProfile):
    with pytest.raises(EmptySignatureError):
        compute_signature([])
    with pytest.raises(EmptySignatureError):
        CompatManager().behavioral.check(BASELINE, BehavioralSignature(), sim_profile)


@pytest.mark.parametrize(
    "recovery,expected",
    [
        (RecoveryProfile(), RecoveryCategory.COMPATIBLE),
        (RecoveryProfile(rollback_hook=False), RecoveryCategory.INCOMPATIBLE),
        (
            RecoveryProfile(degradation={"rollback_hook": 0.45}),
            RecoveryCategory.FRAGILE,
        ),
        (
            RecoveryProfile(degradation={"rollback_hook": 0.4}),
            RecoveryCategory.CONDITIONAL,
        ),
    ],
)
def test_recovery_categories(
    parent: CapabilityManifest,
    sim_profile: DeploymentProfile,
    recovery: RecoveryProfile,
    expected: RecoveryCategory,
):
    new = parent.model_copy(update={"version_id": "1.1.0", "recovery_profile": recovery})
    _, _, category = RecoveryChecker().check(parent, new, sim_profile)
    assert category == expected


def test_fail_fast_stops_after_interface(
    parent: CapabilityManifest,
    policy_sets: dict[str, PolicySet],
    sim_profile: DeploymentProfile,
):
    spec = faulty_candidate(
        CandidateKind.INTERFACE_DRIFT, "grasp", "F1", "1.7.0", 0, GeneratorCalibration()
    )
    manager = CompatManager()
    report = manager.evaluate(
        parent, spec.build_manifest(parent), policy_sets["grasp"], sim_profile
    )

    assert report.recommendation == Recommendation.REJECT
    assert report.kappa_p is None
    assert report.composite is None
    assert (manager.interface.calls, manager.policy.calls) == (1, 0)
    assert (manager.behavioral.calls, manager.recovery.calls) == (0, 0)


def test_diagnostic_scoring_runs_every_checker(
    parent: CapabilityManifest,
    policy_sets: dict[str, PolicySet],
    sim_profile: DeploymentProfile,
):
    spec = faulty_candidate(
        CandidateKind.PERMISSION_EXPANSION, "grasp", "F3", "1.9.0", 0, GeneratorCalibration()
    )
    manager = CompatManager()
    report = manager.evaluate(
        parent,
        spec.build_manifest(parent),
        policy_sets["grasp"],
        sim_profile,
        dynamic_evidence=BehavioralEvidence(old=BASELINE, new=BASELINE),
        fail_fast=False,
    )

    assert report.recommendation == Recommendation.REJECT_OR_REVIEW
    assert report.kappa_p == pytest.approx(5 / 6)
    assert report.categories.policy == PolicyCategory.INCOMPATIBLE
    assert report.composite == pytest.approx(0.22 + 0.25 * 5 / 6 + 0.30 + 0.23)
    assert manager.get_checker_info()["checkers"]["recovery"]["calls"] == 1


def test_profile_outside_environment_scope(
    parent: CapabilityManifest,
    policy_sets: dict[str, PolicySet],
    human_profile: DeploymentProfile,
):
    new = parent.model_copy(update={"version_id": "1.1.0", "environment_scope": ("sim",)})
    score, category = CompatManager().policy.check(new, policy_sets["grasp"], human_profile)
    assert score == 1.0
    assert category == PolicyCategory.INCOMPATIBLE


def test_score_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        CompatManager({"interface": 0.5, "policy": 0.5, "behavioral": 0.5, "recovery": 0.5})
    with pytest.raises(ValueError):
        CompatManager().update_score_weights({"latency": 0.1})


def test_scorecard_reproduces_seed42_grasp_pool():
    df = scorecard(HarnessConfig(), seed=42, family="grasp")
    rows = {row["label"]: row for row in df.to_dict("records")}

    assert list(rows) == list(EXPECTED_SCORECARD)
    for label, (composite, decision, recommendation) in EXPECTED_SCORECARD.items():
        row = rows[label]
        assert row["composite"] == pytest.approx(composite, abs=0.005), label
        assert row["decision"] == decision, label
        assert row["recommendation"] == recommendation, label

    assert rows["F1"]["kappa_interface"] == pytest.approx(0.5)
    assert rows["F3"]["kappa_policy"] == pytest.approx(5 / 6)
    assert rows["F5"]["kappa_behavioral"] == pytest.approx(0.78)
    assert rows["F7"]["kappa_recovery"] == pytest.approx(0.97)


def test_scorecard_is_deterministic():
    first = scorecard(HarnessConfig(), seed=43, family="align")
    second = scorecard(HarnessConfig(), seed=43, family="align")
    assert first.equals(second)


def test_scorecard_unknown_family():
    with pytest.raises(ConfigError):
        scorecard(HarnessConfig(), seed=42, family="weld")


def test_policy_coverage_bands(sim_profile: DeploymentProfile):
    checker = CompatManager().policy
    theta = sim_profile.dim_thresholds.policy
    margin = sim_profile.conditional_margin
    assert checker.categorize(theta, sim_profile) == PolicyCategory.COMPATIBLE
    assert checker.categorize(theta - margin / 2, sim_profile) == PolicyCategory.REVIEW
    assert checker.categorize(theta - 2 * margin, sim_profile) == PolicyCategory.INCOMPATIBLE
    assert set(PolicyCategory) == {
        PolicyCategory.COMPATIBLE,
        PolicyCategory.REVIEW,
        PolicyCategory.INCOMPATIBLE,
    }


@pytest.mark.parametrize("absent", [None, "behavioral"])
def test_raising_a_score_never_lowers_the_composite(absent: str | None):
    manager = CompatManager()
    rng = np.random.default_rng(7)
    for _ in range(200):
        kappas: dict[str, float | None] = {
            d: float(rng.uniform(0.0, 1.0)) for d in manager.score_weights
        }
        if absent is not None:
            kappas[absent] = None
        before = manager.calculate_composite(kappas)
        assert before is not None
        for dim, value in kappas.items():
            if value is None:
                continue
            raised = {**kappas, dim: float(rng.uniform(value, 1.0))}
            after = manager.calculate_composite(raised)
            assert after is not None
            assert after >= before - 1e-12


@pytest.mark.parametrize("seed", [42, 43])
@pytest.mark.parametrize("family", ["grasp", "align", "place"])
def test_stricter_profiles_are_never_more_permissive(seed: int, family: str):
    permissiveness = {}
    for profile in (ProfileId.SIM, ProfileId.REAL, ProfileId.HUMAN):
        df = scorecard(HarnessConfig(profile=profile), seed, family)
        permissiveness[profile] = {
            row["label"]: Recommendation(row["recommendation"]).permissiveness
            for row in df.to_dict("records")
        }
    sim, real, human = (permissiveness[p] for p in (ProfileId.SIM, ProfileId.REAL, ProfileId.HUMAN))
    assert sim.keys() == human.keys()
    for label in sim:
        assert human[label] <= real[label] <= sim[label], label
