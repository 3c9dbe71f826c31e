import pytest

from core.enums import ProfileId
from core.manifest import CapabilityManifest
from core.policy import PolicySet, load_policy_sets
from core.profiles import DeploymentProfile, default_profiles
from envsim.generator import GeneratorCalibration, parent_manifest, parent_spec
from pipeline.upgrade_manager import UpgradeManager


@pytest.fixture
def parent() -> CapabilityManifest:
    return parent_manifest("grasp")


@pytest.fixture
def policy_sets() -> dict[str, PolicySet]:
    return load_policy_sets()


@pytest.fixture
def sim_profile() -> DeploymentProfile:
    return default_profiles()[ProfileId.SIM]


@pytest.fixture
def human_profile() -> DeploymentProfile:
    return default_profiles()[ProfileId.HUMAN]


@pytest.fixture
def manager(
    parent: CapabilityManifest,
    policy_sets: dict[str, PolicySet],
    sim_profile: DeploymentProfile,
) -> UpgradeManager:
    """Manager with the grasp parent already active."""
    manager = UpgradeManager(sim_profile, policy_sets, seed=42)
    manager.bootstrap(parent_spec("grasp", GeneratorCalibration()), parent)
    return manager
