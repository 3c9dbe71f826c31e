"""
Harness configuration: one JSON (or YAML) document with every experiment knob.
"""

import json
import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from compat.compat_manager import DEFAULT_WEIGHTS, DIMENSIONS, CompatManager
from core.enums import ProfileId
from core.profiles import DeploymentProfile, default_profiles, monotonicity_violations
from envsim.drift import Severity
from envsim.generator import GeneratorCalibration
from pipeline.monitor import MonitorPolicy
from pipeline.strategies import Strategy
from pipeline.upgrade_manager import ApprovalConfig, PipelineBudgets

CONFIG_DIR = Path(__file__).parent.parent / "config"
DEFAULT_CONFIG_PATH = CONFIG_DIR / "harness.json"
CONFIG_ENV = "CAPGOV_CONFIG"
RESULTS_ENV = "CAPGOV_RESULTS_DIR"


class ConfigError(Exception):
    pass


class CompatConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    # dependency name -> installed version, for dependency satisfiability
    platform: dict[str, str] | None = None

    @field_validator("weights")
    @classmethod
    def validate_weights(cls, v: dict[str, float]) -> dict[str, float]:
        if set(v) != set(DIMENSIONS):
            raise ValueError(f"weights must name exactly {list(DIMENSIONS)}")
        if abs(sum(v.values()) - 1.0) > 1e-3:
            raise ValueError(f"weights must sum to 1, got {sum(v.values()):.4f}")
        return v

    def manager(self) -> CompatManager:
        return CompatManager(self.weights, self.platform)


class GeneratorConfig(GeneratorCalibration):
    """Generator calibration plus the rollback-trial stream settings."""

    trials_per_kind: int = Field(default=12, ge=1)
    # share of ablation trials that use recovery-degradation candidates
    recovery_trial_share: float = Field(default=0.25, ge=0.0, le=1.0)
    drift_severity: Severity = Severity.STRONG
    max_trial_windows: int = Field(default=60, ge=1)
    control_windows: int = Field(default=5, ge=1)


# the pipeline's own models double as config sections
BudgetConfig = PipelineBudgets
MonitorConfig = MonitorPolicy


class HarnessConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seeds: list[int] = Field(default_factory=lambda: [42, 43, 44, 45, 46])
    # paired-test experiments use more seeds
    e2_seeds: list[int] = Field(default_factory=lambda: list(range(42, 57)))
    families: list[str] = Field(default_factory=lambda: ["grasp", "align", "place"])
    rounds: int = Field(default=6, ge=1)
    # rounds for runs that must propose every pool candidate
    full_pool_rounds: int = Field(default=14, ge=1)
    strategies: list[Strategy] = Field(default_factory=lambda: list(Strategy))
    profile: ProfileId = ProfileId.SIM
    profiles: dict[ProfileId, DeploymentProfile] = Field(default_factory=default_profiles)
    sensitivity_factors: list[float] = Field(default_factory=lambda: [0.9, 1.0, 1.1])
    e3_family: str = "grasp"
    compat: CompatConfig = Field(default_factory=CompatConfig)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    monitor: MonitorConfig = Field(default_factory=MonitorConfig)
    approval: ApprovalConfig = Field(default_factory=ApprovalConfig)
    bootstrap_resamples: int = Field(default=2000, ge=1)
    output_dir: str = "results"

    @field_validator("seeds", "e2_seeds")
    @classmethod
    def validate_seeds(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if any(s < 0 or s >= 2**64 for s in v):
            raise ValueError("seeds must be 64-bit unsigned values")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v

    @field_validator("families")
    @classmethod
    def validate_families(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("at least one capability family is required")
        return v

    @field_validator("sensitivity_factors")
    @classmethod
    def validate_factors(cls, v: list[float]) -> list[float]:
        if any(f <= 0 for f in v):
            raise ValueError("sensitivity factors must be positive")
        return v

    @model_validator(mode="after")
    def validate_profiles(self) -> "HarnessConfig":
        if self.profile not in self.profiles:
            raise ValueError(f"profile '{self.profile}' is not in the profile set")
        for key, profile in self.profiles.items():
            if profile.profile_id != key:
                raise ValueError(f"profile set entry '{key}' holds profile '{profile.profile_id}'")
        violations = monotonicity_violations(self.profiles)
        if violations:
            raise ValueError("profiles are not monotone: " + "; ".join(violations))
        if self.e3_family not in self.families:
            raise ValueError(f"e3_family '{self.e3_family}' is not a configured family")
        return self

    @property
    def active_profile(self) -> DeploymentProfile:
        return self.profiles[self.profile]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def resolve_config_path(path: Path | None = None) -> Path:
    """CLI path, else CAPGOV_CONFIG, else the checked-in default."""
    if path is not None:
        return path
    env = os.getenv(CONFIG_ENV)
    return Path(env) if env else DEFAULT_CONFIG_PATH


def load_config(path: Path | None = None, **overrides: Any) -> HarnessConfig:
    """
    Load and validate a harness configuration.

    Args:
        path: JSON or YAML file; resolved by resolve_config_path when omitted
        overrides: Top-level fields replacing the file's values

    Returns:
        HarnessConfig
    """
    path = resolve_config_path(path)
    try:
        with open(path) as f:
            if path.suffix == ".json":
                raw = json.load(f)
            elif path.suffix in (".yaml", ".yml"):
                raw = yaml.safe_load(f)
            else:
                raise ConfigError(f"Unsupported config format '{path.suffix}': {path}")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot parse config {path}: {e}")

    if not isinstance(raw, dict):
        raise ConfigError(f"Config {path} must be a mapping at the top level")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return HarnessConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}")
