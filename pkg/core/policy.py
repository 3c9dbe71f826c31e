"""
Policy rules that constrain declared execution modes.
"""

from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict

from core.enums import TagClass
from core.manifest import ExecutionMode

DEFAULT_POLICY_PATH = Path(__file__).parent.parent / "config" / "policies.yaml"


class PolicyRule(BaseModel):
    model_config = ConfigDict(frozen=True)

    tag_class: TagClass
    targets: tuple[str, ...]

    def covers(self, mode: ExecutionMode) -> bool:
        if mode.tag_class != self.tag_class:
            return False
        return "*" in self.targets or mode.target in self.targets


class PolicySet(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    rules: tuple[PolicyRule, ...]

    def covers(self, mode: ExecutionMode) -> bool:
        return any(rule.covers(mode) for rule in self.rules)


def load_policy_sets(path: Path = DEFAULT_POLICY_PATH) -> dict[str, PolicySet]:
    """Load the policy set of every capability family from YAML."""
    with open(path) as f:
        raw: dict[str, Any] = yaml.safe_load(f)

    policy_sets: dict[str, PolicySet] = {}
    for family, rules in raw.get("families", {}).items():
        policy_sets[family] = PolicySet(
            name=family,
            rules=tuple(
                PolicyRule(tag_class=rule["tag_class"], targets=tuple(rule["targets"]))
                for rule in rules
            ),
        )
    return policy_sets
